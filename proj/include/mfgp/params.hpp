// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "mfgp/rng.hpp"

namespace mfgp {

enum class PriorKind { Flat, Normal, LogNormal, HalfHorseshoe };

// Log-prior over a constrained model parameter. The half-horseshoe uses the
// tight surrogate log p(x) = log log(1 + 2 (s/x)^2), which keeps the spike at
// zero and the heavy tail of the exact (integral-form) density.
struct Prior {
  PriorKind kind = PriorKind::Flat;
  double a = 0.0;  // mean (Normal) / log-mean (LogNormal) / unused
  double b = 1.0;  // std (Normal, LogNormal) / scale s (HalfHorseshoe)

  static Prior flat() { return {PriorKind::Flat, 0, 1}; }
  static Prior normal(double mean, double std) { return {PriorKind::Normal, mean, std}; }
  static Prior log_normal(double mu, double sigma) { return {PriorKind::LogNormal, mu, sigma}; }
  static Prior half_horseshoe(double scale) { return {PriorKind::HalfHorseshoe, 0, scale}; }

  double log_pdf(double x) const;     // -inf outside support
  double dlog_pdf(double x) const;
  double representative() const;      // deterministic start value
  double sample(CounterRng& rng) const;
};

enum class TransformKind { Identity, Log, ShiftedLog, ScaledLogit };

// Bijection raw (unconstrained) -> constrained value. Optimization always
// runs on the raw scale.
struct Transform {
  TransformKind kind = TransformKind::Identity;
  double lo = 0.0, hi = 0.0;  // ScaledLogit range
  double shift = 0.0;         // ShiftedLog offset

  static Transform identity() { return {TransformKind::Identity}; }
  static Transform log() { return {TransformKind::Log}; }
  static Transform shifted_log(double shift) { return {TransformKind::ShiftedLog, 0, 0, shift}; }
  static Transform scaled_logit(double lo, double hi) { return {TransformKind::ScaledLogit, lo, hi}; }

  double value(double raw) const;
  double dvalue(double raw) const;    // d(constrained)/d(raw)
  double raw(double value) const;
};

struct ParamBlock {
  std::string name;
  int offset = 0;
  int size = 0;
  Transform tf;
  Prior prior;
  std::vector<Prior> coord_priors;  // optional per-coordinate override
  double init_std = -1.0;  // if >= 0, restart samples (and the first start) use N(0, init_std^2)
                           // on the raw scale instead of the prior sampler
  double init_value = std::numeric_limits<double>::quiet_NaN();  // constrained-space start override
  bool regularized = false;  // participates in the (L1, L2) penalty

  const Prior& prior_of(int i) const { return coord_priors.empty() ? prior : coord_priors[i]; }
};

// Named blocks over one flat raw vector.
class ParamLayout {
 public:
  int total() const { return total_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  ParamBlock& add(const std::string& name, int size, Transform tf, Prior prior);
  const ParamBlock* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }

  Eigen::VectorXd constrained(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd to_raw(const Eigen::VectorXd& values) const;

  // Sum of log prior densities evaluated at the constrained values.
  double log_prior(const Eigen::VectorXd& raw) const;
  // graw += w * d(log prior)/d(raw)
  void add_log_prior_grad(const Eigen::VectorXd& raw, double w, Eigen::VectorXd& graw) const;

  Eigen::VectorXd initial_raw(std::uint64_t seed) const;
  Eigen::VectorXd sample_raw(std::uint64_t seed, std::uint64_t restart) const;

  // map a span of the raw vector to constrained values of one block
  Eigen::VectorXd block_values(const std::string& name, const Eigen::VectorXd& raw) const;

 private:
  std::vector<ParamBlock> blocks_;
  int total_ = 0;
};

}  // namespace mfgp
