// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "mfgp/mlp.hpp"

namespace mfgp {

// Which feature columns are categorical and how many levels each has.
struct CategoricalSpec {
  std::vector<int> cols;    // ascending feature column indices
  std::vector<int> levels;  // per column, >= 2

  static CategoricalSpec from_map(const std::map<int, int>& qual_dict, int n_features);
  int n_vars() const { return static_cast<int>(cols.size()); }
  long n_combos() const;
};

enum class EncodingKind { GroupedOneHot, RandomMatrix, PerVariableOneHot };

// Deterministic quantitative prior representation pi_t of a level combination.
// Rows are indexed by the mixed-radix rank of the combination (first variable
// most significant), so the realization is reproducible without materializing
// the full table.
class PriorEncoding {
 public:
  static PriorEncoding grouped_one_hot(const CategoricalSpec& spec);
  static PriorEncoding random_matrix(const CategoricalSpec& spec, std::uint64_t seed);
  static PriorEncoding per_variable_one_hot(const CategoricalSpec& spec);

  EncodingKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  int width() const { return width_; }
  long n_combos() const { return n_combos_; }
  int n_blocks() const { return static_cast<int>(block_width_.size()); }
  int block_width(int v) const { return block_width_[v]; }
  int block_offset(int v) const { return block_offset_[v]; }

  long rank_of(const std::vector<int>& t) const;
  std::vector<int> levels_of_rank(long rank) const;
  Eigen::VectorXd encode(const std::vector<int>& t) const;
  Eigen::VectorXd encode_rank(long rank) const;

 private:
  EncodingKind kind_ = EncodingKind::GroupedOneHot;
  CategoricalSpec spec_;
  std::uint64_t seed_ = 0;
  int width_ = 0;
  long n_combos_ = 0;
  std::vector<int> block_width_, block_offset_;
};

// Parametric map pi -> h (linear matrix or feed-forward net); parameters are
// external so the trainer owns them.
struct EmbeddingMap {
  bool linear = true;
  int dpi = 0;
  int dh = 0;
  Mlp net;

  static EmbeddingMap make(int dpi, int dh, const std::vector<int>& hidden_layers);
  int n_params() const;
  Eigen::VectorXd forward(const double* params, const Eigen::VectorXd& pi, Mlp::Cache* cache) const;
  // accumulates into gparams; cache required for nets
  void backward(const double* params, const Eigen::VectorXd& pi, const Mlp::Cache& cache,
                const Eigen::VectorXd& gh, double* gparams) const;
};

// Conditional normal embedding q(z|s) = N(mu(pi_s), L(pi_s) L(pi_s)^T) realized
// by one generator net with mean, diagonal (softplus) and strictly-lower heads.
struct ProbabilisticEmbedding {
  Mlp generator;
  int dz = 0;

  static ProbabilisticEmbedding make(int dpi, int dz, const std::vector<int>& hidden_layers);
  int n_params() const { return generator.n_params(); }
  void moments(const double* params, const Eigen::VectorXd& pi, Eigen::VectorXd& mu,
               Eigen::MatrixXd& L, Mlp::Cache* cache) const;
  Eigen::VectorXd sample(const double* params, const Eigen::VectorXd& pi,
                         const Eigen::VectorXd& eps) const;
  void backward(const double* params, const Mlp::Cache& cache, const Eigen::VectorXd& gmu,
                const Eigen::MatrixXd& gL, double* gparams) const;
};

// exp(-|z - z'|^2): the kernel's cross-source correlation at identical (x, t).
double source_correlation(const Eigen::VectorXd& z, const Eigen::VectorXd& zp);

}  // namespace mfgp
