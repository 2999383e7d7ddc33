// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "mfgp/benchmarks.hpp"
#include "mfgp/fit.hpp"
#include "mfgp/model.hpp"

namespace mfgp {

struct BOConfig {
  Eigen::VectorXd costs;        // per source, > 0
  double max_cost = 40000.0;
  int stall_limit = 50;         // max iterations without HF-incumbent improvement
  bool maximize = false;
  int pool_size = 2000;
  int polish_top = 5;           // continuous candidates refined per iteration
  bool interval_score = true;   // penalize refits with the interval score
  IntervalScoreConfig isc;
  ModelConfig model;
  OptimizerConfig opt;          // refits use max(1, num_restarts / 4) warm-started restarts
  std::uint64_t seed = 0;
  // optional early stop once the HF incumbent reaches a target value
  double hf_target = std::numeric_limits<double>::quiet_NaN();

  void validate(int n_sources) const;
};

struct BORecord {
  int iteration = 0;
  int source = 0;
  Eigen::VectorXd x;
  double y = 0.0;
  double incumbent_hf = 0.0;
  double acquisition = 0.0;
  double accumulated_cost = 0.0;
};

struct BOState {
  MFDataset data;
  Eigen::VectorXd incumbent;    // per-source best observed value under the active direction
  double accumulated_cost = 0.0;
  int stall = 0;
  std::vector<BORecord> history;
};

// Source adapter: exposes candidate inputs and answers queries.
class BOProblem {
 public:
  virtual ~BOProblem() = default;
  virtual int n_sources() const = 0;
  virtual int features() const = 0;
  virtual Eigen::MatrixXd candidate_pool(int source, int n, std::uint64_t key) = 0;
  // returns the actually sampled input and its response
  virtual std::pair<Eigen::VectorXd, double> query(int source, const Eigen::VectorXd& x) = 0;
  virtual bool polishable() const { return false; }
  virtual Eigen::VectorXd lo() const = 0;
  virtual Eigen::VectorXd hi() const = 0;
  virtual std::map<int, int> qual() const { return {}; }
};

// Analytic benchmark sources with optional observation noise.
class AnalyticBOProblem : public BOProblem {
 public:
  AnalyticBOProblem(BenchmarkProblem p, std::uint64_t seed, bool with_noise = true);
  int n_sources() const override { return problem_.n_sources; }
  int features() const override { return problem_.features(); }
  Eigen::MatrixXd candidate_pool(int source, int n, std::uint64_t key) override;
  std::pair<Eigen::VectorXd, double> query(int source, const Eigen::VectorXd& x) override;
  bool polishable() const override { return true; }
  Eigen::VectorXd lo() const override { return problem_.lo; }
  Eigen::VectorXd hi() const override { return problem_.hi; }
  std::map<int, int> qual() const override { return problem_.qual_dict; }
  const BenchmarkProblem& problem() const { return problem_; }

 private:
  BenchmarkProblem problem_;
  std::uint64_t seed_;
  bool with_noise_;
  long counter_ = 0;
};

// Finite candidate tables; a query snaps to the nearest remaining row and
// removes it.
class TableBOProblem : public BOProblem {
 public:
  TableBOProblem(std::vector<SourceData> tables);
  int n_sources() const override { return static_cast<int>(tables_.size()); }
  int features() const override;
  Eigen::MatrixXd candidate_pool(int source, int n, std::uint64_t key) override;
  std::pair<Eigen::VectorXd, double> query(int source, const Eigen::VectorXd& x) override;
  Eigen::VectorXd lo() const override { return lo_; }
  Eigen::VectorXd hi() const override { return hi_; }
  int remaining(int source) const { return static_cast<int>(alive_[source].size()); }

 private:
  std::vector<SourceData> tables_;
  std::vector<std::vector<int>> alive_;
  Eigen::VectorXd lo_, hi_, span_;
};

// Composite acquisition: exploration density per unit cost on LF sources,
// improvement per unit cost on the HF source. tau is floored at 1e-12.
double composite_acquisition(double mu, double tau, double y_best, double cost, bool is_hf,
                             bool maximize);

// Expected improvement (single-fidelity baseline).
double expected_improvement(double mu, double tau, double y_best, bool maximize);

struct Proposal {
  Eigen::VectorXd x;
  int source = 0;
  double acquisition = 0.0;
};

Proposal propose_next(const TrainedModel& model, const BOState& state, BOProblem& prob,
                      const BOConfig& cfg, int iteration);

BOState run_bo(BOProblem& prob, const MFDataset& init, const BOConfig& cfg);

}  // namespace mfgp
