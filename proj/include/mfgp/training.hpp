// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mfgp/loss.hpp"
#include "mfgp/model.hpp"

namespace mfgp {

struct OptimizerConfig {
  int num_restarts = 32;
  int max_iters = 200;
  double grad_tol = 1e-6;
  double step_tol = 1e-9;
  int lbfgs_memory = 10;
  int n_jobs = -1;              // -1 = all cores
  bool use_jacobian = true;     // false = central-difference gradients
  Eigen::VectorXd lower, upper; // optional box on the raw scale (empty = unbounded)
};

struct LbfgsOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;
  double step_tol = 1e-9;
  int memory = 10;
  Eigen::VectorXd lower, upper;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
  // (f at iteration start, f accepted) pairs under that iteration's draws
  std::vector<std::pair<double, double>> trace;
};

LbfgsResult lbfgs_minimize(Objective& obj, const Eigen::VectorXd& x0, const LbfgsOptions& opt);

struct RestartRecord {
  int index = 0;
  bool ok = false;
  double loss = 0.0;
  std::string note;
};

struct FitMapResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  int winner = -1;
  std::vector<RestartRecord> restarts;
};

// Multi-restart bounded quasi-Newton minimization; deterministic given the
// start provider. Restarts run in parallel, each owning a private objective
// instance, and reduce by (loss, restart index).
FitMapResult fit_map(const std::function<std::unique_ptr<Objective>(int)>& make_objective,
                     const std::function<Eigen::VectorXd(int)>& start_of,
                     const OptimizerConfig& cfg);

struct ContinuationSchedule {
  std::vector<double> floors = {1e-2, 1e-3, 1e-4, 1e-6};
  void validate() const;
};

struct ContinuationRung {
  double floor = 0.0;
  bool ok = false;
  double loss = 0.0;
  double loo_mse = 0.0;
  Eigen::VectorXd start_constrained;  // warm start handed to this rung
  Eigen::VectorXd x;                  // solution (raw, in the rung's layout)
};

struct ContinuationResult {
  TrainedModel model;
  int selected = -1;
  std::vector<ContinuationRung> rungs;
};

// Optimize a ladder of noise floors, warm-starting each rung from the
// previous solution, and select the rung with the smallest closed-form
// leave-one-out cross-validation MSE.
ContinuationResult continuation_fit(const ModelConfig& cfg, const MFDataset& data,
                                    const ContinuationSchedule& schedule, const OptimizerConfig& ocfg,
                                    std::uint64_t seed);

// IS = (1/n) sum [(U-L) + (2/v)(L-y) 1{y<L} + (2/v)(y-U) 1{y>U}],
// U = mu + 1.96 tau, L = mu - 1.96 tau.
double interval_score(const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
                      const Eigen::VectorXd& y, double v);

// Wrap finite differences around an arbitrary value-only function.
class NumericObjective : public Objective {
 public:
  NumericObjective(int dim, std::function<double(const Eigen::VectorXd&)> f, double h = 1e-6)
      : dim_(dim), f_(std::move(f)), h_(h) {}
  int dim() const override { return dim_; }
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) override;

 private:
  int dim_;
  std::function<double(const Eigen::VectorXd&)> f_;
  double h_;
};

}  // namespace mfgp
