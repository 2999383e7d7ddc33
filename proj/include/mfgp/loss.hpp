// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "mfgp/model.hpp"

namespace mfgp {

// Differentiable scalar objective over an unconstrained parameter vector.
struct Objective {
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) = 0;
  // called once per optimizer iteration; stochastic objectives refresh their
  // draws here and hold them fixed through the line search
  virtual void begin_iteration(int iter) { (void)iter; }
};

struct IntervalScoreConfig {
  double v = 0.05;     // coverage miss level
  double eps = 0.08;   // penalty scale
};

// Negative log posterior of the (possibly ensembled) GP:
//   L = 1/2 log|C| + 1/2 (y-m)^T C^-1 (y-m) - log p(params) [+ penalties]
// evaluated through a triangular factorization, with analytic gradients for
// every parameter block. Instances are cheap to clone per restart; evaluation
// mutates only private workspaces.
class MapLoss : public Objective {
 public:
  explicit MapLoss(std::shared_ptr<const GpCore> core, int restart_stream = 0);

  int dim() const override { return core_->layout.total(); }
  double eval(const Eigen::VectorXd& raw, Eigen::VectorXd* grad) override;
  void begin_iteration(int iter) override;

  // penalized variant: L + eps * |L| * IS over the training predictions
  bool with_interval_score = false;
  IntervalScoreConfig isc;

  // diagnostics populated by the last eval
  double last_data_fit = 0.0;   // 1/2 log|C| + 1/2 quadratic form
  double last_interval_score = 0.0;
  double last_jitter = 0.0;     // diagonal inflation the factorization needed

  int members() const;

 private:
  std::shared_ptr<const GpCore> core_;
  int restart_ = 0;
  int iter_ = -1;
  std::vector<Eigen::MatrixXd> eps_z_;     // per member: ds x dz
  std::vector<Eigen::VectorXd> eps_zeta_;  // per member: dzeta

  // row -> local combo index over the unique training ranks
  std::vector<long> ranks_;
  std::vector<int> combo_;

  void refresh_draws();
};

// Closed-form leave-one-out residuals from the cached factorization:
// e_i = alpha_i / (C^-1)_ii on the standardized scale.
Eigen::VectorXd loo_residuals(const TrainedModel& model);
double loo_mse(const TrainedModel& model);

}  // namespace mfgp
