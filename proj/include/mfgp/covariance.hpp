// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfgp/kernel.hpp"

namespace mfgp {

enum class NoiseKind { Single, PerSource, Fixed };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Single;
  Eigen::VectorXd delta;   // 1 entry (Single/Fixed) or ds entries (PerSource)
  double lb_noise = 1e-8;

  void validate() const;
  double of_source(int j) const { return kind == NoiseKind::PerSource ? delta[j] : delta[0]; }
};

// C_delta = sigma^2 R + N_delta over explicit unified inputs.
Eigen::MatrixXd build_covariance(const KernelConfig& cfg, double sigma2,
                                 const std::vector<UnifiedInput>& inputs, const NoiseModel& noise,
                                 const std::vector<int>& source_of);

struct CholFactor {
  Eigen::MatrixXd L;     // lower triangular
  double jitter = 0.0;   // diagonal inflation that was needed, 0 if none

  double log_det() const { return 2.0 * L.diagonal().array().log().sum(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
  Eigen::MatrixXd inverse() const;
};

// Cholesky with jitter escalation: on failure add 1e-8 * mean(diag) to the
// diagonal and escalate tenfold up to 1e-4 * mean(diag), then raise
// NumericalSingularity carrying the attempted ladder.
CholFactor factorize_spd(const Eigen::MatrixXd& C);

}  // namespace mfgp
