// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mfgp/fit.hpp"
#include "mfgp/model.hpp"

namespace mfgp {

struct CalibrationPosterior {
  Eigen::VectorXd mu;   // posterior means
  Eigen::VectorXd tau;  // positive marginal standard deviations
};

// zeta_i = mu_i + tau_i * eps_i (componentwise reparameterization)
Eigen::VectorXd sample_zeta(const CalibrationPosterior& post, const Eigen::VectorXd& eps);

// Resolve one dataset row into the kernel's unified input: LF rows keep their
// recorded calibration columns, HF rows receive zeta_current in those cells.
// Values are on the core's standardized scale.
UnifiedInput complete_inputs(const GpCore& core, const MFDataset& d, int row,
                             const Eigen::VectorXd& zeta_std_current, const Eigen::VectorXd& raw);

struct CalibrationResult {
  bool probabilistic = false;
  TrainedModel det;                 // valid when !probabilistic
  EnsembleModel prob;               // valid when probabilistic
  Eigen::VectorXd zeta_mean_raw;    // point estimates / posterior means, raw units
  Eigen::VectorXd zeta_std_raw;     // posterior stds (probabilistic only)
};

// Inverse estimation of the calibration parameters jointly with all other
// model parameters. cfg.calibration selects the mode; cfg.calibration_ids
// names the zeta columns (NaN on HF rows).
CalibrationResult calibrate(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt);

}  // namespace mfgp
