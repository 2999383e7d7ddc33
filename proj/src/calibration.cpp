// SPDX-License-Identifier: Apache-2.0
#include "mfgp/calibration.hpp"

#include "mfgp/errors.hpp"

namespace mfgp {

Eigen::VectorXd sample_zeta(const CalibrationPosterior& post, const Eigen::VectorXd& eps) {
  if (eps.size() != post.mu.size() || post.tau.size() != post.mu.size())
    throw ContractViolation("sample_zeta: dimension mismatch");
  return post.mu + post.tau.cwiseProduct(eps);
}

UnifiedInput complete_inputs(const GpCore& core, const MFDataset& d, int row,
                             const Eigen::VectorXd& zeta_std_current, const Eigen::VectorXd& raw) {
  if (!core.calibrating()) throw ContractViolation("complete_inputs: model has no calibration");
  if (zeta_std_current.size() != core.dzeta)
    throw ContractViolation("complete_inputs: zeta length mismatch");
  const RowBlock rb = core.prepare(d);
  if (row < 0 || row >= static_cast<int>(rb.Xs.rows()))
    throw ContractViolation("complete_inputs: row out of range");
  UnifiedInput u;
  u.scaled = rb.Xs.row(row).transpose();
  if (rb.fill[row]) {
    const int base = static_cast<int>(core.numeric_cols.size());
    for (int k = 0; k < core.dzeta; ++k) u.scaled[base + k] = zeta_std_current[k];
  }
  if (core.has_cats()) u.latent_h = core.h_of_rank(raw, rb.rank[row]);
  if (core.has_z()) {
    if (core.prob_z()) {
      Eigen::VectorXd mu;
      Eigen::MatrixXd L;
      core.z_moments(raw, rb.src[row], mu, L);
      u.latent_z = mu;
    } else {
      u.latent_z = core.z_table_det(raw).row(rb.src[row]).transpose();
    }
  }
  return u;
}

CalibrationResult calibrate(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt) {
  if (cfg.calibration_ids.empty())
    throw ContractViolation("calibrate: no calibration columns given");
  if (cfg.calibration == CalibrationMode::None)
    throw ContractViolation("calibrate: calibration mode not set");
  const auto counts = data.source_counts();
  if (counts.size() < 2 || counts[0] == 0)
    throw ContractViolation("calibrate: need at least one HF and one LF row");

  CalibrationResult out;
  if (cfg.calibration == CalibrationMode::Deterministic) {
    out.probabilistic = false;
    out.det = fit_deterministic(cfg, data, opt);
    out.zeta_mean_raw = out.det.zeta_estimate_raw();
  } else {
    out.probabilistic = true;
    out.prob = fit_probabilistic(cfg, data, opt);
    out.zeta_mean_raw = out.prob.zeta_posterior_mean_raw();
    out.zeta_std_raw = out.prob.zeta_posterior_std_raw();
  }
  return out;
}

}  // namespace mfgp
