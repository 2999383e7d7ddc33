// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace mfgp {

enum class KernelFamily { Gaussian, PowerExponential, Matern };

// Stationary correlation over a unified input: a scaled numeric block whose
// coordinates each carry a log10 length-scale, plus unscaled latent blocks
// (learned embeddings are responsible for their own scale).
struct KernelConfig {
  KernelFamily family = KernelFamily::Gaussian;
  double p = 2.0;    // PowerExponential exponent, in [1, 2]
  double nu = 2.5;   // Matern smoothness, one of {0.5, 1.5, 2.5}
  Eigen::VectorXd omega;  // log10 inverse length-scales, one per scaled coordinate

  void validate() const;
};

struct UnifiedInput {
  Eigen::VectorXd scaled;   // numeric features and calibration coordinates
  Eigen::VectorXd latent_h; // embedding of categorical variables (may be empty)
  Eigen::VectorXd latent_z; // embedding of the source indicator (may be empty)
};

// Weighted distance measure feeding the correlation response:
//   D = sum_i 10^{omega_i} |ds_i|^e + |dh|^2 + |dz|^2,  e = 2 (p for PowerExponential)
double kernel_distance(const KernelConfig& cfg, const UnifiedInput& a, const UnifiedInput& b);

// Correlation response g(D) in (0, 1] and its derivative dg/dD.
double corr_response(KernelFamily family, double nu, double D);
double corr_response_deriv(KernelFamily family, double nu, double D);

double eval_correlation(const KernelConfig& cfg, const UnifiedInput& a, const UnifiedInput& b);

}  // namespace mfgp
