// SPDX-License-Identifier: Apache-2.0
#include "mfgp/kernel.hpp"

#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997896;
}  // namespace

void KernelConfig::validate() const {
  if (family == KernelFamily::PowerExponential && (p < 1.0 || p > 2.0))
    throw ContractViolation("KernelConfig: p must lie in [1, 2]");
  if (family == KernelFamily::Matern && nu != 0.5 && nu != 1.5 && nu != 2.5)
    throw ContractViolation("KernelConfig: nu must be one of 1/2, 3/2, 5/2");
  for (int i = 0; i < omega.size(); ++i)
    if (omega[i] < -10.0 || omega[i] > 4.0)
      throw ContractViolation("KernelConfig: omega out of [-10, 4]");
}

double kernel_distance(const KernelConfig& cfg, const UnifiedInput& a, const UnifiedInput& b) {
  if (a.scaled.size() != b.scaled.size() || a.latent_h.size() != b.latent_h.size() ||
      a.latent_z.size() != b.latent_z.size())
    throw ContractViolation("kernel_distance: input layouts differ");
  if (cfg.omega.size() != a.scaled.size())
    throw ContractViolation("kernel_distance: omega length does not match scaled block");
  double D = 0.0;
  const bool pexp = cfg.family == KernelFamily::PowerExponential && cfg.p != 2.0;
  for (int i = 0; i < a.scaled.size(); ++i) {
    const double d = a.scaled[i] - b.scaled[i];
    const double w = std::pow(10.0, cfg.omega[i]);
    D += w * (pexp ? std::pow(std::abs(d), cfg.p) : d * d);
  }
  D += (a.latent_h - b.latent_h).squaredNorm();
  D += (a.latent_z - b.latent_z).squaredNorm();
  return D;
}

double corr_response(KernelFamily family, double nu, double D) {
  if (family != KernelFamily::Matern) return std::exp(-D);
  const double d = std::sqrt(D);
  if (nu == 0.5) return std::exp(-d);
  if (nu == 1.5) return (1.0 + kSqrt3 * d) * std::exp(-kSqrt3 * d);
  return (1.0 + kSqrt5 * d + 5.0 / 3.0 * D) * std::exp(-kSqrt5 * d);
}

double corr_response_deriv(KernelFamily family, double nu, double D) {
  if (family != KernelFamily::Matern) return -std::exp(-D);
  const double d = std::sqrt(D);
  if (nu == 0.5) {
    // exponential kernel is non-differentiable at coincident points
    if (d == 0.0) return 0.0;
    return -std::exp(-d) / (2.0 * d);
  }
  if (nu == 1.5) return -1.5 * std::exp(-kSqrt3 * d);
  return -(5.0 / 6.0) * (1.0 + kSqrt5 * d) * std::exp(-kSqrt5 * d);
}

double eval_correlation(const KernelConfig& cfg, const UnifiedInput& a, const UnifiedInput& b) {
  cfg.validate();
  return corr_response(cfg.family, cfg.nu, kernel_distance(cfg, a, b));
}

}  // namespace mfgp
