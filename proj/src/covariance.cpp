// SPDX-License-Identifier: Apache-2.0
#include "mfgp/covariance.hpp"

#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

void NoiseModel::validate() const {
  if (lb_noise <= 0.0) throw ContractViolation("NoiseModel: lb_noise must be positive");
  if (delta.size() < 1) throw ContractViolation("NoiseModel: empty nugget vector");
  for (int i = 0; i < delta.size(); ++i)
    if (delta[i] < lb_noise) throw ContractViolation("NoiseModel: nugget below lower bound");
}

Eigen::MatrixXd build_covariance(const KernelConfig& cfg, double sigma2,
                                 const std::vector<UnifiedInput>& inputs, const NoiseModel& noise,
                                 const std::vector<int>& source_of) {
  if (sigma2 <= 0.0) throw ContractViolation("build_covariance: sigma2 must be positive");
  noise.validate();
  const int n = static_cast<int>(inputs.size());
  if (noise.kind == NoiseKind::PerSource && static_cast<int>(source_of.size()) != n)
    throw ContractViolation("build_covariance: source_of length mismatch");
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i) {
    C(i, i) = sigma2 + noise.of_source(source_of.empty() ? 0 : source_of[i]);
    for (int j = i + 1; j < n; ++j) {
      const double c = sigma2 * eval_correlation(cfg, inputs[i], inputs[j]);
      C(i, j) = c;
      C(j, i) = c;
    }
  }
  return C;
}

Eigen::VectorXd CholFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(x);
}

Eigen::MatrixXd CholFactor::solve(const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd X = L.triangularView<Eigen::Lower>().solve(B);
  return L.transpose().triangularView<Eigen::Upper>().solve(X);
}

Eigen::MatrixXd CholFactor::inverse() const {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(L.rows(), L.cols());
  return solve(eye);
}

CholFactor factorize_spd(const Eigen::MatrixXd& C) {
  const double base = C.diagonal().mean();
  std::vector<double> ladder = {0.0, 1e-8 * base, 1e-7 * base, 1e-6 * base, 1e-5 * base, 1e-4 * base};
  for (double jit : ladder) {
    Eigen::MatrixXd A = C;
    if (jit > 0.0) A.diagonal().array() += jit;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      CholFactor f;
      f.L = llt.matrixL();
      f.jitter = jit;
      return f;
    }
  }
  throw NumericalSingularity("factorize_spd: Cholesky failed after jitter escalation", ladder);
}

}  // namespace mfgp
