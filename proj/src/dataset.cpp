// SPDX-License-Identifier: Apache-2.0
#include "mfgp/dataset.hpp"

#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

int MFDataset::n_sources() const {
  if (source.empty()) return 1;
  int m = 0;
  for (int s : source) m = std::max(m, s);
  return m + 1;
}

std::vector<int> MFDataset::source_counts() const {
  std::vector<int> c(n_sources(), 0);
  for (int i = 0; i < rows(); ++i) ++c[source_of(i)];
  return c;
}

void MFDataset::validate() const {
  if (y.size() != X.rows()) throw ContractViolation("MFDataset: response length != row count");
  if (!source.empty() && static_cast<int>(source.size()) != rows())
    throw ContractViolation("MFDataset: source length != row count");
  const auto counts = source_counts();
  for (size_t j = 0; j < counts.size(); ++j)
    if (counts[j] == 0) throw ContractViolation("MFDataset: source indices not contiguous from 0");
  if (!columns.empty() && static_cast<int>(columns.size()) != features())
    throw ContractViolation("MFDataset: column name count != feature count");
}

MFDataset augment_sources(const std::vector<SourceData>& parts) {
  if (parts.empty()) throw ContractViolation("augment_sources: no datasets");
  const auto nf = parts.front().X.cols();
  int n = 0;
  for (const auto& p : parts) {
    if (p.X.cols() != nf) throw ContractViolation("augment_sources: feature layouts differ");
    if (p.y.size() != p.X.rows()) throw ContractViolation("augment_sources: response length mismatch");
    n += static_cast<int>(p.X.rows());
  }
  MFDataset out;
  out.X.resize(n, nf);
  out.y.resize(n);
  out.source.resize(n);
  int r = 0;
  for (size_t j = 0; j < parts.size(); ++j) {
    const auto& p = parts[j];
    out.X.middleRows(r, p.X.rows()) = p.X;
    out.y.segment(r, p.y.size()) = p.y;
    for (int i = 0; i < p.X.rows(); ++i) out.source[r + i] = static_cast<int>(j);
    r += static_cast<int>(p.X.rows());
  }
  return out;
}

void Standardizer::fit(const Eigen::MatrixXd& X) {
  mean = X.colwise().mean();
  scale.resize(X.cols());
  for (int c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - mean[c]).square().sum() / std::max<int>(1, X.rows() - 1);
    const double s = std::sqrt(var);
    scale[c] = s < 1e-12 ? 1.0 : s;
  }
}

void Standardizer::fit_ignore_nan(const Eigen::MatrixXd& X) {
  mean.resize(X.cols());
  scale.resize(X.cols());
  for (int c = 0; c < X.cols(); ++c) {
    double sum = 0.0;
    int cnt = 0;
    for (int r = 0; r < X.rows(); ++r)
      if (!std::isnan(X(r, c))) {
        sum += X(r, c);
        ++cnt;
      }
    mean[c] = cnt > 0 ? sum / cnt : 0.0;
    double ss = 0.0;
    for (int r = 0; r < X.rows(); ++r)
      if (!std::isnan(X(r, c))) ss += (X(r, c) - mean[c]) * (X(r, c) - mean[c]);
    const double s = cnt > 1 ? std::sqrt(ss / (cnt - 1)) : 0.0;
    scale[c] = s < 1e-12 ? 1.0 : s;
  }
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out = X;
  for (int c = 0; c < X.cols(); ++c) out.col(c) = ((X.col(c).array() - mean[c]) / scale[c]).matrix();
  return out;
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& Xs) const {
  Eigen::MatrixXd out = Xs;
  for (int c = 0; c < Xs.cols(); ++c) out.col(c) = (Xs.col(c).array() * scale[c] + mean[c]).matrix();
  return out;
}

void ScalarStandardizer::fit(const Eigen::VectorXd& v) {
  mean = v.mean();
  const double var = (v.array() - mean).square().sum() / std::max<int>(1, static_cast<int>(v.size()) - 1);
  const double s = std::sqrt(var);
  scale = s < 1e-12 ? 1.0 : s;
}

}  // namespace mfgp
