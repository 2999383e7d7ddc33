// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mfgp {

// Unified multi-source table. Feature columns hold numeric values,
// categorical level indices (stored as doubles), or calibration coordinates;
// calibration cells are NaN on rows whose source does not record them.
// Source 0 is the reference (high-fidelity) source by convention.
struct MFDataset {
  Eigen::MatrixXd X;            // n x nf
  std::vector<int> source;      // n entries in {0..ds-1}; empty means all zero
  Eigen::VectorXd y;
  std::vector<std::string> columns;  // optional feature names (nf entries)

  int rows() const { return static_cast<int>(X.rows()); }
  int features() const { return static_cast<int>(X.cols()); }
  int n_sources() const;
  std::vector<int> source_counts() const;
  int source_of(int row) const { return source.empty() ? 0 : source[row]; }

  void validate() const;
};

struct SourceData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// Row-stack per-source datasets and append the source indicator, preserving
// within-source ordering.
MFDataset augment_sources(const std::vector<SourceData>& parts);

// Per-column affine standardization; constant columns keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  void fit(const Eigen::MatrixXd& X);
  // fit ignoring NaN cells (used for calibration columns present only on LF rows)
  void fit_ignore_nan(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& Xs) const;
};

struct ScalarStandardizer {
  double mean = 0.0, scale = 1.0;
  void fit(const Eigen::VectorXd& v);
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return ((v.array() - mean) / scale).matrix(); }
  Eigen::VectorXd invert(const Eigen::VectorXd& v) const { return (v.array() * scale + mean).matrix(); }
};

}  // namespace mfgp
