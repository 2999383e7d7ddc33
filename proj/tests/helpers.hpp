// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mfgp/dataset.hpp"
#include "mfgp/loss.hpp"
#include "mfgp/rng.hpp"

namespace test {

// central finite differences of an objective on the raw scale
inline Eigen::VectorXd fd_gradient(mfgp::Objective& obj, const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = obj.eval(xp, nullptr);
    xp[i] = x[i] - h;
    const double fm = obj.eval(xp, nullptr);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// relative agreement with a unit floor so near-zero coordinates compare on
// the absolute scale (central differences bottom out around 1e-7 there)
inline double grad_discrepancy(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// small structured dataset: dx numeric features, optional categorical column
// (3 levels) and optional multi-source layout
inline mfgp::MFDataset toy_dataset(int n, int dx, bool with_cat, int n_sources,
                                   std::uint64_t seed) {
  mfgp::CounterRng rng(seed, 99);
  mfgp::MFDataset d;
  const int nf = dx + (with_cat ? 1 : 0);
  d.X.resize(n, nf);
  d.y.resize(n);
  if (n_sources > 1) d.source.resize(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < dx; ++c) {
      d.X(i, c) = 2.0 * rng.uniform() - 1.0;
      acc += std::sin(2.0 * d.X(i, c));
    }
    if (with_cat) {
      const int lv = i % 3;
      d.X(i, dx) = lv;
      acc += 0.5 * lv;
    }
    int s = 0;
    if (n_sources > 1) {
      s = i % n_sources;
      d.source[i] = s;
      acc += 0.3 * s;
    }
    d.y[i] = acc + 0.05 * rng.normal();
  }
  return d;
}

}  // namespace test
