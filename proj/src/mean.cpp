// SPDX-License-Identifier: Apache-2.0
#include "mfgp/mean.hpp"

#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {

MeanSpec MeanSpec::make(MeanKind kind, int ds, int n_scaled, int n_poly_cols,
                        const std::vector<int>& poly_degree, const std::vector<int>& nn_layers,
                        int dh, int dz) {
  MeanSpec m;
  m.kind = kind;
  m.ds = ds;
  m.n_scaled = n_scaled;
  m.n_poly_cols = n_poly_cols;
  m.dh = dh;
  m.dz = dz;
  if (kind == MeanKind::PerSource && ds < 2)
    m.kind = MeanKind::Zero;  // reference source is pinned at zero
  if (kind == MeanKind::Polynomial) {
    if (static_cast<int>(poly_degree.size()) != ds)
      throw ContractViolation("MeanSpec: need one polynomial degree per source");
    m.poly_degree = poly_degree;
  }
  if (kind == MeanKind::FeedForward) {
    std::vector<int> sizes = {n_scaled + dh + dz};
    sizes.insert(sizes.end(), nn_layers.begin(), nn_layers.end());
    sizes.push_back(1);
    m.net = Mlp(sizes);
  }
  return m;
}

int MeanSpec::poly_terms(int src) const {
  const int g = poly_degree[src];
  return g < 0 ? 0 : 1 + g * n_poly_cols;
}

int MeanSpec::poly_offset(int src) const {
  int off = 0;
  for (int j = 0; j < src; ++j) off += poly_terms(j);
  return off;
}

int MeanSpec::n_params() const {
  switch (kind) {
    case MeanKind::Zero:
      return 0;
    case MeanKind::Single:
      return 1;
    case MeanKind::PerSource:
      return ds - 1;
    case MeanKind::Polynomial: {
      int n = 0;
      for (int j = 0; j < ds; ++j) n += poly_terms(j);
      return n;
    }
    case MeanKind::FeedForward:
      return net.n_params();
  }
  return 0;
}

double MeanSpec::value(const double* params, int src, const Eigen::VectorXd& scaled,
                       const Eigen::VectorXd& h, const Eigen::VectorXd& z, Mlp::Cache* cache) const {
  switch (kind) {
    case MeanKind::Zero:
      return 0.0;
    case MeanKind::Single:
      return params[0];
    case MeanKind::PerSource:
      return src == 0 ? 0.0 : params[src - 1];
    case MeanKind::Polynomial: {
      const int g = poly_degree[src];
      if (g < 0) return 0.0;
      const double* c = params + poly_offset(src);
      double m = c[0];
      int k = 1;
      for (int col = 0; col < n_poly_cols; ++col) {
        double xp = 1.0;
        for (int d = 1; d <= g; ++d) {
          xp *= scaled[col];
          m += c[k++] * xp;
        }
      }
      return m;
    }
    case MeanKind::FeedForward: {
      Eigen::VectorXd in(n_scaled + dh + dz);
      in << scaled, h, z;
      return net.forward(params, in, cache)[0];
    }
  }
  return 0.0;
}

void MeanSpec::backward(const double* params, int src, const Eigen::VectorXd& scaled,
                        const Eigen::VectorXd& h, const Eigen::VectorXd& z, const Mlp::Cache& cache,
                        double gm, double* gparams, Eigen::VectorXd* gscaled, Eigen::VectorXd* gh,
                        Eigen::VectorXd* gz) const {
  switch (kind) {
    case MeanKind::Zero:
      return;
    case MeanKind::Single:
      gparams[0] += gm;
      return;
    case MeanKind::PerSource:
      if (src != 0) gparams[src - 1] += gm;
      return;
    case MeanKind::Polynomial: {
      const int g = poly_degree[src];
      if (g < 0) return;
      double* gc = gparams + poly_offset(src);
      gc[0] += gm;
      int k = 1;
      for (int col = 0; col < n_poly_cols; ++col) {
        double xp = 1.0;
        for (int d = 1; d <= g; ++d) {
          const double xprev = xp;
          xp *= scaled[col];
          const double coef = params[poly_offset(src) + k];
          gc[k] += gm * xp;
          if (gscaled) (*gscaled)[col] += gm * coef * d * xprev;
          ++k;
        }
      }
      return;
    }
    case MeanKind::FeedForward: {
      Eigen::VectorXd gout(1);
      gout[0] = gm;
      const Eigen::VectorXd gin = net.backward(params, cache, gout, gparams);
      if (gscaled) *gscaled += gin.head(n_scaled);
      if (gh && dh > 0) *gh += gin.segment(n_scaled, dh);
      if (gz && dz > 0) *gz += gin.tail(dz);
      return;
    }
  }
}

}  // namespace mfgp
