// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfgp/mlp.hpp"

namespace mfgp {

enum class MeanKind { Zero, Single, PerSource, Polynomial, FeedForward };

// Prior mean m(x, h, z; beta) over the unified input. PerSource fixes the
// reference source (id 0) at zero; Polynomial holds per-source coefficient
// vectors over per-feature monomials of the scaled numeric block; FeedForward
// consumes the concatenation (scaled, h, z) so its latent inputs are the same
// objects parameterized in the kernel.
struct MeanSpec {
  MeanKind kind = MeanKind::Single;
  int ds = 1;
  int n_scaled = 0;             // width of the scaled block fed to nets
  int n_poly_cols = 0;          // leading scaled columns available to polynomial bases
  std::vector<int> poly_degree; // per source, -1 = identically zero
  int dh = 0, dz = 0;
  Mlp net;

  static MeanSpec make(MeanKind kind, int ds, int n_scaled, int n_poly_cols,
                       const std::vector<int>& poly_degree, const std::vector<int>& nn_layers,
                       int dh, int dz);

  int n_params() const;
  // coefficient offset of one source's polynomial block (within the mean block)
  int poly_offset(int src) const;
  int poly_terms(int src) const;

  double value(const double* params, int src, const Eigen::VectorXd& scaled,
               const Eigen::VectorXd& h, const Eigen::VectorXd& z, Mlp::Cache* cache) const;

  // gm = dL/dm for this row; accumulates parameter gradient and, when the
  // pointers are non-null, input gradients (+=).
  void backward(const double* params, int src, const Eigen::VectorXd& scaled,
                const Eigen::VectorXd& h, const Eigen::VectorXd& z, const Mlp::Cache& cache,
                double gm, double* gparams, Eigen::VectorXd* gscaled, Eigen::VectorXd* gh,
                Eigen::VectorXd* gz) const;

  bool uses_latents() const { return kind == MeanKind::FeedForward; }
};

}  // namespace mfgp
