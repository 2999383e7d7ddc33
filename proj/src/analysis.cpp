// SPDX-License-Identifier: Apache-2.0
#include "mfgp/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"
#include "mfgp/training.hpp"

namespace mfgp {

namespace {

double sample_std(const Eigen::VectorXd& y) {
  if (y.size() < 2) throw MetricUndefined("metric needs at least two observations");
  const double m = y.mean();
  const double var = (y.array() - m).square().sum() / (y.size() - 1);
  return std::sqrt(var);
}

}  // namespace

double nrmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& mu_pred) {
  if (y_true.size() == 0 || y_true.size() != mu_pred.size())
    throw ContractViolation("nrmse: length mismatch or empty input");
  const double s = sample_std(y_true);
  if (s <= 0.0) throw MetricUndefined("nrmse: zero response variance");
  return std::sqrt((y_true - mu_pred).squaredNorm() / y_true.size()) / s;
}

double nis(const Eigen::VectorXd& y_true, const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
           double v) {
  if (y_true.size() == 0 || y_true.size() != mu.size() || mu.size() != tau.size())
    throw ContractViolation("nis: length mismatch or empty input");
  if ((tau.array() < 0).any()) throw ContractViolation("nis: negative standard deviation");
  const double s = sample_std(y_true);
  if (s <= 0.0) throw MetricUndefined("nis: zero response variance");
  return interval_score(mu, tau, y_true, v) / s;
}

SensitivityReport sobol_indices(const std::function<double(const Eigen::VectorXd&)>& f,
                                const SobolInputSpec& spec, int N, std::uint64_t seed) {
  auto batch = [&f](const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (int i = 0; i < X.rows(); ++i) out[i] = f(X.row(i).transpose());
    return out;
  };
  return sobol_indices_batch(batch, spec, N, seed);
}

SensitivityReport sobol_indices_batch(
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& f, const SobolInputSpec& spec,
    int N, std::uint64_t seed) {
  const int d = static_cast<int>(spec.lo.size());
  if (d < 1 || spec.hi.size() != d) throw ContractViolation("sobol_indices: bad input spec");
  if (N < 2) throw ContractViolation("sobol_indices: N must be >= 2");

  HaltonSampler hal(2 * d > 32 ? d : 2 * d, seed ^ 0x534f424fULL);
  const bool paired = 2 * d <= 32;
  Eigen::MatrixXd UA(N, d), UB(N, d);
  if (paired) {
    const Eigen::MatrixXd U = hal.draw(N);
    UA = U.leftCols(d);
    UB = U.rightCols(d);
  } else {
    UA = hal.draw(N);
    HaltonSampler hal2(d, seed ^ 0x42424242ULL);
    UB = hal2.draw(N);
  }

  auto to_X = [&](const Eigen::MatrixXd& U) {
    Eigen::MatrixXd X(U.rows(), d);
    for (int c = 0; c < d; ++c) {
      const auto q = spec.qual_dict.find(c);
      for (int i = 0; i < U.rows(); ++i) {
        if (q != spec.qual_dict.end())
          X(i, c) = std::min<double>(q->second - 1, std::floor(U(i, c) * q->second));
        else
          X(i, c) = spec.lo[c] + (spec.hi[c] - spec.lo[c]) * U(i, c);
      }
    }
    return X;
  };

  Eigen::VectorXd fA = f(to_X(UA));
  Eigen::VectorXd fB = f(to_X(UB));
  if (fA.size() != N || fB.size() != N)
    throw ContractViolation("sobol_indices: batch functional returned a wrong-sized vector");

  SensitivityReport rep;
  rep.n_samples = N;
  rep.seed = seed;
  rep.main_index.resize(d);
  rep.total_index.resize(d);
  for (int c = 0; c < d; ++c) rep.names.push_back("x" + std::to_string(c));

  Eigen::VectorXd all(2 * N);
  all << fA, fB;
  const double mean = all.mean();
  const double V = (all.array() - mean).square().sum() / (all.size() - 1);
  if (V < 1e-300) {
    rep.constant_output = true;
    rep.main_index.setZero();
    rep.total_index.setZero();
    return rep;
  }
  // centering makes the pick-freeze estimator exactly invariant under affine
  // rescaling of f
  fA.array() -= mean;
  fB.array() -= mean;

  for (int c = 0; c < d; ++c) {
    Eigen::MatrixXd UAB = UA;
    UAB.col(c) = UB.col(c);
    Eigen::VectorXd fAB = f(to_X(UAB));
    fAB.array() -= mean;
    double s_main = 0.0, s_total = 0.0;
    for (int i = 0; i < N; ++i) {
      s_main += fB[i] * (fAB[i] - fA[i]);
      s_total += (fA[i] - fAB[i]) * (fA[i] - fAB[i]);
    }
    rep.main_index[c] = (s_main / N) / V;
    rep.total_index[c] = (s_total / (2.0 * N)) / V;
  }
  return rep;
}

double s_cat(const TrainedModel& model, int feature_col) {
  const GpCore& c = *model.core;
  const auto it = std::find(c.cat_cols.begin(), c.cat_cols.end(), feature_col);
  if (it == c.cat_cols.end())
    throw ContractViolation("s_cat: feature column is not categorical");
  if (c.hmaps.size() != c.cat_cols.size())
    throw ContractViolation("s_cat: model must use one latent block per categorical variable");
  const int v = static_cast<int>(it - c.cat_cols.begin());
  const int levels = c.cat.levels[v];
  const ParamBlock* b = c.layout.find("theta_h");
  int poff = b->offset;
  for (int w = 0; w < v; ++w) poff += c.hmaps[w].n_params();

  Eigen::MatrixXd pts(levels, c.hmaps[v].dh);
  for (int l = 0; l < levels; ++l) {
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(c.enc.block_width(v));
    pi[l] = 1.0;
    pts.row(l) = c.hmaps[v].forward(model.raw.data() + poff, pi, nullptr).transpose();
  }
  double acc = 0.0;
  int cnt = 0;
  for (int a = 0; a < levels; ++a)
    for (int bl = a + 1; bl < levels; ++bl) {
      acc += (pts.row(a) - pts.row(bl)).norm();
      ++cnt;
    }
  return cnt > 0 ? acc / cnt : 0.0;
}

}  // namespace mfgp
