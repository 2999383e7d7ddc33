// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/fit.hpp"

using namespace mfgp;

namespace {

FitOptions quick_fit(int restarts = 6, std::uint64_t seed = 0) {
  FitOptions o;
  o.opt.num_restarts = restarts;
  o.opt.max_iters = 150;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_SUITE("predict") {

TEST_CASE("interpolates noise-free training data with a pinned nugget") {
  MFDataset d = test::toy_dataset(12, 2, false, 1, 31);
  // deterministic smooth responses
  for (int i = 0; i < d.rows(); ++i) d.y[i] = std::sin(d.X(i, 0)) + 0.5 * d.X(i, 1);
  ModelConfig cfg;
  cfg.fix_noise = true;
  cfg.fix_noise_val = 1e-8;
  const TrainedModel m = fit_deterministic(cfg, d, quick_fit());
  const PredictiveDistribution p = m.predict(d, false, false);
  const double range = d.y.maxCoeff() - d.y.minCoeff();
  const double s2 = m.sigma2() * m.core->y_std.scale * m.core->y_std.scale;
  for (int i = 0; i < d.rows(); ++i) {
    CHECK(std::abs(p.mean[i] - d.y[i]) < 1e-6 * range);
    CHECK(p.var[i] <= 1e-6 * s2);
  }
}

TEST_CASE("single training point reduces to the closed form") {
  MFDataset d;
  d.X = Eigen::MatrixXd::Zero(1, 1);
  d.y = Eigen::VectorXd::Constant(1, 0.0);
  ModelConfig cfg;
  cfg.mean = MeanKind::Zero;
  cfg.fix_noise = true;
  cfg.fix_noise_val = 0.3;
  auto core = GpCore::build(cfg, d);
  Eigen::VectorXd raw = core->start_raw(0, 0);
  raw[core->layout.find("log_sigma2")->offset] = std::log(1.7);
  const TrainedModel m = finalize_deterministic(core, raw, 0.0);

  MFDataset q;
  q.X = Eigen::MatrixXd::Constant(1, 1, 0.8);
  q.y = Eigen::VectorXd::Zero(1);
  const PredictiveDistribution p = m.predict(q, false, false);
  // mu(x*) = m + c(x*, x) (y - m) / (sigma2 + delta); y = m = 0 here, so 0
  CHECK(p.mean[0] == doctest::Approx(0.0).epsilon(1e-12));

  // non-trivial case: a constant mean parameter leaves a residual to krige.
  // With one point the standardizer centers y, so the hand formula lives on
  // the internal scale: mu* = ym + ys [beta + c(x*,x)(ytilde - beta)/(s2 + d)]
  MFDataset d2 = d;
  d2.y[0] = 2.0;
  ModelConfig cfg2 = cfg;
  cfg2.mean = MeanKind::Single;
  auto core2 = GpCore::build(cfg2, d2);
  Eigen::VectorXd raw2 = core2->start_raw(0, 0);
  raw2[core2->layout.find("log_sigma2")->offset] = std::log(1.7);
  raw2[core2->layout.find("mean")->offset] = 0.4;
  const TrainedModel m2 = finalize_deterministic(core2, raw2, 0.0);
  const PredictiveDistribution p2 = m2.predict(q, false, false);
  const KernelConfig kc = core2->kernel_config(raw2);
  UnifiedInput a{core2->train.Xs.row(0).transpose(), {}, {}};
  UnifiedInput b{core2->prepare(q).Xs.row(0).transpose(), {}, {}};
  const double cxx = 1.7 * eval_correlation(kc, a, b);
  const double ytilde = core2->ystd[0];
  const double expect =
      core2->y_std.mean +
      core2->y_std.scale * (0.4 + cxx * (ytilde - 0.4) / (1.7 + 0.3));
  CHECK(p2.mean[0] == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("far queries revert to the prior mean and variance") {
  MFDataset d = test::toy_dataset(8, 1, false, 1, 33);
  ModelConfig cfg;
  cfg.fix_noise = true;
  cfg.fix_noise_val = 1e-6;
  const TrainedModel m = fit_deterministic(cfg, d, quick_fit());

  MFDataset q;
  q.X = Eigen::MatrixXd::Constant(1, 1, 1e7);  // astronomically far on the scaled axis
  q.y = Eigen::VectorXd::Zero(1);
  const PredictiveDistribution off = m.predict(q, false, false);
  const PredictiveDistribution on = m.predict(q, true, false);
  const double ys = m.core->y_std.scale, ym = m.core->y_std.mean;
  const double beta = m.core->layout.block_values("mean", m.raw)[0];
  CHECK(off.mean[0] == doctest::Approx(ym + ys * beta).epsilon(1e-9));
  CHECK(off.var[0] == doctest::Approx(m.sigma2() * ys * ys).epsilon(1e-9));
  CHECK(on.var[0] == doctest::Approx((m.sigma2() + 1e-6) * ys * ys).epsilon(1e-9));
}

TEST_CASE("adding a constant to y shifts the mean exactly and keeps the covariance") {
  const MFDataset d = test::toy_dataset(5, 1, false, 1, 35);
  MFDataset d2 = d;
  d2.y.array() += 4.25;
  ModelConfig cfg;
  const FitOptions o = quick_fit(4, 11);
  const TrainedModel m1 = fit_deterministic(cfg, d, o);
  const TrainedModel m2 = fit_deterministic(cfg, d2, o);

  MFDataset q;
  q.X = Eigen::MatrixXd::Random(7, 1);
  q.y = Eigen::VectorXd::Zero(7);
  const PredictiveDistribution p1 = m1.predict(q, false, true);
  const PredictiveDistribution p2 = m2.predict(q, false, true);
  for (int i = 0; i < 7; ++i) CHECK(p2.mean[i] - p1.mean[i] == doctest::Approx(4.25).epsilon(1e-7));
  CHECK((p1.cov - p2.cov).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("full covariance is symmetric with the marginals on its diagonal") {
  const MFDataset d = test::toy_dataset(10, 2, false, 1, 36);
  const TrainedModel m = fit_deterministic(ModelConfig{}, d, quick_fit(3));
  MFDataset q;
  q.X = Eigen::MatrixXd::Random(5, 2);
  q.y = Eigen::VectorXd::Zero(5);
  const PredictiveDistribution p = m.predict(q, true, true);
  CHECK((p.cov - p.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 0; i < 5; ++i) {
    CHECK(p.cov(i, i) == doctest::Approx(p.var[i]).epsilon(1e-9));
    CHECK(p.var[i] >= 0.0);
  }
}

TEST_CASE("query layout mismatch is a contract violation") {
  const MFDataset d = test::toy_dataset(6, 2, false, 1, 37);
  const TrainedModel m = fit_deterministic(ModelConfig{}, d, quick_fit(2));
  MFDataset q;
  q.X = Eigen::MatrixXd::Random(2, 3);  // wrong width
  q.y = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(m.predict(q, false, false), ContractViolation);
}

TEST_CASE("kernel at identical (x, t) across sources equals the source correlation") {
  MFDataset d = test::toy_dataset(12, 1, true, 2, 38);
  ModelConfig cfg;
  cfg.qual_dict = {{1, 3}};
  cfg.mean = MeanKind::PerSource;
  const TrainedModel m = fit_deterministic(cfg, d, quick_fit(3));
  const KernelConfig kc = m.core->kernel_config(m.raw);
  Eigen::VectorXd xs = Eigen::VectorXd::Constant(1, 0.2);
  Eigen::VectorXd h = m.H.row(0).transpose();
  UnifiedInput a{xs, h, m.Z.row(0).transpose()};
  UnifiedInput b{xs, h, m.Z.row(1).transpose()};
  CHECK(eval_correlation(kc, a, b) ==
        doctest::Approx(source_correlation(m.Z.row(0).transpose(), m.Z.row(1).transpose()))
            .epsilon(1e-12));
}

}  // TEST_SUITE
