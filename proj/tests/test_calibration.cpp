// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfgp/calibration.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"

using namespace mfgp;

namespace {

// LF(x, zeta) coincides with HF(x) at zeta = 0.6 and departs linearly in zeta
MFDataset synthetic_identifiable(int n_hf, const std::vector<double>& zeta_grid,
                                 std::uint64_t seed) {
  CounterRng rng(seed);
  SourceData hf, lf;
  hf.X.resize(n_hf, 2);
  hf.y.resize(n_hf);
  for (int i = 0; i < n_hf; ++i) {
    const double x = rng.uniform() * 2.0;
    hf.X(i, 0) = x;
    hf.X(i, 1) = std::numeric_limits<double>::quiet_NaN();
    hf.y[i] = std::sin(2.0 * x);
  }
  const int per = 8;
  lf.X.resize(per * zeta_grid.size(), 2);
  lf.y.resize(per * zeta_grid.size());
  int r = 0;
  for (double z : zeta_grid)
    for (int i = 0; i < per; ++i) {
      const double x = rng.uniform() * 2.0;
      lf.X(r, 0) = x;
      lf.X(r, 1) = z;
      lf.y[r] = std::sin(2.0 * x) + 2.0 * (z - 0.6);
      ++r;
    }
  return augment_sources({hf, lf});
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("complete_inputs: LF rows pass through, HF rows receive the estimate") {
  MFDataset d = test::toy_dataset(8, 1, false, 2, 71);
  d.X.conservativeResize(8, 2);
  for (int i = 0; i < 8; ++i)
    d.X(i, 1) = d.source[i] == 0 ? std::numeric_limits<double>::quiet_NaN() : 0.25 * i;
  ModelConfig cfg;
  cfg.calibration = CalibrationMode::Deterministic;
  cfg.calibration_ids = {1};
  cfg.mean = MeanKind::PerSource;
  auto core = GpCore::build(cfg, d);
  const Eigen::VectorXd raw = core->start_raw(1, 0);
  Eigen::VectorXd zeta(1);
  zeta << 0.77;

  for (int i = 0; i < 8; ++i) {
    const UnifiedInput u = complete_inputs(*core, d, i, zeta, raw);
    const int zc = 1;  // second scaled coordinate
    if (d.source[i] == 0) {
      CHECK(u.scaled[zc] == doctest::Approx(0.77).epsilon(1e-12));
    } else {
      const double expect = (d.X(i, 1) - core->x_std.mean[1]) / core->x_std.scale[1];
      CHECK(u.scaled[zc] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  // two HF rows under the same estimate have zero zeta-distance
  int hf1 = -1, hf2 = -1;
  for (int i = 0; i < 8; ++i)
    if (d.source[i] == 0) (hf1 < 0 ? hf1 : hf2) = i;
  const UnifiedInput a = complete_inputs(*core, d, hf1, zeta, raw);
  const UnifiedInput b = complete_inputs(*core, d, hf2, zeta, raw);
  CHECK(a.scaled[1] == b.scaled[1]);
}

TEST_CASE("an HF row carrying recorded zeta values is rejected") {
  MFDataset d = test::toy_dataset(6, 1, false, 2, 72);
  d.X.conservativeResize(6, 2);
  for (int i = 0; i < 6; ++i) d.X(i, 1) = 0.5;  // every row records zeta
  ModelConfig cfg;
  cfg.calibration = CalibrationMode::Deterministic;
  cfg.calibration_ids = {1};
  CHECK_THROWS_AS(GpCore::build(cfg, d), ContractViolation);
}

TEST_CASE("sample_zeta: reparameterization identities and monte carlo") {
  CalibrationPosterior post;
  post.mu.resize(2);
  post.mu << 1.0, -2.0;
  post.tau.resize(2);
  post.tau << 0.5, 1.5;
  CHECK((sample_zeta(post, Eigen::VectorXd::Zero(2)) - post.mu).norm() == 0.0);

  const int N = 100000;
  CounterRng rng(73);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(2), acc2 = Eigen::VectorXd::Zero(2);
  double cross = 0.0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd z = sample_zeta(post, rng.normal_vector(2));
    acc += z;
    acc2 += z.cwiseProduct(z);
    cross += (z[0] - post.mu[0]) * (z[1] - post.mu[1]);
  }
  for (int k = 0; k < 2; ++k) {
    const double var = acc2[k] / N - (acc[k] / N) * (acc[k] / N);
    CHECK(std::sqrt(var) == doctest::Approx(post.tau[k]).epsilon(0.02));
  }
  const double corr = (cross / N) / (post.tau[0] * post.tau[1]);
  CHECK(std::abs(corr) < 0.02);  // marginally independent draws
}

TEST_CASE("deterministic estimate lands in the grid cell containing the truth") {
  const std::vector<double> grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const MFDataset d = synthetic_identifiable(6, grid, 74);
  ModelConfig cfg;
  cfg.calibration = CalibrationMode::Deterministic;
  cfg.calibration_ids = {1};
  cfg.mean = MeanKind::PerSource;
  FitOptions o;
  o.opt.num_restarts = 8;
  o.opt.max_iters = 150;
  o.seed = 2;
  const CalibrationResult res = calibrate(cfg, d, o);
  CHECK(std::abs(res.zeta_mean_raw[0] - 0.6) <= 0.1);
}

TEST_CASE("probabilistic mode with tau forced to zero reproduces the deterministic loss") {
  const MFDataset d = synthetic_identifiable(5, {0.2, 0.5, 0.8}, 75);
  ModelConfig det_cfg;
  det_cfg.calibration = CalibrationMode::Deterministic;
  det_cfg.calibration_ids = {1};
  det_cfg.mean = MeanKind::PerSource;
  det_cfg.add_prior = false;
  auto det_core = GpCore::build(det_cfg, d);
  ModelConfig prob_cfg = det_cfg;
  prob_cfg.calibration = CalibrationMode::Probabilistic;
  prob_cfg.num_pass_train = 6;
  auto prob_core = GpCore::build(prob_cfg, d);

  Eigen::VectorXd det_raw = det_core->start_raw(4, 1);
  Eigen::VectorXd prob_raw = prob_core->start_raw(4, 1);
  for (const char* name : {"mean", "log_sigma2", "omega", "theta_z", "noise"}) {
    const auto* bd = det_core->layout.find(name);
    const auto* bp = prob_core->layout.find(name);
    prob_raw.segment(bp->offset, bp->size) = det_raw.segment(bd->offset, bd->size);
  }
  prob_raw.segment(prob_core->layout.find("zeta_mu")->offset, 1) =
      det_raw.segment(det_core->layout.find("zeta")->offset, 1);
  prob_raw[prob_core->layout.find("zeta_logtau")->offset] = -40.0;  // tau -> 0

  MapLoss det_loss(det_core), prob_loss(prob_core);
  det_loss.begin_iteration(0);
  prob_loss.begin_iteration(0);
  CHECK(prob_loss.eval(prob_raw, nullptr) ==
        doctest::Approx(det_loss.eval(det_raw, nullptr)).epsilon(1e-8));
}

TEST_CASE("rescaling zeta units rescales the estimate by the same affine map") {
  const MFDataset d = synthetic_identifiable(6, {0.0, 0.25, 0.5, 0.75, 1.0}, 76);
  MFDataset scaled = d;
  for (int i = 0; i < scaled.rows(); ++i)
    if (!std::isnan(scaled.X(i, 1))) scaled.X(i, 1) = 1000.0 * scaled.X(i, 1) + 40.0;

  ModelConfig cfg;
  cfg.calibration = CalibrationMode::Deterministic;
  cfg.calibration_ids = {1};
  cfg.mean = MeanKind::PerSource;

  // the standardized problems coincide, so losses match at matched parameters
  auto c1 = GpCore::build(cfg, d);
  auto c2 = GpCore::build(cfg, scaled);
  CHECK((c1->train.Xs - c2->train.Xs).cwiseAbs().maxCoeff() < 1e-12);
  MapLoss l1(c1), l2(c2);
  for (int r = 1; r <= 5; ++r) {
    const Eigen::VectorXd x = c1->start_raw(6, r);
    CHECK(l1.eval(x, nullptr) == doctest::Approx(l2.eval(x, nullptr)).epsilon(1e-10));
  }

  // end to end, the raw estimates map through the same affine transform (the
  // optimizer path tolerates last-ulp standardization differences)
  FitOptions o;
  o.opt.num_restarts = 4;
  o.opt.max_iters = 120;
  o.seed = 6;
  const CalibrationResult a = calibrate(cfg, d, o);
  const CalibrationResult b = calibrate(cfg, scaled, o);
  CHECK(b.zeta_mean_raw[0] ==
        doctest::Approx(1000.0 * a.zeta_mean_raw[0] + 40.0).epsilon(0.02));
}

TEST_CASE("degenerate inputs are contract violations") {
  MFDataset d = test::toy_dataset(6, 1, false, 1, 77);  // all HF
  ModelConfig cfg;
  cfg.calibration = CalibrationMode::Deterministic;
  cfg.calibration_ids = {0};
  FitOptions o;
  CHECK_THROWS_AS(calibrate(cfg, d, o), ContractViolation);
  ModelConfig none;
  CHECK_THROWS_AS(calibrate(none, d, o), ContractViolation);
}

}  // TEST_SUITE
