// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfgp/analysis.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/fit.hpp"
#include "mfgp/rng.hpp"

using namespace mfgp;

TEST_SUITE("analysis") {

TEST_CASE("nrmse basics") {
  Eigen::VectorXd y(2), mu(2);
  y << 0.0, 2.0;
  mu << 1.0, 1.0;
  CHECK(nrmse(y, y) == 0.0);
  CHECK(nrmse(y, mu) == doctest::Approx(0.707107).epsilon(1e-5));  // rmse 1 / std sqrt(2)
  // scaling both by c leaves the metric unchanged
  CHECK(nrmse(3.0 * y, 3.0 * mu) == doctest::Approx(nrmse(y, mu)).epsilon(1e-12));
  Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(nrmse(flat, flat), MetricUndefined);
}

TEST_CASE("nis basics and limits") {
  Eigen::VectorXd y(2), mu(2), tau(2);
  y << 0.0, 2.0;  // sample std sqrt(2)
  mu << 0.0, 2.0;
  tau << 0.5, 0.5;
  // all points inside: mean width / std
  CHECK(nis(y, mu, tau) == doctest::Approx(3.92 * 0.5 / std::sqrt(2.0)).epsilon(1e-10));
  // large tau limit is pure width
  tau << 50.0, 50.0;
  CHECK(nis(y, mu, tau) == doctest::Approx(3.92 * 50.0 / std::sqrt(2.0)).epsilon(1e-10));
  // violations only add: nis >= width / std
  CounterRng rng(81);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd yy = rng.normal_vector(6), mm = rng.normal_vector(6);
    Eigen::VectorXd tt = Eigen::VectorXd::NullaryExpr(6, [&](int) { return 0.1 + rng.uniform(); });
    const double width = 2.0 * 1.96 * tt.mean();
    const double s = std::sqrt((yy.array() - yy.mean()).square().sum() / 5.0);
    CHECK(nis(yy, mm, tt) >= width / s - 1e-12);
  }
}

TEST_CASE("sobol indices of a linear additive function") {
  SobolInputSpec spec;
  spec.lo = Eigen::VectorXd::Zero(2);
  spec.hi = Eigen::VectorXd::Ones(2);
  auto f = [](const Eigen::VectorXd& x) { return x[0] + 2.0 * x[1]; };
  const SensitivityReport rep = sobol_indices(f, spec, 1 << 14, 0);
  CHECK(rep.main_index[0] == doctest::Approx(0.2).epsilon(0.1));
  CHECK(std::abs(rep.main_index[0] - 0.2) < 0.02);
  CHECK(std::abs(rep.main_index[1] - 0.8) < 0.02);
  CHECK(std::abs(rep.total_index[0] - rep.main_index[0]) < 0.02);
  CHECK(std::abs(rep.total_index[1] - rep.main_index[1]) < 0.02);
}

TEST_CASE("constant output flags and zeroes") {
  SobolInputSpec spec;
  spec.lo = Eigen::VectorXd::Zero(2);
  spec.hi = Eigen::VectorXd::Ones(2);
  const SensitivityReport rep =
      sobol_indices([](const Eigen::VectorXd&) { return 3.5; }, spec, 2048, 1);
  CHECK(rep.constant_output);
  CHECK(rep.main_index.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rep.total_index.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("estimator agrees with brute-force double-loop monte carlo") {
  auto brute_main = [](const std::function<double(double, double)>& f, int which, int No, int Ni,
                       std::uint64_t seed) {
    CounterRng rng(seed);
    // Var(E[f | x_which]) / Var(f)
    std::vector<double> cond;
    double all = 0.0, all2 = 0.0;
    int cnt = 0;
    for (int i = 0; i < No; ++i) {
      const double frozen = rng.uniform();
      double acc = 0.0;
      for (int j = 0; j < Ni; ++j) {
        const double other = rng.uniform();
        const double v = which == 0 ? f(frozen, other) : f(other, frozen);
        acc += v;
        all += v;
        all2 += v * v;
        ++cnt;
      }
      cond.push_back(acc / Ni);
    }
    const double mean = all / cnt;
    const double var = all2 / cnt - mean * mean;
    double cm = 0.0, cm2 = 0.0;
    for (double c : cond) {
      cm += c;
      cm2 += c * c;
    }
    cm /= No;
    cm2 /= No;
    const double var_cond = cm2 - cm * cm - var / Ni;  // bias-corrected inner noise
    return var_cond / var;
  };

  struct Case {
    std::function<double(double, double)> f;
  };
  std::vector<Case> cases = {{[](double a, double b) { return a + 2.0 * b; }},
                             {[](double a, double b) { return a * b + 0.3 * a; }}};
  for (size_t ci = 0; ci < cases.size(); ++ci) {
    SobolInputSpec spec;
    spec.lo = Eigen::VectorXd::Zero(2);
    spec.hi = Eigen::VectorXd::Ones(2);
    auto f2 = [&](const Eigen::VectorXd& x) { return cases[ci].f(x[0], x[1]); };
    const SensitivityReport rep = sobol_indices(f2, spec, 1 << 14, 17);
    for (int w = 0; w < 2; ++w) {
      const double brute = brute_main(cases[ci].f, w, 512, 512, 1000 + w);
      CHECK(std::abs(rep.main_index[w] - brute) < 0.03);
    }
  }
}

TEST_CASE("indices are invariant under affine rescaling of the output") {
  SobolInputSpec spec;
  spec.lo = Eigen::VectorXd::Zero(3);
  spec.hi = Eigen::VectorXd::Ones(3);
  auto f = [](const Eigen::VectorXd& x) { return x[0] * x[1] + 0.5 * x[2]; };
  auto g = [&](const Eigen::VectorXd& x) { return -7.0 * f(x) + 100.0; };
  const SensitivityReport a = sobol_indices(f, spec, 1 << 13, 4);
  const SensitivityReport b = sobol_indices(g, spec, 1 << 13, 4);
  for (int c = 0; c < 3; ++c) {
    CHECK(a.main_index[c] == doctest::Approx(b.main_index[c]).epsilon(1e-9));
    CHECK(a.total_index[c] == doctest::Approx(b.total_index[c]).epsilon(1e-9));
  }
}

TEST_CASE("categorical columns are sampled as uniform levels") {
  SobolInputSpec spec;
  spec.lo = Eigen::VectorXd::Zero(2);
  spec.hi = Eigen::VectorXd::Ones(2);
  spec.qual_dict = {{1, 4}};
  auto f = [](const Eigen::VectorXd& x) { return x[0] + 3.0 * x[1]; };  // levels 0..3 dominate
  const SensitivityReport rep = sobol_indices(f, spec, 1 << 13, 9);
  CHECK(rep.main_index[1] > rep.main_index[0]);
  CHECK(rep.main_index[1] > 0.8);
}

TEST_CASE("s_cat needs the per-variable mode and measures latent spread") {
  MFDataset d = test::toy_dataset(12, 1, true, 1, 83);
  ModelConfig cfg;
  cfg.qual_dict = {{1, 3}};
  cfg.separate_embedding = true;
  auto core = GpCore::build(cfg, d);
  Eigen::VectorXd raw = core->start_raw(2, 0);
  const auto* bh = core->layout.find("theta_h");

  // collapse all three levels onto one latent point
  raw.segment(bh->offset, bh->size).setZero();
  TrainedModel m = finalize_deterministic(core, raw, 0);
  CHECK(s_cat(m, 1) == doctest::Approx(0.0));

  // place levels explicitly: rows of the per-variable A are the level latents
  // equilateral triangle with unit side in 2-D
  Eigen::MatrixXd pts(3, 2);
  pts << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
  for (int l = 0; l < 3; ++l)
    for (int c = 0; c < 2; ++c) raw[bh->offset + l * 2 + c] = pts(l, c);
  m = finalize_deterministic(core, raw, 0);
  CHECK(s_cat(m, 1) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(s_cat(m, 0), ContractViolation);  // numeric column

  // joint embeddings refuse
  ModelConfig joint;
  joint.qual_dict = {{1, 3}};
  MFDataset d2 = test::toy_dataset(12, 1, true, 1, 84);
  auto core2 = GpCore::build(joint, d2);
  const TrainedModel mj = finalize_deterministic(core2, core2->start_raw(1, 0), 0);
  CHECK(s_cat(mj, 1) >= 0.0);  // single variable: joint == per-variable layout
}

TEST_CASE("two levels at latent distance d score exactly d") {
  MFDataset d = test::toy_dataset(10, 1, true, 1, 85);
  for (int i = 0; i < 10; ++i) d.X(i, 1) = i % 2;
  ModelConfig cfg;
  cfg.qual_dict = {{1, 2}};
  cfg.separate_embedding = true;
  auto core = GpCore::build(cfg, d);
  Eigen::VectorXd raw = core->start_raw(2, 0);
  const auto* bh = core->layout.find("theta_h");
  raw.segment(bh->offset, bh->size).setZero();
  raw[bh->offset + 2] = 3.0;  // level 1 at (3, 0), level 0 at origin
  const TrainedModel m = finalize_deterministic(core, raw, 0);
  CHECK(s_cat(m, 1) == doctest::Approx(3.0).epsilon(1e-12));
}

}  // TEST_SUITE
