// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mfgp/benchmarks.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"

using namespace mfgp;

TEST_SUITE("benchmarks") {

TEST_CASE("sinusoidal formulas") {
  const BenchmarkProblem p = make_sinusoidal();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
  CHECK(p.evaluate(0, x0) == doctest::Approx(0.0));
  CHECK(p.evaluate(1, x0) == doctest::Approx(1.0));
  Eigen::VectorXd x1 = Eigen::VectorXd::Constant(1, 1.0);
  CHECK(p.evaluate(1, x1) - p.evaluate(0, x1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("beam deflection hand value") {
  const BenchmarkProblem p = make_beam_deflection();
  Eigen::VectorXd x(5);
  x << 12000, 0.15, 0.3, 5.0, std::numeric_limits<double>::quiet_NaN();
  CHECK(p.evaluate(0, x) == doctest::Approx(0.0096451).epsilon(1e-4));
  x[4] = 30.0;  // LF at the ground-truth modulus coincides with HF
  CHECK(p.evaluate(1, x) == doctest::Approx(p.evaluate(0, x)).epsilon(1e-12));
}

TEST_CASE("borehole-mixed levels map back to stored values monotonically") {
  const BenchmarkProblem p = make_borehole_mixed(5);
  for (int col : {0, 5}) {
    const auto& vals = p.level_values.at(col);
    CHECK(vals.size() == 5);
    for (size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] > vals[i - 1]);  // sorted levels
  }
  // evaluating (level_i, level_j, numeric rest) equals borehole HF at the mapped numerics
  const BenchmarkProblem base = make_borehole();
  HaltonSampler hal(8, 3);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd u = hal.next();
    Eigen::VectorXd xm(8), xb(8);
    for (int c = 0; c < 8; ++c) xm[c] = base.lo[c] + (base.hi[c] - base.lo[c]) * u[c];
    xb = xm;
    const int l0 = t % 5, l5 = (t * 2) % 5;
    xm[0] = l0;
    xm[5] = l5;
    xb[0] = p.level_values.at(0)[l0];
    xb[5] = p.level_values.at(5)[l5];
    CHECK(p.evaluate(0, xm) == doctest::Approx(base.evaluate(0, xb)).epsilon(1e-12));
  }
}

TEST_CASE("sampling is deterministic per seed and honors the noise flag") {
  const BenchmarkProblem p = make_borehole();
  const SourceData a = p.sample(0, 20, 9, false);
  const SourceData b = p.sample(0, 20, 9, false);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  const SourceData c = p.sample(0, 20, 10, false);
  CHECK((a.X - c.X).cwiseAbs().maxCoeff() > 0.0);
  for (int i = 0; i < 20; ++i)
    for (int col = 0; col < 8; ++col) {
      CHECK(a.X(i, col) >= p.lo[col]);
      CHECK(a.X(i, col) <= p.hi[col]);
    }
}

TEST_CASE("noise injection matches the nominal standard deviation") {
  // borehole HF noise 2, wing noise 1, sinusoidal noise 1
  struct Row {
    BenchmarkProblem p;
    double want;
  };
  std::vector<Row> rows;
  rows.push_back({make_borehole(), 2.0});
  rows.push_back({make_wing(), 1.0});
  rows.push_back({make_sinusoidal(), 1.0});
  for (auto& r : rows) {
    CHECK(r.p.noise_std[0] == r.want);
    const int n = 100000;
    const SourceData clean = r.p.sample(0, n, 21, false);
    const SourceData noisy = r.p.sample(0, n, 21, true);
    const Eigen::VectorXd eps = noisy.y - clean.y;
    const double mean = eps.mean();
    const double sd = std::sqrt((eps.array() - mean).square().sum() / (n - 1));
    CHECK(sd == doctest::Approx(r.want).epsilon(0.02));
    // independence across rows: lag-1 autocorrelation stays near zero
    double c1 = 0.0;
    for (int i = 0; i + 1 < n; ++i) c1 += (eps[i] - mean) * (eps[i + 1] - mean);
    c1 /= (n - 1) * sd * sd;
    CHECK(std::abs(c1) < 0.02);
  }
  CHECK(make_wing().noise_std.minCoeff() == 1.0);  // all wing sources share std 1
  CHECK(make_sinusoidal().noise_std[1] == 1.0);
}

TEST_CASE("source_nrmse is seeded and reproduces the wing fidelity ladder") {
  const BenchmarkProblem wing = make_wing();
  CHECK(source_nrmse(wing, 1, 10000, 0) == doctest::Approx(source_nrmse(wing, 1, 10000, 0)));
  // wing table values: 0.19 / 1.14 / 5.75
  CHECK(source_nrmse(wing, 1, 10000, 0) == doctest::Approx(0.19).epsilon(0.05));
  CHECK(source_nrmse(wing, 2, 10000, 0) == doctest::Approx(1.14).epsilon(0.05));
  CHECK(source_nrmse(wing, 3, 10000, 0) == doctest::Approx(5.75).epsilon(0.05));
  // borehole LF2 table value 1.54
  CHECK(source_nrmse(make_borehole(), 2, 10000, 0) == doctest::Approx(1.54).epsilon(0.05));
}

TEST_CASE("inputs outside the declared ranges are rejected") {
  const BenchmarkProblem p = make_borehole();
  Eigen::VectorXd x = p.lo;
  x[0] = p.hi[0] * 2.0;
  CHECK_THROWS_AS(p.evaluate(0, x), ContractViolation);
  CHECK_THROWS_AS(p.evaluate(9, p.lo), ContractViolation);
  CHECK_THROWS_AS(benchmark_by_name("nope"), ContractViolation);
}

TEST_CASE("registry lists every problem") {
  for (const auto& name : benchmark_names()) {
    const BenchmarkProblem p = benchmark_by_name(name, 3);
    CHECK(p.name == name);
    CHECK(p.n_sources >= 1);
    CHECK(p.lo.size() == p.hi.size());
  }
}

}  // TEST_SUITE
