// SPDX-License-Identifier: Apache-2.0
#include "mfgp/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"

namespace mfgp {

namespace {

double borehole_family(const Eigen::VectorXd& v, int variant, double tl, double ll) {
  // v = [r_w, r, T_u, H_u, H_l, k_w]; tl and ll are the T_l / L values
  const double rw = v[0], r = v[1], tu = v[2], hu = v[3], hl = v[4], kw = v[5];
  const double lnr = std::log(r / rw);
  const double lterm = ll * tu / (lnr * rw * rw * kw);
  switch (variant) {
    case 0:
      return 2.0 * M_PI * tu * (hu - hl) / (lnr * (1.0 + 2.0 * lterm + tu / tl));
    case 1:
      return 2.0 * M_PI * tu * (hu - 0.8 * hl) / (lnr * (1.0 + 1.0 * lterm + tu / tl));
    case 2:
      return 2.0 * M_PI * tu * (hu - hl) / (lnr * (1.0 + 8.0 * lterm + 0.75 * tu / tl));
    case 3:
      return 2.0 * M_PI * tu * (1.09 * hu - hl) /
             (std::log(4.0 * r / rw) * (1.0 + 3.0 * lterm + tu / tl));
    case 4:
      return 2.0 * M_PI * tu * (1.05 * hu - hl) /
             (std::log(2.0 * r / rw) * (1.0 + 3.0 * lterm + tu / tl));
  }
  throw ContractViolation("borehole: unknown source");
}

double wing_family(const Eigen::VectorXd& x, double sw_exp, bool sw_wp, bool add_wp, double q,
                   double lam, double tc, double nz, double sw, double wfw, double A, double LamDeg,
                   double wdg, double wp) {
  const double lam_rad = LamDeg * M_PI / 180.0;
  const double c = std::cos(lam_rad);
  double y = 0.036 * std::pow(sw, sw_exp) * std::pow(wfw, 0.0035) * std::pow(A / (c * c), 0.6) *
             std::pow(q, 0.006) * std::pow(lam, 0.04) * std::pow(100.0 * tc / c, -0.3) *
             std::pow(nz * wdg, 0.49);
  if (sw_wp)
    y += sw * wp;
  else if (add_wp)
    y += wp;
  (void)x;
  return y;
}

}  // namespace

double BenchmarkProblem::evaluate(int source, const Eigen::VectorXd& x) const {
  if (source < 0 || source >= n_sources) throw ContractViolation(name + ": unknown source id");
  if (x.size() != features()) throw ContractViolation(name + ": input width mismatch");
  const bool hf = source == 0;
  Eigen::VectorXd mapped = x;
  for (int c = 0; c < features(); ++c) {
    const bool is_zeta = std::find(calibration_ids.begin(), calibration_ids.end(), c) !=
                         calibration_ids.end();
    if (is_zeta && hf) continue;  // unobserved on the HF source
    const auto lv = level_values.find(c);
    if (lv != level_values.end()) {
      const int li = static_cast<int>(std::llround(x[c]));
      if (std::abs(x[c] - li) > 1e-9 || li < 0 || li >= static_cast<int>(lv->second.size()))
        throw ContractViolation(name + ": categorical level out of range");
      mapped[c] = lv->second[li];
      continue;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(hi[c] - lo[c]));
    if (std::isnan(x[c]) || x[c] < lo[c] - tol || x[c] > hi[c] + tol)
      throw ContractViolation(name + ": input out of range");
  }
  return f(source, mapped);
}

SourceData BenchmarkProblem::sample(int source, int n, std::uint64_t seed, bool with_noise) const {
  if (n < 1) throw ContractViolation(name + ": sample size must be >= 1");
  if (source < 0 || source >= n_sources) throw ContractViolation(name + ": unknown source id");
  const int nf = features();
  HaltonSampler hal(nf, seed ^ (0x5a5aULL + source));
  SourceData out;
  out.X.resize(n, nf);
  out.y.resize(n);
  CounterRng noise_rng(seed ^ 0xabcdefULL, source);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = hal.next();
    Eigen::VectorXd row(nf);
    for (int c = 0; c < nf; ++c) {
      const bool is_zeta = std::find(calibration_ids.begin(), calibration_ids.end(), c) !=
                           calibration_ids.end();
      if (is_zeta && source == 0) {
        row[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const auto lv = qual_dict.find(c);
      if (lv != qual_dict.end()) {
        row[c] = std::min<double>(lv->second - 1, std::floor(u[c] * lv->second));
      } else {
        row[c] = lo[c] + (hi[c] - lo[c]) * u[c];
      }
    }
    out.X.row(i) = row.transpose();
    double y = evaluate(source, row);
    if (with_noise && noise_std[source] > 0.0) y += noise_std[source] * noise_rng.normal();
    out.y[i] = y;
  }
  return out;
}

MFDataset BenchmarkProblem::sample_all(const std::vector<int>& counts, std::uint64_t seed,
                                       bool with_noise) const {
  if (static_cast<int>(counts.size()) != n_sources)
    throw ContractViolation(name + ": one count per source required");
  std::vector<SourceData> parts;
  for (int j = 0; j < n_sources; ++j) parts.push_back(sample(j, counts[j], seed, with_noise));
  return augment_sources(parts);
}

double source_nrmse(const BenchmarkProblem& p, int lf_source, int n, std::uint64_t seed) {
  if (lf_source <= 0 || lf_source >= p.n_sources)
    throw ContractViolation(p.name + ": lf source id must be in [1, ds)");
  const int nf = p.features();
  HaltonSampler hal(nf, seed ^ 0x6e726d7365ULL);
  Eigen::VectorXd yl(n), yh(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = hal.next();
    Eigen::VectorXd row(nf);
    for (int c = 0; c < nf; ++c) {
      const auto lv = p.qual_dict.find(c);
      if (lv != p.qual_dict.end()) {
        row[c] = std::min<double>(lv->second - 1, std::floor(u[c] * lv->second));
      } else {
        row[c] = p.lo[c] + (p.hi[c] - p.lo[c]) * u[c];
      }
    }
    // calibration cells sit at the ground truth for both sources
    for (size_t k = 0; k < p.calibration_ids.size(); ++k) row[p.calibration_ids[k]] = p.zeta_truth[k];
    Eigen::VectorXd row_hf = row;
    for (int zc : p.calibration_ids) row_hf[zc] = std::numeric_limits<double>::quiet_NaN();
    yh[i] = p.evaluate(0, row_hf);
    yl[i] = p.evaluate(lf_source, row);
  }
  const double mean_h = yh.mean();
  const double var_h = (yh.array() - mean_h).square().sum() / (n - 1);
  return std::sqrt((yl - yh).squaredNorm() / (n * var_h));
}

BenchmarkProblem make_borehole() {
  BenchmarkProblem p;
  p.name = "borehole";
  p.n_sources = 5;
  p.lo.resize(8);
  p.hi.resize(8);
  p.lo << 0.05, 100, 63070, 990, 63.1, 700, 1120, 9855;
  p.hi << 0.15, 50000, 115600, 1110, 116, 820, 1680, 12045;
  p.noise_std = Eigen::VectorXd::Zero(5);
  p.noise_std[0] = 2.0;
  p.cost.resize(5);
  p.cost << 1000, 100, 10, 100, 10;
  p.init_samples = {5, 5, 50, 5, 50};
  p.f = [](int s, const Eigen::VectorXd& x) {
    Eigen::VectorXd v(6);
    v << x[0], x[1], x[2], x[3], x[5], x[7];
    return borehole_family(v, s, x[4], x[6]);
  };
  return p;
}

BenchmarkProblem make_borehole_mixed(std::uint64_t seed) {
  BenchmarkProblem p = make_borehole();
  p.name = "borehole-mixed";
  for (int col : {0, 5}) {
    CounterRng rng(seed ^ 0x6d69786564ULL, col);
    std::vector<double> vals(5);
    for (auto& v : vals) v = p.lo[col] + (p.hi[col] - p.lo[col]) * rng.uniform();
    std::sort(vals.begin(), vals.end());
    p.level_values[col] = vals;
    p.qual_dict[col] = 5;
  }
  return p;
}

BenchmarkProblem make_wing() {
  BenchmarkProblem p;
  p.name = "wing";
  p.n_sources = 4;
  p.lo.resize(10);
  p.hi.resize(10);
  p.lo << 150, 220, 6, -10, 16, 0.5, 0.08, 2.5, 1700, 0.025;
  p.hi << 200, 300, 10, 10, 45, 1.0, 0.18, 6.0, 2500, 0.080;
  p.noise_std = Eigen::VectorXd::Ones(4);
  p.cost = Eigen::VectorXd::Zero(4);
  p.init_samples = {10, 20, 20, 20};
  p.f = [](int s, const Eigen::VectorXd& x) {
    const double sw = x[0], wfw = x[1], A = x[2], Lam = x[3], q = x[4], lam = x[5], tc = x[6],
                 nz = x[7], wdg = x[8], wp = x[9];
    switch (s) {
      case 0:
        return wing_family(x, 0.758, true, false, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 1:
        return wing_family(x, 0.758, false, true, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 2:
        return wing_family(x, 0.8, false, true, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 3:
        return wing_family(x, 0.9, false, false, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
    }
    throw ContractViolation("wing: unknown source");
  };
  return p;
}

BenchmarkProblem make_sinusoidal() {
  BenchmarkProblem p;
  p.name = "sinusoidal";
  p.n_sources = 2;
  p.lo = Eigen::VectorXd::Zero(1);
  p.hi = Eigen::VectorXd::Constant(1, 10.0);
  p.noise_std = Eigen::VectorXd::Ones(2);
  p.cost = Eigen::VectorXd::Ones(2);
  p.init_samples = {4, 20};
  p.f = [](int s, const Eigen::VectorXd& x) {
    const double v = 2.0 * std::sin(x[0]);
    if (s == 0) return v;
    return v + 0.3 * x[0] * x[0] - 0.7 * x[0] + 1.0;
  };
  return p;
}

BenchmarkProblem make_beam_deflection() {
  BenchmarkProblem p;
  p.name = "beam-deflection";
  p.n_sources = 2;
  // [p, b, h, L, E(GPa)] with fixed loading geometry; E is the calibration input
  p.lo.resize(5);
  p.hi.resize(5);
  p.lo << 12000, 0.15, 0.3, 5.0, 15.0;
  p.hi << 12000, 0.15, 0.3, 5.0, 45.0;
  p.noise_std.resize(2);
  p.noise_std << 5e-4, 0.0;  // response is in meters; 5e-4 is about 5% of the signal
  p.cost = Eigen::VectorXd::Zero(2);
  p.init_samples = {1, 200};
  p.calibration_ids = {4};
  p.zeta_truth = Eigen::VectorXd::Constant(1, 30.0);
  p.f = [](int s, const Eigen::VectorXd& x) {
    const double load = x[0], b = x[1], h = x[2], L = x[3];
    const double E = s == 0 ? 3e10 : x[4] * 1e9;
    return (5.0 / 32.0) * load * std::pow(L, 4) / (E * b * h * h * h);
  };
  return p;
}

BenchmarkProblem make_borehole_calibration() {
  BenchmarkProblem p;
  p.name = "borehole-cal";
  p.n_sources = 3;
  // [r_w, r, T_u, H_u, H_l, k_w, zeta_a (T_l role), zeta_b (L role)]
  p.lo.resize(8);
  p.hi.resize(8);
  p.lo << 0.05, 100, 63070, 990, 700, 9855, 100, 1000;
  p.hi << 0.15, 50000, 115600, 1110, 820, 12045, 400, 2000;
  p.noise_std = Eigen::VectorXd::Zero(3);
  p.noise_std[0] = 2.0;
  p.cost = Eigen::VectorXd::Zero(3);
  p.init_samples = {20, 100, 100};
  p.calibration_ids = {6, 7};
  p.zeta_truth.resize(2);
  p.zeta_truth << 250.0, 1500.0;
  p.f = [](int s, const Eigen::VectorXd& x) {
    Eigen::VectorXd v = x.head(6);
    const double tl = s == 0 ? 250.0 : x[6];
    const double ll = s == 0 ? 1500.0 : x[7];
    return borehole_family(v, s, tl, ll);
  };
  return p;
}

BenchmarkProblem make_wing_calibration() {
  BenchmarkProblem p;
  p.name = "wing-cal";
  p.n_sources = 4;
  // [S_w, W_fw, A, Lambda, W_dg, W_p, zeta1 (q), zeta2 (lambda), zeta3 (t_c), zeta4 (N_z)]
  p.lo.resize(10);
  p.hi.resize(10);
  p.lo << 150, 220, 6, -10, 1700, 0.025, 16, 0.5, 0.08, 2.5;
  p.hi << 200, 300, 10, 10, 2500, 0.080, 45, 1.0, 0.18, 6.0;
  p.noise_std = Eigen::VectorXd::Ones(4);
  p.cost = Eigen::VectorXd::Zero(4);
  p.init_samples = {25, 40, 50, 60};
  p.calibration_ids = {6, 7, 8, 9};
  p.zeta_truth.resize(4);
  p.zeta_truth << 40.0, 0.85, 0.17, 3.0;
  p.f = [](int s, const Eigen::VectorXd& x) {
    const double sw = x[0], wfw = x[1], A = x[2], Lam = x[3], wdg = x[4], wp = x[5];
    const double q = s == 0 ? 40.0 : x[6];
    const double lam = s == 0 ? 0.85 : x[7];
    const double tc = s == 0 ? 0.17 : x[8];
    const double nz = s == 0 ? 3.0 : x[9];
    switch (s) {
      case 0:
        return wing_family(x, 0.758, true, false, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 1:
        return wing_family(x, 0.758, false, true, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 2:
        return wing_family(x, 0.8, false, true, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
      case 3:
        return wing_family(x, 0.9, false, false, q, lam, tc, nz, sw, wfw, A, Lam, wdg, wp);
    }
    throw ContractViolation("wing-cal: unknown source");
  };
  return p;
}

std::vector<std::string> benchmark_names() {
  return {"borehole", "borehole-mixed", "wing", "sinusoidal", "beam-deflection", "borehole-cal",
          "wing-cal"};
}

BenchmarkProblem benchmark_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "borehole") return make_borehole();
  if (name == "borehole-mixed") return make_borehole_mixed(seed);
  if (name == "wing") return make_wing();
  if (name == "sinusoidal") return make_sinusoidal();
  if (name == "beam-deflection") return make_beam_deflection();
  if (name == "borehole-cal") return make_borehole_calibration();
  if (name == "wing-cal") return make_wing_calibration();
  std::string msg = "unknown benchmark '" + name + "'; valid names:";
  for (const auto& n : benchmark_names()) msg += " " + n;
  throw ContractViolation(msg);
}

}  // namespace mfgp
