// SPDX-License-Identifier: Apache-2.0
#include "mfgp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

std::shared_ptr<const GpCore> GpCore::build(const ModelConfig& cfg, const MFDataset& data) {
  data.validate();
  if (data.rows() < 1) throw ContractViolation("GpCore: empty dataset");
  auto core = std::make_shared<GpCore>();
  GpCore& c = *core;
  c.cfg = cfg;
  c.data_raw = data;
  c.n = data.rows();
  c.ds = data.n_sources();

  const int nf = data.features();
  for (const auto& [col, lv] : cfg.qual_dict) {
    (void)lv;
    if (col < 0 || col >= nf) throw ContractViolation("GpCore: qual_dict column out of range");
  }
  if (cfg.calibration == CalibrationMode::None && !cfg.calibration_ids.empty())
    throw ContractViolation("GpCore: calibration ids given without a calibration mode");
  for (int zc : cfg.calibration_ids) {
    if (zc < 0 || zc >= nf) throw ContractViolation("GpCore: calibration column out of range");
    if (cfg.qual_dict.count(zc)) throw ContractViolation("GpCore: calibration column is categorical");
  }
  c.zeta_cols = cfg.calibration_ids;
  c.dzeta = static_cast<int>(c.zeta_cols.size());
  if (c.calibrating()) {
    if (c.dzeta < 1) throw ContractViolation("GpCore: calibration requires at least one zeta column");
    if (c.ds < 2) throw ContractViolation("GpCore: calibration needs HF and LF rows");
  }

  for (const auto& [col, lv] : cfg.qual_dict) {
    (void)lv;
    c.cat_cols.push_back(col);
  }
  for (int col = 0; col < nf; ++col)
    if (!cfg.qual_dict.count(col) && !contains(c.zeta_cols, col)) c.numeric_cols.push_back(col);
  c.n_scaled = static_cast<int>(c.numeric_cols.size()) + c.dzeta;

  // calibration provenance: the reference source must not record zeta values
  if (c.calibrating()) {
    for (int i = 0; i < c.n; ++i) {
      const bool hf = data.source_of(i) == 0;
      for (int zc : c.zeta_cols) {
        const bool nan = std::isnan(data.X(i, zc));
        if (hf && !nan)
          throw ContractViolation("GpCore: HF row carries recorded calibration values");
        if (!hf && nan) throw ContractViolation("GpCore: LF row missing calibration values");
      }
    }
  } else {
    if (data.X.hasNaN()) throw DataError("GpCore: dataset contains NaN cells");
  }

  // standardization: numeric columns over all rows, calibration columns over
  // the rows that record them, categorical columns untouched
  c.x_std.mean = Eigen::VectorXd::Zero(nf);
  c.x_std.scale = Eigen::VectorXd::Ones(nf);
  {
    Standardizer full;
    full.fit_ignore_nan(data.X);
    for (int col : c.numeric_cols) {
      c.x_std.mean[col] = full.mean[col];
      c.x_std.scale[col] = full.scale[col];
    }
    for (int col : c.zeta_cols) {
      c.x_std.mean[col] = full.mean[col];
      c.x_std.scale[col] = full.scale[col];
    }
  }
  c.y_std.fit(data.y);
  c.ystd = c.y_std.apply(data.y);

  // categorical machinery
  if (!c.cat_cols.empty()) {
    c.cat = CategoricalSpec::from_map(cfg.qual_dict, nf);
    const bool separate = cfg.separate_embedding || cfg.encoding == EncodingKind::PerVariableOneHot;
    if (separate)
      c.enc = PriorEncoding::per_variable_one_hot(c.cat);
    else if (cfg.encoding == EncodingKind::RandomMatrix)
      c.enc = PriorEncoding::random_matrix(c.cat, cfg.encoding_seed);
    else
      c.enc = PriorEncoding::grouped_one_hot(c.cat);
    if (separate) {
      for (int v = 0; v < c.enc.n_blocks(); ++v)
        c.hmaps.push_back(
            EmbeddingMap::make(c.enc.block_width(v), cfg.embedding_dim, cfg.nn_layers_embedding));
    } else {
      c.hmaps.push_back(EmbeddingMap::make(c.enc.width(), cfg.embedding_dim, cfg.nn_layers_embedding));
    }
    c.dh_total = cfg.embedding_dim * static_cast<int>(c.hmaps.size());
  }

  // source embedding
  if (c.ds > 1) {
    c.dz = cfg.z_dim;
    c.PiS = Eigen::MatrixXd::Identity(c.ds, c.ds);
    if (cfg.z_mode == ZMode::Deterministic) {
      c.zmap = EmbeddingMap::make(c.ds, c.dz, cfg.nn_layers_z);
    } else {
      std::vector<int> hidden = cfg.nn_layers_z.empty() ? std::vector<int>{5} : cfg.nn_layers_z;
      c.zgen = ProbabilisticEmbedding::make(c.ds, c.dz, hidden);
    }
  }

  c.mean = MeanSpec::make(cfg.mean, c.ds, c.n_scaled, static_cast<int>(c.numeric_cols.size()),
                          cfg.poly_degrees, cfg.nn_layers_mean, c.dh_total, c.dz);

  c.noise_kind = cfg.fix_noise
                     ? NoiseKind::Fixed
                     : ((c.ds > 1 && cfg.multiple_noise.value_or(true)) ? NoiseKind::PerSource
                                                                        : NoiseKind::Single);

  // parameter layout
  double a_std = cfg.a_prior_std;
  if (a_std <= 0.0) a_std = (!c.cat_cols.empty() && c.enc.n_combos() > 200) ? 0.1 : 1.0;

  if (c.mean.n_params() > 0) {
    auto& b = c.layout.add("mean", c.mean.n_params(), Transform::identity(), Prior::normal(0, 1));
    b.regularized = true;
  }
  c.layout.add("log_sigma2", 1, Transform::log(), Prior::log_normal(0, 1));
  c.layout.add("omega", c.n_scaled, Transform::scaled_logit(-10, 4),
               Prior::normal(cfg.omega_prior_mean, cfg.omega_prior_std));
  if (cfg.kernel == KernelFamily::PowerExponential) {
    auto& b = c.layout.add("power_p", 1, Transform::scaled_logit(1, 2), Prior::flat());
    b.init_value = cfg.power_p;
  }
  if (!c.hmaps.empty()) {
    int np = 0;
    for (const auto& m : c.hmaps) np += m.n_params();
    auto& b = c.layout.add("theta_h", np, Transform::identity(), Prior::normal(0, a_std));
    b.regularized = true;
    if (c.hmaps.front().linear) b.init_std = a_std;
  }
  if (c.ds > 1) {
    if (cfg.z_mode == ZMode::Deterministic) {
      auto& b = c.layout.add("theta_z", c.zmap.n_params(), Transform::identity(), Prior::normal(0, 1));
      b.regularized = true;
      if (c.zmap.linear) b.init_std = 1.0;
    } else {
      auto& b = c.layout.add("theta_zgen", c.zgen.n_params(), Transform::identity(), Prior::normal(0, 1));
      b.regularized = true;
    }
  }
  if (c.noise_kind != NoiseKind::Fixed) {
    const int nd = c.noise_kind == NoiseKind::PerSource ? c.ds : 1;
    c.layout.add("noise", nd, Transform::shifted_log(cfg.lb_noise), Prior::half_horseshoe(0.01));
  }
  if (c.calibrating()) {
    std::vector<Prior> zp;
    for (int k = 0; k < c.dzeta; ++k) {
      double pm = 0.0, ps = 1.0;  // defaults already on the standardized scale
      if (cfg.calib_prior_mean.size() == c.dzeta && cfg.calib_prior_std.size() == c.dzeta) {
        const int col = c.zeta_cols[k];
        pm = (cfg.calib_prior_mean[k] - c.x_std.mean[col]) / c.x_std.scale[col];
        ps = cfg.calib_prior_std[k] / c.x_std.scale[col];
      }
      zp.push_back(Prior::normal(pm, ps));
    }
    if (cfg.calibration == CalibrationMode::Deterministic) {
      auto& b = c.layout.add("zeta", c.dzeta, Transform::identity(), Prior::flat());
      b.coord_priors = zp;
    } else {
      auto& b = c.layout.add("zeta_mu", c.dzeta, Transform::identity(), Prior::flat());
      b.coord_priors = zp;
      auto& t = c.layout.add("zeta_logtau", c.dzeta, Transform::log(), Prior::flat());
      t.init_value = 0.1;
    }
  }

  c.train = c.prepare(data);
  return core;
}

RowBlock GpCore::prepare(const MFDataset& d) const {
  if (d.features() != data_raw.features())
    throw ContractViolation("GpCore::prepare: feature width mismatch");
  RowBlock rb;
  const int m = d.rows();
  rb.Xs.resize(m, n_scaled);
  rb.fill.assign(m, 0);
  rb.rank.assign(m, -1);
  rb.src.resize(m);
  for (int i = 0; i < m; ++i) {
    const int s = d.source_of(i);
    if (s < 0 || s >= ds) throw ContractViolation("GpCore::prepare: source index out of range");
    rb.src[i] = s;
    int k = 0;
    for (int col : numeric_cols) {
      const double v = d.X(i, col);
      if (std::isnan(v)) throw DataError("GpCore::prepare: NaN in numeric column");
      rb.Xs(i, k++) = (v - x_std.mean[col]) / x_std.scale[col];
    }
    for (int col : zeta_cols) {
      const double v = d.X(i, col);
      if (s == 0) {
        if (!std::isnan(v))
          throw ContractViolation("GpCore::prepare: HF row carries recorded calibration values");
        rb.Xs(i, k) = 0.0;
        rb.fill[i] = 1;
      } else {
        if (std::isnan(v)) throw DataError("GpCore::prepare: LF row missing calibration value");
        rb.Xs(i, k) = (v - x_std.mean[col]) / x_std.scale[col];
      }
      ++k;
    }
    if (!cat_cols.empty()) {
      std::vector<int> t(cat_cols.size());
      for (size_t v = 0; v < cat_cols.size(); ++v) {
        const double lv = d.X(i, cat_cols[v]);
        const int li = static_cast<int>(std::llround(lv));
        if (std::abs(lv - li) > 1e-9) throw DataError("GpCore::prepare: non-integer categorical level");
        t[v] = li;
      }
      rb.rank[i] = enc.rank_of(t);
    }
  }
  return rb;
}

KernelConfig GpCore::kernel_config(const Eigen::VectorXd& raw) const {
  KernelConfig kc;
  kc.family = cfg.kernel;
  kc.nu = cfg.matern_nu;
  kc.p = cfg.kernel == KernelFamily::PowerExponential ? layout.block_values("power_p", raw)[0]
                                                      : cfg.power_p;
  kc.omega = layout.block_values("omega", raw);
  return kc;
}

Eigen::VectorXd GpCore::h_of_rank(const Eigen::VectorXd& raw, long rank) const {
  const ParamBlock* b = layout.find("theta_h");
  const Eigen::VectorXd pi = enc.encode_rank(rank);
  Eigen::VectorXd h(dh_total);
  int poff = b->offset, hoff = 0;
  for (size_t v = 0; v < hmaps.size(); ++v) {
    const Eigen::VectorXd piv =
        hmaps.size() == 1 ? pi : pi.segment(enc.block_offset(static_cast<int>(v)), enc.block_width(static_cast<int>(v)));
    h.segment(hoff, hmaps[v].dh) = hmaps[v].forward(raw.data() + poff, piv, nullptr);
    poff += hmaps[v].n_params();
    hoff += hmaps[v].dh;
  }
  return h;
}

Eigen::MatrixXd GpCore::z_table_det(const Eigen::VectorXd& raw) const {
  const ParamBlock* b = layout.find("theta_z");
  Eigen::MatrixXd Z(ds, dz);
  for (int j = 0; j < ds; ++j)
    Z.row(j) = zmap.forward(raw.data() + b->offset, PiS.row(j).transpose(), nullptr).transpose();
  return Z;
}

void GpCore::z_moments(const Eigen::VectorXd& raw, int src, Eigen::VectorXd& mu,
                       Eigen::MatrixXd& L) const {
  const ParamBlock* b = layout.find("theta_zgen");
  zgen.moments(raw.data() + b->offset, PiS.row(src).transpose(), mu, L, nullptr);
}

Eigen::VectorXd GpCore::zeta_det(const Eigen::VectorXd& raw) const {
  return layout.block_values("zeta", raw);
}

void GpCore::zeta_moments(const Eigen::VectorXd& raw, Eigen::VectorXd& mu, Eigen::VectorXd& tau) const {
  mu = layout.block_values("zeta_mu", raw);
  tau = layout.block_values("zeta_logtau", raw);
}

Eigen::VectorXd GpCore::start_raw(std::uint64_t seed, int restart) const {
  Eigen::VectorXd x = restart == 0 ? layout.initial_raw(seed) : layout.sample_raw(seed, restart);
  // net-parameterized blocks always start from fan-in scaled init
  auto net_init = [&](const char* name, const Mlp& net, int rel_off) {
    const ParamBlock* b = layout.find(name);
    if (!b) return;
    net.init_params(x.data() + b->offset + rel_off,
                    seed ^ 0x6e657473ULL, static_cast<std::uint64_t>(restart) * 7919 + b->offset + rel_off);
  };
  if (!hmaps.empty() && !hmaps.front().linear) {
    int off = 0;
    for (const auto& m : hmaps) {
      net_init("theta_h", m.net, off);
      off += m.n_params();
    }
  }
  if (ds > 1 && cfg.z_mode == ZMode::Deterministic && !zmap.linear) net_init("theta_z", zmap.net, 0);
  if (ds > 1 && cfg.z_mode == ZMode::Probabilistic) net_init("theta_zgen", zgen.generator, 0);
  if (mean.kind == MeanKind::FeedForward) net_init("mean", mean.net, 0);
  return x;
}

NoiseModel GpCore::noise_model(const Eigen::VectorXd& raw) const {
  NoiseModel nm;
  nm.lb_noise = std::min(cfg.lb_noise, cfg.fix_noise_val);
  if (noise_kind == NoiseKind::Fixed) {
    nm.kind = NoiseKind::Fixed;
    nm.delta = Eigen::VectorXd::Constant(1, cfg.fix_noise_val);
  } else {
    nm.kind = noise_kind;
    nm.delta = layout.block_values("noise", raw);
  }
  return nm;
}

// ---------------------------------------------------------------------------

namespace {

// per-member finalization shared by deterministic and ensemble paths
TrainedModel finalize_member(std::shared_ptr<const GpCore> core, const Eigen::VectorXd& raw,
                             double loss, const Eigen::MatrixXd& Z, const Eigen::VectorXd& zeta_std) {
  const GpCore& c = *core;
  TrainedModel m;
  m.core = core;
  m.raw = raw;
  m.loss = loss;
  m.Z = Z;
  m.zeta_std = zeta_std;

  m.Xs_eff = c.train.Xs;
  if (c.calibrating()) {
    const int base = static_cast<int>(c.numeric_cols.size());
    for (int i = 0; i < c.n; ++i)
      if (c.train.fill[i])
        for (int k = 0; k < c.dzeta; ++k) m.Xs_eff(i, base + k) = zeta_std[k];
  }

  if (c.has_cats()) {
    std::set<long> uniq(c.train.rank.begin(), c.train.rank.end());
    m.ranks.assign(uniq.begin(), uniq.end());
    m.H.resize(static_cast<int>(m.ranks.size()), c.dh_total);
    for (size_t r = 0; r < m.ranks.size(); ++r) m.H.row(static_cast<int>(r)) = c.h_of_rank(raw, m.ranks[r]).transpose();
  }

  auto h_row = [&](int i) -> Eigen::VectorXd {
    if (!c.has_cats()) return Eigen::VectorXd();
    const long rk = c.train.rank[i];
    const auto it = std::lower_bound(m.ranks.begin(), m.ranks.end(), rk);
    return m.H.row(static_cast<int>(it - m.ranks.begin())).transpose();
  };
  auto z_row = [&](int i) -> Eigen::VectorXd {
    if (c.ds <= 1) return Eigen::VectorXd();
    return m.Z.row(c.train.src[i]).transpose();
  };

  const ParamBlock* mb = c.layout.find("mean");
  const double* mp = mb ? raw.data() + mb->offset : nullptr;
  m.m_train.resize(c.n);
  for (int i = 0; i < c.n; ++i)
    m.m_train[i] = c.mean.value(mp, c.train.src[i], m.Xs_eff.row(i).transpose(), h_row(i), z_row(i), nullptr);

  const KernelConfig kc = c.kernel_config(raw);
  const double sigma2 = c.layout.block_values("log_sigma2", raw)[0];
  const NoiseModel noise = c.noise_model(raw);

  Eigen::MatrixXd C(c.n, c.n);
  for (int i = 0; i < c.n; ++i) {
    C(i, i) = sigma2 + noise.of_source(c.train.src[i]);
    const Eigen::VectorXd hi = h_row(i), zi = z_row(i);
    for (int j = i + 1; j < c.n; ++j) {
      UnifiedInput a{m.Xs_eff.row(i).transpose(), hi, zi};
      UnifiedInput b{m.Xs_eff.row(j).transpose(), h_row(j), z_row(j)};
      const double v = sigma2 * corr_response(kc.family, kc.nu, kernel_distance(kc, a, b));
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  m.chol = factorize_spd(C);
  m.alpha = m.chol.solve(Eigen::VectorXd(c.ystd - m.m_train));
  return m;
}

}  // namespace

TrainedModel finalize_deterministic(std::shared_ptr<const GpCore> core, const Eigen::VectorXd& raw,
                                    double loss) {
  const GpCore& c = *core;
  Eigen::MatrixXd Z;
  if (c.ds > 1) {
    if (c.cfg.z_mode == ZMode::Deterministic) {
      Z = c.z_table_det(raw);
    } else {
      // degenerate member at the posterior means
      Z.resize(c.ds, c.dz);
      for (int j = 0; j < c.ds; ++j) {
        Eigen::VectorXd mu;
        Eigen::MatrixXd L;
        c.z_moments(raw, j, mu, L);
        Z.row(j) = mu.transpose();
      }
    }
  }
  Eigen::VectorXd zeta;
  if (c.calibrating()) {
    if (c.cfg.calibration == CalibrationMode::Deterministic) {
      zeta = c.zeta_det(raw);
    } else {
      Eigen::VectorXd tau;
      c.zeta_moments(raw, zeta, tau);
    }
  }
  return finalize_member(core, raw, loss, Z, zeta);
}

double TrainedModel::sigma2() const { return core->layout.block_values("log_sigma2", raw)[0]; }

Eigen::VectorXd TrainedModel::deltas() const { return core->noise_model(raw).delta; }

Eigen::VectorXd TrainedModel::deltas_raw() const {
  return deltas() * (core->y_std.scale * core->y_std.scale);
}

Eigen::VectorXd TrainedModel::zeta_estimate_raw() const {
  const GpCore& c = *core;
  if (!c.calibrating()) return Eigen::VectorXd();
  Eigen::VectorXd z_std;
  if (c.cfg.calibration == CalibrationMode::Deterministic) {
    z_std = c.zeta_det(raw);
  } else {
    Eigen::VectorXd tau;
    c.zeta_moments(raw, z_std, tau);
  }
  Eigen::VectorXd out(c.dzeta);
  for (int k = 0; k < c.dzeta; ++k)
    out[k] = z_std[k] * c.x_std.scale[c.zeta_cols[k]] + c.x_std.mean[c.zeta_cols[k]];
  return out;
}

PredictiveDistribution TrainedModel::predict(const MFDataset& queries, bool include_noise,
                                             bool full_cov) const {
  const GpCore& c = *core;
  RowBlock q = c.prepare(queries);
  const int nq = static_cast<int>(q.Xs.rows());

  if (c.calibrating()) {
    // each member completes HF query rows with its own calibration values
    const int base = static_cast<int>(c.numeric_cols.size());
    for (int i = 0; i < nq; ++i)
      if (q.fill[i])
        for (int k = 0; k < c.dzeta; ++k) q.Xs(i, base + k) = zeta_std[k];
  }

  // latents for query combos (reuse trained rows, compute unseen ones)
  Eigen::MatrixXd Hq;
  std::vector<int> hq_idx(nq, -1);
  if (c.has_cats()) {
    std::vector<long> uniq;
    for (long r : q.rank)
      if (!std::binary_search(uniq.begin(), uniq.end(), r)) {
        uniq.insert(std::lower_bound(uniq.begin(), uniq.end(), r), r);
      }
    Hq.resize(static_cast<int>(uniq.size()), c.dh_total);
    for (size_t u = 0; u < uniq.size(); ++u) {
      const auto it = std::lower_bound(ranks.begin(), ranks.end(), uniq[u]);
      if (it != ranks.end() && *it == uniq[u])
        Hq.row(static_cast<int>(u)) = H.row(static_cast<int>(it - ranks.begin()));
      else
        Hq.row(static_cast<int>(u)) = c.h_of_rank(raw, uniq[u]).transpose();
    }
    for (int i = 0; i < nq; ++i)
      hq_idx[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), q.rank[i]) - uniq.begin());
  }

  auto h_train = [&](int i) -> Eigen::VectorXd {
    if (!c.has_cats()) return Eigen::VectorXd();
    const auto it = std::lower_bound(ranks.begin(), ranks.end(), c.train.rank[i]);
    return H.row(static_cast<int>(it - ranks.begin())).transpose();
  };
  auto h_query = [&](int a) -> Eigen::VectorXd {
    if (!c.has_cats()) return Eigen::VectorXd();
    return Hq.row(hq_idx[a]).transpose();
  };
  auto z_of = [&](int s) -> Eigen::VectorXd {
    if (c.ds <= 1) return Eigen::VectorXd();
    return Z.row(s).transpose();
  };

  const KernelConfig kc = c.kernel_config(raw);
  const double s2 = sigma2();
  const NoiseModel noise = c.noise_model(raw);
  const ParamBlock* mb = c.layout.find("mean");
  const double* mp = mb ? raw.data() + mb->offset : nullptr;

  Eigen::MatrixXd K(c.n, nq);
  Eigen::VectorXd mq(nq);
  for (int a = 0; a < nq; ++a) {
    const Eigen::VectorXd ha = h_query(a), za = z_of(q.src[a]);
    const UnifiedInput ua{q.Xs.row(a).transpose(), ha, za};
    mq[a] = c.mean.value(mp, q.src[a], q.Xs.row(a).transpose(), ha, za, nullptr);
    for (int i = 0; i < c.n; ++i) {
      const UnifiedInput ui{Xs_eff.row(i).transpose(), h_train(i), z_of(c.train.src[i])};
      K(i, a) = s2 * corr_response(kc.family, kc.nu, kernel_distance(kc, ui, ua));
    }
  }

  const Eigen::MatrixXd V = chol.solve(K);  // C^-1 K
  PredictiveDistribution out;
  out.includes_noise = include_noise;
  const double ym = c.y_std.mean, ys = c.y_std.scale;
  out.mean = (mq + K.transpose() * alpha) * ys;
  out.mean.array() += ym;

  Eigen::VectorXd var(nq);
  for (int a = 0; a < nq; ++a) {
    double v = s2 - K.col(a).dot(V.col(a));
    if (include_noise) v += noise.of_source(q.src[a]);
    if (v < -1e-10 * s2) throw NumericalSingularity("predict: negative variance", {v});
    var[a] = std::max(v, 0.0) * ys * ys;
  }
  out.var = var;

  if (full_cov) {
    Eigen::MatrixXd Rqq(nq, nq);
    for (int a = 0; a < nq; ++a) {
      Rqq(a, a) = s2;
      for (int b2 = a + 1; b2 < nq; ++b2) {
        const UnifiedInput ua{q.Xs.row(a).transpose(), h_query(a), z_of(q.src[a])};
        const UnifiedInput ub{q.Xs.row(b2).transpose(), h_query(b2), z_of(q.src[b2])};
        const double v = s2 * corr_response(kc.family, kc.nu, kernel_distance(kc, ua, ub));
        Rqq(a, b2) = v;
        Rqq(b2, a) = v;
      }
    }
    Eigen::MatrixXd cov = Rqq - K.transpose() * V;
    if (include_noise)
      for (int a = 0; a < nq; ++a) cov(a, a) += noise.of_source(q.src[a]);
    out.cov = cov * ys * ys;
    for (int a = 0; a < nq; ++a) out.cov(a, a) = std::max(out.cov(a, a), 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------

EnsembleModel finalize_ensemble(std::shared_ptr<const GpCore> core, const Eigen::VectorXd& raw,
                                double loss, int Q) {
  const GpCore& c = *core;
  EnsembleModel em;
  em.core = core;
  em.raw = raw;
  em.loss = loss;
  em.M = c.cfg.num_pass_train;
  em.Q = Q;

  // prediction draws live on a stream distinct from training draws
  const std::uint64_t tag = 0x5052454443ULL;  // prediction stream tag
  for (int k = 0; k < Q; ++k) {
    Eigen::MatrixXd Z;
    if (c.ds > 1) {
      Z.resize(c.ds, c.dz);
      if (c.prob_z()) {
        for (int j = 0; j < c.ds; ++j) {
          Eigen::VectorXd mu;
          Eigen::MatrixXd L;
          c.z_moments(raw, j, mu, L);
          Eigen::VectorXd eps(c.dz);
          for (int d = 0; d < c.dz; ++d)
            eps[d] = CounterRng::keyed_normal(c.cfg.draw_seed ^ tag, k * 131 + j, d);
          Z.row(j) = (mu + L * eps).transpose();
        }
      } else {
        Z = c.z_table_det(raw);
      }
    }
    Eigen::VectorXd zeta;
    if (c.calibrating()) {
      if (c.prob_zeta()) {
        Eigen::VectorXd mu, tau;
        c.zeta_moments(raw, mu, tau);
        zeta.resize(c.dzeta);
        for (int d = 0; d < c.dzeta; ++d)
          zeta[d] = mu[d] + tau[d] * CounterRng::keyed_normal(c.cfg.draw_seed ^ tag, 7777 + k, d);
      } else {
        zeta = c.zeta_det(raw);
      }
    }
    em.members.push_back(finalize_member(core, raw, loss, Z, zeta));
  }
  return em;
}

PredictiveDistribution EnsembleModel::predict(const MFDataset& queries, bool include_noise) const {
  std::vector<Eigen::VectorXd> means, vars;
  means.reserve(members.size());
  vars.reserve(members.size());
  for (const auto& m : members) {
    PredictiveDistribution p = m.predict(queries, include_noise, false);
    means.push_back(p.mean);
    vars.push_back(p.var);
  }
  PredictiveDistribution out;
  out.includes_noise = include_noise;
  ensemble_predict_marginal(means, vars, out.mean, out.var);
  return out;
}

Eigen::VectorXd EnsembleModel::zeta_posterior_mean_raw() const {
  const GpCore& c = *core;
  Eigen::VectorXd mu, tau;
  c.zeta_moments(raw, mu, tau);
  Eigen::VectorXd out(c.dzeta);
  for (int k = 0; k < c.dzeta; ++k)
    out[k] = mu[k] * c.x_std.scale[c.zeta_cols[k]] + c.x_std.mean[c.zeta_cols[k]];
  return out;
}

Eigen::VectorXd EnsembleModel::zeta_posterior_std_raw() const {
  const GpCore& c = *core;
  Eigen::VectorXd mu, tau;
  c.zeta_moments(raw, mu, tau);
  Eigen::VectorXd out(c.dzeta);
  for (int k = 0; k < c.dzeta; ++k) out[k] = tau[k] * c.x_std.scale[c.zeta_cols[k]];
  return out;
}

namespace {
double binom(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}
}  // namespace

std::vector<Eigen::VectorXd> polynomial_coefficients_raw(const TrainedModel& m) {
  const GpCore& c = *m.core;
  if (c.mean.kind != MeanKind::Polynomial)
    throw ContractViolation("polynomial_coefficients_raw: mean is not polynomial");
  const ParamBlock* b = c.layout.find("mean");
  const double ys = c.y_std.scale;
  const int ncols = static_cast<int>(c.numeric_cols.size());
  std::vector<Eigen::VectorXd> out(c.ds);
  for (int j = 0; j < c.ds; ++j) {
    const int g = c.mean.poly_degree[j];
    if (g < 0) continue;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(1 + g * ncols);
    const double* p = m.raw.data() + b->offset + c.mean.poly_offset(j);
    coef[0] = ys * p[0];
    int k = 1;
    for (int col = 0; col < ncols; ++col) {
      const double mu = c.x_std.mean[c.numeric_cols[col]];
      const double sc = c.x_std.scale[c.numeric_cols[col]];
      for (int d = 1; d <= g; ++d) {
        const double cd = p[k];
        // ((x - mu)/sc)^d expands into powers 0..d of x
        for (int kk = 0; kk <= d; ++kk) {
          const double term = ys * cd * binom(d, kk) * std::pow(-mu, d - kk) / std::pow(sc, d);
          if (kk == 0)
            coef[0] += term;
          else
            coef[1 + col * g + (kk - 1)] += term;
        }
        ++k;
      }
    }
    out[j] = coef;
  }
  return out;
}

Eigen::VectorXd source_constants_raw(const TrainedModel& m) {
  const GpCore& c = *m.core;
  const double ys = c.y_std.scale;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c.ds);
  if (c.mean.kind == MeanKind::Single) {
    out.setConstant(ys * m.raw[c.layout.find("mean")->offset]);
  } else if (c.mean.kind == MeanKind::PerSource) {
    const ParamBlock* b = c.layout.find("mean");
    for (int j = 1; j < c.ds; ++j) out[j] = ys * m.raw[b->offset + j - 1];
  }
  return out;
}

void ensemble_moments(const std::vector<Eigen::VectorXd>& means,
                      const std::vector<Eigen::MatrixXd>& covs, Eigen::VectorXd& mbar,
                      Eigen::MatrixXd& cbar) {
  if (means.empty() || means.size() != covs.size())
    throw ContractViolation("ensemble_moments: need M >= 1 members with matching covariances");
  const int M = static_cast<int>(means.size());
  const auto n = means.front().size();
  for (int k = 0; k < M; ++k)
    if (means[k].size() != n || covs[k].rows() != n || covs[k].cols() != n)
      throw ContractViolation("ensemble_moments: member dimension mismatch");
  mbar = Eigen::VectorXd::Zero(n);
  for (const auto& m : means) mbar += m;
  mbar /= M;
  cbar = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < M; ++k) {
    const Eigen::VectorXd d = means[k] - mbar;
    cbar += covs[k] + d * d.transpose();
  }
  cbar /= M;
}

void ensemble_predict_marginal(const std::vector<Eigen::VectorXd>& means,
                               const std::vector<Eigen::VectorXd>& vars, Eigen::VectorXd& mean,
                               Eigen::VectorXd& var) {
  if (means.empty() || means.size() != vars.size())
    throw ContractViolation("ensemble_predict_marginal: need Q >= 1 members");
  const int Q = static_cast<int>(means.size());
  const auto n = means.front().size();
  mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < Q; ++k) {
    if (means[k].size() != n || vars[k].size() != n)
      throw ContractViolation("ensemble_predict_marginal: member dimension mismatch");
    mean += means[k];
    second += (vars[k].array() + means[k].array().square()).matrix();
  }
  mean /= Q;
  var = (second / Q - mean.cwiseProduct(mean));
  for (int i = 0; i < n; ++i) {
    if (var[i] < -1e-10) throw NumericalSingularity("ensemble variance negative", {var[i]});
    var[i] = std::max(var[i], 0.0);
  }
  return;
}

}  // namespace mfgp
