// SPDX-License-Identifier: Apache-2.0
#include "mfgp/bayesopt.hpp"

#include <algorithm>
#include <cmath>

#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"
#include "mfgp/training.hpp"

namespace mfgp {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
inline double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }
}  // namespace

void BOConfig::validate(int n_sources) const {
  if (costs.size() != n_sources) throw ContractViolation("BOConfig: one cost per source required");
  for (int j = 0; j < costs.size(); ++j)
    if (costs[j] <= 0.0) throw ContractViolation("BOConfig: costs must be positive");
  if (max_cost <= 0.0) throw ContractViolation("BOConfig: max_cost must be positive");
  if (stall_limit < 0) throw ContractViolation("BOConfig: stall limit must be >= 0");
}

double composite_acquisition(double mu, double tau, double y_best, double cost, bool is_hf,
                             bool maximize) {
  tau = std::max(tau, 1e-12);
  if (is_hf) {
    const double improvement = maximize ? mu - y_best : y_best - mu;
    return improvement / cost;
  }
  // the exploration density is symmetric in the orientation
  return tau * norm_pdf((y_best - mu) / tau) / cost;
}

double expected_improvement(double mu, double tau, double y_best, bool maximize) {
  tau = std::max(tau, 1e-12);
  const double improvement = maximize ? mu - y_best : y_best - mu;
  const double z = improvement / tau;
  return improvement * norm_cdf(z) + tau * norm_pdf(z);
}

AnalyticBOProblem::AnalyticBOProblem(BenchmarkProblem p, std::uint64_t seed, bool with_noise)
    : problem_(std::move(p)), seed_(seed), with_noise_(with_noise) {
  if (!problem_.calibration_ids.empty())
    throw ContractViolation("AnalyticBOProblem: calibration benchmarks are not queryable sources");
}

Eigen::MatrixXd AnalyticBOProblem::candidate_pool(int source, int n, std::uint64_t key) {
  const int nf = features();
  HaltonSampler hal(nf, seed_ ^ key ^ (0xb0b0ULL + source));
  Eigen::MatrixXd pool(n, nf);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = hal.next();
    for (int c = 0; c < nf; ++c) {
      const auto q = problem_.qual_dict.find(c);
      if (q != problem_.qual_dict.end())
        pool(i, c) = std::min<double>(q->second - 1, std::floor(u[c] * q->second));
      else
        pool(i, c) = problem_.lo[c] + (problem_.hi[c] - problem_.lo[c]) * u[c];
    }
  }
  return pool;
}

std::pair<Eigen::VectorXd, double> AnalyticBOProblem::query(int source, const Eigen::VectorXd& x) {
  double y = problem_.evaluate(source, x);
  if (with_noise_ && problem_.noise_std[source] > 0.0)
    y += problem_.noise_std[source] *
         CounterRng::keyed_normal(seed_ ^ 0x71756572ULL, static_cast<std::uint64_t>(counter_++), source);
  return {x, y};
}

TableBOProblem::TableBOProblem(std::vector<SourceData> tables) : tables_(std::move(tables)) {
  if (tables_.empty()) throw ContractViolation("TableBOProblem: no sources");
  const auto nf = tables_.front().X.cols();
  lo_ = Eigen::VectorXd::Constant(nf, std::numeric_limits<double>::infinity());
  hi_ = Eigen::VectorXd::Constant(nf, -std::numeric_limits<double>::infinity());
  alive_.resize(tables_.size());
  for (size_t j = 0; j < tables_.size(); ++j) {
    if (tables_[j].X.cols() != nf) throw ContractViolation("TableBOProblem: layouts differ");
    for (int i = 0; i < tables_[j].X.rows(); ++i) alive_[j].push_back(i);
    lo_ = lo_.cwiseMin(tables_[j].X.colwise().minCoeff().transpose());
    hi_ = hi_.cwiseMax(tables_[j].X.colwise().maxCoeff().transpose());
  }
  span_ = (hi_ - lo_).cwiseMax(1e-12);
}

int TableBOProblem::features() const { return static_cast<int>(tables_.front().X.cols()); }

Eigen::MatrixXd TableBOProblem::candidate_pool(int source, int n, std::uint64_t key) {
  const auto& idx = alive_[source];
  if (idx.empty()) throw ContractViolation("TableBOProblem: source exhausted");
  std::vector<int> take(idx);
  if (static_cast<int>(take.size()) > n) {
    // deterministic subsample
    CounterRng rng(key, source);
    for (size_t i = take.size(); i-- > 1;) std::swap(take[i], take[static_cast<size_t>(rng.uniform() * (i + 1))]);
    take.resize(n);
  }
  Eigen::MatrixXd pool(static_cast<int>(take.size()), features());
  for (size_t i = 0; i < take.size(); ++i) pool.row(static_cast<int>(i)) = tables_[source].X.row(take[i]);
  return pool;
}

std::pair<Eigen::VectorXd, double> TableBOProblem::query(int source, const Eigen::VectorXd& x) {
  auto& idx = alive_[source];
  if (idx.empty()) throw ContractViolation("TableBOProblem: source exhausted");
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < idx.size(); ++i) {
    const double d =
        ((tables_[source].X.row(idx[i]).transpose() - x).array() / span_.array()).matrix().squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  const int row = idx[best];
  idx.erase(idx.begin() + best);
  return {tables_[source].X.row(row).transpose(), tables_[source].y[row]};
}

namespace {

// acquisition of a batch of candidates for one source
Eigen::VectorXd score_pool(const TrainedModel& model, const Eigen::MatrixXd& pool, int source,
                           const BOState& state, const BOConfig& cfg, bool single_fidelity) {
  MFDataset q;
  q.X = pool;
  q.y = Eigen::VectorXd::Zero(pool.rows());
  q.source.assign(pool.rows(), source);
  if (model.core->ds == 1) q.source.clear();
  const PredictiveDistribution pd = model.predict(q, false, false);
  Eigen::VectorXd acq(pool.rows());
  for (int i = 0; i < pool.rows(); ++i) {
    const double tau = std::sqrt(std::max(pd.var[i], 0.0));
    if (single_fidelity)
      acq[i] = expected_improvement(pd.mean[i], tau, state.incumbent[source], cfg.maximize) /
               cfg.costs[source];
    else
      acq[i] = composite_acquisition(pd.mean[i], tau, state.incumbent[source], cfg.costs[source],
                                     source == 0, cfg.maximize);
  }
  return acq;
}

double score_point(const TrainedModel& model, const Eigen::VectorXd& x, int source,
                   const BOState& state, const BOConfig& cfg, bool single_fidelity) {
  Eigen::MatrixXd pool(1, x.size());
  pool.row(0) = x.transpose();
  return score_pool(model, pool, source, state, cfg, single_fidelity)[0];
}

}  // namespace

Proposal propose_next(const TrainedModel& model, const BOState& state, BOProblem& prob,
                      const BOConfig& cfg, int iteration) {
  const int ds = prob.n_sources();
  const bool sf = ds == 1;
  struct Cand {
    double acq;
    int source;
    int index;
    Eigen::VectorXd x;
  };
  std::vector<Cand> top;
  Proposal best;
  bool have = false;
  for (int j = 0; j < ds; ++j) {
    const Eigen::MatrixXd pool =
        prob.candidate_pool(j, cfg.pool_size, 0x9e3779b9ULL * (iteration + 1));
    if (pool.rows() == 0) throw ContractViolation("propose_next: empty candidate pool");
    const Eigen::VectorXd acq = score_pool(model, pool, j, state, cfg, sf);
    for (int i = 0; i < pool.rows(); ++i) {
      if (!have || acq[i] > best.acquisition) {
        best.acquisition = acq[i];
        best.source = j;
        best.x = pool.row(i).transpose();
        have = true;
      }
      top.push_back({acq[i], j, i, pool.row(i).transpose()});
    }
  }

  if (prob.polishable() && cfg.polish_top > 0) {
    std::stable_sort(top.begin(), top.end(), [](const Cand& a, const Cand& b) {
      if (a.acq != b.acq) return a.acq > b.acq;
      if (a.source != b.source) return a.source < b.source;
      return a.index < b.index;
    });
    const auto qual = prob.qual();
    const Eigen::VectorXd lo = prob.lo(), hi = prob.hi();
    const int k = std::min<int>(cfg.polish_top, static_cast<int>(top.size()));
    for (int t = 0; t < k; ++t) {
      const Cand& c = top[t];
      // refine continuous coordinates only
      std::vector<int> free_cols;
      for (int col = 0; col < prob.features(); ++col)
        if (!qual.count(col) && hi[col] > lo[col]) free_cols.push_back(col);
      if (free_cols.empty()) continue;
      Eigen::VectorXd x0(free_cols.size());
      for (size_t i = 0; i < free_cols.size(); ++i) x0[i] = c.x[free_cols[i]];
      Eigen::VectorXd full = c.x;
      auto value = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd xx = full;
        for (size_t i = 0; i < free_cols.size(); ++i) xx[free_cols[i]] = v[i];
        return -score_point(model, xx, c.source, state, cfg, sf);
      };
      NumericObjective obj(static_cast<int>(free_cols.size()), value, 1e-5);
      LbfgsOptions lopt;
      lopt.max_iters = 15;
      lopt.lower.resize(free_cols.size());
      lopt.upper.resize(free_cols.size());
      for (size_t i = 0; i < free_cols.size(); ++i) {
        lopt.lower[i] = lo[free_cols[i]];
        lopt.upper[i] = hi[free_cols[i]];
      }
      const LbfgsResult lr = lbfgs_minimize(obj, x0, lopt);
      if (std::isfinite(lr.f) && -lr.f > best.acquisition) {
        best.acquisition = -lr.f;
        best.source = c.source;
        best.x = full;
        for (size_t i = 0; i < free_cols.size(); ++i) best.x[free_cols[i]] = lr.x[i];
      }
    }
  }
  return best;
}

BOState run_bo(BOProblem& prob, const MFDataset& init, const BOConfig& cfg) {
  const int ds = prob.n_sources();
  cfg.validate(ds);
  init.validate();
  if (init.n_sources() != ds && !(ds == 1 && init.source.empty()))
    throw ContractViolation("run_bo: initial data must cover every source");
  {
    const auto counts = init.source_counts();
    for (int j = 0; j < static_cast<int>(counts.size()); ++j)
      if (counts[j] < 2) throw ContractViolation("run_bo: need at least 2 initial points per source");
  }

  BOState state;
  state.data = init;
  state.incumbent.resize(ds);
  for (int j = 0; j < ds; ++j)
    state.incumbent[j] = cfg.maximize ? -std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::infinity();
  for (int i = 0; i < init.rows(); ++i) {
    const int j = init.source_of(i);
    state.incumbent[j] = cfg.maximize ? std::max(state.incumbent[j], init.y[i])
                                      : std::min(state.incumbent[j], init.y[i]);
  }

  ModelConfig mc = cfg.model;
  mc.draw_seed = cfg.seed;
  mc.z_mode = ZMode::Deterministic;

  OptimizerConfig refit = cfg.opt;
  refit.num_restarts = std::max(1, cfg.opt.num_restarts / 4);

  Eigen::VectorXd prev_raw;
  bool have_prev = false;

  int iteration = 0;
  while (true) {
    auto core = GpCore::build(mc, state.data);
    auto make_obj = [&](int r) {
      auto loss = std::make_unique<MapLoss>(core, r);
      loss->with_interval_score = cfg.interval_score;
      loss->isc = cfg.isc;
      return loss;
    };
    const std::uint64_t sseed = cfg.seed + 1000003ULL * iteration;
    Eigen::VectorXd warm = prev_raw;
    const bool use_warm = have_prev;
    auto starts = [core, sseed, warm, use_warm](int r) {
      if (use_warm && r == 0) return warm;
      return core->start_raw(sseed, r);
    };
    const FitMapResult fr = fit_map(make_obj, starts, refit);
    prev_raw = fr.x;
    have_prev = true;
    const TrainedModel model = finalize_deterministic(core, fr.x, fr.loss);

    const Proposal prop = propose_next(model, state, prob, cfg, iteration);
    std::pair<Eigen::VectorXd, double> obs;
    try {
      obs = prob.query(prop.source, prop.x);
    } catch (const std::exception&) {
      break;  // source failure: return the partial history
    }

    // append the observation
    MFDataset& d = state.data;
    d.X.conservativeResize(d.X.rows() + 1, Eigen::NoChange);
    d.X.row(d.X.rows() - 1) = obs.first.transpose();
    d.y.conservativeResize(d.y.size() + 1);
    d.y[d.y.size() - 1] = obs.second;
    if (ds > 1 || !d.source.empty()) {
      if (d.source.empty()) d.source.assign(d.rows() - 1, 0);
      d.source.push_back(prop.source);
    }

    state.accumulated_cost += cfg.costs[prop.source];
    const double y = obs.second;
    bool hf_improved = false;
    if (cfg.maximize) {
      if (prop.source == 0 && y > state.incumbent[0] + 1e-12) hf_improved = true;
      state.incumbent[prop.source] = std::max(state.incumbent[prop.source], y);
    } else {
      if (prop.source == 0 && y < state.incumbent[0] - 1e-12) hf_improved = true;
      state.incumbent[prop.source] = std::min(state.incumbent[prop.source], y);
    }
    state.stall = hf_improved ? 0 : state.stall + 1;

    BORecord rec;
    rec.iteration = iteration;
    rec.source = prop.source;
    rec.x = obs.first;
    rec.y = y;
    rec.incumbent_hf = state.incumbent[0];
    rec.acquisition = prop.acquisition;
    rec.accumulated_cost = state.accumulated_cost;
    state.history.push_back(rec);

    ++iteration;
    if (state.accumulated_cost > cfg.max_cost) break;
    if (state.stall > cfg.stall_limit) break;
    if (!std::isnan(cfg.hf_target) &&
        (cfg.maximize ? state.incumbent[0] >= cfg.hf_target : state.incumbent[0] <= cfg.hf_target))
      break;
  }
  return state;
}

}  // namespace mfgp
