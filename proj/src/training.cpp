// SPDX-License-Identifier: Apache-2.0
#include "mfgp/training.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const LbfgsOptions& opt) {
  if (opt.lower.size() == 0) return x;
  return x.cwiseMax(opt.lower).cwiseMin(opt.upper);
}

}  // namespace

double NumericObjective::eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
  const double f0 = f_(x);
  if (grad) {
    grad->resize(dim_);
    Eigen::VectorXd xp = x;
    for (int i = 0; i < dim_; ++i) {
      const double hi = h_ * std::max(1.0, std::abs(x[i]));
      xp[i] = x[i] + hi;
      const double fp = f_(xp);
      xp[i] = x[i] - hi;
      const double fm = f_(xp);
      xp[i] = x[i];
      (*grad)[i] = (fp - fm) / (2.0 * hi);
    }
  }
  return f0;
}

LbfgsResult lbfgsMinimizeImpl(Objective& obj, const Eigen::VectorXd& x0, const LbfgsOptions& opt) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  Eigen::VectorXd x = project(x0, opt);
  Eigen::VectorXd g(n);

  obj.begin_iteration(0);
  double f = obj.eval(x, &g);
  if (!std::isfinite(f)) {
    res.x = x;
    res.f = f;
    return res;
  }

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho;

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (iter > 0) {
      obj.begin_iteration(iter);
      // stochastic objectives change under fresh draws; re-anchor f and g
      f = obj.eval(x, &g);
      if (!std::isfinite(f)) break;
    }
    res.trace.emplace_back(f, f);

    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      res.trace.back().second = f;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> a(m);
    for (int i = m - 1; i >= 0; --i) {
      a[i] = rho[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double b = rho[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    Eigen::VectorXd d = -q;
    if (d.dot(g) >= 0.0) d = -g;  // safeguard: fall back to steepest descent

    // backtracking line search with a weak curvature extension
    const double gd = g.dot(d);
    double step = 1.0;
    double fn = f;
    Eigen::VectorXd xn, gn(n);
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = project(x + step * d, opt);
      fn = obj.eval(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no descent possible at machine precision
      break;
    }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho.erase(rho.begin());
      }
    }

    res.trace.back().second = fn;
    const double stepinf = s.lpNorm<Eigen::Infinity>();
    x = xn;
    f = fn;
    g = gn;
    ++res.iters;
    if (stepinf <= opt.step_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.f = f;
  return res;
}

LbfgsResult lbfgs_minimize(Objective& obj, const Eigen::VectorXd& x0, const LbfgsOptions& opt) {
  return lbfgsMinimizeImpl(obj, x0, opt);
}

FitMapResult fit_map(const std::function<std::unique_ptr<Objective>(int)>& make_objective,
                     const std::function<Eigen::VectorXd(int)>& start_of,
                     const OptimizerConfig& cfg) {
  if (cfg.num_restarts < 1) throw ContractViolation("fit_map: num_restarts must be >= 1");
  LbfgsOptions lopt;
  lopt.max_iters = cfg.max_iters;
  lopt.grad_tol = cfg.grad_tol;
  lopt.step_tol = cfg.step_tol;
  lopt.memory = cfg.lbfgs_memory;
  lopt.lower = cfg.lower;
  lopt.upper = cfg.upper;

  const int R = cfg.num_restarts;
  std::vector<RestartRecord> records(R);
  std::vector<Eigen::VectorXd> solutions(R);

  auto run_one = [&](int r) {
    RestartRecord rec;
    rec.index = r;
    try {
      auto obj = make_objective(r);
      std::unique_ptr<Objective> wrapped;
      Objective* o = obj.get();
      if (!cfg.use_jacobian) {
        Objective* inner = obj.get();
        wrapped = std::make_unique<NumericObjective>(
            inner->dim(), [inner](const Eigen::VectorXd& x) { return inner->eval(x, nullptr); });
        o = wrapped.get();
      }
      const Eigen::VectorXd x0 = start_of(r);
      LbfgsResult lr = lbfgsMinimizeImpl(*o, x0, lopt);
      if (!std::isfinite(lr.f)) {
        rec.ok = false;
        rec.note = "non-finite objective";
      } else {
        rec.ok = true;
        rec.loss = lr.f;
        solutions[r] = lr.x;
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.note = e.what();
    }
    records[r] = rec;
  };

  int jobs = cfg.n_jobs <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : cfg.n_jobs;
  jobs = std::max(1, std::min(jobs, R));
  if (jobs == 1) {
    for (int r = 0; r < R; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  FitMapResult out;
  out.restarts = records;
  out.winner = -1;
  for (int r = 0; r < R; ++r) {
    if (!records[r].ok) continue;
    if (out.winner < 0 || records[r].loss < out.loss) {
      out.winner = r;
      out.loss = records[r].loss;
      out.x = solutions[r];
    }
  }
  if (out.winner < 0) {
    std::ostringstream oss;
    oss << "fit_map: all " << R << " restarts failed:";
    for (const auto& rec : records) oss << "\n  restart " << rec.index << ": " << rec.note;
    throw TrainingFailure(oss.str());
  }
  return out;
}

void ContinuationSchedule::validate() const {
  if (floors.empty()) throw ContractViolation("ContinuationSchedule: empty ladder");
  for (size_t i = 0; i < floors.size(); ++i) {
    if (floors[i] <= 0.0) throw ContractViolation("ContinuationSchedule: floors must be positive");
    if (i > 0 && floors[i] >= floors[i - 1])
      throw ContractViolation("ContinuationSchedule: ladder must be strictly decreasing");
  }
}

ContinuationResult continuation_fit(const ModelConfig& cfg, const MFDataset& data,
                                    const ContinuationSchedule& schedule, const OptimizerConfig& ocfg,
                                    std::uint64_t seed) {
  schedule.validate();
  ContinuationResult out;
  Eigen::VectorXd warm_constrained;  // solution of the previous rung, constrained scale
  bool have_warm = false;

  for (size_t rix = 0; rix < schedule.floors.size(); ++rix) {
    ContinuationRung rung;
    rung.floor = schedule.floors[rix];
    ModelConfig rc = cfg;
    rc.lb_noise = rung.floor;
    rc.draw_seed = seed;
    try {
      auto core = GpCore::build(rc, data);
      if (core->is_ensemble())
        throw ContractViolation("continuation_fit: deterministic configurations only");
      auto make_obj = [core](int r) { return std::make_unique<MapLoss>(core, r); };
      FitMapResult fr;
      if (!have_warm) {
        auto starts = [core, seed](int r) { return core->start_raw(seed, r); };
        fr = fit_map(make_obj, starts, ocfg);
      } else {
        // warm start: single descent from the previous rung's solution
        rung.start_constrained = warm_constrained;
        OptimizerConfig one = ocfg;
        one.num_restarts = 1;
        const Eigen::VectorXd x0 = core->layout.to_raw(warm_constrained);
        auto starts = [x0](int) { return x0; };
        fr = fit_map(make_obj, starts, one);
      }
      rung.ok = true;
      rung.loss = fr.loss;
      rung.x = fr.x;
      warm_constrained = core->layout.constrained(fr.x);
      have_warm = true;
      TrainedModel m = finalize_deterministic(core, fr.x, fr.loss);
      rung.loo_mse = loo_mse(m);
    } catch (const TrainingFailure&) {
      rung.ok = false;  // a failed rung is removed from selection
    }
    out.rungs.push_back(rung);
  }

  out.selected = -1;
  for (size_t i = 0; i < out.rungs.size(); ++i) {
    if (!out.rungs[i].ok) continue;
    if (out.selected < 0 || out.rungs[i].loo_mse < out.rungs[out.selected].loo_mse)
      out.selected = static_cast<int>(i);
  }
  if (out.selected < 0) throw TrainingFailure("continuation_fit: every rung failed");

  ModelConfig rc = cfg;
  rc.lb_noise = out.rungs[out.selected].floor;
  rc.draw_seed = seed;
  auto core = GpCore::build(rc, data);
  out.model = finalize_deterministic(core, out.rungs[out.selected].x, out.rungs[out.selected].loss);
  return out;
}

double interval_score(const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
                      const Eigen::VectorXd& y, double v) {
  if (v <= 0.0 || v >= 1.0) throw ContractViolation("interval_score: v must lie in (0, 1)");
  if (mu.size() != tau.size() || mu.size() != y.size())
    throw ContractViolation("interval_score: length mismatch");
  const double quant = 1.96;
  const int n = static_cast<int>(mu.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double U = mu[i] + quant * tau[i];
    const double L = mu[i] - quant * tau[i];
    acc += U - L;
    if (y[i] < L) acc += (2.0 / v) * (L - y[i]);
    if (y[i] > U) acc += (2.0 / v) * (y[i] - U);
  }
  return acc / n;
}

}  // namespace mfgp
