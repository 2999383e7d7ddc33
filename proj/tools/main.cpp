// SPDX-License-Identifier: Apache-2.0
//
// mfgp: kernel-based Gaussian-process learning with latent embeddings for
// categorical inputs. Subcommands cover fitting, prediction, metrics,
// multi-fidelity fusion, inverse calibration, cost-aware Bayesian
// optimization, global sensitivity analysis and the analytic benchmark suite.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "mfgp/analysis.hpp"
#include "mfgp/bayesopt.hpp"
#include "mfgp/calibration.hpp"
#include "mfgp/errors.hpp"
#include "mfgp/fit.hpp"
#include "mfgp/io.hpp"
#include "mfgp/training.hpp"

using namespace mfgp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::map<int, int> parse_qual_dict(const std::string& s) {
  std::map<int, int> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ContractViolation("unparsable qual-dict entry '" + item + "' (expected col:levels)");
    try {
      const int col = std::stoi(item.substr(0, colon));
      const int lv = std::stoi(item.substr(colon + 1));
      out[col] = lv;
    } catch (const std::exception&) {
      throw ContractViolation("unparsable qual-dict entry '" + item + "'");
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ContractViolation("unparsable integer '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ContractViolation("unparsable number '" + item + "'");
    }
  }
  return out;
}

KernelFamily parse_kernel(const std::string& s, double& nu) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "pexp" || s == "power-exponential") return KernelFamily::PowerExponential;
  if (s == "matern12") {
    nu = 0.5;
    return KernelFamily::Matern;
  }
  if (s == "matern32") {
    nu = 1.5;
    return KernelFamily::Matern;
  }
  if (s == "matern52") {
    nu = 2.5;
    return KernelFamily::Matern;
  }
  throw ContractViolation("unknown kernel '" + s +
                          "' (gaussian, pexp, matern12, matern32, matern52)");
}

MeanKind parse_mean(const std::string& s) {
  if (s == "zero") return MeanKind::Zero;
  if (s == "single") return MeanKind::Single;
  if (s == "per-source") return MeanKind::PerSource;
  if (s == "poly") return MeanKind::Polynomial;
  if (s == "ffnn") return MeanKind::FeedForward;
  throw ContractViolation("unknown mean '" + s + "' (zero, single, per-source, poly, ffnn)");
}

struct FitFlags {
  std::string data, out, response, source;
  std::string qual_dict, kernel = "gaussian", mean = "single";
  std::string poly_degrees, nn_mean = "4,4", nn_embedding, nn_z, encoding = "one-hot";
  std::string ladder;
  double power_p = 1.8;
  int embedding_dim = 2, z_dim = 2;
  bool separate_embedding = false, probabilistic = false;
  int num_pass_train = 20, num_pass_pred = 30;
  int restarts = 32, max_iters = 200, jobs = -1;
  double lb_noise = 1e-8;
  double fix_noise_val = 1e-5;
  bool fix_noise = false;
  bool multiple_noise = false, single_noise = false;
  bool no_prior = false;
  bool continuation = false;
  bool use_interval_score = false;
  double is_eps = 0.08;
  double a_prior_std = 0.0;
  std::uint64_t seed = 0, encoding_seed = 0;
  std::string regularization = "0,0";
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool needs_out) {
  cmd->add_option("--data", f.data, "training dataset (CSV with a header row)")->required();
  if (needs_out) cmd->add_option("--out", f.out, "model file to write")->required();
  cmd->add_option("--response", f.response, "response column name (default: last column)");
  cmd->add_option("--source", f.source, "source-indicator column name (0 = high fidelity)");
  cmd->add_option("--qual-dict", f.qual_dict,
                  "categorical feature columns as 'col:levels,...' (0-based feature index)");
  cmd->add_option("--kernel", f.kernel, "gaussian | pexp | matern12 | matern32 | matern52")
      ->capture_default_str();
  cmd->add_option("--power-p", f.power_p, "initial exponent for the pexp kernel")
      ->capture_default_str();
  cmd->add_option("--mean", f.mean, "zero | single | per-source | poly | ffnn")
      ->capture_default_str();
  cmd->add_option("--poly-degrees", f.poly_degrees,
                  "per-source polynomial degrees, e.g. '-1,2' (-1 = zero mean)");
  cmd->add_option("--nn-mean", f.nn_mean, "hidden layers of the ffnn mean")->capture_default_str();
  cmd->add_option("--encoding", f.encoding, "one-hot | random | per-variable")
      ->capture_default_str();
  cmd->add_option("--encoding-seed", f.encoding_seed, "seed of the random-matrix encoding");
  cmd->add_flag("--separate-embedding", f.separate_embedding,
                "one latent block per categorical variable");
  cmd->add_option("--embedding-dim", f.embedding_dim, "latent dimension per block")
      ->capture_default_str();
  cmd->add_option("--nn-embedding", f.nn_embedding, "hidden layers of the embedding map");
  cmd->add_option("--z-dim", f.z_dim, "latent dimension of the source embedding")
      ->capture_default_str();
  cmd->add_option("--nn-z", f.nn_z, "hidden layers of the source embedding map");
  cmd->add_flag("--probabilistic", f.probabilistic, "probabilistic source embedding");
  cmd->add_option("--num-pass-train", f.num_pass_train, "ensemble draws per training evaluation")
      ->capture_default_str();
  cmd->add_option("--num-pass-pred", f.num_pass_pred, "ensemble draws per prediction")
      ->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "optimization restarts")->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "quasi-Newton iteration cap")->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "parallel restarts (-1 = all cores)")->capture_default_str();
  cmd->add_option("--lb-noise", f.lb_noise, "nugget lower bound")->capture_default_str();
  cmd->add_flag("--fix-noise", f.fix_noise, "pin the nugget instead of estimating it");
  cmd->add_option("--fix-noise-val", f.fix_noise_val, "pinned nugget value")
      ->capture_default_str();
  cmd->add_flag("--multiple-noise", f.multiple_noise, "force one nugget per source");
  cmd->add_flag("--single-noise", f.single_noise, "force a single shared nugget");
  cmd->add_flag("--no-prior", f.no_prior, "maximum likelihood instead of MAP");
  cmd->add_option("--a-prior-std", f.a_prior_std,
                  "embedding prior std (0 = auto: 1.0, or 0.1 beyond 200 combinations)");
  cmd->add_flag("--continuation", f.continuation,
                "continuation ladder over noise floors, selected by LOO-CV");
  cmd->add_option("--ladder", f.ladder, "continuation floors, e.g. '1e-2,1e-3,1e-4,1e-6'");
  cmd->add_flag("--interval-score", f.use_interval_score,
                "penalize the objective with the interval score");
  cmd->add_option("--is-eps", f.is_eps, "interval-score penalty scale")->capture_default_str();
  cmd->add_option("--regularization", f.regularization, "L1,L2 coefficients on embedding/mean")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
}

ModelConfig config_from_flags(const FitFlags& f) {
  ModelConfig cfg;
  cfg.kernel = parse_kernel(f.kernel, cfg.matern_nu);
  cfg.power_p = f.power_p;
  cfg.qual_dict = parse_qual_dict(f.qual_dict);
  if (f.encoding == "one-hot")
    cfg.encoding = EncodingKind::GroupedOneHot;
  else if (f.encoding == "random")
    cfg.encoding = EncodingKind::RandomMatrix;
  else if (f.encoding == "per-variable")
    cfg.encoding = EncodingKind::PerVariableOneHot;
  else
    throw ContractViolation("unknown encoding '" + f.encoding + "'");
  cfg.encoding_seed = f.encoding_seed;
  cfg.separate_embedding = f.separate_embedding;
  cfg.embedding_dim = f.embedding_dim;
  cfg.nn_layers_embedding = parse_ints(f.nn_embedding);
  cfg.a_prior_std = f.a_prior_std;
  cfg.z_dim = f.z_dim;
  cfg.z_mode = f.probabilistic ? ZMode::Probabilistic : ZMode::Deterministic;
  cfg.nn_layers_z = parse_ints(f.nn_z);
  cfg.num_pass_train = f.num_pass_train;
  cfg.num_pass_pred = f.num_pass_pred;
  cfg.mean = parse_mean(f.mean);
  cfg.poly_degrees = parse_ints(f.poly_degrees);
  cfg.nn_layers_mean = parse_ints(f.nn_mean);
  if (f.multiple_noise) cfg.multiple_noise = true;
  if (f.single_noise) cfg.multiple_noise = false;
  cfg.fix_noise = f.fix_noise;
  cfg.fix_noise_val = f.fix_noise_val;
  cfg.lb_noise = f.lb_noise;
  cfg.add_prior = !f.no_prior;
  const auto reg = parse_doubles(f.regularization);
  if (reg.size() != 2) throw ContractViolation("--regularization expects 'l1,l2'");
  cfg.regularization = {reg[0], reg[1]};
  return cfg;
}

FitOptions options_from_flags(const FitFlags& f) {
  FitOptions o;
  o.opt.num_restarts = f.restarts;
  o.opt.max_iters = f.max_iters;
  o.opt.n_jobs = f.jobs;
  o.seed = f.seed;
  o.interval_score = f.use_interval_score;
  o.isc.eps = f.is_eps;
  return o;
}

void print_fit_summary(const TrainedModel& m) {
  std::printf("loss %.10g\n", m.loss);
  const Eigen::VectorXd dn = m.deltas_raw();
  for (int j = 0; j < dn.size(); ++j)
    std::printf("noise_std[%d] %.6g\n", j, std::sqrt(dn[j]));
  const GpCore& c = *m.core;
  if (c.mean.kind == MeanKind::Single || c.mean.kind == MeanKind::PerSource) {
    const Eigen::VectorXd beta = source_constants_raw(m);
    for (int j = 0; j < beta.size(); ++j) std::printf("mean_constant[%d] %.6g\n", j, beta[j]);
  }
  if (c.mean.kind == MeanKind::Polynomial) {
    const auto coefs = polynomial_coefficients_raw(m);
    for (size_t j = 0; j < coefs.size(); ++j) {
      if (coefs[j].size() == 0) {
        std::printf("mean_poly[%zu] zero\n", j);
        continue;
      }
      std::printf("mean_poly[%zu]", j);
      for (int k = 0; k < coefs[j].size(); ++k) std::printf(" %.6g", coefs[j][k]);
      std::printf("\n");
    }
  }
}

MFDataset load_dataset(const FitFlags& f) {
  DatasetSpec spec;
  spec.response = f.response;
  spec.source = f.source;
  return dataset_from_csv(read_csv(f.data), spec);
}

int cmd_fit(const FitFlags& f) {
  const MFDataset data = load_dataset(f);
  ModelConfig cfg = config_from_flags(f);
  const FitOptions opt = options_from_flags(f);
  if (f.continuation) {
    ContinuationSchedule sched;
    if (!f.ladder.empty()) sched.floors = parse_doubles(f.ladder);
    const ContinuationResult res = continuation_fit(cfg, data, sched, opt.opt, f.seed);
    std::printf("continuation selected floor %.3g (LOO-CV mse %.6g)\n",
                res.rungs[res.selected].floor, res.rungs[res.selected].loo_mse);
    print_fit_summary(res.model);
    save_model(f.out, res.model);
    return 0;
  }
  if (f.probabilistic && data.n_sources() > 1) {
    const EnsembleModel m = fit_probabilistic(cfg, data, opt);
    std::printf("loss %.10g\n", m.loss);
    save_model(f.out, m);
    return 0;
  }
  const TrainedModel m = fit_deterministic(cfg, data, opt);
  print_fit_summary(m);
  save_model(f.out, m);
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& response, const std::string& source, bool include_noise,
                const std::string& out) {
  const LoadedModel m = load_model(model_path);
  const CsvTable t = read_csv(data_path);
  MFDataset q;
  const int want = m.core().data_raw.features();
  if (static_cast<int>(t.columns.size()) == want && response.empty() && source.empty()) {
    // feature-only query file
    q.X = t.values;
    q.columns = t.columns;
    q.y = Eigen::VectorXd::Zero(t.values.rows());
    if (m.core().ds > 1)
      throw DataError("multi-source model: name the source column with --source");
  } else {
    DatasetSpec spec;
    spec.response = response;
    spec.source = source;
    q = dataset_from_csv(t, spec);
  }
  const auto& cols = m.core().data_raw.columns;
  if (!cols.empty() && !q.columns.empty() && cols != q.columns)
    throw DataError("query columns do not match the model's training schema");
  const PredictiveDistribution p = m.predict(q, include_noise);
  Eigen::MatrixXd outm(q.rows(), q.features() + 2);
  outm.leftCols(q.features()) = q.X;
  outm.col(q.features()) = p.mean;
  outm.col(q.features() + 1) = p.var.cwiseSqrt();
  std::vector<std::string> names = q.columns;
  if (names.empty())
    for (int c = 0; c < q.features(); ++c) names.push_back("x" + std::to_string(c));
  names.push_back("mean");
  names.push_back("std");
  write_csv(out, names, outm);
  std::printf("wrote %d predictions to %s\n", q.rows(), out.c_str());
  return 0;
}

int cmd_metrics(const std::string& pred_path, const std::string& truth_path,
                const std::string& response) {
  const CsvTable pred = read_csv(pred_path);
  int mean_col = -1, std_col = -1;
  for (size_t c = 0; c < pred.columns.size(); ++c) {
    if (pred.columns[c] == "mean") mean_col = static_cast<int>(c);
    if (pred.columns[c] == "std") std_col = static_cast<int>(c);
  }
  if (mean_col < 0 || std_col < 0)
    throw DataError("prediction file needs 'mean' and 'std' columns");
  const CsvTable truth = read_csv(truth_path);
  int resp = static_cast<int>(truth.columns.size()) - 1;
  if (!response.empty()) {
    resp = -1;
    for (size_t c = 0; c < truth.columns.size(); ++c)
      if (truth.columns[c] == response) resp = static_cast<int>(c);
    if (resp < 0) throw DataError("response column '" + response + "' not found");
  }
  if (truth.values.rows() != pred.values.rows())
    throw DataError("prediction and truth files have different row counts");
  const Eigen::VectorXd y = truth.values.col(resp);
  const Eigen::VectorXd mu = pred.values.col(mean_col);
  const Eigen::VectorXd tau = pred.values.col(std_col);
  std::printf("NRMSE %.6g\n", nrmse(y, mu));
  std::printf("NIS %.6g\n", nis(y, mu, tau));
  return 0;
}

int cmd_calibrate(FitFlags& f, const std::string& ids, const std::string& mode,
                  const std::string& prior_mean, const std::string& prior_std) {
  const MFDataset data = load_dataset(f);
  ModelConfig cfg = config_from_flags(f);
  cfg.calibration_ids = parse_ints(ids);
  if (mode == "det")
    cfg.calibration = CalibrationMode::Deterministic;
  else if (mode == "prob")
    cfg.calibration = CalibrationMode::Probabilistic;
  else
    throw ContractViolation("unknown calibration mode '" + mode + "' (det | prob)");
  const auto pm = parse_doubles(prior_mean), ps = parse_doubles(prior_std);
  if (!pm.empty()) {
    if (pm.size() != cfg.calibration_ids.size() || ps.size() != cfg.calibration_ids.size())
      throw ContractViolation("--prior-mean/--prior-std need one value per calibration column");
    cfg.calib_prior_mean = Eigen::Map<const Eigen::VectorXd>(pm.data(), pm.size());
    cfg.calib_prior_std = Eigen::Map<const Eigen::VectorXd>(ps.data(), ps.size());
  }
  const FitOptions opt = options_from_flags(f);
  const CalibrationResult res = calibrate(cfg, data, opt);
  for (int k = 0; k < res.zeta_mean_raw.size(); ++k) {
    if (res.probabilistic)
      std::printf("zeta[%d] %.8g std %.6g\n", k, res.zeta_mean_raw[k], res.zeta_std_raw[k]);
    else
      std::printf("zeta[%d] %.8g\n", k, res.zeta_mean_raw[k]);
  }
  if (!f.out.empty()) {
    if (res.probabilistic)
      save_model(f.out, res.prob);
    else
      save_model(f.out, res.det);
  }
  return 0;
}

int cmd_bo(const std::string& problem, const std::string& data_sources, const std::string& costs_s,
           double max_cost, int stall, bool maximize, bool sf, int pool, bool no_is, int restarts,
           const std::string& init_s, std::uint64_t seed, const std::string& out_history,
           const std::string& qual) {
  BOConfig cfg;
  cfg.max_cost = max_cost;
  cfg.stall_limit = stall;
  cfg.maximize = maximize;
  cfg.pool_size = pool;
  cfg.interval_score = !no_is;
  cfg.seed = seed;
  cfg.opt.num_restarts = restarts;
  cfg.opt.max_iters = 100;
  cfg.model.qual_dict = parse_qual_dict(qual);

  std::unique_ptr<BOProblem> prob;
  MFDataset init;
  if (!problem.empty()) {
    BenchmarkProblem bp = benchmark_by_name(problem, seed);
    if (sf) bp.n_sources = 1;
    std::vector<int> counts = parse_ints(init_s);
    if (counts.empty())
      counts.assign(bp.init_samples.begin(), bp.init_samples.begin() + bp.n_sources);
    const auto costs = parse_doubles(costs_s);
    if (!costs.empty()) {
      if (static_cast<int>(costs.size()) != bp.n_sources)
        throw ContractViolation("--costs must list one cost per source");
      cfg.costs = Eigen::Map<const Eigen::VectorXd>(costs.data(), costs.size());
    } else {
      cfg.costs = bp.cost.head(bp.n_sources);
      if (cfg.costs.minCoeff() <= 0.0) cfg.costs = Eigen::VectorXd::Ones(bp.n_sources);
    }
    init = bp.sample_all(counts, seed, true);
    if (bp.n_sources == 1) init.source.clear();
    cfg.model.qual_dict = bp.qual_dict;
    prob = std::make_unique<AnalyticBOProblem>(bp, seed, true);
  } else if (!data_sources.empty()) {
    std::vector<SourceData> tables;
    std::stringstream ss(data_sources);
    std::string path;
    while (std::getline(ss, path, ',')) {
      const MFDataset d = dataset_from_csv(read_csv(path), DatasetSpec{});
      tables.push_back({d.X, d.y});
    }
    auto tp = std::make_unique<TableBOProblem>(std::move(tables));
    std::vector<SourceData> parts;
    for (int j = 0; j < tp->n_sources(); ++j) {
      const Eigen::MatrixXd pool0 = tp->candidate_pool(j, 2, seed ^ 0x1234);
      SourceData sd;
      sd.X.resize(pool0.rows(), tp->features());
      sd.y.resize(pool0.rows());
      for (int i = 0; i < pool0.rows(); ++i) {
        const auto [x, y] = tp->query(j, pool0.row(i).transpose());
        sd.X.row(i) = x.transpose();
        sd.y[i] = y;
      }
      parts.push_back(sd);
    }
    init = augment_sources(parts);
    if (tp->n_sources() == 1) init.source.clear();
    const auto costs = parse_doubles(costs_s);
    if (static_cast<int>(costs.size()) != tp->n_sources())
      throw ContractViolation("--costs must list one cost per source");
    cfg.costs = Eigen::Map<const Eigen::VectorXd>(costs.data(), costs.size());
    prob = std::move(tp);
  } else {
    throw ContractViolation("bo needs --problem or --data-sources");
  }
  if (init.n_sources() > 1) cfg.model.mean = MeanKind::PerSource;

  const BOState out = run_bo(*prob, init, cfg);
  std::printf("iterations %zu\n", out.history.size());
  std::printf("accumulated_cost %.6g\n", out.accumulated_cost);
  std::printf("incumbent_hf %.8g\n", out.incumbent[0]);

  if (!out_history.empty()) {
    const int nf = prob->features();
    Eigen::MatrixXd hist(static_cast<int>(out.history.size()), 6 + nf);
    std::vector<std::string> names = {"iteration", "source"};
    for (int c = 0; c < nf; ++c) names.push_back("x" + std::to_string(c));
    names.push_back("y");
    names.push_back("incumbent_hf");
    names.push_back("acquisition");
    names.push_back("accumulated_cost");
    for (size_t i = 0; i < out.history.size(); ++i) {
      const BORecord& r = out.history[i];
      hist(i, 0) = r.iteration;
      hist(i, 1) = r.source;
      for (int c = 0; c < nf; ++c) hist(i, 2 + c) = r.x[c];
      hist(i, 2 + nf) = r.y;
      hist(i, 3 + nf) = r.incumbent_hf;
      hist(i, 4 + nf) = r.acquisition;
      hist(i, 5 + nf) = r.accumulated_cost;
    }
    write_csv(out_history, names, hist);
  }
  return 0;
}

int cmd_sobol(const std::string& model_path, const std::string& problem, int n,
              std::uint64_t seed) {
  SobolInputSpec spec;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> f;
  LoadedModel loaded;
  std::vector<std::string> names;
  bool have_model = false;
  if (!model_path.empty()) {
    loaded = load_model(model_path);
    have_model = true;
    const GpCore& c = loaded.core();
    const int nf = c.data_raw.features();
    spec.lo.resize(nf);
    spec.hi.resize(nf);
    for (int col = 0; col < nf; ++col) {
      spec.lo[col] = c.data_raw.X.col(col).minCoeff();
      spec.hi[col] = c.data_raw.X.col(col).maxCoeff();
    }
    spec.qual_dict = c.cfg.qual_dict;
    names = c.data_raw.columns;
    f = [&loaded](const Eigen::MatrixXd& X) {
      MFDataset q;
      q.X = X;
      q.y = Eigen::VectorXd::Zero(X.rows());
      if (loaded.core().ds > 1) q.source.assign(X.rows(), 0);
      return loaded.predict(q, false).mean;
    };
  } else if (!problem.empty()) {
    const BenchmarkProblem bp = benchmark_by_name(problem, seed);
    if (!bp.calibration_ids.empty())
      throw ContractViolation("sobol --problem expects a plain (non-calibration) benchmark");
    spec.lo = bp.lo;
    spec.hi = bp.hi;
    spec.qual_dict = bp.qual_dict;
    f = [bp](const Eigen::MatrixXd& X) {
      Eigen::VectorXd out(X.rows());
      for (int i = 0; i < X.rows(); ++i) out[i] = bp.evaluate(0, X.row(i).transpose());
      return out;
    };
  } else {
    throw ContractViolation("sobol needs --model or --problem");
  }
  const SensitivityReport rep = sobol_indices_batch(f, spec, n, seed);
  std::printf("%-10s %12s %12s\n", "feature", "main", "total");
  for (int c = 0; c < rep.main_index.size(); ++c) {
    const std::string nm = c < static_cast<int>(names.size()) ? names[c] : "x" + std::to_string(c);
    std::printf("%-10s %12.6g %12.6g\n", nm.c_str(), rep.main_index[c], rep.total_index[c]);
  }
  if (rep.constant_output) std::printf("constant output: indices defined as zero\n");
  if (have_model && loaded.core().cfg.separate_embedding && !loaded.ensemble) {
    for (int col : loaded.core().cat_cols)
      std::printf("S_cat[%d] %12.6g\n", col, s_cat(loaded.det, col));
  }
  return 0;
}

int cmd_benchmark(const std::string& name, int source, int n, bool with_noise, std::uint64_t seed,
                  const std::string& out) {
  const BenchmarkProblem p = benchmark_by_name(name, seed);
  const SourceData d = p.sample(source, n, seed, with_noise);
  Eigen::MatrixXd m(n, p.features() + 1);
  m.leftCols(p.features()) = d.X;
  m.col(p.features()) = d.y;
  std::vector<std::string> cols;
  for (int c = 0; c < p.features(); ++c) cols.push_back("x" + std::to_string(c));
  cols.push_back("y");
  write_csv(out, cols, m);
  std::printf("wrote %d rows from %s source %d to %s\n", n, name.c_str(), source, out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-based GP learning with latent embeddings: emulation, multi-fidelity "
               "fusion, calibration, Bayesian optimization and sensitivity analysis"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  CLI::App* fit = app.add_subcommand("fit", "train a GP emulator and write a model file");
  add_fit_flags(fit, fit_flags, true);

  std::string p_model, p_data, p_out, p_response, p_source;
  bool p_noise = false;
  CLI::App* predict = app.add_subcommand("predict", "posterior mean/std at query rows");
  predict->add_option("--model", p_model)->required();
  predict->add_option("--data", p_data, "query rows (features only, or full dataset layout)")
      ->required();
  predict->add_option("--out", p_out)->required();
  predict->add_option("--response", p_response, "response column to ignore in the query file");
  predict->add_option("--source", p_source, "source column in the query file");
  predict->add_flag("--include-noise", p_noise, "add the estimated noise variance");

  std::string m_pred, m_truth, m_response;
  CLI::App* metrics = app.add_subcommand("metrics", "NRMSE and NIS of a prediction file");
  metrics->add_option("--pred", m_pred, "CSV with 'mean' and 'std' columns")->required();
  metrics->add_option("--truth", m_truth, "CSV with the true responses")->required();
  metrics->add_option("--response", m_response, "response column in the truth file");

  FitFlags cal_flags;
  std::string cal_ids, cal_mode = "det", cal_pm, cal_ps;
  CLI::App* cal = app.add_subcommand("calibrate", "inverse estimation of calibration parameters");
  add_fit_flags(cal, cal_flags, false);
  cal->add_option("--out", cal_flags.out, "model file to write (optional)");
  cal->add_option("--calibration-ids", cal_ids, "feature columns of the calibration inputs")
      ->required();
  cal->add_option("--mode", cal_mode, "det | prob")->capture_default_str();
  cal->add_option("--prior-mean", cal_pm, "prior means in raw units, comma separated");
  cal->add_option("--prior-std", cal_ps, "prior stds in raw units, comma separated");

  std::string bo_problem, bo_sources, bo_costs, bo_init, bo_hist, bo_qual;
  double bo_max_cost = 40000.0;
  int bo_stall = 50, bo_pool = 2000, bo_restarts = 32;
  bool bo_max = false, bo_no_is = false, bo_sf = false;
  std::uint64_t bo_seed = 0;
  CLI::App* bo = app.add_subcommand("bo", "cost-aware (multi-fidelity) Bayesian optimization");
  bo->add_option("--problem", bo_problem, "analytic benchmark name");
  bo->add_option("--data-sources", bo_sources, "comma-separated per-source CSV tables");
  bo->add_option("--costs", bo_costs, "per-source query costs");
  bo->add_option("--max-cost", bo_max_cost, "total sampling budget")->capture_default_str();
  bo->add_option("--stall", bo_stall, "max iterations without HF improvement")
      ->capture_default_str();
  bo->add_flag("--maximize", bo_max, "maximize instead of minimize");
  bo->add_flag("--sf", bo_sf, "single-fidelity run on the HF source only");
  bo->add_option("--pool", bo_pool, "candidate pool size per source")->capture_default_str();
  bo->add_flag("--no-interval-score", bo_no_is, "plain MAP refits");
  bo->add_option("--restarts", bo_restarts, "restarts (refits use a quarter)")
      ->capture_default_str();
  bo->add_option("--init", bo_init, "initial sample counts per source");
  bo->add_option("--qual-dict", bo_qual, "categorical columns for table-backed sources");
  bo->add_option("--seed", bo_seed)->capture_default_str();
  bo->add_option("--out-history", bo_hist, "per-iteration history CSV");

  std::string so_model, so_problem;
  int so_n = 16384;
  std::uint64_t so_seed = 0;
  CLI::App* sobol = app.add_subcommand("sobol", "variance-based global sensitivity indices");
  sobol->add_option("--model", so_model, "trained model file");
  sobol->add_option("--problem", so_problem, "analytic benchmark name (HF source)");
  sobol->add_option("--n", so_n, "base sample count")->capture_default_str();
  sobol->add_option("--seed", so_seed)->capture_default_str();

  std::string be_name, be_out;
  int be_source = 0, be_n = 100;
  bool be_no_noise = false;
  std::uint64_t be_seed = 0;
  CLI::App* bench = app.add_subcommand("benchmark", "sample a dataset from an analytic problem");
  bench->add_option("--name", be_name)->required();
  bench->add_option("--source", be_source)->capture_default_str();
  bench->add_option("--n", be_n)->capture_default_str();
  bench->add_flag("--no-noise", be_no_noise, "noise-free responses");
  bench->add_option("--seed", be_seed)->capture_default_str();
  bench->add_option("--out", be_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit) return cmd_fit(fit_flags);
    if (*predict) return cmd_predict(p_model, p_data, p_response, p_source, p_noise, p_out);
    if (*metrics) return cmd_metrics(m_pred, m_truth, m_response);
    if (*cal) return cmd_calibrate(cal_flags, cal_ids, cal_mode, cal_pm, cal_ps);
    if (*bo)
      return cmd_bo(bo_problem, bo_sources, bo_costs, bo_max_cost, bo_stall, bo_max, bo_sf,
                    bo_pool, bo_no_is, bo_restarts, bo_init, bo_seed, bo_hist, bo_qual);
    if (*sobol) return cmd_sobol(so_model, so_problem, so_n, so_seed);
    if (*bench) return cmd_benchmark(be_name, be_source, be_n, !be_no_noise, be_seed, be_out);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const MetricUndefined& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalSingularity& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const TrainingFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
