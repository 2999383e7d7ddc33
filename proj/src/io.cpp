// SPDX-License-Identifier: Apache-2.0
#include "mfgp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mfgp/errors.hpp"

namespace mfgp {

using nlohmann::json;

namespace {

double parse_cell(const std::string& s, const std::string& where) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty() || t == "nan" || t == "NaN" || t == "NA")
    return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw DataError("unparsable numeric cell '" + s + "' " + where);
  return v;
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double num_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

std::string kernel_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian:
      return "gaussian";
    case KernelFamily::PowerExponential:
      return "power-exponential";
    case KernelFamily::Matern:
      return "matern";
  }
  return "gaussian";
}

KernelFamily kernel_from(const std::string& s) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "power-exponential") return KernelFamily::PowerExponential;
  if (s == "matern") return KernelFamily::Matern;
  throw DataError("model file: unknown kernel '" + s + "'");
}

json config_to_json(const ModelConfig& c) {
  json j;
  j["kernel"] = kernel_name(c.kernel);
  j["power_p"] = c.power_p;
  j["matern_nu"] = c.matern_nu;
  json qd = json::object();
  for (const auto& [col, lv] : c.qual_dict) qd[std::to_string(col)] = lv;
  j["qual_dict"] = qd;
  j["encoding"] = c.encoding == EncodingKind::GroupedOneHot
                      ? "grouped-one-hot"
                      : (c.encoding == EncodingKind::RandomMatrix ? "random-matrix"
                                                                  : "per-variable-one-hot");
  j["encoding_seed"] = c.encoding_seed;
  j["separate_embedding"] = c.separate_embedding;
  j["embedding_dim"] = c.embedding_dim;
  j["nn_layers_embedding"] = c.nn_layers_embedding;
  j["a_prior_std"] = c.a_prior_std;
  j["z_dim"] = c.z_dim;
  j["z_mode"] = c.z_mode == ZMode::Probabilistic ? "probabilistic" : "deterministic";
  j["nn_layers_z"] = c.nn_layers_z;
  j["num_pass_train"] = c.num_pass_train;
  j["num_pass_pred"] = c.num_pass_pred;
  switch (c.mean) {
    case MeanKind::Zero: j["mean"] = "zero"; break;
    case MeanKind::Single: j["mean"] = "single"; break;
    case MeanKind::PerSource: j["mean"] = "per-source"; break;
    case MeanKind::Polynomial: j["mean"] = "polynomial"; break;
    case MeanKind::FeedForward: j["mean"] = "ffnn"; break;
  }
  j["poly_degrees"] = c.poly_degrees;
  j["nn_layers_mean"] = c.nn_layers_mean;
  if (c.multiple_noise.has_value()) j["multiple_noise"] = *c.multiple_noise;
  j["fix_noise"] = c.fix_noise;
  j["fix_noise_val"] = c.fix_noise_val;
  j["lb_noise"] = c.lb_noise;
  j["calibration_ids"] = c.calibration_ids;
  j["calibration"] = c.calibration == CalibrationMode::None
                         ? "none"
                         : (c.calibration == CalibrationMode::Deterministic ? "deterministic"
                                                                            : "probabilistic");
  j["calib_prior_mean"] = std::vector<double>(c.calib_prior_mean.data(),
                                              c.calib_prior_mean.data() + c.calib_prior_mean.size());
  j["calib_prior_std"] = std::vector<double>(c.calib_prior_std.data(),
                                             c.calib_prior_std.data() + c.calib_prior_std.size());
  j["add_prior"] = c.add_prior;
  j["omega_prior_mean"] = c.omega_prior_mean;
  j["omega_prior_std"] = c.omega_prior_std;
  j["regularization"] = {c.regularization[0], c.regularization[1]};
  j["draw_seed"] = c.draw_seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.kernel = kernel_from(j.at("kernel").get<std::string>());
  c.power_p = j.at("power_p").get<double>();
  c.matern_nu = j.at("matern_nu").get<double>();
  for (const auto& [k, v] : j.at("qual_dict").items()) c.qual_dict[std::stoi(k)] = v.get<int>();
  const std::string enc = j.at("encoding").get<std::string>();
  c.encoding = enc == "grouped-one-hot"
                   ? EncodingKind::GroupedOneHot
                   : (enc == "random-matrix" ? EncodingKind::RandomMatrix
                                             : EncodingKind::PerVariableOneHot);
  c.encoding_seed = j.at("encoding_seed").get<std::uint64_t>();
  c.separate_embedding = j.at("separate_embedding").get<bool>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.nn_layers_embedding = j.at("nn_layers_embedding").get<std::vector<int>>();
  c.a_prior_std = j.at("a_prior_std").get<double>();
  c.z_dim = j.at("z_dim").get<int>();
  c.z_mode = j.at("z_mode").get<std::string>() == "probabilistic" ? ZMode::Probabilistic
                                                                  : ZMode::Deterministic;
  c.nn_layers_z = j.at("nn_layers_z").get<std::vector<int>>();
  c.num_pass_train = j.at("num_pass_train").get<int>();
  c.num_pass_pred = j.at("num_pass_pred").get<int>();
  const std::string mean = j.at("mean").get<std::string>();
  c.mean = mean == "zero" ? MeanKind::Zero
           : mean == "single" ? MeanKind::Single
           : mean == "per-source" ? MeanKind::PerSource
           : mean == "polynomial" ? MeanKind::Polynomial
                                  : MeanKind::FeedForward;
  c.poly_degrees = j.at("poly_degrees").get<std::vector<int>>();
  c.nn_layers_mean = j.at("nn_layers_mean").get<std::vector<int>>();
  if (j.contains("multiple_noise")) c.multiple_noise = j.at("multiple_noise").get<bool>();
  c.fix_noise = j.at("fix_noise").get<bool>();
  c.fix_noise_val = j.at("fix_noise_val").get<double>();
  c.lb_noise = j.at("lb_noise").get<double>();
  c.calibration_ids = j.at("calibration_ids").get<std::vector<int>>();
  const std::string cal = j.at("calibration").get<std::string>();
  c.calibration = cal == "none" ? CalibrationMode::None
                  : cal == "deterministic" ? CalibrationMode::Deterministic
                                           : CalibrationMode::Probabilistic;
  const auto cpm = j.at("calib_prior_mean").get<std::vector<double>>();
  const auto cps = j.at("calib_prior_std").get<std::vector<double>>();
  c.calib_prior_mean = Eigen::Map<const Eigen::VectorXd>(cpm.data(), cpm.size());
  c.calib_prior_std = Eigen::Map<const Eigen::VectorXd>(cps.data(), cps.size());
  c.add_prior = j.at("add_prior").get<bool>();
  c.omega_prior_mean = j.at("omega_prior_mean").get<double>();
  c.omega_prior_std = j.at("omega_prior_std").get<double>();
  const auto reg = j.at("regularization").get<std::vector<double>>();
  c.regularization = {reg[0], reg[1]};
  c.draw_seed = j.at("draw_seed").get<std::uint64_t>();
  return c;
}

json model_to_json(const GpCore& core, const Eigen::VectorXd& raw, double loss, bool ensemble,
                   int Q) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "mfgp-model";
  j["ensemble"] = ensemble;
  j["prediction_passes"] = Q;
  j["loss"] = loss;
  j["config"] = config_to_json(core.cfg);

  json params = json::object();
  for (const auto& b : core.layout.blocks()) {
    json arr = json::array();
    for (int i = 0; i < b.size; ++i) arr.push_back(raw[b.offset + i]);
    params[b.name] = arr;
  }
  j["parameters"] = params;

  json std_j;
  std_j["x_mean"] = std::vector<double>(core.x_std.mean.data(),
                                        core.x_std.mean.data() + core.x_std.mean.size());
  std_j["x_scale"] = std::vector<double>(core.x_std.scale.data(),
                                         core.x_std.scale.data() + core.x_std.scale.size());
  std_j["y_mean"] = core.y_std.mean;
  std_j["y_scale"] = core.y_std.scale;
  j["standardization"] = std_j;

  const MFDataset& d = core.data_raw;
  json dj;
  dj["columns"] = d.columns;
  json X = json::array();
  for (int i = 0; i < d.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < d.features(); ++c) row.push_back(num_or_null(d.X(i, c)));
    X.push_back(row);
  }
  dj["X"] = X;
  dj["source"] = d.source;
  dj["y"] = std::vector<double>(d.y.data(), d.y.data() + d.y.size());
  j["data"] = dj;

  json fp;
  fp["rows"] = d.rows();
  fp["columns"] = d.columns;
  char hex[19];
  snprintf(hex, sizeof(hex), "0x%016llx",
           static_cast<unsigned long long>(fingerprint_dataset(d)));
  fp["hash"] = std::string(hex);
  j["fingerprint"] = fp;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << j.dump(1) << "\n";
}

}  // namespace

std::uint64_t fingerprint_dataset(const MFDataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* p, size_t nbytes) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < nbytes; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_double = [&](double v) {
    if (std::isnan(v)) v = std::numeric_limits<double>::quiet_NaN();  // canonical NaN
    mix_bytes(&v, sizeof(v));
  };
  for (int i = 0; i < d.rows(); ++i)
    for (int c = 0; c < d.features(); ++c) mix_double(d.X(i, c));
  for (int i = 0; i < d.y.size(); ++i) mix_double(d.y[i]);
  for (int s : d.source) mix_bytes(&s, sizeof(s));
  for (const auto& name : d.columns) mix_bytes(name.data(), name.size());
  return h;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable t;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, "at line " + std::to_string(lineno)));
    while (row.size() < t.columns.size()) row.push_back(std::numeric_limits<double>::quiet_NaN());
    if (row.size() != t.columns.size())
      throw DataError("row width mismatch at line " + std::to_string(lineno) + " in '" + path + "'");
    rows.push_back(row);
  }
  t.values.resize(rows.size(), t.columns.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < t.columns.size(); ++c) t.values(i, c) = rows[i][c];
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  for (size_t c = 0; c < columns.size(); ++c) f << (c ? "," : "") << columns[c];
  f << "\n";
  for (int i = 0; i < values.rows(); ++i) {
    for (int c = 0; c < values.cols(); ++c) f << (c ? "," : "") << format_cell(values(i, c));
    f << "\n";
  }
}

MFDataset dataset_from_csv(const CsvTable& t, const DatasetSpec& spec) {
  const int nc = static_cast<int>(t.columns.size());
  if (nc < 2) throw DataError("dataset needs at least one feature and one response column");
  int resp = nc - 1, src = -1;
  if (!spec.response.empty()) {
    resp = -1;
    for (int c = 0; c < nc; ++c)
      if (t.columns[c] == spec.response) resp = c;
    if (resp < 0) throw DataError("response column '" + spec.response + "' not found");
  }
  if (!spec.source.empty()) {
    for (int c = 0; c < nc; ++c)
      if (t.columns[c] == spec.source) src = c;
    if (src < 0) throw DataError("source column '" + spec.source + "' not found");
    if (src == resp) throw DataError("source and response must be distinct columns");
  }
  MFDataset d;
  std::vector<int> feat_cols;
  for (int c = 0; c < nc; ++c)
    if (c != resp && c != src) {
      feat_cols.push_back(c);
      d.columns.push_back(t.columns[c]);
    }
  const int n = static_cast<int>(t.values.rows());
  d.X.resize(n, feat_cols.size());
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (size_t c = 0; c < feat_cols.size(); ++c) d.X(i, c) = t.values(i, feat_cols[c]);
    d.y[i] = t.values(i, resp);
    if (std::isnan(d.y[i])) throw DataError("missing response value at row " + std::to_string(i));
  }
  if (src >= 0) {
    d.source.resize(n);
    for (int i = 0; i < n; ++i) {
      const double v = t.values(i, src);
      const int s = static_cast<int>(std::llround(v));
      if (std::isnan(v) || std::abs(v - s) > 1e-9 || s < 0)
        throw DataError("invalid source id at row " + std::to_string(i));
      d.source[i] = s;
    }
  }
  d.validate();
  return d;
}

void save_model(const std::string& path, const TrainedModel& m) {
  write_json(path, model_to_json(*m.core, m.raw, m.loss, false, 1));
}

void save_model(const std::string& path, const EnsembleModel& m) {
  write_json(path, model_to_json(*m.core, m.raw, m.loss, true, m.Q));
}

LoadedModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw DataError(std::string("model file parse error: ") + e.what());
  }
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
    throw DataError("model file: unsupported schema version");
  if (j.at("kind").get<std::string>() != "mfgp-model")
    throw DataError("model file: unexpected document kind");

  const ModelConfig cfg = config_from_json(j.at("config"));

  MFDataset d;
  const json& dj = j.at("data");
  d.columns = dj.at("columns").get<std::vector<std::string>>();
  const json& X = dj.at("X");
  const int n = static_cast<int>(X.size());
  const int nf = n > 0 ? static_cast<int>(X.at(0).size()) : 0;
  d.X.resize(n, nf);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < nf; ++c) d.X(i, c) = num_from(X.at(i).at(c));
  d.source = dj.at("source").get<std::vector<int>>();
  const auto yv = dj.at("y").get<std::vector<double>>();
  d.y = Eigen::Map<const Eigen::VectorXd>(yv.data(), yv.size());

  char hex[19];
  snprintf(hex, sizeof(hex), "0x%016llx", static_cast<unsigned long long>(fingerprint_dataset(d)));
  if (j.at("fingerprint").at("hash").get<std::string>() != hex)
    throw DataError("model file: training-data fingerprint mismatch");

  auto core = GpCore::build(cfg, d);
  Eigen::VectorXd raw(core->layout.total());
  const json& params = j.at("parameters");
  for (const auto& b : core->layout.blocks()) {
    if (!params.contains(b.name)) throw DataError("model file: missing parameter block " + b.name);
    const auto vals = params.at(b.name).get<std::vector<double>>();
    if (static_cast<int>(vals.size()) != b.size)
      throw DataError("model file: parameter block size mismatch for " + b.name);
    for (int i = 0; i < b.size; ++i) raw[b.offset + i] = vals[i];
  }

  LoadedModel out;
  const double loss = j.at("loss").get<double>();
  if (j.at("ensemble").get<bool>()) {
    out.ensemble = true;
    out.ens = finalize_ensemble(core, raw, loss, j.at("prediction_passes").get<int>());
  } else {
    out.ensemble = false;
    out.det = finalize_deterministic(core, raw, loss);
  }
  return out;
}

}  // namespace mfgp
