// SPDX-License-Identifier: Apache-2.0
#include "mfgp/embedding.hpp"

#include <cmath>

#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"

namespace mfgp {

CategoricalSpec CategoricalSpec::from_map(const std::map<int, int>& qual_dict, int n_features) {
  CategoricalSpec spec;
  for (const auto& [col, lv] : qual_dict) {
    if (col < 0 || col >= n_features)
      throw ContractViolation("CategoricalSpec: column index out of range");
    if (lv < 2) throw ContractViolation("CategoricalSpec: level count must be >= 2");
    spec.cols.push_back(col);
    spec.levels.push_back(lv);
  }
  return spec;
}

long CategoricalSpec::n_combos() const {
  long n = 1;
  for (int l : levels) n *= l;
  return n;
}

PriorEncoding PriorEncoding::grouped_one_hot(const CategoricalSpec& spec) {
  PriorEncoding e;
  e.kind_ = EncodingKind::GroupedOneHot;
  e.spec_ = spec;
  e.n_combos_ = spec.n_combos();
  int off = 0;
  for (int l : spec.levels) {
    e.block_offset_.push_back(off);
    e.block_width_.push_back(l);
    off += l;
  }
  e.width_ = off;
  return e;
}

PriorEncoding PriorEncoding::random_matrix(const CategoricalSpec& spec, std::uint64_t seed) {
  PriorEncoding e;
  e.kind_ = EncodingKind::RandomMatrix;
  e.spec_ = spec;
  e.seed_ = seed;
  e.n_combos_ = spec.n_combos();
  int w = 2;
  while ((1L << w) < e.n_combos_) ++w;
  e.width_ = w;
  e.block_offset_ = {0};
  e.block_width_ = {w};
  return e;
}

PriorEncoding PriorEncoding::per_variable_one_hot(const CategoricalSpec& spec) {
  PriorEncoding e = grouped_one_hot(spec);
  e.kind_ = EncodingKind::PerVariableOneHot;
  return e;
}

long PriorEncoding::rank_of(const std::vector<int>& t) const {
  if (t.size() != spec_.levels.size())
    throw ContractViolation("PriorEncoding: level vector width mismatch");
  long rank = 0;
  for (size_t v = 0; v < t.size(); ++v) {
    if (t[v] < 0 || t[v] >= spec_.levels[v])
      throw ContractViolation("PriorEncoding: level index out of range");
    rank = rank * spec_.levels[v] + t[v];
  }
  return rank;
}

std::vector<int> PriorEncoding::levels_of_rank(long rank) const {
  std::vector<int> t(spec_.levels.size());
  for (size_t v = spec_.levels.size(); v-- > 0;) {
    t[v] = static_cast<int>(rank % spec_.levels[v]);
    rank /= spec_.levels[v];
  }
  return t;
}

Eigen::VectorXd PriorEncoding::encode(const std::vector<int>& t) const {
  if (kind_ == EncodingKind::RandomMatrix) return encode_rank(rank_of(t));
  if (t.size() != spec_.levels.size())
    throw ContractViolation("PriorEncoding: level vector width mismatch");
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(width_);
  for (size_t v = 0; v < t.size(); ++v) {
    if (t[v] < 0 || t[v] >= spec_.levels[v])
      throw ContractViolation("PriorEncoding: level index out of range");
    pi[block_offset_[v] + t[v]] = 1.0;
  }
  return pi;
}

Eigen::VectorXd PriorEncoding::encode_rank(long rank) const {
  if (rank < 0 || rank >= n_combos_) throw ContractViolation("PriorEncoding: rank out of range");
  if (kind_ != EncodingKind::RandomMatrix) return encode(levels_of_rank(rank));
  Eigen::VectorXd pi(width_);
  for (int k = 0; k < width_; ++k)
    pi[k] = CounterRng::keyed_normal(seed_, static_cast<std::uint64_t>(rank), k);
  return pi;
}

EmbeddingMap EmbeddingMap::make(int dpi, int dh, const std::vector<int>& hidden_layers) {
  EmbeddingMap m;
  m.dpi = dpi;
  m.dh = dh;
  m.linear = hidden_layers.empty();
  if (!m.linear) {
    std::vector<int> sizes = {dpi};
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(dh);
    m.net = Mlp(sizes);
  }
  return m;
}

int EmbeddingMap::n_params() const { return linear ? dpi * dh : net.n_params(); }

Eigen::VectorXd EmbeddingMap::forward(const double* params, const Eigen::VectorXd& pi,
                                      Mlp::Cache* cache) const {
  if (pi.size() != dpi) throw ContractViolation("EmbeddingMap: input width mismatch");
  if (!linear) return net.forward(params, pi, cache);
  // A is dpi x dh row-major; h = A^T pi so a one-hot row picks the matching row of A
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(params, dpi, dh);
  return A.transpose() * pi;
}

void EmbeddingMap::backward(const double* params, const Eigen::VectorXd& pi, const Mlp::Cache& cache,
                            const Eigen::VectorXd& gh, double* gparams) const {
  if (!linear) {
    net.backward(params, cache, gh, gparams);
    return;
  }
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gA(gparams, dpi, dh);
  gA.noalias() += pi * gh.transpose();
}

ProbabilisticEmbedding ProbabilisticEmbedding::make(int dpi, int dz,
                                                    const std::vector<int>& hidden_layers) {
  ProbabilisticEmbedding pe;
  pe.dz = dz;
  std::vector<int> sizes = {dpi};
  sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
  sizes.push_back(2 * dz + dz * (dz - 1) / 2);
  pe.generator = Mlp(sizes);
  return pe;
}

namespace {
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double dsoftplus(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void ProbabilisticEmbedding::moments(const double* params, const Eigen::VectorXd& pi,
                                     Eigen::VectorXd& mu, Eigen::MatrixXd& L,
                                     Mlp::Cache* cache) const {
  const Eigen::VectorXd out = generator.forward(params, pi, cache);
  mu = out.head(dz);
  L = Eigen::MatrixXd::Zero(dz, dz);
  for (int i = 0; i < dz; ++i) L(i, i) = softplus(out[dz + i]);
  int k = 2 * dz;
  for (int i = 1; i < dz; ++i)
    for (int j = 0; j < i; ++j) L(i, j) = out[k++];
}

Eigen::VectorXd ProbabilisticEmbedding::sample(const double* params, const Eigen::VectorXd& pi,
                                               const Eigen::VectorXd& eps) const {
  if (eps.size() != dz) throw ContractViolation("ProbabilisticEmbedding: eps length != dz");
  Eigen::VectorXd mu;
  Eigen::MatrixXd L;
  moments(params, pi, mu, L, nullptr);
  return mu + L * eps;
}

void ProbabilisticEmbedding::backward(const double* params, const Mlp::Cache& cache,
                                      const Eigen::VectorXd& gmu, const Eigen::MatrixXd& gL,
                                      double* gparams) const {
  Eigen::VectorXd gout = Eigen::VectorXd::Zero(generator.out_dim());
  gout.head(dz) = gmu;
  const Eigen::VectorXd& raw = cache.pre.back();  // output layer is linear
  for (int i = 0; i < dz; ++i) gout[dz + i] = gL(i, i) * dsoftplus(raw[dz + i]);
  int k = 2 * dz;
  for (int i = 1; i < dz; ++i)
    for (int j = 0; j < i; ++j) gout[k++] = gL(i, j);
  generator.backward(params, cache, gout, gparams);
}

double source_correlation(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) {
  if (z.size() != zp.size()) throw ContractViolation("source_correlation: length mismatch");
  return std::exp(-(z - zp).squaredNorm());
}

}  // namespace mfgp
