// SPDX-License-Identifier: Apache-2.0
#include "mfgp/mlp.hpp"

#include <cmath>

#include "mfgp/errors.hpp"
#include "mfgp/rng.hpp"

namespace mfgp {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ContractViolation("Mlp: need at least input and output layer");
  for (int s : sizes_)
    if (s < 1) throw ContractViolation("Mlp: layer sizes must be positive");
  int off = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += sizes_[l + 1] * sizes_[l];
    b_off_.push_back(off);
    off += sizes_[l + 1];
  }
  n_params_ = off;
}

Eigen::VectorXd Mlp::forward(const double* params, const Eigen::VectorXd& in, Cache* cache) const {
  if (in.size() != sizes_.front()) throw ContractViolation("Mlp::forward: input width mismatch");
  const size_t nl = sizes_.size() - 1;
  Eigen::VectorXd a = in;
  if (cache) {
    cache->acts.assign(1, a);
    cache->pre.clear();
  }
  for (size_t l = 0; l < nl; ++l) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        params + w_off_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<const Eigen::VectorXd> b(params + b_off_[l], sizes_[l + 1]);
    Eigen::VectorXd z = W * a + b;
    if (cache) cache->pre.push_back(z);
    if (l + 1 < nl)
      a = z.array().tanh().matrix();
    else
      a = z;
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::backward(const double* params, const Cache& cache, const Eigen::VectorXd& gout,
                              double* gparams) const {
  const size_t nl = sizes_.size() - 1;
  Eigen::VectorXd delta = gout;  // dL/d(pre-activation of output layer), output is linear
  for (size_t li = nl; li-- > 0;) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        params + w_off_[li], sizes_[li + 1], sizes_[li]);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gW(
        gparams + w_off_[li], sizes_[li + 1], sizes_[li]);
    Eigen::Map<Eigen::VectorXd> gb(gparams + b_off_[li], sizes_[li + 1]);
    gW.noalias() += delta * cache.acts[li].transpose();
    gb += delta;
    Eigen::VectorXd gin = W.transpose() * delta;
    if (li > 0) {
      // chain through the tanh of the previous hidden layer
      const Eigen::VectorXd& h = cache.acts[li];
      delta = (gin.array() * (1.0 - h.array().square())).matrix();
    } else {
      return gin;
    }
  }
  return Eigen::VectorXd();  // unreachable
}

void Mlp::init_params(double* params, std::uint64_t seed, std::uint64_t stream) const {
  CounterRng rng(seed, stream);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double std = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    for (int i = 0; i < sizes_[l + 1] * sizes_[l]; ++i) params[w_off_[l] + i] = std * rng.normal();
    for (int i = 0; i < sizes_[l + 1]; ++i) params[b_off_[l] + i] = 0.0;
  }
}

}  // namespace mfgp
