// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mfgp {

// Fully connected feed-forward network with tanh hidden units and a linear
// output layer. Parameters live in an external flat vector so the same
// network description can be evaluated at any point of an optimization
// trajectory; layout is [W0 (row-major), b0, W1, b1, ...].
class Mlp {
 public:
  Mlp() = default;
  // sizes = [in, hidden..., out]
  explicit Mlp(std::vector<int> sizes);

  int n_params() const { return n_params_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  struct Cache {
    std::vector<Eigen::VectorXd> acts;  // activations per layer, acts[0] = input
    std::vector<Eigen::VectorXd> pre;   // pre-activations per layer
  };

  Eigen::VectorXd forward(const double* params, const Eigen::VectorXd& in, Cache* cache = nullptr) const;

  // Accumulates dL/dparams into gparams (+=) and returns dL/dinput.
  Eigen::VectorXd backward(const double* params, const Cache& cache, const Eigen::VectorXd& gout,
                           double* gparams) const;

  // Deterministic N(0, 1/fan_in) weight init, zero biases.
  void init_params(double* params, std::uint64_t seed, std::uint64_t stream) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> w_off_, b_off_;
  int n_params_ = 0;
};

}  // namespace mfgp
