// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mfgp {

// Counter-based deterministic generator. Every draw is a pure function of
// (seed, stream, counter), so parallel consumers with distinct streams are
// reproducible regardless of scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  double uniform();                 // in (0, 1)
  double normal();                  // standard normal (Box-Muller)
  double normal(double mean, double std) { return mean + std * normal(); }
  Eigen::VectorXd normal_vector(int n);

  // Stateless keyed draws for reproducible lookup tables.
  static double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
  static double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Scrambled Halton sequence: low-discrepancy points in [0,1)^d with a seeded
// Cranley-Patterson rotation so distinct seeds give distinct space-filling sets.
class HaltonSampler {
 public:
  HaltonSampler(int dims, std::uint64_t seed);

  Eigen::VectorXd next();
  Eigen::MatrixXd draw(int n);      // n x dims

  // Scale a unit-cube matrix to [lo, hi] box per column.
  static Eigen::MatrixXd scale(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi);

 private:
  int dims_;
  std::uint64_t index_;
  std::vector<double> shift_;
};

}  // namespace mfgp
