// SPDX-License-Identifier: Apache-2.0
#include "mfgp/rng.hpp"

#include <cmath>

#include "mfgp/errors.hpp"

namespace mfgp {
namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// u64 -> double in (0,1); top 53 bits, offset by half an ulp to avoid 0.
inline double to_unit(std::uint64_t u) {
  return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

constexpr int kPrimes[32] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47, 53,
                             59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 1))) {}

double CounterRng::uniform() { return to_unit(splitmix64(key_ ^ (counter_++ * 0xda942042e4dd58b5ULL + 7))); }

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd CounterRng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

double CounterRng::keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return to_unit(mix3(seed, a * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL, b));
}

double CounterRng::keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const double u1 = keyed_uniform(seed, a, 2 * b);
  const double u2 = keyed_uniform(seed, a, 2 * b + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

HaltonSampler::HaltonSampler(int dims, std::uint64_t seed) : dims_(dims), index_(1), shift_(dims) {
  if (dims < 1 || dims > 32) throw ContractViolation("HaltonSampler: dims must be in [1, 32]");
  for (int d = 0; d < dims; ++d) shift_[d] = CounterRng::keyed_uniform(seed, 0x48414c54ULL, d);
}

Eigen::VectorXd HaltonSampler::next() {
  Eigen::VectorXd p(dims_);
  for (int d = 0; d < dims_; ++d) {
    double v = radical_inverse(index_, kPrimes[d]) + shift_[d];
    p[d] = v - std::floor(v);
  }
  ++index_;
  return p;
}

Eigen::MatrixXd HaltonSampler::draw(int n) {
  Eigen::MatrixXd m(n, dims_);
  for (int i = 0; i < n; ++i) m.row(i) = next().transpose();
  return m;
}

Eigen::MatrixXd HaltonSampler::scale(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lo,
                                     const Eigen::VectorXd& hi) {
  if (lo.size() != unit.cols() || hi.size() != unit.cols())
    throw ContractViolation("HaltonSampler::scale: bound size mismatch");
  Eigen::MatrixXd out = unit;
  for (int c = 0; c < unit.cols(); ++c)
    out.col(c) = (lo[c] + (hi[c] - lo[c]) * unit.col(c).array()).matrix();
  return out;
}

}  // namespace mfgp
