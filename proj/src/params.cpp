// SPDX-License-Identifier: Apache-2.0
#include "mfgp/params.hpp"

#include <cmath>
#include <limits>

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double Prior::log_pdf(double x) const {
  switch (kind) {
    case PriorKind::Flat:
      return 0.0;
    case PriorKind::Normal: {
      const double z = (x - a) / b;
      return -0.5 * z * z - std::log(b) - 0.5 * kLog2Pi;
    }
    case PriorKind::LogNormal: {
      if (x <= 0.0) return -kInf;
      const double z = (std::log(x) - a) / b;
      return -0.5 * z * z - std::log(x * b) - 0.5 * kLog2Pi;
    }
    case PriorKind::HalfHorseshoe: {
      if (x <= 0.0) return -kInf;
      const double t = b / x;
      return std::log(std::log1p(2.0 * t * t));
    }
  }
  return 0.0;
}

double Prior::dlog_pdf(double x) const {
  switch (kind) {
    case PriorKind::Flat:
      return 0.0;
    case PriorKind::Normal:
      return -(x - a) / (b * b);
    case PriorKind::LogNormal: {
      const double z = (std::log(x) - a) / b;
      return -(z / b + 1.0) / x;
    }
    case PriorKind::HalfHorseshoe: {
      const double q = 2.0 * b * b / (x * x);         // argument of log1p
      const double dq = -2.0 * q / x;                 // dq/dx
      return dq / ((1.0 + q) * std::log1p(q));
    }
  }
  return 0.0;
}

double Prior::representative() const {
  switch (kind) {
    case PriorKind::Flat:
      return 0.0;
    case PriorKind::Normal:
      return a;
    case PriorKind::LogNormal:
      return std::exp(a + 0.5 * b * b);
    case PriorKind::HalfHorseshoe:
      return b;
  }
  return 0.0;
}

double Prior::sample(CounterRng& rng) const {
  switch (kind) {
    case PriorKind::Flat:
      return rng.normal();
    case PriorKind::Normal:
      return a + b * rng.normal();
    case PriorKind::LogNormal:
      return std::exp(a + b * rng.normal());
    case PriorKind::HalfHorseshoe: {
      // half-Cauchy scale sample, clipped away from pathological extremes
      const double u = rng.uniform();
      const double v = b * std::abs(std::tan(0.5 * M_PI * u));
      return std::min(std::max(v, 1e-10), 10.0);
    }
  }
  return 0.0;
}

double Transform::value(double raw) const {
  switch (kind) {
    case TransformKind::Identity:
      return raw;
    case TransformKind::Log:
      return std::exp(raw);
    case TransformKind::ShiftedLog:
      return shift + std::exp(raw);
    case TransformKind::ScaledLogit: {
      const double s = 1.0 / (1.0 + std::exp(-raw));
      return lo + (hi - lo) * s;
    }
  }
  return raw;
}

double Transform::dvalue(double raw) const {
  switch (kind) {
    case TransformKind::Identity:
      return 1.0;
    case TransformKind::Log:
    case TransformKind::ShiftedLog:
      return std::exp(raw);
    case TransformKind::ScaledLogit: {
      const double s = 1.0 / (1.0 + std::exp(-raw));
      return (hi - lo) * s * (1.0 - s);
    }
  }
  return 1.0;
}

double Transform::raw(double value) const {
  switch (kind) {
    case TransformKind::Identity:
      return value;
    case TransformKind::Log:
      return std::log(value);
    case TransformKind::ShiftedLog:
      return std::log(value - shift);
    case TransformKind::ScaledLogit: {
      double t = (value - lo) / (hi - lo);
      t = std::min(std::max(t, 1e-12), 1.0 - 1e-12);
      return std::log(t / (1.0 - t));
    }
  }
  return value;
}

ParamBlock& ParamLayout::add(const std::string& name, int size, Transform tf, Prior prior) {
  if (size < 0) throw ContractViolation("ParamLayout::add: negative block size");
  ParamBlock b;
  b.name = name;
  b.offset = total_;
  b.size = size;
  b.tf = tf;
  b.prior = prior;
  blocks_.push_back(b);
  total_ += size;
  return blocks_.back();
}

const ParamBlock* ParamLayout::find(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return &b;
  return nullptr;
}

Eigen::VectorXd ParamLayout::constrained(const Eigen::VectorXd& raw) const {
  Eigen::VectorXd out(raw.size());
  for (const auto& b : blocks_)
    for (int i = 0; i < b.size; ++i) out[b.offset + i] = b.tf.value(raw[b.offset + i]);
  return out;
}

Eigen::VectorXd ParamLayout::to_raw(const Eigen::VectorXd& values) const {
  Eigen::VectorXd out(values.size());
  for (const auto& b : blocks_)
    for (int i = 0; i < b.size; ++i) out[b.offset + i] = b.tf.raw(values[b.offset + i]);
  return out;
}

double ParamLayout::log_prior(const Eigen::VectorXd& raw) const {
  double lp = 0.0;
  for (const auto& b : blocks_)
    for (int i = 0; i < b.size; ++i) lp += b.prior_of(i).log_pdf(b.tf.value(raw[b.offset + i]));
  return lp;
}

void ParamLayout::add_log_prior_grad(const Eigen::VectorXd& raw, double w, Eigen::VectorXd& graw) const {
  for (const auto& b : blocks_)
    for (int i = 0; i < b.size; ++i) {
      const double r = raw[b.offset + i];
      graw[b.offset + i] += w * b.prior_of(i).dlog_pdf(b.tf.value(r)) * b.tf.dvalue(r);
    }
}

Eigen::VectorXd ParamLayout::initial_raw(std::uint64_t seed) const {
  Eigen::VectorXd out(total_);
  for (const auto& b : blocks_) {
    if (b.init_std >= 0.0) {
      CounterRng rng(seed, 0x1000 + static_cast<std::uint64_t>(b.offset));
      for (int i = 0; i < b.size; ++i) out[b.offset + i] = b.init_std * rng.normal();
    } else if (!std::isnan(b.init_value)) {
      for (int i = 0; i < b.size; ++i) out[b.offset + i] = b.tf.raw(b.init_value);
    } else {
      for (int i = 0; i < b.size; ++i) out[b.offset + i] = b.tf.raw(b.prior_of(i).representative());
    }
  }
  return out;
}

Eigen::VectorXd ParamLayout::sample_raw(std::uint64_t seed, std::uint64_t restart) const {
  Eigen::VectorXd out(total_);
  for (const auto& b : blocks_) {
    CounterRng rng(seed, (restart << 20) ^ (0x2000 + static_cast<std::uint64_t>(b.offset)));
    for (int i = 0; i < b.size; ++i) {
      const Prior& prior = b.prior_of(i);
      if (b.init_std >= 0.0) {
        out[b.offset + i] = b.init_std * rng.normal();
      } else if (prior.kind == PriorKind::Flat && b.tf.kind == TransformKind::ScaledLogit) {
        out[b.offset + i] = b.tf.raw(b.tf.lo + (b.tf.hi - b.tf.lo) * rng.uniform());
      } else if (prior.kind == PriorKind::Flat && !std::isnan(b.init_value)) {
        out[b.offset + i] = b.tf.raw(b.init_value) + 0.5 * rng.normal();
      } else {
        double v = prior.sample(rng);
        if (b.tf.kind == TransformKind::ScaledLogit)
          v = std::min(std::max(v, b.tf.lo + 1e-3 * (b.tf.hi - b.tf.lo)),
                       b.tf.hi - 1e-3 * (b.tf.hi - b.tf.lo));
        if (b.tf.kind == TransformKind::ShiftedLog && v <= b.tf.shift) v = b.tf.shift + 1e-8;
        if (b.tf.kind == TransformKind::Log && v <= 0.0) v = 1e-8;
        out[b.offset + i] = b.tf.raw(v);
      }
    }
  }
  return out;
}

Eigen::VectorXd ParamLayout::block_values(const std::string& name, const Eigen::VectorXd& raw) const {
  const ParamBlock* b = find(name);
  if (!b) throw ContractViolation("ParamLayout: unknown block " + name);
  Eigen::VectorXd out(b->size);
  for (int i = 0; i < b->size; ++i) out[i] = b->tf.value(raw[b->offset + i]);
  return out;
}

}  // namespace mfgp
