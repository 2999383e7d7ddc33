// SPDX-License-Identifier: Apache-2.0
#include "mfgp/fit.hpp"

#include "mfgp/errors.hpp"

namespace mfgp {

namespace {

FitMapResult run_fit(std::shared_ptr<const GpCore> core, const FitOptions& opt) {
  auto make_obj = [core, &opt](int r) {
    auto loss = std::make_unique<MapLoss>(core, r);
    loss->with_interval_score = opt.interval_score;
    loss->isc = opt.isc;
    return loss;
  };
  const std::uint64_t seed = opt.seed;
  auto starts = [core, seed](int r) { return core->start_raw(seed, r); };
  return fit_map(make_obj, starts, opt.opt);
}

}  // namespace

TrainedModel fit_deterministic(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt) {
  ModelConfig c = cfg;
  c.z_mode = ZMode::Deterministic;
  if (c.calibration == CalibrationMode::Probabilistic)
    throw ContractViolation("fit_deterministic: probabilistic calibration needs fit_probabilistic");
  c.draw_seed = opt.seed;
  auto core = GpCore::build(c, data);
  const FitMapResult fr = run_fit(core, opt);
  return finalize_deterministic(core, fr.x, fr.loss);
}

EnsembleModel fit_probabilistic(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt) {
  ModelConfig c = cfg;
  if (data.n_sources() < 2)
    throw ContractViolation("fit_probabilistic: needs at least two sources");
  if (c.calibration != CalibrationMode::Probabilistic) c.z_mode = ZMode::Probabilistic;
  c.draw_seed = opt.seed;
  auto core = GpCore::build(c, data);
  if (!core->is_ensemble())
    throw ContractViolation("fit_probabilistic: configuration has no probabilistic component");
  const FitMapResult fr = run_fit(core, opt);
  return finalize_ensemble(core, fr.x, fr.loss, c.num_pass_pred);
}

}  // namespace mfgp
