// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mfgp/loss.hpp"
#include "mfgp/model.hpp"
#include "mfgp/training.hpp"

namespace mfgp {

struct FitOptions {
  OptimizerConfig opt;
  std::uint64_t seed = 0;
  bool interval_score = false;
  IntervalScoreConfig isc;
};

// Joint MAP estimation of all parameters over the (possibly multi-source)
// dataset with a deterministic source embedding. A single-source dataset
// degenerates to the plain single-fidelity fit.
TrainedModel fit_deterministic(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt);

// Probabilistic source embedding: each loss evaluation ensembles M draws of
// z (and of zeta when calibrating probabilistically) into (mbar, Cbar).
EnsembleModel fit_probabilistic(const ModelConfig& cfg, const MFDataset& data, const FitOptions& opt);

}  // namespace mfgp
