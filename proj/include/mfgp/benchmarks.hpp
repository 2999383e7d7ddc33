// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mfgp/dataset.hpp"

namespace mfgp {

// Analytic multi-fidelity test problem. Feature columns are laid out as
// [numeric..., categorical..., calibration...]; categorical cells hold level
// indices that evaluate() maps back to stored numeric values.
struct BenchmarkProblem {
  std::string name;
  int n_sources = 1;
  Eigen::VectorXd lo, hi;                        // per feature column (raw units)
  std::map<int, int> qual_dict;                  // categorical columns -> level count
  std::map<int, std::vector<double>> level_values;  // categorical column -> sorted values
  Eigen::VectorXd noise_std;                     // per source
  Eigen::VectorXd cost;                          // per source (0 = undefined)
  std::vector<int> init_samples;                 // per source, BO initialization counts
  std::vector<int> calibration_ids;              // feature columns carrying zeta on LF rows
  Eigen::VectorXd zeta_truth;                    // raw units
  std::function<double(int, const Eigen::VectorXd&)> f;  // noise-free formula

  int features() const { return static_cast<int>(lo.size()); }

  // Exact formula evaluation with range checks; categorical cells are level
  // indices. HF rows ignore calibration cells (they may be NaN).
  double evaluate(int source, const Eigen::VectorXd& x) const;

  // Quasi-random inputs over the ranges; responses optionally corrupted with
  // N(0, noise_std^2). Calibration cells are sampled for LF sources and NaN
  // for the HF source. Deterministic per seed.
  SourceData sample(int source, int n, std::uint64_t seed, bool with_noise) const;

  // Multi-source dataset assembled from per-source sample() calls.
  MFDataset sample_all(const std::vector<int>& counts, std::uint64_t seed, bool with_noise) const;
};

// NRMSE between a noise-free LF source and the HF source at n shared random
// points, normalized by the HF sample variance. Calibration cells are fixed
// at the problem's ground truth.
double source_nrmse(const BenchmarkProblem& p, int lf_source, int n = 10000, std::uint64_t seed = 0);

BenchmarkProblem make_borehole();
BenchmarkProblem make_wing();
BenchmarkProblem make_sinusoidal();
BenchmarkProblem make_beam_deflection();
BenchmarkProblem make_borehole_calibration();
BenchmarkProblem make_wing_calibration();
// Converts borehole features 0 and 5 into categorical variables with 5 sorted
// levels each; the level -> value map is sampled from the given seed.
BenchmarkProblem make_borehole_mixed(std::uint64_t seed);

std::vector<std::string> benchmark_names();
BenchmarkProblem benchmark_by_name(const std::string& name, std::uint64_t seed = 0);

}  // namespace mfgp
