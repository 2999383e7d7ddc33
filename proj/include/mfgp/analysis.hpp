// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mfgp/model.hpp"

namespace mfgp {

// Root-mean-square error normalized by the sample standard deviation of the
// true responses.
double nrmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& mu_pred);

// Interval score of the 95% prediction interval (mu +- 1.96 tau) normalized
// by the sample standard deviation of the true responses.
double nis(const Eigen::VectorXd& y_true, const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
           double v = 0.05);

struct SobolInputSpec {
  Eigen::VectorXd lo, hi;            // numeric ranges per feature column
  std::map<int, int> qual_dict;      // categorical columns -> level count
};

struct SensitivityReport {
  std::vector<std::string> names;
  Eigen::VectorXd main_index, total_index;
  std::map<int, double> s_cat;       // per categorical feature column (optional)
  int n_samples = 0;
  std::uint64_t seed = 0;
  bool constant_output = false;
};

// Saltelli pick-freeze estimator over two quasi-random base matrices.
// Categorical columns are sampled as uniform levels via inverse-CDF binning
// of the underlying uniform draw.
SensitivityReport sobol_indices(const std::function<double(const Eigen::VectorXd&)>& f,
                                const SobolInputSpec& spec, int N, std::uint64_t seed);

// same estimator, evaluating whole design matrices at once (emulators answer
// batched queries far faster than row-by-row)
SensitivityReport sobol_indices_batch(
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& f, const SobolInputSpec& spec,
    int N, std::uint64_t seed);

// Mean pairwise Euclidean distance among the learnt latent positions of the
// levels of one categorical variable. Requires a model trained with one
// latent block per variable.
double s_cat(const TrainedModel& model, int feature_col);

}  // namespace mfgp
