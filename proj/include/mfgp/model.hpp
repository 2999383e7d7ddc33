// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfgp/covariance.hpp"
#include "mfgp/dataset.hpp"
#include "mfgp/embedding.hpp"
#include "mfgp/kernel.hpp"
#include "mfgp/mean.hpp"
#include "mfgp/params.hpp"

namespace mfgp {

enum class ZMode { Deterministic, Probabilistic };
enum class CalibrationMode { None, Deterministic, Probabilistic };

struct ModelConfig {
  // kernel
  KernelFamily kernel = KernelFamily::Gaussian;
  double power_p = 2.0;
  double matern_nu = 2.5;

  // categorical embedding
  std::map<int, int> qual_dict;            // feature column -> level count
  EncodingKind encoding = EncodingKind::GroupedOneHot;
  std::uint64_t encoding_seed = 0;
  bool separate_embedding = false;         // one latent block per categorical variable
  int embedding_dim = 2;                   // dh
  std::vector<int> nn_layers_embedding;    // empty = linear map A
  double a_prior_std = 0.0;                // 0 = auto (1.0; 0.1 beyond 200 combos)

  // source embedding
  int z_dim = 2;
  ZMode z_mode = ZMode::Deterministic;
  std::vector<int> nn_layers_z;            // det: empty = linear; prob: generator hidden (default {5})
  int num_pass_train = 20;                 // M
  int num_pass_pred = 30;                  // Q

  // mean
  MeanKind mean = MeanKind::Single;
  std::vector<int> poly_degrees;           // per source, -1 = zero
  std::vector<int> nn_layers_mean = {4, 4};

  // noise
  std::optional<bool> multiple_noise;      // unset = on for multi-source data
  bool fix_noise = false;
  double fix_noise_val = 1e-5;
  double lb_noise = 1e-8;

  // calibration
  std::vector<int> calibration_ids;        // feature column indices of zeta
  CalibrationMode calibration = CalibrationMode::None;
  Eigen::VectorXd calib_prior_mean, calib_prior_std;  // raw units

  // priors and penalties
  bool add_prior = true;
  double omega_prior_mean = -3.0, omega_prior_std = 3.0;
  std::array<double, 2> regularization = {0.0, 0.0};  // (L1, L2) on embedding/mean parameters

  std::uint64_t draw_seed = 0;             // ensemble draw stream
};

// Rows prepared for kernel evaluation: the scaled block plus lookups into the
// latent tables.
struct RowBlock {
  Eigen::MatrixXd Xs;          // n x n_scaled (numeric columns then calibration columns)
  std::vector<char> fill;      // rows whose calibration cells get the current estimate
  std::vector<long> rank;      // categorical combination rank per row (-1 if none)
  std::vector<int> src;
};

// Immutable compiled form of (config, training data): layouts, encodings,
// standardizers and the prepared training block. Shared by the loss engine,
// prediction and serialization.
struct GpCore {
  ModelConfig cfg;
  CategoricalSpec cat;
  PriorEncoding enc;                  // meaningful when cat.n_vars() > 0
  std::vector<EmbeddingMap> hmaps;    // 1 entry, or one per variable in separate mode
  EmbeddingMap zmap;                  // deterministic source embedding (ds > 1)
  ProbabilisticEmbedding zgen;        // probabilistic source embedding
  MeanSpec mean;
  ParamLayout layout;
  NoiseKind noise_kind = NoiseKind::Single;

  int n = 0, ds = 1;
  int dh_total = 0, dz = 0, dzeta = 0;
  std::vector<int> numeric_cols, zeta_cols, cat_cols;  // feature column roles
  int n_scaled = 0;

  RowBlock train;
  Eigen::MatrixXd PiS;                // ds x ds one-hot rows for the source indicator
  Eigen::VectorXd ystd;               // standardized responses
  Standardizer x_std;                 // per feature column (categorical columns untouched)
  ScalarStandardizer y_std;
  MFDataset data_raw;                 // original rows (kept for persistence)

  static std::shared_ptr<const GpCore> build(const ModelConfig& cfg, const MFDataset& data);

  bool has_cats() const { return !cat_cols.empty(); }
  bool has_z() const { return ds > 1; }
  bool calibrating() const { return cfg.calibration != CalibrationMode::None; }
  bool prob_z() const { return has_z() && cfg.z_mode == ZMode::Probabilistic; }
  bool prob_zeta() const { return cfg.calibration == CalibrationMode::Probabilistic; }
  bool is_ensemble() const { return prob_z() || prob_zeta(); }

  KernelConfig kernel_config(const Eigen::VectorXd& raw) const;

  RowBlock prepare(const MFDataset& d) const;  // standardize and resolve combos for query rows

  // latent tables at the given parameter point
  Eigen::VectorXd h_of_rank(const Eigen::VectorXd& raw, long rank) const;
  Eigen::MatrixXd z_table_det(const Eigen::VectorXd& raw) const;  // ds x dz
  void z_moments(const Eigen::VectorXd& raw, int src, Eigen::VectorXd& mu, Eigen::MatrixXd& L) const;
  Eigen::VectorXd zeta_det(const Eigen::VectorXd& raw) const;     // standardized scale
  void zeta_moments(const Eigen::VectorXd& raw, Eigen::VectorXd& mu, Eigen::VectorXd& tau) const;

  // restart start vectors (net blocks use fan-in scaled init)
  Eigen::VectorXd start_raw(std::uint64_t seed, int restart) const;

  NoiseModel noise_model(const Eigen::VectorXd& raw) const;
};

struct PredictiveDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;      // marginal variances
  Eigen::MatrixXd cov;      // full covariance when requested, else 0x0
  bool includes_noise = false;
};

// Deterministic trained model with cached factorization.
struct TrainedModel {
  std::shared_ptr<const GpCore> core;
  Eigen::VectorXd raw;       // optimized unconstrained parameters
  double loss = 0.0;

  // caches on the standardized scale
  Eigen::MatrixXd Xs_eff;    // training scaled block with calibration fill applied
  Eigen::MatrixXd H;         // per unique training rank
  std::vector<long> ranks;   // unique training ranks (ascending)
  Eigen::MatrixXd Z;         // ds x dz
  Eigen::VectorXd zeta_std;  // calibration values used for the fill (standardized)
  Eigen::VectorXd m_train;
  CholFactor chol;
  Eigen::VectorXd alpha;

  double sigma2() const;
  Eigen::VectorXd deltas() const;              // standardized-scale nuggets
  Eigen::VectorXd deltas_raw() const;          // in response-variance units
  Eigen::VectorXd zeta_estimate_raw() const;   // calibration estimates in raw units

  PredictiveDistribution predict(const MFDataset& queries, bool include_noise,
                                 bool full_cov = false) const;
};

TrainedModel finalize_deterministic(std::shared_ptr<const GpCore> core, const Eigen::VectorXd& raw,
                                    double loss);

// Uniform mixture of GPs induced by latent draws.
struct EnsembleModel {
  std::shared_ptr<const GpCore> core;
  Eigen::VectorXd raw;
  double loss = 0.0;
  int M = 20, Q = 30;
  std::vector<TrainedModel> members;  // Q prediction members

  PredictiveDistribution predict(const MFDataset& queries, bool include_noise) const;
  Eigen::VectorXd zeta_posterior_mean_raw() const;
  Eigen::VectorXd zeta_posterior_std_raw() const;
};

EnsembleModel finalize_ensemble(std::shared_ptr<const GpCore> core, const Eigen::VectorXd& raw,
                                double loss, int Q);

// Per-source polynomial mean coefficients mapped back to raw input/response
// units. Entry j holds [intercept, then per numeric feature the coefficients
// of x^1 .. x^degree_j]; sources with a zero mean yield an empty vector. The
// reference-source offset cancels in source differences, so coefficients are
// reported relative to the model's response center.
std::vector<Eigen::VectorXd> polynomial_coefficients_raw(const TrainedModel& m);

// Per-source constant means on the response scale relative to its center.
Eigen::VectorXd source_constants_raw(const TrainedModel& m);

// Moment pooling for a uniform mixture: mbar = avg m_k and
// Cbar = avg [C_k + (m_k - mbar)(m_k - mbar)^T].
void ensemble_moments(const std::vector<Eigen::VectorXd>& means,
                      const std::vector<Eigen::MatrixXd>& covs, Eigen::VectorXd& mbar,
                      Eigen::MatrixXd& cbar);

// Marginal mixture moments per query point:
// mean = avg mu_k, var = avg(tau_k^2 + mu_k^2) - mean^2.
void ensemble_predict_marginal(const std::vector<Eigen::VectorXd>& means,
                               const std::vector<Eigen::VectorXd>& vars, Eigen::VectorXd& mean,
                               Eigen::VectorXd& var);

}  // namespace mfgp
