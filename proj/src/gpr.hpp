/*
 * Copyright 2026 The ccs-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "waveform.hpp"

// Exact Gaussian-process regression with a squared-exponential ARD kernel,
// and an ensemble of independent single-output models, one per waveform
// coordinate (n times followed by n currents).
namespace ccsforge::gpr {

inline constexpr double kJitterFloor = 1e-12;
inline constexpr double kMaxJitterFraction = 1e-6;
inline constexpr double kTimeRepairStep = 1e-15;

struct Kernel {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = kJitterFloor;

  bool operator==(const Kernel&) const = default;
};

/// Signal covariance only; noise enters on the training diagonal.
double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> xp);

/// Training covariance K + noise*I over the rows of x.
Eigen::MatrixXd train_covariance(const Kernel& k, const Eigen::MatrixXd& x);

/// Cross covariance, rows of `a` against rows of `b`.
Eigen::MatrixXd cross_covariance(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct GpOptions {
  int restarts = 3;
  int max_evals = 200;  // objective evaluations per restart
  std::uint64_t seed = 0;
  // Hyperparameters are searched on at most this many evenly spaced rows;
  // 0 means all rows.
  int hyperopt_rows = 400;
  // When set, the search runs once from this point instead of multi-start.
  std::optional<Kernel> warm_start;
  // When false the Cholesky factors are dropped after fitting: means only,
  // variances come back NaN. Bounds memory for large reference fits.
  bool keep_factors = true;
};

/// Affine map between physical targets and the zero-mean fitting space.
/// A constant target has scale 0: it is predicted exactly, with no variance.
struct TargetScale {
  double mean = 0.0;
  double scale = 1.0;
  bool operator==(const TargetScale&) const = default;
};

using Factor = Eigen::MatrixXd;  // lower-triangular Cholesky factor

struct GprModel {
  Kernel kernel;
  std::shared_ptr<const Eigen::MatrixXd> inputs;  // M x F
  std::shared_ptr<const Factor> chol;             // of K + noise*I
  Eigen::VectorXd alpha;                          // (K + noise*I)^-1 y_normalized
  TargetScale target;
  double log_marginal_likelihood = 0.0;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// -1/2 y'a - sum log diag(L) - M/2 log 2pi for the given kernel.
double log_marginal_likelihood(const Kernel& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Cholesky of K + noise*I with jitter escalation. On success `k.noise_variance`
/// holds the diagonal term actually used.
std::shared_ptr<const Factor> factorize(Kernel& k, const Eigen::MatrixXd& x);

GprModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpOptions& opts);

/// Exact posterior for fixed hyperparameters (no search).
GprModel fit_with_kernel(std::shared_ptr<const Eigen::MatrixXd> x, const Eigen::VectorXd& y,
                         Kernel kernel);

Prediction predict(const GprModel& m, std::span<const double> x, bool include_noise = true);

struct PredictedWaveform {
  std::vector<double> time_means;
  std::vector<double> time_vars;
  std::vector<double> current_means;
  std::vector<double> current_vars;
  bool repaired = false;

  int n() const { return static_cast<int>(time_means.size()); }
  waveform::CurrentWaveform mean_waveform() const;
};

/// Raises any time mean not above its predecessor to predecessor + 1 fs.
bool repair_times(std::vector<double>& times);

struct GprEnsemble {
  int n = 0;
  waveform::EncodingSchema schema;
  waveform::ColumnScaler features;
  std::shared_ptr<const Eigen::MatrixXd> inputs;  // normalized, shared by all models
  std::vector<GprModel> models;                   // t_0..t_{n-1}, i_0..i_{n-1}

  std::size_t rows() const { return inputs ? static_cast<std::size_t>(inputs->rows()) : 0; }
  std::size_t feature_dim() const { return inputs ? static_cast<std::size_t>(inputs->cols()) : 0; }
};

/// Fits 2n models on raw encoded features. Target columns that coincide after
/// normalization share one hyperparameter search and one factorization.
/// With `previous` and `freeze`, kernels are reused without a search; with
/// `previous` alone each search is warm-started from the previous optimum.
GprEnsemble fit_ensemble(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                         const waveform::EncodingSchema& schema, const GpOptions& opts,
                         const GprEnsemble* previous = nullptr, bool freeze = false);

struct BatchPrediction {
  Eigen::MatrixXd means;      // queries x 2n, physical units
  Eigen::MatrixXd variances;  // queries x 2n
};

/// Predictions for raw (unnormalized) feature rows. Variances are NaN for
/// models held without a factor.
BatchPrediction predict_batch(const GprEnsemble& e, const Eigen::MatrixXd& features,
                              bool include_noise = true);

PredictedWaveform predict_waveform(const GprEnsemble& e, const waveform::Condition& c,
                                   bool include_noise = true);

std::vector<PredictedWaveform> predict_waveforms(const GprEnsemble& e,
                                                 std::span<const waveform::Condition> conditions,
                                                 bool include_noise = true);

std::string serialize(const GprEnsemble& e);
GprEnsemble deserialize(const std::string& text, bool with_factors = true);

void save_ensemble(const std::filesystem::path& path, const GprEnsemble& e);
GprEnsemble load_ensemble(const std::filesystem::path& path, bool with_factors = true);

}  // namespace ccsforge::gpr
