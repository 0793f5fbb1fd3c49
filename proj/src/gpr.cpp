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

#include "gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge::gpr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Log-space box for the hyperparameter search (normalized targets/features).
constexpr double kMinSignal = 1e-10;
constexpr double kMaxSignal = 1e6;
constexpr double kMinLength = 1e-3;
constexpr double kMaxLength = 1e4;
constexpr double kMinNoise = 1e-6;
constexpr double kMaxNoise = 10.0;

void check_kernel(const Kernel& k, std::size_t dims) {
  if (k.lengthscales.size() != dims) {
    fail(ErrorKind::Dimension, "kernel has " + std::to_string(k.lengthscales.size()) +
                                   " lengthscales for " + std::to_string(dims) + " features");
  }
}

RowMatrix scaled_rows(const Kernel& k, const Eigen::MatrixXd& x) {
  check_kernel(k, static_cast<std::size_t>(x.cols()));
  RowMatrix s(x.rows(), x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) s.col(d) = x.col(d) / k.lengthscales[d];
  return s;
}

double scaled_sqdist(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  const double* pa = a.row(i).data();
  const double* pb = b.row(j).data();
  double acc = 0.0;
  for (Eigen::Index d = 0; d < a.cols(); ++d) {
    double diff = pa[d] - pb[d];
    acc += diff * diff;
  }
  return acc;
}

// exp(-h) for h = half the scaled squared distance. Arguments past the
// normal-double range give exactly 0 so that no subnormal enters the
// factorizations (subnormal arithmetic is orders of magnitude slower).
inline double se_decay(double half_sqdist) { return half_sqdist > 700.0 ? 0.0 : std::exp(-half_sqdist); }

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto& m = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double d = m(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
  }
  return true;
}

TargetScale target_scale(const Eigen::VectorXd& y) {
  TargetScale s;
  const double m = static_cast<double>(y.size());
  s.mean = y.sum() / m;
  double var = (y.array() - s.mean).square().sum() / m;
  bool constant = y.maxCoeff() == y.minCoeff() || !(var > 0.0);
  s.scale = constant ? 0.0 : std::sqrt(var);
  return s;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& y, const TargetScale& s) {
  if (s.scale == 0.0) return Eigen::VectorXd::Zero(y.size());
  return (y.array() - s.mean) / s.scale;
}

Kernel constant_kernel(std::size_t dims) {
  return Kernel{kMinSignal, std::vector<double>(dims, 1.0), kJitterFloor};
}

// ---- hyperparameter search -------------------------------------------------

// theta = [log signal, log lengthscales..., log noise]
Kernel kernel_from_theta(const Eigen::VectorXd& th) {
  Kernel k;
  const auto dims = th.size() - 2;
  k.signal_variance = std::exp(th(0));
  k.lengthscales.resize(static_cast<std::size_t>(dims));
  for (Eigen::Index d = 0; d < dims; ++d) k.lengthscales[d] = std::exp(th(1 + d));
  k.noise_variance = std::exp(th(dims + 1));
  return k;
}

Eigen::VectorXd theta_from_kernel(const Kernel& k) {
  const auto dims = static_cast<Eigen::Index>(k.lengthscales.size());
  Eigen::VectorXd th(dims + 2);
  th(0) = std::log(k.signal_variance);
  for (Eigen::Index d = 0; d < dims; ++d) th(1 + d) = std::log(k.lengthscales[d]);
  th(dims + 1) = std::log(k.noise_variance);
  return th;
}

class MarginalLikelihood {
 public:
  MarginalLikelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) : y_(y) {
    const auto m = x.rows();
    sqdist_.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      Eigen::MatrixXd s(m, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
          double diff = x(i, d) - x(j, d);
          s(i, j) = diff * diff;
        }
      }
      sqdist_.push_back(std::move(s));
    }
  }

  // Negative log marginal likelihood and its gradient in theta.
  double operator()(const Eigen::VectorXd& th, Eigen::VectorXd& grad) const {
    const auto m = y_.size();
    const auto dims = static_cast<Eigen::Index>(sqdist_.size());
    const double sf2 = std::exp(th(0));
    const double sn2 = std::exp(th(dims + 1));

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> inv_l2(static_cast<std::size_t>(dims));
    for (Eigen::Index d = 0; d < dims; ++d) {
      inv_l2[d] = std::exp(-2.0 * th(1 + d));
      r.noalias() += inv_l2[d] * sqdist_[d];
    }
    Eigen::MatrixXd kf = r.unaryExpr([sf2](double v) { return sf2 * se_decay(0.5 * v); });
    Eigen::MatrixXd k = kf;
    k.diagonal().array() += sn2;

    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (!factor_ok(llt)) return std::numeric_limits<double>::infinity();
    Eigen::VectorXd alpha = llt.solve(y_);
    const double logdet_half = llt.matrixLLT().diagonal().array().log().sum();
    const double nll = 0.5 * y_.dot(alpha) + logdet_half +
                       0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(nll)) return std::numeric_limits<double>::infinity();

    Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(m, m));
    w = alpha * alpha.transpose() - w;
    Eigen::MatrixXd wk = w.cwiseProduct(kf);
    grad.resize(th.size());
    grad(0) = -0.5 * wk.sum();
    for (Eigen::Index d = 0; d < dims; ++d) {
      grad(1 + d) = -0.5 * inv_l2[d] * wk.cwiseProduct(sqdist_[d]).sum();
    }
    grad(dims + 1) = -0.5 * sn2 * w.trace();
    return nll;
  }

 private:
  Eigen::VectorXd y_;
  std::vector<Eigen::MatrixXd> sqdist_;
};

struct SearchResult {
  Eigen::VectorXd theta;
  double value = std::numeric_limits<double>::infinity();
};

// Projected limited-memory BFGS on a box, Armijo backtracking.
SearchResult minimize_box(const MarginalLikelihood& f, Eigen::VectorXd x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi, int max_evals) {
  constexpr int kHistory = 6;
  x = x.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd g;
  double fx = f(x, g);
  int evals = 1;
  SearchResult best{x, fx};
  if (!std::isfinite(fx)) return best;

  std::vector<Eigen::VectorXd> ss, ys;
  std::vector<double> rhos;
  auto free_mask = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& grad) {
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(at.size());
    for (Eigen::Index i = 0; i < at.size(); ++i) {
      if ((at(i) <= lo(i) && grad(i) > 0.0) || (at(i) >= hi(i) && grad(i) < 0.0)) mask(i) = 0.0;
    }
    return mask;
  };

  while (evals < max_evals) {
    Eigen::VectorXd mask = free_mask(x, g);
    Eigen::VectorXd pg = g.cwiseProduct(mask);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + std::abs(fx))) break;

    // Two-loop recursion.
    Eigen::VectorXd q = pg;
    std::vector<double> a(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      a[i] = rhos[i] * ss[i].dot(q);
      q -= a[i] * ys[i];
    }
    if (!ss.empty()) q *= ss.back().dot(ys.back()) / ys.back().squaredNorm();
    for (std::size_t i = 0; i < ss.size(); ++i) {
      double b = rhos[i] * ys[i].dot(q);
      q += (a[i] - b) * ss[i];
    }
    Eigen::VectorXd dir = -q.cwiseProduct(mask);
    if (dir.dot(pg) >= 0.0) {
      dir = -pg;
      ss.clear();
      ys.clear();
      rhos.clear();
    }
    double step = ss.empty() ? std::min(1.0, 1.0 / pg.norm()) : 1.0;

    bool moved = false;
    Eigen::VectorXd xn, gn;
    double fn = fx;
    for (int tries = 0; tries < 30 && evals < max_evals; ++tries) {
      xn = (x + step * dir).cwiseMax(lo).cwiseMin(hi);
      fn = f(xn, gn);
      ++evals;
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;

    Eigen::VectorXd s = xn - x;
    Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      ss.push_back(s);
      ys.push_back(yv);
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > kHistory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
        rhos.erase(rhos.begin());
      }
    }
    const double improvement = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (fx < best.value) best = SearchResult{x, fx};
    if (improvement < 1e-8 * (1.0 + std::abs(fx))) break;
  }
  return best;
}

std::vector<Eigen::Index> search_rows(Eigen::Index m, int limit) {
  std::vector<Eigen::Index> rows;
  if (limit <= 0 || m <= limit) {
    rows.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) rows[i] = i;
    return rows;
  }
  for (int k = 0; k < limit; ++k) rows.push_back(static_cast<Eigen::Index>(k) * m / limit);
  return rows;
}

// Kernel maximizing the marginal likelihood of normalized targets z.
Kernel search_kernel(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const GpOptions& opts) {
  const auto dims = x.cols();
  auto rows = search_rows(x.rows(), opts.hyperopt_rows);
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), dims);
  Eigen::VectorXd zs(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    xs.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    zs(static_cast<Eigen::Index>(r)) = z(rows[r]);
  }
  MarginalLikelihood objective(xs, zs);

  Eigen::VectorXd lo(dims + 2), hi(dims + 2);
  lo(0) = std::log(kMinSignal);
  hi(0) = std::log(kMaxSignal);
  lo.segment(1, dims).setConstant(std::log(kMinLength));
  hi.segment(1, dims).setConstant(std::log(kMaxLength));
  lo(dims + 1) = std::log(kMinNoise);
  hi(dims + 1) = std::log(kMaxNoise);

  std::vector<Eigen::VectorXd> starts;
  if (opts.warm_start) {
    check_kernel(*opts.warm_start, static_cast<std::size_t>(dims));
    starts.push_back(theta_from_kernel(*opts.warm_start));
  } else {
    Kernel base{1.0, std::vector<double>(static_cast<std::size_t>(dims), 2.0), 1e-3};
    starts.push_back(theta_from_kernel(base));
    for (int r = 1; r < std::max(1, opts.restarts); ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Eigen::VectorXd th(dims + 2);
      th(0) = std::log(0.1) + u(rng) * std::log(100.0);
      for (Eigen::Index d = 0; d < dims; ++d) th(1 + d) = std::log(0.3) + u(rng) * std::log(100.0);
      th(dims + 1) = std::log(1e-8) + u(rng) * std::log(1e6);
      starts.push_back(th);
    }
  }

  SearchResult best;
  for (const auto& start : starts) {
    auto r = minimize_box(objective, start, lo, hi, std::max(2, opts.max_evals));
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) {
    fail(ErrorKind::NonPsd, "no hyperparameter setting gave a positive definite covariance");
  }
  return kernel_from_theta(best.theta);
}

Eigen::VectorXd solve_with(const Factor& l, const Eigen::VectorXd& z) {
  Eigen::VectorXd a = l.triangularView<Eigen::Lower>().solve(z);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(a);
  return a;
}

double lml_from(const Factor& l, const Eigen::VectorXd& z, const Eigen::VectorXd& alpha) {
  return -0.5 * z.dot(alpha) - l.diagonal().array().log().sum() -
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi);
}

GprModel assemble(std::shared_ptr<const Eigen::MatrixXd> x, std::shared_ptr<const Factor> l,
                  const Kernel& kernel, const Eigen::VectorXd& z, const TargetScale& scale) {
  GprModel m;
  m.kernel = kernel;
  m.inputs = std::move(x);
  m.alpha = solve_with(*l, z);
  m.log_marginal_likelihood = lml_from(*l, z, m.alpha);
  m.chol = std::move(l);
  m.target = scale;
  return m;
}

Kernel choose_kernel(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const GpOptions& opts) {
  if (z.maxCoeff() == z.minCoeff()) return constant_kernel(static_cast<std::size_t>(x.cols()));
  return search_kernel(x, z, opts);
}

}  // namespace

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> xp) {
  if (x.size() != xp.size() || x.size() != k.lengthscales.size()) {
    fail(ErrorKind::Dimension, "kernel inputs have mismatched dimensions");
  }
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double r = (x[d] - xp[d]) / k.lengthscales[d];
    acc += r * r;
  }
  return k.signal_variance * se_decay(0.5 * acc);
}

Eigen::MatrixXd train_covariance(const Kernel& k, const Eigen::MatrixXd& x) {
  RowMatrix s = scaled_rows(k, x);
  const auto m = x.rows();
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    out(j, j) = k.signal_variance + k.noise_variance;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      double v = k.signal_variance * se_decay(0.5 * scaled_sqdist(s, i, s, j));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Eigen::MatrixXd cross_covariance(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::Dimension, "cross covariance dimension mismatch");
  RowMatrix sa = scaled_rows(k, a);
  RowMatrix sb = scaled_rows(k, b);
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = k.signal_variance * se_decay(0.5 * scaled_sqdist(sa, i, sb, j));
    }
  }
  return out;
}

double log_marginal_likelihood(const Kernel& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() != x.rows()) fail(ErrorKind::Dimension, "target count differs from input rows");
  Eigen::LLT<Eigen::MatrixXd> llt(train_covariance(k, x));
  if (!factor_ok(llt)) fail(ErrorKind::NonPsd, "covariance is not positive definite");
  Factor l = llt.matrixL();
  return lml_from(l, y, solve_with(l, y));
}

std::shared_ptr<const Factor> factorize(Kernel& k, const Eigen::MatrixXd& x) {
  {
    Eigen::LLT<Eigen::MatrixXd> llt(train_covariance(k, x));
    if (factor_ok(llt)) return std::make_shared<const Factor>(llt.matrixL());
  }
  const double cap = kMaxJitterFraction * k.signal_variance;
  for (double jitter = kJitterFloor; jitter <= cap * (1.0 + 1e-12); jitter *= 10.0) {
    Kernel trial = k;
    trial.noise_variance = k.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(train_covariance(trial, x));
    if (factor_ok(llt)) {
      k = trial;
      return std::make_shared<const Factor>(llt.matrixL());
    }
  }
  fail(ErrorKind::NonPsd, "Cholesky failed after jitter escalation to 1e-6 x signal variance");
}

GprModel fit_with_kernel(std::shared_ptr<const Eigen::MatrixXd> x, const Eigen::VectorXd& y,
                         Kernel kernel) {
  if (!x || x->rows() < 2) fail(ErrorKind::InsufficientData, "GP fit needs at least 2 samples");
  if (y.size() != x->rows()) fail(ErrorKind::Dimension, "target count differs from input rows");
  check_kernel(kernel, static_cast<std::size_t>(x->cols()));
  TargetScale scale = target_scale(y);
  auto l = factorize(kernel, *x);
  return assemble(std::move(x), std::move(l), kernel, normalize(y, scale), scale);
}

GprModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpOptions& opts) {
  if (x.rows() < 2) fail(ErrorKind::InsufficientData, "GP fit needs at least 2 samples");
  if (y.size() != x.rows()) fail(ErrorKind::Dimension, "target count differs from input rows");
  if (!y.allFinite() || !x.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite training data");
  TargetScale scale = target_scale(y);
  Eigen::VectorXd z = normalize(y, scale);
  Kernel kernel = choose_kernel(x, z, opts);
  auto shared = std::make_shared<const Eigen::MatrixXd>(x);
  auto l = factorize(kernel, *shared);
  return assemble(std::move(shared), std::move(l), kernel, z, scale);
}

Prediction predict(const GprModel& m, std::span<const double> x, bool include_noise) {
  if (!m.inputs || static_cast<Eigen::Index>(x.size()) != m.inputs->cols()) {
    fail(ErrorKind::Dimension, "query dimension differs from training features");
  }
  Eigen::MatrixXd q(1, m.inputs->cols());
  for (std::size_t d = 0; d < x.size(); ++d) q(0, static_cast<Eigen::Index>(d)) = x[d];
  Eigen::VectorXd ks = cross_covariance(m.kernel, *m.inputs, q).col(0);
  const double mean_z = ks.dot(m.alpha);
  if (!m.chol) fail(ErrorKind::InvalidArgument, "model was fitted without factors; variance unavailable");
  Eigen::VectorXd v = m.chol->triangularView<Eigen::Lower>().solve(ks);
  double latent = std::max(0.0, m.kernel.signal_variance - v.squaredNorm());
  double var_z = latent + (include_noise ? m.kernel.noise_variance : 0.0);
  return Prediction{m.target.mean + m.target.scale * mean_z, var_z * m.target.scale * m.target.scale};
}

waveform::CurrentWaveform PredictedWaveform::mean_waveform() const {
  return waveform::CurrentWaveform(time_means, current_means);
}

bool repair_times(std::vector<double>& times) {
  bool repaired = false;
  for (std::size_t j = 1; j < times.size(); ++j) {
    if (!(times[j] > times[j - 1])) {
      times[j] = times[j - 1] + kTimeRepairStep;
      repaired = true;
    }
  }
  return repaired;
}

GprEnsemble fit_ensemble(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                         const waveform::EncodingSchema& schema, const GpOptions& opts,
                         const GprEnsemble* previous, bool freeze) {
  if (targets.cols() == 0 || targets.cols() % 2 != 0) {
    fail(ErrorKind::Dimension, "target matrix must have 2n columns");
  }
  if (features.rows() != targets.rows()) {
    fail(ErrorKind::Dimension, "feature and target row counts differ");
  }
  if (features.rows() < 2) fail(ErrorKind::InsufficientData, "ensemble needs at least 2 samples");
  if (static_cast<std::size_t>(features.cols()) != schema.feature_dim()) {
    fail(ErrorKind::Dimension, "feature width differs from schema");
  }
  if (previous && previous->models.size() != static_cast<std::size_t>(targets.cols())) {
    fail(ErrorKind::Dimension, "previous ensemble has a different model count");
  }

  GprEnsemble e;
  e.n = static_cast<int>(targets.cols() / 2);
  e.schema = schema;
  e.features = waveform::ColumnScaler::fit(features);
  e.inputs = std::make_shared<const Eigen::MatrixXd>(e.features.apply(features));
  const auto cols = targets.cols();

  std::vector<TargetScale> scales(static_cast<std::size_t>(cols));
  std::vector<Eigen::VectorXd> zs(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) {
    Eigen::VectorXd y = targets.col(j);
    if (!y.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite target in column " + std::to_string(j));
    scales[j] = target_scale(y);
    zs[j] = normalize(y, scales[j]);
  }

  struct Group {
    Eigen::Index representative;
    Kernel kernel;
    std::shared_ptr<const Factor> factor;
  };
  std::vector<Group> groups;
  std::vector<std::size_t> group_of(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) {
    std::size_t g = 0;
    for (; g < groups.size(); ++g) {
      if ((zs[groups[g].representative] - zs[j]).lpNorm<Eigen::Infinity>() <= 1e-9) break;
    }
    if (g == groups.size()) groups.push_back(Group{j, {}, nullptr});
    group_of[j] = g;
  }

  e.models.resize(static_cast<std::size_t>(cols));
  for (auto& g : groups) {
    const auto& z = zs[g.representative];
    try {
      if (previous && freeze) {
        g.kernel = previous->models[g.representative].kernel;
      } else if (previous) {
        GpOptions warm = opts;
        warm.warm_start = previous->models[g.representative].kernel;
        g.kernel = choose_kernel(*e.inputs, z, warm);
      } else {
        g.kernel = choose_kernel(*e.inputs, z, opts);
      }
      g.factor = factorize(g.kernel, *e.inputs);
    } catch (const Error& err) {
      throw Error(err.kind(), std::string(err.what()) + " [target column " +
                                  std::to_string(g.representative) + "]");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (&groups[group_of[j]] != &g) continue;
      e.models[j] = assemble(e.inputs, g.factor, g.kernel, zs[j], scales[j]);
      if (!opts.keep_factors) e.models[j].chol.reset();
    }
    g.factor.reset();
  }
  return e;
}

BatchPrediction predict_batch(const GprEnsemble& e, const Eigen::MatrixXd& features, bool include_noise) {
  if (!e.inputs || e.models.empty()) fail(ErrorKind::InvalidArgument, "empty ensemble");
  Eigen::MatrixXd q = e.features.apply(features);
  const auto nq = q.rows();
  const auto cols = static_cast<Eigen::Index>(e.models.size());
  BatchPrediction out{Eigen::MatrixXd(nq, cols), Eigen::MatrixXd(nq, cols)};

  // Models sharing a factor share their cross covariance and variance.
  std::vector<bool> done(e.models.size(), false);
  constexpr Eigen::Index kChunk = 512;
  for (std::size_t j = 0; j < e.models.size(); ++j) {
    if (done[j]) continue;
    const GprModel& rep = e.models[j];
    std::vector<std::size_t> members;
    for (std::size_t k = j; k < e.models.size(); ++k) {
      const bool same = rep.chol ? e.models[k].chol == rep.chol
                                 : !e.models[k].chol && e.models[k].kernel == rep.kernel;
      if (!done[k] && same) {
        members.push_back(k);
        done[k] = true;
      }
    }
    for (Eigen::Index start = 0; start < nq; start += kChunk) {
      const auto len = std::min(kChunk, nq - start);
      Eigen::MatrixXd ks = cross_covariance(rep.kernel, *e.inputs, q.middleRows(start, len));
      for (auto k : members) {
        const auto& m = e.models[k];
        Eigen::VectorXd mz = ks.transpose() * m.alpha;
        out.means.block(start, static_cast<Eigen::Index>(k), len, 1) =
            (m.target.mean + m.target.scale * mz.array()).matrix();
      }
      if (!rep.chol) {
        for (auto k : members) {
          out.variances.block(start, static_cast<Eigen::Index>(k), len, 1).setConstant(
              std::numeric_limits<double>::quiet_NaN());
        }
        continue;
      }
      rep.chol->triangularView<Eigen::Lower>().solveInPlace(ks);
      Eigen::VectorXd explained = ks.colwise().squaredNorm().transpose();
      Eigen::VectorXd latent = (rep.kernel.signal_variance - explained.array()).max(0.0).matrix();
      for (auto k : members) {
        const auto& m = e.models[k];
        double noise = include_noise ? m.kernel.noise_variance : 0.0;
        double s2 = m.target.scale * m.target.scale;
        out.variances.block(start, static_cast<Eigen::Index>(k), len, 1) =
            ((latent.array() + noise) * s2).matrix();
      }
    }
  }
  return out;
}

std::vector<PredictedWaveform> predict_waveforms(const GprEnsemble& e,
                                                 std::span<const waveform::Condition> conditions,
                                                 bool include_noise) {
  auto x = waveform::encode_all(conditions, e.schema);
  auto b = predict_batch(e, x, include_noise);
  std::vector<PredictedWaveform> out(conditions.size());
  const int n = e.n;
  for (std::size_t r = 0; r < conditions.size(); ++r) {
    auto& p = out[r];
    const auto row = static_cast<Eigen::Index>(r);
    p.time_means.resize(n);
    p.time_vars.resize(n);
    p.current_means.resize(n);
    p.current_vars.resize(n);
    for (int j = 0; j < n; ++j) {
      p.time_means[j] = b.means(row, j);
      p.time_vars[j] = b.variances(row, j);
      p.current_means[j] = b.means(row, n + j);
      p.current_vars[j] = b.variances(row, n + j);
    }
    p.repaired = repair_times(p.time_means);
  }
  return out;
}

PredictedWaveform predict_waveform(const GprEnsemble& e, const waveform::Condition& c, bool include_noise) {
  return predict_waveforms(e, std::span<const waveform::Condition>(&c, 1), include_noise).front();
}

// ---- model file ------------------------------------------------------------

namespace {

constexpr const char* kMagic = "CCSGPR";
constexpr const char* kVersion = "v1";

void append_numbers(std::string& out, const char* tag, std::span<const double> values) {
  out += tag;
  for (double v : values) {
    out += ' ';
    out += textio::format_double(v);
  }
  out += '\n';
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : lines_(textio::split(text, '\n')) {
    if (!lines_.empty() && lines_.back().empty()) lines_.pop_back();
  }

  std::vector<std::string_view> next(const char* expected_tag) {
    if (pos_ >= lines_.size()) {
      fail(ErrorKind::CorruptFile, std::string("model file truncated before '") + expected_tag + "'");
    }
    auto toks = tokens(lines_[pos_++]);
    if (toks.empty() || (expected_tag[0] != '\0' && toks[0] != expected_tag)) {
      fail(ErrorKind::CorruptFile, "model file line " + std::to_string(pos_) + ": expected '" +
                                       expected_tag + "'");
    }
    return toks;
  }

  std::size_t line() const { return pos_; }

 private:
  static std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    for (auto t : textio::split(textio::trim(line), ' ')) {
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

double number(std::string_view tok, const LineReader& r) {
  auto v = textio::parse_double(tok);
  if (!v) fail(ErrorKind::CorruptFile, "model file line " + std::to_string(r.line()) + ": bad number");
  return *v;
}

long long integer(std::string_view tok, const LineReader& r) {
  auto v = textio::parse_int(tok);
  if (!v) fail(ErrorKind::CorruptFile, "model file line " + std::to_string(r.line()) + ": bad integer");
  return *v;
}

std::vector<double> numbers(const std::vector<std::string_view>& toks, std::size_t expected,
                            const LineReader& r) {
  if (toks.size() != expected + 1) {
    fail(ErrorKind::CorruptFile, "model file line " + std::to_string(r.line()) + ": expected " +
                                     std::to_string(expected) + " values");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t i = 1; i < toks.size(); ++i) out.push_back(number(toks[i], r));
  return out;
}

}  // namespace

std::string serialize(const GprEnsemble& e) {
  if (!e.inputs || e.models.size() != static_cast<std::size_t>(2 * e.n)) {
    fail(ErrorKind::InvalidArgument, "cannot serialize an incomplete ensemble");
  }
  const auto f = static_cast<std::size_t>(e.inputs->cols());
  const auto m = static_cast<std::size_t>(e.inputs->rows());
  std::string out = std::string(kMagic) + " " + kVersion + "\n";
  out += "n " + std::to_string(e.n) + "\n";
  out += "cells " + std::to_string(e.schema.cell_types.size());
  for (const auto& c : e.schema.cell_types) out += " " + c;
  out += "\nprocesses " + std::to_string(e.schema.process_codes.size());
  for (const auto& [label, code] : e.schema.process_codes) out += " " + label + " " + textio::format_double(code);
  out += "\narcs " + std::to_string(e.schema.arc_count) + "\n";
  out += "features " + std::to_string(f) + "\n";
  out += "rows " + std::to_string(m) + "\n";
  append_numbers(out, "feature_mean", std::span<const double>(e.features.mean.data(), f));
  append_numbers(out, "feature_std", std::span<const double>(e.features.stddev.data(), f));
  out += "feature_constant";
  for (bool c : e.features.constant) out += c ? " 1" : " 0";
  out += "\ninputs\n";
  std::vector<double> row(f);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t d = 0; d < f; ++d) row[d] = (*e.inputs)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d));
    append_numbers(out, "x", row);
  }
  out += "models " + std::to_string(e.models.size()) + "\n";
  for (std::size_t j = 0; j < e.models.size(); ++j) {
    const auto& md = e.models[j];
    out += "model " + std::to_string(j) + " " + textio::format_double(md.target.mean) + " " +
           textio::format_double(md.target.scale) + " " + textio::format_double(md.kernel.signal_variance) +
           " " + textio::format_double(md.kernel.noise_variance) + " " +
           textio::format_double(md.log_marginal_likelihood) + "\n";
    append_numbers(out, "lengthscales", md.kernel.lengthscales);
    append_numbers(out, "alpha", std::span<const double>(md.alpha.data(), m));
  }
  out += "end\n";
  return out;
}

GprEnsemble deserialize(const std::string& text, bool with_factors) {
  {
    const std::string head = text.substr(0, text.find('\n'));
    if (textio::trim(head) != std::string(kMagic) + " " + kVersion) {
      fail(ErrorKind::Format, "not a CCSGPR v1 model file");
    }
  }
  LineReader r(text);
  r.next(kMagic);
  GprEnsemble e;
  auto t = r.next("n");
  if (t.size() != 2) fail(ErrorKind::CorruptFile, "bad n record");
  e.n = static_cast<int>(integer(t[1], r));

  t = r.next("cells");
  if (t.size() < 2 || static_cast<std::size_t>(integer(t[1], r)) != t.size() - 2) {
    fail(ErrorKind::CorruptFile, "bad cells record");
  }
  for (std::size_t i = 2; i < t.size(); ++i) e.schema.cell_types.emplace_back(t[i]);
  t = r.next("processes");
  if (t.size() < 2 || static_cast<std::size_t>(integer(t[1], r)) * 2 != t.size() - 2) {
    fail(ErrorKind::CorruptFile, "bad processes record");
  }
  for (std::size_t i = 2; i < t.size(); i += 2) e.schema.process_codes.emplace_back(std::string(t[i]), number(t[i + 1], r));
  t = r.next("arcs");
  if (t.size() != 2) fail(ErrorKind::CorruptFile, "bad arcs record");
  e.schema.arc_count = static_cast<int>(integer(t[1], r));

  t = r.next("features");
  if (t.size() != 2) fail(ErrorKind::CorruptFile, "bad features record");
  const auto f = static_cast<std::size_t>(integer(t[1], r));
  t = r.next("rows");
  if (t.size() != 2) fail(ErrorKind::CorruptFile, "bad rows record");
  const auto m = static_cast<std::size_t>(integer(t[1], r));
  if (f != e.schema.feature_dim() || e.n < 1 || m < 2) {
    fail(ErrorKind::CorruptFile, "inconsistent model dimensions");
  }

  auto mean = numbers(r.next("feature_mean"), f, r);
  auto sd = numbers(r.next("feature_std"), f, r);
  auto flags = numbers(r.next("feature_constant"), f, r);
  e.features.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(f));
  e.features.stddev = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(f));
  for (double v : flags) e.features.constant.push_back(v != 0.0);

  r.next("inputs");
  auto inputs = std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f));
  for (std::size_t i = 0; i < m; ++i) {
    auto row = numbers(r.next("x"), f, r);
    for (std::size_t d = 0; d < f; ++d) (*inputs)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
  }
  e.inputs = inputs;

  t = r.next("models");
  if (t.size() != 2 || integer(t[1], r) != 2 * e.n) fail(ErrorKind::CorruptFile, "bad models record");
  for (int j = 0; j < 2 * e.n; ++j) {
    auto head = r.next("model");
    if (head.size() != 7 || integer(head[1], r) != j) fail(ErrorKind::CorruptFile, "bad model record");
    GprModel md;
    md.inputs = e.inputs;
    md.target.mean = number(head[2], r);
    md.target.scale = number(head[3], r);
    md.kernel.signal_variance = number(head[4], r);
    md.kernel.noise_variance = number(head[5], r);
    md.log_marginal_likelihood = number(head[6], r);
    md.kernel.lengthscales = numbers(r.next("lengthscales"), f, r);
    auto alpha = numbers(r.next("alpha"), m, r);
    md.alpha = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(m));
    e.models.push_back(std::move(md));
  }
  r.next("end");

  // Rebuild factors; identical kernels share one.
  for (std::size_t j = 0; with_factors && j < e.models.size(); ++j) {
    auto& md = e.models[j];
    for (std::size_t k = 0; k < j; ++k) {
      if (e.models[k].kernel == md.kernel) {
        md.chol = e.models[k].chol;
        break;
      }
    }
    if (!md.chol) {
      Eigen::LLT<Eigen::MatrixXd> llt(train_covariance(md.kernel, *e.inputs));
      if (!factor_ok(llt)) fail(ErrorKind::NonPsd, "stored kernel " + std::to_string(j) + " is not positive definite");
      md.chol = std::make_shared<const Factor>(llt.matrixL());
    }
  }
  return e;
}

void save_ensemble(const std::filesystem::path& path, const GprEnsemble& e) {
  textio::write_file_atomic(path, serialize(e));
}

GprEnsemble load_ensemble(const std::filesystem::path& path, bool with_factors) {
  return deserialize(textio::read_file(path), with_factors);
}

}  // namespace ccsforge::gpr
