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

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's numerics: plain loops over std::vector only.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

// Piecewise-linear value by linear scan, clamped outside the span.
inline double pwl(const Vec& t, const Vec& v, double x) {
  if (x <= t.front()) return v.front();
  if (x >= t.back()) return v.back();
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (x >= t[k] && x <= t[k + 1]) {
      const double w = (x - t[k]) / (t[k + 1] - t[k]);
      return (1.0 - w) * v[k] + w * v[k + 1];
    }
  }
  return v.back();
}

inline double se_ard(double sf2, const Vec& ls, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / ls[d];
    s += z * z;
  }
  return sf2 * std::exp(-0.5 * s);
}

template <class T>
using MatT = std::vector<std::vector<T>>;

// Gauss-Jordan inverse with partial pivoting.
template <class T>
MatT<T> inverse(MatT<T> a) {
  const std::size_t n = a.size();
  MatT<T> inv(n, std::vector<T>(n, T(0)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = T(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    if (a[p][c] == T(0)) throw std::runtime_error("singular matrix");
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const T d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const T f = a[r][c];
      if (f == T(0)) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

// log|A| by Gaussian elimination with partial pivoting (A assumed SPD).
template <class T>
T logdet(MatT<T> a) {
  const std::size_t n = a.size();
  T s = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[p], a[c]);
    s += std::log(std::abs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const T f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return s;
}

template <class T>
std::vector<T> matvec(const MatT<T>& a, const std::vector<T>& x) {
  std::vector<T> y(a.size(), T(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  }
  return y;
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Exact GP on already-normalized targets with the explicit inverse, carried
// out in extended precision so that its own rounding stays well below the
// tolerances it is used to check.
struct DenseGp {
  using Real = long double;
  using RVec = std::vector<Real>;
  using RMat = MatT<Real>;

  Real sf2;
  RVec ls;
  Real noise;
  RMat x;
  RMat kinv;
  RVec alpha;

  static RVec widen(const Vec& v) { return RVec(v.begin(), v.end()); }

  static Real kern(Real sf2, const RVec& ls, const RVec& a, const RVec& b) {
    Real s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      const Real z = (a[d] - b[d]) / ls[d];
      s += z * z;
    }
    return sf2 * std::exp(Real(-0.5) * s);
  }

  static RMat gram(Real sf2, const RVec& ls, Real noise, const RMat& x) {
    const std::size_t m = x.size();
    RMat k(m, RVec(m));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) k[i][j] = kern(sf2, ls, x[i], x[j]) + (i == j ? noise : Real(0));
    }
    return k;
  }

  DenseGp(double sf2_, const Vec& ls_, double noise_, const Mat& x_, const Vec& y)
      : sf2(sf2_), ls(widen(ls_)), noise(noise_) {
    for (const auto& r : x_) x.push_back(widen(r));
    kinv = inverse(gram(sf2, ls, noise, x));
    alpha = matvec(kinv, widen(y));
  }

  std::pair<double, double> predict(const Vec& q, bool with_noise) const {
    const RVec qq = widen(q);
    RVec ks(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ks[i] = kern(sf2, ls, qq, x[i]);
    const Real mean = dot(ks, alpha);
    Real var = sf2 - dot(ks, matvec(kinv, ks));
    if (var < 0) var = 0;
    return {static_cast<double>(mean), static_cast<double>(var + (with_noise ? noise : Real(0)))};
  }

  static double lml(double sf2, const Vec& ls, double noise, const Mat& x, const Vec& y) {
    RMat xx;
    for (const auto& r : x) xx.push_back(widen(r));
    const RMat k = gram(sf2, widen(ls), noise, xx);
    const RVec yy = widen(y);
    const RVec a = matvec(inverse(k), yy);
    const Real m = static_cast<Real>(x.size());
    return static_cast<double>(-0.5L * dot(yy, a) - 0.5L * logdet(k) - 0.5L * m * std::log(2.0L * 3.14159265358979323846264338327950288L));
  }
};

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace oracle
