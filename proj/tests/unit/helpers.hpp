#pragma once

#include "paneldata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace testing {

using ccepc::Mask;
using ccepc::Matrix;
using ccepc::Panel;
using ccepc::Series;
using ccepc::Vector;

inline std::vector<std::string> country_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U%02d", i + 1);
    out.push_back(buf);
  }
  return out;
}

inline std::vector<int> quarters(int first, int t) {
  std::vector<int> out;
  for (int k = 0; k < t; ++k) out.push_back(first + k);
  return out;
}

inline Series full(const Matrix& m, bool common = false) {
  Series s;
  s.values = m;
  s.missing = Mask::Constant(m.rows(), m.cols(), false);
  s.common = common;
  return s;
}

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline Panel empty_panel(int n, int t, int first = 2004 * 4) {
  return Panel(country_names(n), quarters(first, t));
}

// Panel with iid Gaussian unit series and common series.
inline Panel random_panel(int n, int t, const std::vector<std::string>& unit_vars,
                          const std::vector<std::string>& common_vars, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Panel p = empty_panel(n, t);
  for (const auto& v : unit_vars) p = p.with_series(v, full(gaussian(n, t, rng)));
  for (const auto& v : common_vars) p = p.with_series(v, full(gaussian(1, t, rng), true));
  return p;
}

// Long-double normal equations, the reference for least-squares tests.
inline Vector normal_equations(const Matrix& X, const Vector& y) {
  const int k = static_cast<int>(X.cols());
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c)
      for (int t = 0; t < X.rows(); ++t) a[r][c] += static_cast<long double>(X(t, r)) * X(t, c);
    for (int t = 0; t < X.rows(); ++t) a[r][k] += static_cast<long double>(X(t, r)) * y(t);
  }
  for (int p = 0; p < k; ++p) {
    int best = p;
    for (int r = p + 1; r < k; ++r)
      if (std::fabs(static_cast<double>(a[r][p])) > std::fabs(static_cast<double>(a[best][p]))) best = r;
    std::swap(a[p], a[best]);
    for (int r = 0; r < k; ++r) {
      if (r == p) continue;
      long double f = a[r][p] / a[p][p];
      for (int c = p; c <= k; ++c) a[r][c] -= f * a[p][c];
    }
  }
  Vector b(k);
  for (int r = 0; r < k; ++r) b(r) = static_cast<double>(a[r][k] / a[r][r]);
  return b;
}

// Pairwise-correlation CD, computed the slow way.
inline double brute_force_cd(const Matrix& e) {
  const int n = static_cast<int>(e.rows()), t = static_cast<int>(e.cols());
  long double sum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      long double mi = 0, mj = 0;
      for (int s = 0; s < t; ++s) {
        mi += e(i, s);
        mj += e(j, s);
      }
      mi /= t;
      mj /= t;
      long double sij = 0, sii = 0, sjj = 0;
      for (int s = 0; s < t; ++s) {
        sij += (e(i, s) - mi) * (e(j, s) - mj);
        sii += (e(i, s) - mi) * (e(i, s) - mi);
        sjj += (e(j, s) - mj) * (e(j, s) - mj);
      }
      sum += sij / std::sqrt(sii * sjj);
    }
  return static_cast<double>(std::sqrt(2.0L * t / (n * (n - 1.0L))) * sum);
}

// Jacobi eigenvalue iteration for symmetric matrices; descending values and
// matching eigenvector columns.
inline void jacobi_eigen(Matrix a, std::vector<double>& values, Matrix& vectors) {
  const int n = static_cast<int>(a.rows());
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  values.clear();
  vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    values.push_back(a(order[i], order[i]));
    vectors.col(i) = v.col(order[i]);
  }
}

}  // namespace testing
