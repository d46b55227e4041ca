#include "factors.hpp"

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ccepc {

Matrix prepare_for_pca(const Matrix& U, bool center, bool normalize) {
  Matrix out = U;
  if (center || normalize) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double mean = out.row(i).mean();
      if (center) out.row(i).array() -= mean;
      if (normalize) {
        double m = center ? 0.0 : mean;
        double ss = (out.row(i).array() - m).square().sum();
        double sd = std::sqrt(ss / std::max<Eigen::Index>(1, out.cols() - 1));
        if (sd > 0) out.row(i) /= sd;
      }
    }
  }
  return out;
}

namespace {

struct Decomposition {
  Vector values;   // descending
  Matrix vectors;  // T x T, columns match `values`
};

Decomposition decompose(const Matrix& X) {
  const double scale = 1.0 / (static_cast<double>(X.rows()) * static_cast<double>(X.cols()));
  Matrix gram = scale * (X.transpose() * X);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::Degenerate, "eigen decomposition did not converge");
  Decomposition d;
  d.values = solver.eigenvalues().reverse();
  d.vectors = solver.eigenvectors().rowwise().reverse();
  return d;
}

void check_shape(const Matrix& U) {
  if (U.rows() < 2 || U.cols() < 2)
    fail(ErrorKind::Specification, "eigen analysis needs N >= 2 and T >= 2");
  if (!U.allFinite()) fail(ErrorKind::Specification, "eigen analysis input has non-finite values");
}

Spectrum clamp_spectrum(const Vector& values, Eigen::Index count) {
  Spectrum s;
  s.eigenvalues.resize(count);
  double top = values(0);
  if (!(top > 0)) fail(ErrorKind::Degenerate, "degenerate spectrum: matrix is zero");
  for (Eigen::Index k = 0; k < count; ++k) {
    double v = values(k);
    if (v < 1e-12 * top) {
      v = 0.0;
      s.clamped.push_back(static_cast<int>(k));
    }
    s.eigenvalues[k] = v;
  }
  return s;
}

}  // namespace

Spectrum eigen_spectrum(const Matrix& U, bool center, bool normalize) {
  check_shape(U);
  Matrix X = prepare_for_pca(U, center, normalize);
  if (X.squaredNorm() == 0.0) fail(ErrorKind::Degenerate, "degenerate spectrum: matrix is zero");
  auto d = decompose(X);
  return clamp_spectrum(d.values, std::min(X.rows(), X.cols()));
}

int default_kmax(int n, int t) { return std::max(1, std::min(n, t) / 2); }

FactorCount ahn_horenstein(const std::vector<double>& eig, int kmax) {
  if (kmax < 1) fail(ErrorKind::Specification, "kmax must be >= 1");
  const int len = static_cast<int>(eig.size());
  if (len < kmax + 2)
    fail(ErrorKind::Specification, "ahn_horenstein needs at least kmax + 2 = " +
                                       std::to_string(kmax + 2) + " eigenvalues, got " +
                                       std::to_string(len));
  for (int k = 1; k < len; ++k)
    if (eig[k] > eig[k - 1]) fail(ErrorKind::Specification, "eigenvalues must be in descending order");

  // tail[k] = V(k) = sum_{j > k} lambda_j with 1-based lambda.
  std::vector<double> tail(len + 1, 0.0);
  for (int k = len - 1; k >= 0; --k) tail[k] = tail[k + 1] + eig[k];

  FactorCount fc;
  fc.kmax = kmax;
  int usable = 0;
  for (int k = 1; k <= kmax; ++k) {
    if (!(eig[k] > 0.0) || !(tail[k + 1] > 0.0)) break;
    usable = k;
  }
  if (usable < kmax) {
    fc.warnings.push_back("factor-count range truncated to k <= " + std::to_string(usable) +
                          " because eigenvalue " + std::to_string(usable + 2) +
                          " (or the remaining tail) is zero");
  }
  fc.kmax_used = usable;
  double best_er = -1, best_gr = -1;
  for (int k = 1; k <= usable; ++k) {
    double er = eig[k - 1] / eig[k];
    double gr = std::log(tail[k - 1] / tail[k]) / std::log(tail[k] / tail[k + 1]);
    fc.er.push_back(er);
    fc.gr.push_back(gr);
    if (er > best_er) {
      best_er = er;
      fc.k_er = k;
    }
    if (gr > best_gr) {
      best_gr = gr;
      fc.k_gr = k;
    }
  }
  if (usable == 0) fc.warnings.push_back("no usable eigenvalue ratios; factor count set to 0");
  if (eig[0] > 0.0 && len >= 2) {
    const double mock = tail[0] / std::log(static_cast<double>(len));
    fc.er0 = mock / eig[0];
    fc.gr0 = std::log((tail[0] + mock) / tail[0]) / std::log(tail[0] / tail[1]);
    fc.prefers_zero = usable > 0 && fc.gr0 > best_gr;
  }
  return fc;
}

double FactorSet::share_total() const {
  double s = 0;
  for (int k = 0; k < count(); ++k) s += shares[k];
  return s;
}

FactorSet extract_pcs(const Matrix& U, int m, std::vector<int> periods, bool center,
                      bool normalize) {
  check_shape(U);
  if (m < 1) fail(ErrorKind::Specification, "number of components must be >= 1");
  const Eigen::Index n = U.rows(), t = U.cols();
  if (m > std::min(n, t))
    fail(ErrorKind::Specification, "number of components " + std::to_string(m) +
                                       " exceeds min(N, T) = " + std::to_string(std::min(n, t)));
  if (!periods.empty() && static_cast<Eigen::Index>(periods.size()) != t)
    fail(ErrorKind::Specification, "period labels do not match the number of columns");

  Matrix X = prepare_for_pca(U, center, normalize);
  if (X.squaredNorm() == 0.0) fail(ErrorKind::Degenerate, "degenerate spectrum: matrix is zero");
  auto d = decompose(X);
  Spectrum spec = clamp_spectrum(d.values, std::min(n, t));
  int rank = static_cast<int>(spec.eigenvalues.size() - spec.clamped.size());
  if (m > rank)
    fail(ErrorKind::Specification, "requested " + std::to_string(m) +
                                       " components but the effective rank is " +
                                       std::to_string(rank));

  FactorSet fs;
  fs.periods = std::move(periods);
  fs.eigenvalues = spec.eigenvalues;
  double total = 0;
  for (double v : fs.eigenvalues) total += v;
  for (double v : fs.eigenvalues) fs.shares.push_back(v / total);

  Vector csa = X.colwise().mean().transpose();
  csa.array() -= csa.mean();
  const double root_t = std::sqrt(static_cast<double>(t));
  fs.components.resize(t, m);
  for (int k = 0; k < m; ++k) {
    Vector pc = root_t * d.vectors.col(k);
    SignAnchor anchor;
    double csa_norm = csa.norm();
    Vector centered = pc.array() - pc.mean();
    double denom = centered.norm() * csa_norm;
    double corr = denom > 0 ? centered.dot(csa) / denom : 0.0;
    if (std::abs(corr) > 1e-12) {
      anchor.rule = "csa-correlation";
      if (corr < 0) {
        pc = -pc;
        corr = -corr;
        anchor.flipped = true;
      }
      anchor.value = corr;
    } else {
      anchor.rule = "first-element";
      Eigen::Index first = 0;
      while (first + 1 < t && std::abs(pc(first)) <= 1e-12 * root_t) ++first;
      if (pc(first) < 0) {
        pc = -pc;
        anchor.flipped = true;
      }
      anchor.value = pc(first);
    }
    fs.components.col(k) = pc;
    fs.anchors.push_back(anchor);
  }
  fs.loadings = X * fs.components / static_cast<double>(t);
  return fs;
}

std::string factors_to_csv(const FactorSet& factors) {
  std::ostringstream out;
  out << "period";
  for (int k = 0; k < factors.count(); ++k) out << ",pc" << (k + 1);
  out << '\n';
  char buf[32];
  for (Eigen::Index t = 0; t < factors.components.rows(); ++t) {
    if (!factors.periods.empty())
      out << format_period(factors.periods[t]);
    else
      out << t;
    for (int k = 0; k < factors.count(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, factors.components(t, k));
      out << ',' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ccepc
