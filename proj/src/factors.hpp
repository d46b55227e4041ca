#pragma once

#include "paneldata.hpp"

#include <string>
#include <vector>

namespace ccepc {

// Spectrum of (NT)^-1 U'U, descending, min(N, T) values. Eigenvalues below
// 1e-12 * lambda_1 are clamped to zero and listed in `clamped`.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<int> clamped;
};

// Per-unit demeaning when `center`; per-unit scaling to unit variance when
// `normalize` (sensitivity option, off by default).
Matrix prepare_for_pca(const Matrix& U, bool center, bool normalize);

Spectrum eigen_spectrum(const Matrix& U, bool center, bool normalize = false);

struct FactorCount {
  int k_er = 0;
  int k_gr = 0;
  int kmax = 0;       // as requested
  int kmax_used = 0;  // after truncation at a zero eigenvalue
  std::vector<double> er;  // er[k-1] = ER(k)
  std::vector<double> gr;  // gr[k-1] = GR(k)
  // Ratios at k = 0 from the mock eigenvalue V(0) / ln(min(N, T)); reported
  // only, the selection itself runs over 1..kmax.
  double er0 = 0;
  double gr0 = 0;
  bool prefers_zero = false;
  std::vector<std::string> warnings;
};

FactorCount ahn_horenstein(const std::vector<double>& eigenvalues, int kmax);

int default_kmax(int n, int t);

struct SignAnchor {
  std::string rule;  // "csa-correlation" or "first-element"
  double value = 0;  // correlation with the cross-section average, or the first element
  bool flipped = false;
};

struct FactorSet {
  std::vector<int> periods;        // quarter index per component row
  Matrix components;               // T x m, components' components / T = I
  Matrix loadings;                 // N x m, U components / T
  std::vector<double> eigenvalues; // full spectrum, descending
  std::vector<double> shares;      // eigenvalue / sum, full spectrum
  std::vector<SignAnchor> anchors; // one per component

  int count() const { return static_cast<int>(components.cols()); }
  double share_total() const;
};

FactorSet extract_pcs(const Matrix& U, int m, std::vector<int> periods = {},
                      bool center = true, bool normalize = false);

// `period,pc1,...,pcm`
std::string factors_to_csv(const FactorSet& factors);

}  // namespace ccepc
