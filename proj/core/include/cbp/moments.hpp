#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/model.hpp"
#include "cbp/spectral.hpp"

namespace cbp {

/// h_{n,k}(z_1..z_{n-1}) = alpha sum_{r=2}^n f^{(r)}/r! sum over compositions
/// (i_1..i_r) of n of n!/(i_1!..i_r!) z_{i_1}..z_{i_r}, where fact[r-1] is
/// f^{(r)}(1) and z[i-1] is z_i. Evaluated by a convolution over the number
/// of parts, so it is exact in rational arithmetic.
template <class T>
T h_nk(const T& alpha, const std::vector<T>& fact, int n, const std::vector<T>& z) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "h_nk needs n >= 2");
  if (fact.size() < static_cast<std::size_t>(n)) {
    fail(ErrorCode::MomentOrderMissing, "h_nk needs factorial moments up to order " + std::to_string(n));
  }
  if (z.size() + 1 < static_cast<std::size_t>(n)) fail(ErrorCode::InvalidArgument, "h_nk needs z_1..z_{n-1}");
  const auto un = static_cast<std::size_t>(n);
  std::vector<T> factorial(un + 1, T(1));
  for (std::size_t i = 1; i <= un; ++i) factorial[i] = factorial[i - 1] * T(static_cast<long>(i));
  std::vector<T> w(un, T(0));
  for (std::size_t i = 1; i < un; ++i) w[i] = z[i - 1] / factorial[i];
  // parts[m]: sum over compositions of m into r parts of prod z_i / i!.
  std::vector<T> parts(un + 1, T(0));
  for (std::size_t m = 1; m < un; ++m) parts[m] = w[m];
  T sum(0);
  for (std::size_t r = 2; r <= un; ++r) {
    std::vector<T> next(un + 1, T(0));
    for (std::size_t m = r; m <= un; ++m) {
      for (std::size_t i = 1; i + r - 1 <= m; ++i) next[m] += w[i] * parts[m - i];
    }
    parts = std::move(next);
    sum += fact[r - 1] / factorial[r] * factorial[un] * parts[un];
  }
  return alpha * sum;
}

/// h_{n,k} for catalyst k of the model.
double h_nk(const CbpModel& model, int n, std::size_t k, const std::vector<double>& z);

struct LocalConstant {
  Site x, y;
  int order = 1;
  char symbol = 'a';  ///< 'a', 'b', or '0' (subcritical)
  double value = 0.0;
  bool positive = false;
};

struct TotalConstant {
  Site x;
  int order = 1;
  char symbol = 'A';  ///< 'A', 'B' or 'C'
  double value = 0.0;
  bool positive = false;
};

struct MomentTable {
  Regime regime = Regime::Subcritical;
  double nu = 0.0;
  /// Unset when the regime does not depend on it and it was not decided.
  std::optional<bool> recurrent;
  /// Critical regime with an infinite mean return time: Delta'(0) = +inf
  /// and the b, B constants vanish without a replacement normalisation.
  bool degenerate_normalization = false;
  /// Some catalyst has alpha > 0 and an offspring law other than delta_1.
  bool nondegenerate = false;
  std::vector<LocalConstant> local;
  std::vector<TotalConstant> total;
};

/// Asymptotic constants of the factorial moments of local and total
/// particle numbers. Lower orders are cached and reused by higher ones.
class MomentEngine {
 public:
  explicit MomentEngine(const CbpModel& model, const ClassifyOptions& opts = {});

  const CbpModel& model() const { return kernel_.model(); }
  const SpectralReport& report() const { return report_; }
  Regime regime() const { return report_.regime; }
  double nu() const { return report_.nu.value_or(0.0); }
  /// Always decided outside the supercritical regime (Undecided otherwise).
  std::optional<bool> recurrent() const { return recurrent_; }
  bool degenerate_normalization() const;
  bool nondegenerate() const { return nondegenerate_; }

  /// Dispatches on the regime: a_n, b_n, or 0 when subcritical.
  double local(const Site& x, const Site& y, int n) const;
  /// Dispatches on the regime: A_n, B_n or C_n.
  double total(const Site& x, int n) const;
  bool local_positive(int n) const;
  bool total_positive() const;

  /// Regime-specific accessors; throw RegimeMismatch otherwise.
  double a(const Site& x, const Site& y, int n) const;
  double A(const Site& x, int n) const;
  double b(const Site& x, const Site& y, int n) const;
  double B(const Site& x, int n) const;
  double C(const Site& x, int n) const;

  MomentTable table(const std::vector<Site>& xs, const std::vector<Site>& ys, int max_order) const;

 private:
  void check_order(int n) const;
  void require(Regime r, const char* name) const;
  const DeltaReport& delta(double lambda, bool with_derivative) const;
  /// Constants at the catalysts, index i for w_i, for orders 1..n.
  std::vector<double> local_at_catalysts(const Site& y, int n) const;
  std::vector<double> total_at_catalysts(int n) const;
  /// _{W_i}F*_{x,w_i}(lambda) for i = 1..N.
  std::vector<double> projection(const Site& x, double lambda) const;
  double project(const Site& x, const std::vector<double>& at_catalysts, double lambda) const;
  std::vector<double> first_local(const Site& y) const;
  std::vector<double> first_total() const;
  double h(std::size_t k, int n, const std::vector<std::vector<double>>& lower) const;

  CatalystKernel kernel_;
  SpectralReport report_;
  std::optional<bool> recurrent_;
  bool nondegenerate_ = false;

  mutable std::recursive_mutex mutex_;
  mutable std::map<std::pair<double, bool>, std::unique_ptr<DeltaReport>> deltas_;
  /// Per target y: orders 1..k, each a vector over catalysts.
  mutable std::map<Site, std::vector<std::vector<double>>> local_cache_;
  mutable std::vector<std::vector<double>> total_cache_;
};

namespace moments {

/// Adds pseudo-catalysts at x (and y) with alpha = 0, zero offspring
/// moments and beta = -q(site, site). Throws SiteAlreadyCatalyst.
CbpModel augment_sites(const CbpModel& model, const Site& x, const std::optional<Site>& y = std::nullopt);

MomentTable moment_table(const CbpModel& model, const std::vector<Site>& xs, const std::vector<Site>& ys,
                         int max_order);

}  // namespace moments
}  // namespace cbp
