#include "cbp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbp/error.hpp"

namespace cbp {

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Supercritical: return "Supercritical";
    case Regime::Critical: return "Critical";
    case Regime::Subcritical: return "Subcritical";
  }
  return "Unknown";
}

CatalystKernel::CatalystKernel(const CbpModel& model) : model_(model) {
  const std::size_t n = model_.size();
  const ChainModel& chain = model_.chain();
  atoms_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Site& wi = model_.catalyst(i).site;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      atoms_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          chain.q(wi, model_.catalyst(j).site) / chain.exit_rate(wi);
    }
  }
}

namespace {

CatalystKernel::Table kernel_table(const CbpModel& model, double lambda, bool with_derivative) {
  const std::size_t n = model.size();
  const std::vector<Site> sites = model.sites();
  CatalystKernel::Table table;
  table.value.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  table.derivative = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Site> others;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) others.push_back(sites[k]);
    }
    const auto batch = chain::transforms(model.chain(), sites, sites[j], make_site_set(others), lambda,
                                         with_derivative, false);
    for (std::size_t i = 0; i < n; ++i) {
      table.value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch.bar[i].value;
      table.derivative(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch.bar[i].dvalue;
    }
  }
  return table;
}

}  // namespace

const CatalystKernel::Table& CatalystKernel::at(double lambda) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(lambda); it != cache_.end()) return *it->second;
  }
  auto table = std::make_unique<Table>(kernel_table(model_, lambda, true));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(lambda, std::move(table));
  return *it->second;
}

const Eigen::MatrixXd& CatalystKernel::value_at(double lambda) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(lambda); it != cache_.end()) return it->second->value;
    if (auto it = values_.find(lambda); it != values_.end()) return *it->second;
  }
  auto value = std::make_unique<Eigen::MatrixXd>(kernel_table(model_, lambda, false).value);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = values_.emplace(lambda, std::move(value));
  return *it->second;
}

const Eigen::MatrixXd& CatalystKernel::totals() const {
  {
    std::lock_guard lock(mutex_);
    if (totals_) return *totals_;
  }
  const std::size_t n = model_.size();
  const std::vector<Site> sites = model_.sites();
  auto totals = std::make_unique<Eigen::MatrixXd>(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<Site> others;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) others.push_back(sites[k]);
    }
    const auto batch = chain::transforms(model_.chain(), sites, sites[j], make_site_set(others), 0.0, false, false);
    for (std::size_t i = 0; i < n; ++i) {
      (*totals)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch.bar[i].value;
    }
  }
  std::lock_guard lock(mutex_);
  if (!totals_) totals_ = std::move(totals);
  return *totals_;
}

namespace spectral {

Eigen::MatrixXd minor(const Eigen::MatrixXd& a, Eigen::Index i, Eigen::Index j) {
  const Eigen::Index n = a.rows(), m = a.cols();
  Eigen::MatrixXd out(n - 1, m - 1);
  for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
    if (r == i) continue;
    for (Eigen::Index c = 0, cc = 0; c < m; ++c) {
      if (c == j) continue;
      out(rr, cc++) = a(r, c);
    }
    ++rr;
  }
  return out;
}

namespace {

// D(lambda) and optionally its derivative. At lambda = 0 the values come from
// the cached totals, so classification never pays for derivative solves.
MatrixWithDerivative assemble_D(const CatalystKernel& kernel, double lambda, bool with_derivative) {
  const CbpModel& model = kernel.model();
  const auto n = static_cast<Eigen::Index>(model.size());
  const Eigen::MatrixXd& value = lambda == 0.0 ? kernel.totals()
                                : with_derivative ? kernel.at(lambda).value
                                                  : kernel.value_at(lambda);
  const Eigen::MatrixXd* deriv = with_derivative ? &kernel.at(lambda).derivative : nullptr;
  MatrixWithDerivative out{Eigen::MatrixXd(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Catalyst& c = model.catalyst(static_cast<std::size_t>(i));
    const double g = c.beta / (lambda + c.beta);
    const double dg = -c.beta / ((lambda + c.beta) * (lambda + c.beta));
    const double m = c.moments[0];
    for (Eigen::Index j = 0; j < n; ++j) {
      out.value(i, j) = (1.0 - c.alpha) * g * value(i, j) + (i == j ? c.alpha * m * g : 0.0);
      if (!deriv) continue;
      const double fd = (*deriv)(i, j);
      double dv = std::isinf(fd) ? fd : (1.0 - c.alpha) * (dg * value(i, j) + g * fd);
      if (i == j) dv += c.alpha * m * dg;
      out.derivative(i, j) = dv;
    }
  }
  return out;
}

}  // namespace

MatrixWithDerivative build_D(const CatalystKernel& kernel, double lambda) {
  return assemble_D(kernel, lambda, true);
}

MatrixWithDerivative build_D(const CbpModel& model, double lambda) {
  return build_D(CatalystKernel(model), lambda);
}

double rho_D(const CatalystKernel& kernel, double lambda) {
  return perron_root(assemble_D(kernel, lambda, false).value).rho;
}

BlockMatrix build_M(const CatalystKernel& kernel) {
  const CbpModel& model = kernel.model();
  const std::size_t n = model.size();
  const Eigen::MatrixXd& atoms = kernel.atoms();
  const Eigen::MatrixXd& totals = kernel.totals();
  BlockMatrix out;
  out.k_sets.resize(n);
  out.offset.resize(n);
  std::size_t types = n;
  for (std::size_t j = 0; j < n; ++j) {
    out.offset[j] = types;
    for (std::size_t k = 0; k < n; ++k) {
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      if (totals(jj, kk) - atoms(jj, kk) > 1e-12) out.k_sets[j].push_back(k);
    }
    types += out.k_sets[j].size();
  }
  out.types = types;
  const auto l = static_cast<Eigen::Index>(types);
  out.m = Eigen::MatrixXd::Zero(l, l);
  for (std::size_t k = 0; k < n; ++k) {
    const Catalyst& c = model.catalyst(k);
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.m(kk, jj) = (k == j ? c.alpha * c.moments[0] : 0.0) + (1.0 - c.alpha) * atoms(kk, jj);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double a = model.catalyst(j).alpha;
    for (std::size_t i = 0; i < out.k_sets[j].size(); ++i) {
      const std::size_t k = out.k_sets[j][i];
      const auto row = static_cast<Eigen::Index>(out.offset[j] + i);
      const auto kk = static_cast<Eigen::Index>(k);
      out.m(jj, row) = (1.0 - a) * (totals(jj, kk) - atoms(jj, kk));
      out.m(row, kk) = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd build_H(const CatalystKernel& kernel, const BlockMatrix& m, double lambda) {
  const CbpModel& model = kernel.model();
  const std::size_t n = model.size();
  const Eigen::MatrixXd& atoms = kernel.atoms();
  const Eigen::MatrixXd& totals = kernel.totals();
  const Eigen::MatrixXd& f = lambda == 0.0 ? totals : kernel.value_at(lambda);
  Eigen::MatrixXd h = m.m;
  for (std::size_t r = 0; r < n; ++r) {
    const double beta = model.catalyst(r).beta;
    h.row(static_cast<Eigen::Index>(r)) *= beta / (lambda + beta);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < m.k_sets[j].size(); ++i) {
      const auto kk = static_cast<Eigen::Index>(m.k_sets[j][i]);
      const double g =
          lambda == 0.0 ? 1.0 : (f(jj, kk) - atoms(jj, kk)) / (totals(jj, kk) - atoms(jj, kk));
      h.row(static_cast<Eigen::Index>(m.offset[j] + i)) *= g;
    }
  }
  return h;
}

Eigen::MatrixXd build_M_hat(const CatalystKernel& kernel, const BlockMatrix& m) {
  const CbpModel& model = kernel.model();
  const auto l = static_cast<Eigen::Index>(m.types);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(l + 1, l + 1);
  out.topLeftCorner(l, l) = m.m;
  out(l, l) = 1.0;
  const Eigen::MatrixXd& totals = kernel.totals();
  const bool finite = model.chain().is_finite();
  const double noise = finite ? 0.0 : model.chain().truncation().tolerance;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    // Finite chains are recurrent: the escape mass is exactly zero.
    double escape = finite ? 0.0 : 1.0 - totals.row(ii).sum();
    if (escape <= noise) escape = 0.0;
    out(ii, l) = (1.0 - model.catalyst(i).alpha) * escape;
  }
  return out;
}

namespace {

double tilde_coefficient(const Catalyst& c, double e, double lambda) {
  const double g = c.beta / (lambda + c.beta);
  return c.alpha * c.moments[0] * g - 1.0 + (1.0 - c.alpha) * g * (lambda + e) / e;
}

}  // namespace

Eigen::MatrixXd build_D_tilde(const CbpModel& model, double lambda) {
  const std::size_t n = model.size();
  const std::vector<Site> sites = model.sites();
  const ChainModel& chain = model.chain();
  Eigen::MatrixXd fstar(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto batch = chain::transforms(chain, sites, sites[j], {}, lambda, false, false);
    for (std::size_t i = 0; i < n; ++i) {
      fstar(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch.hit[i].value;
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Catalyst& c = model.catalyst(i);
    const double coef = tilde_coefficient(c, chain.exit_rate(c.site), lambda);
    const double g = c.beta / (lambda + c.beta);
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out(ii, jj) = coef * fstar(ii, jj);
      if (i == j) out(ii, jj) += (c.alpha * c.moments[0] * g - 1.0) * (1.0 - fstar(ii, ii));
    }
  }
  return out;
}

Eigen::MatrixXd build_D_hat(const CbpModel& model, double lambda) {
  const std::size_t n = model.size();
  const ChainModel& chain = model.chain();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Catalyst& c = model.catalyst(i);
    const double e = chain.exit_rate(c.site);
    const double coef = tilde_coefficient(c, e, lambda);
    const double g = c.beta / (lambda + c.beta);
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out(ii, jj) = coef * chain::green_lst(chain, c.site, model.catalyst(j).site, lambda);
      if (i == j) out(ii, jj) -= (1.0 - c.alpha) * g / e;
    }
  }
  return out;
}

SpectralReport classify(const CatalystKernel& kernel, const ClassifyOptions& opts) {
  SpectralReport rep;
  rep.tol_band = opts.tol_band;
  rep.rho_d = rho_D(kernel, 0.0);
  rep.boundary = std::abs(rep.rho_d - 1.0) < opts.tol_band;
  if (rep.rho_d > 1.0 + opts.tol_band) {
    rep.regime = Regime::Supercritical;
  } else if (rep.rho_d < 1.0 - opts.tol_band) {
    rep.regime = Regime::Subcritical;
    return rep;
  } else {
    rep.regime = Regime::Critical;
    rep.nu = 0.0;
    return rep;
  }
  if (opts.regime_only) return rep;

  double hi = 1.0;
  double rho_hi = rho_D(kernel, hi);
  for (int k = 0; rho_hi >= 1.0; ++k) {
    if (k >= opts.max_doublings) fail(ErrorCode::BracketNotFound, "rho(D(lambda)) does not drop below 1");
    hi *= 2.0;
    rho_hi = rho_D(kernel, hi);
  }
  rep.lambda_hi = hi;
  double lo = 0.0;
  double nu = 0.5 * (lo + hi);
  for (int k = 0;; ++k) {
    if (k >= opts.max_bisections) fail(ErrorCode::NoConvergence, "bisection for the Malthusian parameter stalled");
    nu = 0.5 * (lo + hi);
    const double r = rho_D(kernel, nu);
    rep.bisection_steps = k + 1;
    if (std::abs(r - 1.0) <= opts.root_tolerance) break;
    (r > 1.0 ? lo : hi) = nu;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  rep.nu = nu;
  return rep;
}

SpectralReport classify(const CbpModel& model, const ClassifyOptions& opts) {
  return classify(CatalystKernel(model), opts);
}

DeltaReport delta_and_adjuncts(const CatalystKernel& kernel, double lambda, bool with_derivative) {
  const MatrixWithDerivative d = assemble_D(kernel, lambda, with_derivative);
  const Eigen::Index n = d.value.rows();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - d.value;
  DeltaReport rep;
  rep.d = d.value;
  rep.delta = a.determinant();
  rep.adjuncts.resize(n, n);
  if (n == 1) {
    rep.adjuncts(0, 0) = 1.0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        rep.adjuncts(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor(a, i, j).determinant();
      }
    }
  }
  if (!with_derivative) return rep;
  // Jacobi: d det(A) = sum_ij cofactor_ij dA_ij with dA = -dD.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (rep.adjuncts(i, j) == 0.0) continue;
      sum -= rep.adjuncts(i, j) * d.derivative(i, j);
    }
  }
  rep.derivative = sum;
  return rep;
}

DeltaReport delta_and_adjuncts(const CbpModel& model, double lambda, bool with_derivative) {
  return delta_and_adjuncts(CatalystKernel(model), lambda, with_derivative);
}

double d_tilde_root(const CbpModel& model, double lo, double hi, int grid) {
  if (!(hi > lo) || grid < 1) fail(ErrorCode::InvalidArgument, "empty search interval");
  auto f = [&](double lambda) { return build_D_tilde(model, lambda).determinant(); };
  double right = hi, f_right = f(hi);
  if (f_right == 0.0) return hi;
  // Uniform steps down to the first grid cell, then geometric steps towards
  // lo; lo itself is excluded since det D_tilde may vanish there.
  const double step = (hi - lo) / grid;
  for (int k = grid - 1; k > -60; --k) {
    const double left = k > 0 ? lo + step * static_cast<double>(k) : lo + std::ldexp(step, k - 1);
    const double f_left = f(left);
    if (f_left == 0.0) return left;
    if ((f_left < 0.0) != (f_right < 0.0)) {
      double a = left, b = right, fa = f_left;
      for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, b); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    right = left;
    f_right = f_left;
  }
  fail(ErrorCode::BracketNotFound, "det D_tilde has no sign change on the search interval");
}

}  // namespace spectral
}  // namespace cbp
