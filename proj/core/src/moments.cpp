#include "cbp/moments.hpp"

#include <cmath>

namespace cbp {

double h_nk(const CbpModel& model, int n, std::size_t k, const std::vector<double>& z) {
  const Catalyst& c = model.catalyst(k);
  if (n > model.n_max()) {
    fail(ErrorCode::MomentOrderMissing, "order " + std::to_string(n) + " exceeds n_max");
  }
  return h_nk<double>(c.alpha, c.moments, n, z);
}

MomentEngine::MomentEngine(const CbpModel& model, const ClassifyOptions& opts) : kernel_(model) {
  report_ = spectral::classify(kernel_, opts);
  if (model.chain().is_finite()) {
    recurrent_ = true;
  } else if (report_.regime != Regime::Supercritical) {
    recurrent_ = chain::is_recurrent(model.chain());
  } else {
    try {
      recurrent_ = chain::is_recurrent(model.chain());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Undecided) throw;
    }
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.catalyst(i).alpha > 0.0 && model.nondegenerate_law(i)) nondegenerate_ = true;
  }
}

const DeltaReport& MomentEngine::delta(double lambda, bool with_derivative) const {
  std::lock_guard lock(mutex_);
  if (auto it = deltas_.find({lambda, true}); it != deltas_.end()) return *it->second;
  if (!with_derivative) {
    if (auto it = deltas_.find({lambda, false}); it != deltas_.end()) return *it->second;
  }
  auto rep = std::make_unique<DeltaReport>(spectral::delta_and_adjuncts(kernel_, lambda, with_derivative));
  auto [it, inserted] = deltas_.emplace(std::make_pair(lambda, with_derivative), std::move(rep));
  return *it->second;
}

bool MomentEngine::degenerate_normalization() const {
  if (report_.regime != Regime::Critical) return false;
  const double d = delta(0.0, true).derivative;
  return !std::isfinite(d);
}

void MomentEngine::check_order(int n) const {
  if (n < 1) fail(ErrorCode::InvalidArgument, "moment order must be >= 1");
  if (n > model().n_max()) {
    fail(ErrorCode::MomentOrderMissing, "order " + std::to_string(n) + " exceeds n_max = " +
                                            std::to_string(model().n_max()));
  }
}

void MomentEngine::require(Regime r, const char* name) const {
  if (report_.regime != r) {
    fail(ErrorCode::RegimeMismatch, std::string(name) + " constants exist only for " + std::string(to_string(r)) +
                                        " processes; this one is " + std::string(to_string(report_.regime)));
  }
}

std::vector<double> MomentEngine::projection(const Site& x, double lambda) const {
  const CbpModel& m = model();
  const std::vector<Site> sites = m.sites();
  std::vector<double> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::vector<Site> others;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (k != i) others.push_back(sites[k]);
    }
    const auto batch =
        chain::transforms(m.chain(), std::span<const Site>(&x, 1), sites[i], make_site_set(others), lambda, false, false);
    out.push_back(batch.hit.front().value);
  }
  return out;
}

double MomentEngine::project(const Site& x, const std::vector<double>& at_catalysts, double lambda) const {
  if (auto i = model().catalyst_index(x)) return at_catalysts[*i];
  const std::vector<double> f = projection(x, lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * at_catalysts[i];
  return sum;
}

double MomentEngine::h(std::size_t k, int n, const std::vector<std::vector<double>>& lower) const {
  std::vector<double> z;
  for (int r = 0; r + 1 < n; ++r) z.push_back(lower[static_cast<std::size_t>(r)][k]);
  const Catalyst& c = model().catalyst(k);
  return h_nk<double>(c.alpha, c.moments, n, z);
}

std::vector<double> MomentEngine::first_local(const Site& y) const {
  const CbpModel& m = model();
  const std::size_t n = m.size();
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<double> out(n, 0.0);
  const bool super = report_.regime == Regime::Supercritical;
  const double lambda = super ? nu() : 0.0;
  const DeltaReport& dr = delta(lambda, true);
  const double dprime = dr.derivative;
  if (!super && !std::isfinite(dprime)) return out;
  const Eigen::MatrixXd& adj = dr.adjuncts;

  if (auto j0 = m.catalyst_index(y)) {
    const auto jj = static_cast<Eigen::Index>(*j0);
    const double beta = m.catalyst(*j0).beta;
    for (Eigen::Index i = 0; i < ni; ++i) {
      out[static_cast<std::size_t>(i)] = adj(jj, i) / ((lambda + beta) * dprime);
    }
    return out;
  }

  std::vector<Site> starts = m.sites();
  starts.push_back(y);
  const auto batch = chain::transforms(m.chain(), starts, y, m.catalyst_set(), lambda, false, false);
  const double fyy = batch.hit[n].value;
  const double denom = (lambda + m.chain().exit_rate(y)) * dprime * (1.0 - fyy);
  for (Eigen::Index i = 0; i < ni; ++i) {
    double num = 0.0;
    for (Eigen::Index j = 0; j < ni; ++j) {
      const Catalyst& c = m.catalyst(static_cast<std::size_t>(j));
      const double g = c.beta / (lambda + c.beta);
      num += adj(j, i) * (1.0 - c.alpha) * g * batch.bar[static_cast<std::size_t>(j)].value;
    }
    out[static_cast<std::size_t>(i)] = num / denom;
  }
  return out;
}

std::vector<double> MomentEngine::first_total() const {
  const CbpModel& m = model();
  const std::size_t n = m.size();
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<double> out(n, 0.0);
  switch (report_.regime) {
    case Regime::Supercritical: {
      const double v = nu();
      const DeltaReport& dr = delta(v, true);
      for (Eigen::Index i = 0; i < ni; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < ni; ++j) {
          const Catalyst& c = m.catalyst(static_cast<std::size_t>(j));
          s += c.alpha * c.beta * (c.moments[0] - 1.0) * dr.adjuncts(j, i) / (v * (v + c.beta) * dr.derivative);
        }
        out[static_cast<std::size_t>(i)] = s;
      }
      break;
    }
    case Regime::Critical: {
      if (recurrent_.value_or(true)) break;
      const DeltaReport& dr = delta(0.0, true);
      if (!std::isfinite(dr.derivative)) break;
      for (Eigen::Index i = 0; i < ni; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < ni; ++j) {
          const Catalyst& c = m.catalyst(static_cast<std::size_t>(j));
          s += c.alpha * (c.moments[0] - 1.0) * dr.adjuncts(j, i) / dr.derivative;
        }
        out[static_cast<std::size_t>(i)] = s;
      }
      break;
    }
    case Regime::Subcritical: {
      if (recurrent_.value_or(true)) break;
      const DeltaReport& dr = delta(0.0, false);
      for (Eigen::Index i = 0; i < ni; ++i) {
        double s = 1.0;
        for (Eigen::Index j = 0; j < ni; ++j) {
          const Catalyst& c = m.catalyst(static_cast<std::size_t>(j));
          s += c.alpha * (c.moments[0] - 1.0) * dr.adjuncts(j, i) / dr.delta;
        }
        out[static_cast<std::size_t>(i)] = s;
      }
      break;
    }
  }
  return out;
}

namespace {

double binomial(int n, int r) {
  double out = 1.0;
  for (int k = 1; k <= r; ++k) out = out * (n - r + k) / k;
  return out;
}

// sum_{r=1}^{n-1} C(n, r) z_r z_{n-r} at catalyst k.
double square_sum(int n, std::size_t k, const std::vector<std::vector<double>>& lower) {
  double s = 0.0;
  for (int r = 1; r < n; ++r) {
    s += binomial(n, r) * lower[static_cast<std::size_t>(r - 1)][k] * lower[static_cast<std::size_t>(n - r - 1)][k];
  }
  return s;
}

}  // namespace

std::vector<double> MomentEngine::local_at_catalysts(const Site& y, int n) const {
  std::lock_guard lock(mutex_);
  auto& orders = local_cache_[y];
  if (orders.empty()) orders.push_back(first_local(y));
  const CbpModel& m = model();
  const auto ni = static_cast<Eigen::Index>(m.size());
  while (static_cast<int>(orders.size()) < n) {
    const int k = static_cast<int>(orders.size()) + 1;
    std::vector<double> next(m.size(), 0.0);
    if (report_.regime == Regime::Supercritical) {
      const double lambda = k * nu();
      const DeltaReport& dr = delta(lambda, false);
      for (Eigen::Index i = 0; i < ni; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < ni; ++j) {
          const double beta = m.catalyst(static_cast<std::size_t>(j)).beta;
          s += beta * dr.adjuncts(j, i) / ((lambda + beta) * dr.delta) * h(static_cast<std::size_t>(j), k, orders);
        }
        next[static_cast<std::size_t>(i)] = s;
      }
    } else if (report_.regime == Regime::Critical && local_positive(k)) {
      const DeltaReport& dr = delta(0.0, true);
      for (Eigen::Index i = 0; i < ni; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < ni; ++j) {
          const auto jj = static_cast<std::size_t>(j);
          const Catalyst& c = m.catalyst(jj);
          if (c.alpha == 0.0) continue;
          s += c.alpha * c.moments[1] * dr.adjuncts(j, i) / (2.0 * (k - 1) * dr.derivative) * square_sum(k, jj, orders);
        }
        next[static_cast<std::size_t>(i)] = s;
      }
    }
    orders.push_back(std::move(next));
  }
  return orders[static_cast<std::size_t>(n - 1)];
}

std::vector<double> MomentEngine::total_at_catalysts(int n) const {
  std::lock_guard lock(mutex_);
  if (total_cache_.empty()) total_cache_.push_back(first_total());
  const CbpModel& m = model();
  const auto ni = static_cast<Eigen::Index>(m.size());
  while (static_cast<int>(total_cache_.size()) < n) {
    const int k = static_cast<int>(total_cache_.size()) + 1;
    std::vector<double> next(m.size(), 0.0);
    switch (report_.regime) {
      case Regime::Supercritical: {
        const double lambda = k * nu();
        const DeltaReport& dr = delta(lambda, false);
        for (Eigen::Index i = 0; i < ni; ++i) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < ni; ++j) {
            const double beta = m.catalyst(static_cast<std::size_t>(j)).beta;
            s += beta * dr.adjuncts(j, i) / ((lambda + beta) * dr.delta) *
                 h(static_cast<std::size_t>(j), k, total_cache_);
          }
          next[static_cast<std::size_t>(i)] = s;
        }
        break;
      }
      case Regime::Critical: {
        if (!total_positive()) break;
        const DeltaReport& dr = delta(0.0, true);
        for (Eigen::Index i = 0; i < ni; ++i) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < ni; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const Catalyst& c = m.catalyst(jj);
            if (c.alpha == 0.0) continue;
            s += c.alpha * c.moments[1] * dr.adjuncts(j, i) / (2.0 * (2 * k - 1) * dr.derivative) *
                 square_sum(k, jj, total_cache_);
          }
          next[static_cast<std::size_t>(i)] = s;
        }
        break;
      }
      case Regime::Subcritical: {
        if (!total_positive()) break;
        const DeltaReport& dr = delta(0.0, false);
        for (Eigen::Index i = 0; i < ni; ++i) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < ni; ++j) {
            s += dr.adjuncts(j, i) / dr.delta * h(static_cast<std::size_t>(j), k, total_cache_);
          }
          next[static_cast<std::size_t>(i)] = s;
        }
        break;
      }
    }
    total_cache_.push_back(std::move(next));
  }
  return total_cache_[static_cast<std::size_t>(n - 1)];
}

bool MomentEngine::local_positive(int n) const {
  switch (report_.regime) {
    case Regime::Supercritical: return true;
    case Regime::Critical:
      return !degenerate_normalization() && (n == 1 || !recurrent_.value_or(true) || nondegenerate_);
    case Regime::Subcritical: return false;
  }
  return false;
}

bool MomentEngine::total_positive() const {
  switch (report_.regime) {
    case Regime::Supercritical: return true;
    case Regime::Critical: return !recurrent_.value_or(true) && !degenerate_normalization();
    case Regime::Subcritical: return !recurrent_.value_or(true);
  }
  return false;
}

double MomentEngine::a(const Site& x, const Site& y, int n) const {
  require(Regime::Supercritical, "a_n");
  check_order(n);
  return project(x, local_at_catalysts(y, n), n * nu());
}

double MomentEngine::A(const Site& x, int n) const {
  require(Regime::Supercritical, "A_n");
  check_order(n);
  return project(x, total_at_catalysts(n), n * nu());
}

double MomentEngine::b(const Site& x, const Site& y, int n) const {
  require(Regime::Critical, "b_n");
  check_order(n);
  if (!local_positive(n)) return 0.0;
  return project(x, local_at_catalysts(y, n), 0.0);
}

double MomentEngine::B(const Site& x, int n) const {
  require(Regime::Critical, "B_n");
  check_order(n);
  if (!total_positive()) return 0.0;
  return project(x, total_at_catalysts(n), 0.0);
}

double MomentEngine::C(const Site& x, int n) const {
  require(Regime::Subcritical, "C_n");
  check_order(n);
  if (!total_positive()) return 0.0;
  const std::vector<double> at = total_at_catalysts(n);
  if (n > 1 || model().catalyst_index(x)) return project(x, at, 0.0);
  const std::vector<double> f = projection(x, 0.0);
  double s = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * (at[i] - 1.0);
  return s;
}

double MomentEngine::local(const Site& x, const Site& y, int n) const {
  switch (report_.regime) {
    case Regime::Supercritical: return a(x, y, n);
    case Regime::Critical: return b(x, y, n);
    case Regime::Subcritical: check_order(n); return 0.0;
  }
  return 0.0;
}

double MomentEngine::total(const Site& x, int n) const {
  switch (report_.regime) {
    case Regime::Supercritical: return A(x, n);
    case Regime::Critical: return B(x, n);
    case Regime::Subcritical: return C(x, n);
  }
  return 0.0;
}

MomentTable MomentEngine::table(const std::vector<Site>& xs, const std::vector<Site>& ys, int max_order) const {
  check_order(max_order);
  MomentTable t;
  t.regime = report_.regime;
  t.nu = nu();
  t.recurrent = recurrent_;
  t.degenerate_normalization = degenerate_normalization();
  t.nondegenerate = nondegenerate_;
  const char local_symbol = report_.regime == Regime::Supercritical ? 'a'
                            : report_.regime == Regime::Critical    ? 'b'
                                                                    : '0';
  const char total_symbol = report_.regime == Regime::Supercritical ? 'A'
                            : report_.regime == Regime::Critical    ? 'B'
                                                                    : 'C';
  for (const Site& x : xs) {
    for (int n = 1; n <= max_order; ++n) {
      for (const Site& y : ys) {
        t.local.push_back(LocalConstant{x, y, n, local_symbol, local(x, y, n), local_positive(n)});
      }
      t.total.push_back(TotalConstant{x, n, total_symbol, total(x, n), total_positive()});
    }
  }
  return t;
}

namespace moments {

CbpModel augment_sites(const CbpModel& model, const Site& x, const std::optional<Site>& y) {
  const ChainModel& chain = model.chain();
  std::vector<Site> extra{x};
  if (y) {
    if (*y == x) fail(ErrorCode::InvalidArgument, "augmentation sites must differ");
    extra.push_back(*y);
  }
  std::vector<Catalyst> catalysts = model.catalysts();
  for (const Site& s : extra) {
    if (!chain.contains(s)) fail(ErrorCode::UnknownSite, "augmentation site is not a state of the chain");
    if (model.catalyst_index(s)) fail(ErrorCode::SiteAlreadyCatalyst, chain.label(s) + " is already a catalyst");
    Catalyst c;
    c.site = s;
    c.alpha = 0.0;
    c.beta = chain.exit_rate(s);
    c.moments.assign(static_cast<std::size_t>(model.n_max()), 0.0);
    catalysts.push_back(std::move(c));
  }
  return CbpModel::make(chain, std::move(catalysts), model.n_max());
}

MomentTable moment_table(const CbpModel& model, const std::vector<Site>& xs, const std::vector<Site>& ys,
                         int max_order) {
  return MomentEngine(model).table(xs, ys, max_order);
}

}  // namespace moments
}  // namespace cbp
