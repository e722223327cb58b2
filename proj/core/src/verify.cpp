#include "cbp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <span>

#include "cbp/critset.hpp"
#include "cbp/error.hpp"
#include "cbp/moments.hpp"
#include "cbp/oracle.hpp"
#include "cbp/spectral.hpp"

namespace cbp {

double relative_error(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

SuiteResult& SuiteLog::get(const std::string& suite, double tol) {
  for (SuiteResult& r : results_) {
    if (r.name == suite) return r;
  }
  results_.push_back(SuiteResult{suite, tol, 0, 0, 0.0, {}});
  return results_.back();
}

void SuiteLog::check(const std::string& suite, double tol, bool ok, double error, const std::string& context) {
  SuiteResult& r = get(suite, tol);
  r.tolerance = std::max(r.tolerance, tol);
  ++r.cases;
  if (std::isnan(error)) error = std::numeric_limits<double>::infinity();
  r.max_error = std::max(r.max_error, error);
  if (!ok) {
    if (r.failures == 0) r.first_failure = context;
    ++r.failures;
  }
}

void SuiteLog::compare(const std::string& suite, double tol, double a, double b, const std::string& context) {
  const double e = relative_error(a, b);
  std::ostringstream os;
  os.precision(17);
  os << context << ": " << a << " vs " << b;
  check(suite, tol, e <= tol, e, os.str());
}

void SuiteLog::merge(const SuiteLog& other) {
  for (const SuiteResult& o : other.results_) {
    SuiteResult& r = get(o.name, o.tolerance);
    r.tolerance = std::max(r.tolerance, o.tolerance);
    if (r.failures == 0 && o.failures > 0) r.first_failure = o.first_failure;
    r.cases += o.cases;
    r.failures += o.failures;
    r.max_error = std::max(r.max_error, o.max_error);
  }
}

namespace verify {

namespace {

// Absolute slack for order checks; transforms lie in [0, 1].
constexpr double kRoundoff = 1e-12;

double hit(const ChainModel& c, const Site& x, const Site& y, const SiteSet& h, double lambda) {
  return chain::transforms(c, std::span<const Site>(&x, 1), y, h, lambda, false, false).hit.front().value;
}

double bar(const ChainModel& c, const Site& x, const Site& y, const SiteSet& h, double lambda) {
  return chain::transforms(c, std::span<const Site>(&x, 1), y, h, lambda, false, false).bar.front().value;
}

SiteSet without(const std::vector<Site>& w, std::size_t i) {
  std::vector<Site> out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k != i) out.push_back(w[k]);
  }
  return make_site_set(out);
}

SiteSet with(std::vector<Site> w, const Site& x) {
  w.push_back(x);
  return make_site_set(w);
}

double det(const Eigen::MatrixXd& m) { return m.rows() == 0 ? 1.0 : m.determinant(); }

double sign(Eigen::Index p) { return p % 2 == 0 ? 1.0 : -1.0; }

std::string ctx(const char* what, std::size_t i, std::size_t j, double lambda) {
  std::ostringstream os;
  os << what << " i=" << i + 1 << " j=" << j + 1 << " lambda=" << lambda;
  return os.str();
}

// Non-catalyst sites usable as augmentation points.
std::vector<Site> free_sites(const CbpModel& model, std::mt19937_64& rng, std::size_t want) {
  std::vector<Site> out;
  const ChainModel& chain = model.chain();
  if (chain.is_finite()) {
    for (std::size_t s = 0; s < chain.num_states(); ++s) {
      if (!model.catalyst_index(Site::index(s))) out.push_back(Site::index(s));
    }
    std::shuffle(out.begin(), out.end(), rng);
  } else {
    Site probe = model.catalyst(0).site;
    for (int k = 0; k < 16 && out.size() < want; ++k) {
      probe.coords[0] += 1;
      if (!model.catalyst_index(probe)) out.push_back(probe);
    }
  }
  if (out.size() > want) out.resize(want);
  return out;
}


struct Tolerances {
  double tight;      // Chung, taboo decomposition, augmentation, H versus D determinants
  double augmented;  // determinant identities with augmented sites
  double root;       // root of det D_tilde against nu
  double fd;         // finite-difference derivatives
};

Tolerances tolerances_for(const CbpModel& model) {
  Tolerances t{1e-10, 1e-9, 1e-8, 1e-5};
  if (!model.chain().is_finite()) {
    const double floor = 100.0 * model.chain().truncation().tolerance;
    t.tight = std::max(t.tight, floor);
    t.augmented = std::max(t.augmented, floor);
    t.root = std::max(t.root, floor);
  }
  return t;
}

void chung_suite(const CbpModel& model, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  for (double lambda : {0.3, 1.7}) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gjj = chain::green_lst(c, w[j], w[j], lambda);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double f = hit(c, w[i], w[j], {}, lambda);
        if (i == j) {
          const double e = c.exit_rate(w[i]);
          log.compare("chung", tol.tight, f, 1.0 - 1.0 / ((lambda + e) * gjj), ctx("F*_ii", i, j, lambda));
        } else {
          const double gij = chain::green_lst(c, w[i], w[j], lambda);
          log.compare("chung", tol.tight, f, gij / gjj, ctx("F*_ij", i, j, lambda));
        }
      }
    }
  }
}

void taboo_suite(const CbpModel& model, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  const double lambda = 0.45;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      double rhs = hit(c, w[i], w[j], without(w, j), lambda);
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (k == j) continue;
        rhs += hit(c, w[i], w[k], without(w, k), lambda) * hit(c, w[k], w[j], {}, lambda);
      }
      log.compare("taboo_decomposition", tol.tight, hit(c, w[i], w[j], {}, lambda), rhs, ctx("F*", i, j, lambda));
    }
  }
}

void augmentation_suite(const CbpModel& model, const Site& x, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  const SiteSet all = make_site_set(w);
  std::vector<Site> starts = w;
  starts.push_back(x);
  for (double lambda : {0.0, 0.8}) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < starts.size(); ++j) {
        const double lhs = bar(c, starts[j], w[i], without(w, i), lambda);
        const double rhs = bar(c, starts[j], w[i], with(std::vector<Site>(without(w, i)), x), lambda) +
                           bar(c, starts[j], x, all, lambda) * hit(c, x, w[i], without(w, i), lambda);
        log.compare("augmentation", tol.tight, lhs, rhs, ctx("Fbar*", j, i, lambda));
      }
    }
  }
}

void derivative_suite(const CbpModel& model, const Site& x, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  std::vector<Site> starts = w;
  starts.push_back(x);
  const double lambda = 0.6, h = 1e-6;
  for (std::size_t j = 0; j < w.size(); ++j) {
    for (const SiteSet& taboo : {without(w, j), SiteSet{}}) {
      const auto mid = chain::transforms(c, starts, w[j], taboo, lambda, true, false);
      const auto up = chain::transforms(c, starts, w[j], taboo, lambda + h, false, false);
      const auto down = chain::transforms(c, starts, w[j], taboo, lambda - h, false, false);
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const double fd_bar = (up.bar[s].value - down.bar[s].value) / (2.0 * h);
        const double fd_hit = (up.hit[s].value - down.hit[s].value) / (2.0 * h);
        log.compare("derivative", tol.fd, mid.bar[s].dvalue, fd_bar, ctx("d Fbar*", s, j, lambda));
        log.compare("derivative", tol.fd, mid.hit[s].dvalue, fd_hit, ctx("d F*", s, j, lambda));
        const double rise = up.hit[s].value - mid.hit[s].value;
        log.check("monotonicity", kRoundoff, rise <= kRoundoff, std::max(0.0, rise),
                  ctx("F*(lambda)", s, j, lambda));
      }
    }
    // Enlarging the taboo set cannot increase a hitting transform.
    for (std::size_t s = 0; s < starts.size(); ++s) {
      const double small = hit(c, starts[s], w[j], {}, lambda);
      const double large = hit(c, starts[s], w[j], without(w, j), lambda);
      log.check("monotonicity", kRoundoff, large - small <= kRoundoff, std::max(0.0, large - small),
                ctx("taboo", s, j, lambda));
    }
  }
}

void sign_suite(const CatalystKernel& kernel, SuiteLog& log) {
  const BlockMatrix m = spectral::build_M(kernel);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.1, 1.0}) {
    const double rd = spectral::rho_D(kernel, lambda);
    const double rh = perron_root(spectral::build_H(kernel, m, lambda)).rho;
    const std::string where = "lambda=" + std::to_string(lambda);
    if (std::abs(rd - 1.0) > 1e-8 && std::abs(rh - 1.0) > 1e-8) {
      const bool agree = (rd > 1.0) == (rh > 1.0);
      log.check("sign_agreement", 0.0, agree, agree ? 0.0 : std::min(std::abs(rd - 1.0), std::abs(rh - 1.0)), where);
    }
    // rho(H) <= rho(D) <= rho(H)^2 above 1, reversed below.
    const double slack = 1e-10 * std::max(1.0, rd);
    const double lo = rh >= 1.0 ? rh : rh * rh;
    const double hi = rh >= 1.0 ? rh * rh : rh;
    const double violation = std::max({0.0, lo - rd, rd - hi});
    log.check("sandwich", slack, violation <= slack, violation, where);
    log.check("rho_decreasing", 0.0, rd < previous, 0.0, where);
    previous = rd;
  }
}

void determinant_suite(const CatalystKernel& kernel, double extra_lambda, const Tolerances& tol, SuiteLog& log) {
  const CbpModel& model = kernel.model();
  const BlockMatrix m = spectral::build_M(kernel);
  const auto n = static_cast<Eigen::Index>(model.size());
  const auto l = static_cast<Eigen::Index>(m.types);
  for (double lambda : {0.0, 0.5, extra_lambda}) {
    const Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(l, l) - spectral::build_H(kernel, m, lambda);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n) - spectral::build_D(kernel, lambda).value;
    log.compare("determinants", tol.tight, det(ih), det(id), ctx("det", 0, 0, lambda));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = model.catalyst(static_cast<std::size_t>(j)).beta /
                       (lambda + model.catalyst(static_cast<std::size_t>(j)).beta);
      for (Eigen::Index k = 0; k < n; ++k) {
        const double dk = det(spectral::minor(id, j, k));
        log.compare("determinants", tol.tight, det(spectral::minor(ih, j, k)), dk,
                    ctx("minor", static_cast<std::size_t>(j), static_cast<std::size_t>(k), lambda));
        for (std::size_t i = 0; i < m.k_sets[static_cast<std::size_t>(j)].size(); ++i) {
          const auto r = static_cast<Eigen::Index>(m.offset[static_cast<std::size_t>(j)] + i);
          const double lhs = sign(r + k) * det(spectral::minor(ih, r, k));
          const double rhs = sign(j + k) * m.m(j, r) * g * dk;
          log.compare("determinants", tol.tight, lhs, rhs,
                      ctx("intermediate minor", static_cast<std::size_t>(r), static_cast<std::size_t>(k), lambda));
        }
      }
    }
  }
}

void augmented_det_suite(const CbpModel& model, const Site& x, const Site& y, double lambda,
                  const std::optional<double>& nu, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  const SiteSet all = make_site_set(w);
  const std::size_t n = w.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const CbpModel ax = moments::augment_sites(model, x);
  const CbpModel axy = moments::augment_sites(model, x, y);

  auto identities = [&](double lam, bool derivatives) {
    const DeltaReport dr = spectral::delta_and_adjuncts(model, lam, derivatives);
    const DeltaReport drx = spectral::delta_and_adjuncts(ax, lam, derivatives);
    const DeltaReport drxy = spectral::delta_and_adjuncts(axy, lam, derivatives);
    const double fxx = hit(c, x, x, all, lam);
    const double fyy_x = hit(c, y, y, with(w, x), lam);
    const double fyy = hit(c, y, y, all, lam);
    const double fxy = hit(c, x, y, all, lam);
    std::vector<double> fi(n), gbx(n), gby(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Catalyst& cat = model.catalyst(i);
      const double g = (1.0 - cat.alpha) * cat.beta / (lam + cat.beta);
      fi[i] = hit(c, x, w[i], without(w, i), lam);
      gbx[i] = g * bar(c, w[i], x, all, lam);
      gby[i] = g * bar(c, w[i], y, all, lam);
    }
    const std::string at = "lambda=" + std::to_string(lam);
    if (derivatives) {
      log.compare("augmented_determinants", tol.augmented, drx.derivative, dr.derivative * (1.0 - fxx), "(3) " + at);
      log.compare("augmented_determinants", tol.augmented, drxy.derivative, dr.derivative * (1.0 - fxx) * (1.0 - fyy_x), "(4) " + at);
      return;
    }
    log.compare("augmented_determinants", tol.augmented, drx.delta, dr.delta * (1.0 - fxx), "(1) " + at);
    log.compare("augmented_determinants", tol.augmented, drxy.delta, dr.delta * (1.0 - fxx) * (1.0 - fyy_x), "(2) " + at);
    double cross_x = 0.0, cross_y = 0.0;
    for (Eigen::Index i = 0; i < ni; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      double col7 = 0.0;
      for (Eigen::Index j = 0; j < ni; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        log.compare("augmented_determinants", tol.augmented, drx.adjuncts(j, i), dr.adjuncts(j, i) * (1.0 - fxx), ctx("(5)", ui, uj, lam));
        col7 += dr.adjuncts(j, i) * gbx[uj];
        cross_x += fi[ui] * dr.adjuncts(j, i) * gbx[uj];
        cross_y += fi[ui] * dr.adjuncts(j, i) * gby[uj];
      }
      log.compare("augmented_determinants", tol.augmented, drx.adjuncts(ni, i), col7, ctx("(7)", ui, n, lam));
    }
    for (Eigen::Index j = 0; j < ni; ++j) {
      double row6 = 0.0;
      for (Eigen::Index i = 0; i < ni; ++i) row6 += fi[static_cast<std::size_t>(i)] * dr.adjuncts(j, i);
      log.compare("augmented_determinants", tol.augmented, drx.adjuncts(j, ni) / (1.0 - fxx), row6,
                  ctx("(6)", static_cast<std::size_t>(j), n, lam));
    }
    log.compare("augmented_determinants", tol.augmented, drx.adjuncts(ni, ni), dr.delta + cross_x, "(8) " + at);
    log.compare("augmented_determinants", tol.augmented, drxy.adjuncts(ni + 1, ni) * (1.0 - fyy) / ((1.0 - fxx) * (1.0 - fyy_x)),
                dr.delta * fxy + cross_y, "(9) " + at);
  };
  identities(lambda, false);
  if (nu && *nu > 0.0) identities(*nu, true);
}

void d_tilde_suite(const CbpModel& model, const SpectralReport& rep, const Tolerances& tol, SuiteLog& log) {
  const ChainModel& c = model.chain();
  const std::vector<Site> w = model.sites();
  const auto n = static_cast<Eigen::Index>(w.size());
  for (double lambda : {0.4, 1.3}) {
    const Eigen::MatrixXd dt = spectral::build_D_tilde(model, lambda);
    const Eigen::MatrixXd dh = spectral::build_D_hat(model, lambda);
    const Eigen::MatrixXd d = spectral::build_D(model, lambda).value;
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        r(i, j) = i == j ? 1.0 : hit(c, w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(j)], {}, lambda);
      }
    }
    const Eigen::MatrixXd dr = (d - Eigen::MatrixXd::Identity(n, n)) * r;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const double gjj = chain::green_lst(c, w[uj], w[uj], lambda);
        log.compare("d_tilde_hat", tol.tight, dt(i, j) * gjj, dh(i, j), ctx("D_tilde G = D_hat", ui, uj, lambda));
        log.compare("d_tilde_hat", tol.tight, dr(i, j), dt(i, j), ctx("(D - I) R = D_tilde", ui, uj, lambda));
      }
    }
  }
  if (rep.regime == Regime::Supercritical && rep.nu) {
    const double root = spectral::d_tilde_root(model, 0.0, rep.lambda_hi);
    log.compare("d_tilde_root", tol.root, root, *rep.nu, "root of det D_tilde vs nu");
  }
}

void moment_suite(const CbpModel& model, const SpectralReport& rep, const std::vector<Site>& free, SuiteLog& log) {
  if (rep.regime != Regime::Supercritical || free.empty()) return;
  const MomentEngine eng(model);
  const std::vector<Site> w = model.sites();
  const int orders = std::min(2, model.n_max());
  // Total constants carry a 1/nu factor, so transform round-off is amplified
  // near criticality.
  const double route_tol = 1e-9 * std::max(1.0, 0.01 / eng.nu());
  const Site& x = free[0];
  const MomentEngine ex(moments::augment_sites(model, x));
  log.compare("augmented_nu", 1e-10, ex.nu(), eng.nu(), "nu(x) vs nu");
  for (int n = 1; n <= orders; ++n) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      log.compare("route_equivalence", route_tol, eng.local(x, w[j], n), ex.local(x, w[j], n),
                  ctx("a_n(x, w_j)", static_cast<std::size_t>(n - 1), j, eng.nu()));
    }
    log.compare("route_equivalence", route_tol, eng.total(x, n), ex.total(x, n),
                ctx("A_n(x)", static_cast<std::size_t>(n - 1), 0, eng.nu()));
  }
  if (free.size() >= 2) {
    const Site& y = free[1];
    const MomentEngine ey(moments::augment_sites(model, y));
    log.compare("augmented_nu", 1e-10, ey.nu(), eng.nu(), "nu(y) vs nu");
    for (int n = 1; n <= orders; ++n) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        log.compare("route_equivalence", route_tol, eng.local(w[i], y, n), ey.local(w[i], y, n),
                    ctx("a_n(w_i, y)", i, static_cast<std::size_t>(n - 1), eng.nu()));
      }
    }
  }
  std::vector<Site> probes = w;
  probes.insert(probes.end(), free.begin(), free.end());
  for (const Site& a : probes) {
    for (int n = 1; n <= model.n_max(); ++n) {
      const double total = eng.total(a, n);
      log.check("positivity", 0.0, total > 0.0, 0.0, "A_n at " + model.chain().label(a));
      for (const Site& b : probes) {
        const double local = eng.local(a, b, n);
        log.check("positivity", 0.0, local > 0.0, 0.0,
                  "a_n at " + model.chain().label(a) + "," + model.chain().label(b));
      }
    }
  }
}

void critset_suite(const CbpModel& model, std::mt19937_64& rng, SuiteLog& log) {
  if (model.size() < 2) return;
  for (const Catalyst& c : model.catalysts()) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) return;
  }
  const CritSetSolver solver(model);
  std::vector<double> means;
  for (std::size_t k = 0; k < model.size(); ++k) means.push_back(model.mean(k));
  const std::size_t i = std::uniform_int_distribution<std::size_t>(0, model.size() - 1)(rng);
  const MeanSolution s = solver.solve(means, i);
  const std::optional<double> o = oracle::critical_mean(model, i, means);
  if (s.m && o) {
    log.compare("critset_bisection", 1e-8, *s.m, *o, ctx("m_i", i, i, 0.0));
  } else {
    const bool agree = !s.m && (!o || *o < 1e-8);
    log.check("critset_bisection", 1e-8, agree, 0.0, ctx("solvability", i, i, 0.0));
  }
}

}  // namespace

CbpModel random_model(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto states = static_cast<std::size_t>(n + 2 + std::uniform_int_distribution<int>(0, 3)(rng));
  ChainDescription desc;
  desc.kind = ChainKind::FiniteExplicit;
  desc.generator.assign(states, std::vector<double>(states, 0.0));
  for (std::size_t x = 0; x < states; ++x) {
    double sum = 0.0;
    for (std::size_t y = 0; y < states; ++y) {
      if (y == x) continue;
      double rate = 0.0;
      if (y == (x + 1) % states) {
        rate = 0.2 + 1.8 * u(rng);
      } else if (u(rng) < 0.4) {
        rate = 0.1 + 1.9 * u(rng);
      }
      desc.generator[x][y] = rate;
      sum += rate;
    }
    desc.generator[x][x] = -sum;
  }
  ChainModel chain = ChainModel::validate(desc);

  std::vector<std::size_t> order(states);
  for (std::size_t s = 0; s < states; ++s) order[s] = s;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Catalyst> catalysts;
  const double scale = 0.3 + 1.4 * u(rng);
  for (int k = 0; k < n; ++k) {
    Catalyst c;
    c.site = Site::index(order[static_cast<std::size_t>(k)]);
    c.alpha = 0.05 + 0.9 * u(rng);
    c.beta = 0.3 + 2.7 * u(rng);
    std::vector<double> law(5);
    double total = 0.0;
    for (std::size_t j = 0; j < law.size(); ++j) {
      law[j] = u(rng) * std::pow(scale, static_cast<double>(j));
      total += law[j];
    }
    for (double& p : law) p /= total;
    c.law = std::move(law);
    catalysts.push_back(std::move(c));
  }
  return CbpModel::make(std::move(chain), std::move(catalysts), 3);
}

void verify_model(const CbpModel& model, std::mt19937_64& rng, SuiteLog& log) {
  const Tolerances tol = tolerances_for(model);
  const CatalystKernel kernel(model);
  const SpectralReport rep = spectral::classify(kernel);
  const std::vector<Site> free = free_sites(model, rng, 2);
  const double lambda = 0.05 + 1.95 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  chung_suite(model, tol, log);
  taboo_suite(model, tol, log);
  if (!free.empty()) augmentation_suite(model, free[0], tol, log);
  if (model.chain().is_finite() && !free.empty()) derivative_suite(model, free[0], tol, log);
  sign_suite(kernel, log);
  determinant_suite(kernel, lambda, tol, log);
  if (free.size() >= 2) augmented_det_suite(model, free[0], free[1], lambda, rep.nu, tol, log);
  d_tilde_suite(model, rep, tol, log);
  moment_suite(model, rep, free, log);
  critset_suite(model, rng, log);
}

SuiteLog verify_random(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SuiteLog log;
  for (std::size_t m = 0; m < count; ++m) {
    const int n = 1 + static_cast<int>(m % 3);
    try {
      const CbpModel model = random_model(rng, n);
      verify_model(model, rng, log);
    } catch (const Error& e) {
      log.check("exceptions", 0.0, false, 0.0, "model " + std::to_string(m) + ": " + e.what());
    }
  }
  log.check("exceptions", 0.0, true, 0.0, "");
  return log;
}

}  // namespace verify
}  // namespace cbp
