#include "cbp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace cbp::oracle {

namespace {

void require_finite(const CbpModel& model) {
  if (!model.chain().is_finite()) fail(ErrorCode::InvalidArgument, "the ODE oracle needs a finite chain");
}

}  // namespace

Eigen::MatrixXd mean_generator(const CbpModel& model) {
  require_finite(model);
  Eigen::MatrixXd a = model.chain().generator();
  for (const Catalyst& c : model.catalysts()) {
    const auto w = static_cast<Eigen::Index>(c.site.as_index());
    const double exit = -a(w, w);
    for (Eigen::Index y = 0; y < a.cols(); ++y) {
      a(w, y) = y == w ? c.beta * (c.alpha * c.moments[0] - 1.0) : c.beta * (1.0 - c.alpha) * a(w, y) / exit;
    }
  }
  return a;
}

Eigen::MatrixXd mean_field(const CbpModel& model, double t, double shift) {
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "time must be >= 0");
  Eigen::MatrixXd a = mean_generator(model);
  a.diagonal().array() -= shift;
  const Eigen::MatrixXd scaled = t * a;
  Eigen::MatrixXd out = scaled.exp();
  if (!out.allFinite()) fail(ErrorCode::InvalidArgument, "matrix exponential overflowed; increase the shift");
  return out;
}

Eigen::VectorXd total_mean(const CbpModel& model, double t, double shift) {
  return mean_field(model, t, shift).rowwise().sum();
}

double growth_rate(const CbpModel& model) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(mean_generator(model), false);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, es.eigenvalues()(i).real());
  return best;
}

SecondMoments second_moments(const CbpModel& model, double t, double shift, double tol) {
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "time must be >= 0");
  const Eigen::MatrixXd a = mean_generator(model);
  const Eigen::Index n = a.rows();
  const Eigen::Index nn = n * n;
  // Source weights beta_k alpha_k f''_k(1) on catalyst rows.
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < model.size(); ++k) {
    const Catalyst& c = model.catalyst(k);
    weight(static_cast<Eigen::Index>(c.site.as_index())) = c.beta * c.alpha * model.factorial_moment(k, 2);
  }
  // State: m1 (n x n), M1 (n), m2 (n x n), M2 (n), column-major blocks.
  using State = std::vector<double>;
  State x(static_cast<std::size_t>(2 * nn + 2 * n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i * n + i)] = 1.0;
    x[static_cast<std::size_t>(nn + i)] = 1.0;
  }
  auto system = [&](const State& s, State& ds, double) {
    using Map = Eigen::Map<const Eigen::MatrixXd>;
    using VMap = Eigen::Map<const Eigen::VectorXd>;
    using OMap = Eigen::Map<Eigen::MatrixXd>;
    using OVMap = Eigen::Map<Eigen::VectorXd>;
    const Map m1(s.data(), n, n);
    const VMap M1(s.data() + nn, n);
    const Map m2(s.data() + nn + n, n, n);
    const VMap M2(s.data() + 2 * nn + n, n);
    OMap dm1(ds.data(), n, n);
    OVMap dM1(ds.data() + nn, n);
    OMap dm2(ds.data() + nn + n, n, n);
    OVMap dM2(ds.data() + 2 * nn + n, n);
    dm1.noalias() = a * m1 - shift * m1;
    dM1.noalias() = a * M1 - shift * M1;
    dm2.noalias() = a * m2 - 2.0 * shift * m2;
    dm2 += (weight.asDiagonal() * m1.array().square().matrix());
    dM2.noalias() = a * M2 - 2.0 * shift * M2;
    dM2 += weight.cwiseProduct(M1.cwiseAbs2());
  };
  namespace odeint = boost::numeric::odeint;
  try {
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, system, x, 0.0, t, std::min(1e-3, std::max(t, 1e-12)));
  } catch (const std::exception& e) {
    fail(ErrorCode::StiffnessFailure, std::string("second-moment integration failed: ") + e.what());
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCode::StiffnessFailure, "second-moment integration produced non-finite values");
  }
  SecondMoments out;
  out.m1 = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  out.M1 = Eigen::Map<const Eigen::VectorXd>(x.data() + nn, n);
  out.m2 = Eigen::Map<const Eigen::MatrixXd>(x.data() + nn + n, n, n);
  out.M2 = Eigen::Map<const Eigen::VectorXd>(x.data() + 2 * nn + n, n);
  return out;
}

std::vector<std::vector<std::vector<int>>> compositions(int n) {
  if (n < 1 || n > 12) fail(ErrorCode::InvalidArgument, "compositions are enumerated for 1 <= n <= 12");
  std::vector<std::vector<std::vector<int>>> out(static_cast<std::size_t>(n + 1));
  // Each subset of the n-1 gaps between unit cells is one composition.
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<int> parts;
    int run = 1;
    for (int gap = 0; gap < n - 1; ++gap) {
      if (mask & (1u << gap)) {
        parts.push_back(run);
        run = 1;
      } else {
        ++run;
      }
    }
    parts.push_back(run);
    out[parts.size()].push_back(std::move(parts));
  }
  for (auto& group : out) std::sort(group.begin(), group.end());
  return out;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, std::abs(es.eigenvalues()(i)));
  return best;
}

Eigen::MatrixXd catalyst_hitting(const CbpModel& model) {
  const std::vector<Site> sites = model.sites();
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<Site> others;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != j) others.push_back(sites[static_cast<std::size_t>(k)]);
    }
    const auto batch = chain::transforms(model.chain(), sites, sites[static_cast<std::size_t>(j)],
                                         make_site_set(others), 0.0, false, false);
    for (Eigen::Index i = 0; i < n; ++i) p(i, j) = batch.bar[static_cast<std::size_t>(i)].value;
  }
  return p;
}

std::optional<double> critical_mean(const CbpModel& model, std::size_t i, std::vector<double> means, double tol) {
  if (means.size() != model.size() || i >= means.size()) fail(ErrorCode::InvalidArgument, "bad mean vector");
  const Eigen::MatrixXd p = catalyst_hitting(model);
  auto rho = [&](double mi) {
    means[i] = mi;
    Eigen::MatrixXd d(p.rows(), p.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      const double alpha = model.catalyst(static_cast<std::size_t>(r)).alpha;
      d.row(r) = (1.0 - alpha) * p.row(r);
      d(r, r) += alpha * means[static_cast<std::size_t>(r)];
    }
    return spectral_radius(d);
  };
  if (rho(0.0) > 1.0) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; rho(hi) < 1.0; ++k) {
    if (k > 200) fail(ErrorCode::BracketNotFound, "no critical mean found");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (rho(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cbp::oracle
