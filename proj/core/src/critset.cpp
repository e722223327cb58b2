#include "cbp/critset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "cbp/error.hpp"

namespace cbp {

std::string_view to_string(SkipReason r) noexcept {
  switch (r) {
    case SkipReason::None: return "none";
    case SkipReason::PrefixSupercritical: return "prefix_supercritical";
    case SkipReason::NegativeSolution: return "negative_solution";
    case SkipReason::ResidualTooLarge: return "residual_too_large";
  }
  return "unknown";
}

namespace {

constexpr double kResidualTol = 1e-9;
constexpr double kNegativeClamp = 1e-12;
constexpr double kMinorTol = 1e-12;

}  // namespace

CritSetSolver::CritSetSolver(const CbpModel& model) {
  for (const Catalyst& c : model.catalysts()) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
      fail(ErrorCode::AlphaZero, "criticality-set analysis needs every alpha in (0, 1)");
    }
    alpha_.push_back(c.alpha);
  }
  p_ = CatalystKernel(model).totals();
}

Eigen::MatrixXd CritSetSolver::d_matrix(const std::vector<double>& means) const {
  const auto n = static_cast<Eigen::Index>(alpha_.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = alpha_[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (1.0 - a) * p_(i, j);
    d(i, i) += a * means[static_cast<std::size_t>(i)];
  }
  return d;
}

double CritSetSolver::rho(const std::vector<double>& means) const { return perron_root(d_matrix(means)).rho; }

MeanSolution CritSetSolver::solve(const std::vector<double>& means, std::size_t i) const {
  const std::size_t n = alpha_.size();
  if (means.size() != n || i >= n) fail(ErrorCode::InvalidArgument, "mean vector does not match the catalysts");
  const auto ii = static_cast<Eigen::Index>(i);
  const double a = alpha_[i];
  double m = (1.0 - (1.0 - a) * p_(ii, ii)) / a;
  if (n > 1) {
    std::vector<double> probe = means;
    probe[i] = 0.0;
    Eigen::MatrixXd dm = d_matrix(probe);
    dm.diagonal().array() -= 1.0;
    const double den = spectral::minor(dm, ii, ii).determinant();
    if (std::abs(den) < kMinorTol) fail(ErrorCode::DegenerateMinor, "det(D - I)_{i,i} vanishes");
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const double sign = (i + j + 1) % 2 == 0 ? 1.0 : -1.0;
      sum += sign * p_(ii, jj) * spectral::minor(dm, ii, jj).determinant();
    }
    m += (1.0 - a) * sum / (a * den);
  }

  MeanSolution out;
  std::vector<double> zeroed = means;
  zeroed[i] = 0.0;
  auto failing = [&](SkipReason fallback) {
    out.reason = rho(zeroed) > 1.0 + kResidualTol ? SkipReason::PrefixSupercritical : fallback;
    return out;
  };
  if (m < 0.0) {
    if (m < -kNegativeClamp) return failing(SkipReason::NegativeSolution);
    m = 0.0;
  }
  std::vector<double> full = means;
  full[i] = m;
  out.residual = std::abs(rho(full) - 1.0);
  if (!(out.residual <= kResidualTol)) return failing(SkipReason::ResidualTooLarge);
  out.m = m;
  return out;
}

std::vector<double> CritSetSolver::axis_bounds() const {
  const std::size_t n = alpha_.size();
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> means(n, 0.0);
    const MeanSolution s = solve(means, i);
    if (!s.m) fail(ErrorCode::NoConvergence, "no critical value on axis " + std::to_string(i + 1));
    means[i] = *s.m + 1e-6;
    const bool above = rho(means) > 1.0;
    means[i] = *s.m - 1e-6;
    const bool below = *s.m < 1e-6 || rho(means) < 1.0;
    if (!above || !below) {
      fail(ErrorCode::NoConvergence, "axis bound " + std::to_string(i + 1) + " does not separate the regimes");
    }
    out.push_back(*s.m);
  }
  return out;
}

CritSetResult CritSetSolver::trace(int resolution, const std::vector<std::vector<double>>& extra, int workers) const {
  const std::size_t n = alpha_.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "tracing the criticality set needs at least two catalysts");
  if (resolution < 2) fail(ErrorCode::InvalidArgument, "grid resolution must be at least 2");
  CritSetResult result;
  result.resolution = resolution;
  result.axis_bounds = axis_bounds();

  // Prefixes (m_1..m_{N-1}) to solve for m_N; prefixes that end on a
  // conditional bound are complete points with zero suffix.
  std::vector<std::vector<double>> prefixes;
  std::vector<std::vector<double>> frontier{{}};
  for (std::size_t level = 0; level + 1 < n; ++level) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : frontier) {
      double bound = 0.0;
      if (level == 0) {
        bound = result.axis_bounds[0];
      } else {
        std::vector<double> probe = prefix;
        probe.resize(n, 0.0);
        const MeanSolution s = solve(probe, level);
        if (!s.m) {
          result.skipped.push_back(CritSkip{prefix, s.reason});
          continue;
        }
        bound = *s.m;
      }
      for (int k = 0; k < resolution; ++k) {
        std::vector<double> p = prefix;
        if (k == resolution - 1) {
          p.push_back(bound);
          std::vector<double> point = p;
          point.resize(n, 0.0);
          result.points.push_back(CritPoint{point, std::abs(rho(point) - 1.0)});
        } else {
          p.push_back(bound * static_cast<double>(k) / (resolution - 1));
          next.push_back(std::move(p));
        }
      }
    }
    frontier = std::move(next);
  }
  prefixes = std::move(frontier);
  for (const auto& e : extra) {
    if (e.size() + 1 != n) fail(ErrorCode::InvalidArgument, "extra critset prefixes need N-1 coordinates");
    prefixes.push_back(e);
  }

  std::vector<MeanSolution> solved(prefixes.size());
  std::atomic<std::size_t> next_index{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k = next_index++; k < prefixes.size(); k = next_index++) {
      try {
        std::vector<double> means = prefixes[k];
        means.push_back(0.0);
        solved[k] = solve(means, n - 1);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(prefixes.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  for (std::size_t k = 0; k < prefixes.size(); ++k) {
    if (solved[k].m) {
      std::vector<double> point = prefixes[k];
      point.push_back(*solved[k].m);
      result.points.push_back(CritPoint{std::move(point), solved[k].residual});
    } else {
      result.skipped.push_back(CritSkip{prefixes[k], solved[k].reason});
    }
  }
  std::sort(result.points.begin(), result.points.end(),
            [](const CritPoint& a, const CritPoint& b) { return a.m < b.m; });
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const CritSkip& a, const CritSkip& b) { return a.prefix < b.prefix; });
  return result;
}

namespace critset {

MeanSolution solve_m_i(const CbpModel& model, std::size_t i) {
  std::vector<double> means;
  for (std::size_t k = 0; k < model.size(); ++k) means.push_back(model.mean(k));
  return CritSetSolver(model).solve(means, i);
}

std::vector<double> axis_bounds(const CbpModel& model) { return CritSetSolver(model).axis_bounds(); }

CritSetResult trace_critset(const CbpModel& model, int resolution, int workers) {
  return CritSetSolver(model).trace(resolution, {}, workers);
}

}  // namespace critset
}  // namespace cbp
