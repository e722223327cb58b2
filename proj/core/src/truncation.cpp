#include "truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "cbp/error.hpp"

namespace cbp::detail {

namespace {

constexpr std::size_t kDenseLimit = 300;
constexpr std::size_t kSparseDirectLimit = 60'000;
constexpr double kKrylovTolerance = 1e-14;

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

}  // namespace

Box::Box(std::vector<std::int64_t> lo, std::vector<std::int64_t> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
  extent_.resize(lo_.size());
  size_ = 1;
  for (std::size_t d = 0; d < lo_.size(); ++d) {
    extent_[d] = hi_[d] - lo_[d] + 1;
    size_ = saturating_mul(size_, static_cast<std::size_t>(extent_[d]));
  }
}

Box Box::around(std::span<const Site> sites, std::int64_t radius) {
  const std::size_t dim = sites.front().coords.size();
  std::vector<std::int64_t> lo(dim, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(dim, std::numeric_limits<std::int64_t>::min());
  for (const Site& s : sites) {
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], s.coords[d]);
      hi[d] = std::max(hi[d], s.coords[d]);
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    lo[d] -= radius;
    hi[d] += radius;
  }
  return Box(std::move(lo), std::move(hi));
}

std::optional<std::size_t> Box::index(const Site& s) const {
  std::size_t idx = 0;
  for (std::size_t d = 0; d < lo_.size(); ++d) {
    const std::int64_t c = s.coords[d];
    if (c < lo_[d] || c > hi_[d]) return std::nullopt;
    idx = idx * static_cast<std::size_t>(extent_[d]) + static_cast<std::size_t>(c - lo_[d]);
  }
  return idx;
}

Site Box::site(std::size_t idx) const {
  std::vector<std::int64_t> c(lo_.size());
  for (std::size_t d = lo_.size(); d-- > 0;) {
    const auto e = static_cast<std::size_t>(extent_[d]);
    c[d] = lo_[d] + static_cast<std::int64_t>(idx % e);
    idx /= e;
  }
  return Site(std::move(c));
}

std::size_t Box::size_if_grown(std::int64_t extra) const {
  std::size_t n = 1;
  for (std::int64_t e : extent_) n = saturating_mul(n, static_cast<std::size_t>(e + 2 * extra));
  return n;
}

struct LinearSystem::Impl {
  using Sparse = Eigen::SparseMatrix<double>;
  std::variant<Eigen::PartialPivLU<Eigen::MatrixXd>, Eigen::SparseLU<Sparse>,
               Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper>,
               Eigen::BiCGSTAB<Sparse, Eigen::IncompleteLUT<double>>>
      solver;
  Sparse matrix;
};

LinearSystem::LinearSystem(Eigen::SparseMatrix<double> a, bool symmetric)
    : impl_(std::make_unique<Impl>()), n_(static_cast<std::size_t>(a.rows())) {
  a.makeCompressed();
  impl_->matrix = std::move(a);
  const auto& m = impl_->matrix;
  if (n_ <= kDenseLimit) {
    Eigen::MatrixXd dense(m);
    auto& lu = impl_->solver.emplace<Eigen::PartialPivLU<Eigen::MatrixXd>>(dense);
    if (!(std::abs(lu.determinant()) > 0.0)) fail(ErrorCode::SingularSystem, "singular hitting system");
  } else if (n_ <= kSparseDirectLimit || m.nonZeros() <= 3 * m.rows()) {
    // Tridiagonal (one-dimensional) systems factor in linear time.
    auto& lu = impl_->solver.emplace<Eigen::SparseLU<Impl::Sparse>>();
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "sparse LU failed: " + lu.lastErrorMessage());
  } else if (symmetric) {
    auto& cg = impl_->solver.emplace<Eigen::ConjugateGradient<Impl::Sparse, Eigen::Lower | Eigen::Upper>>();
    cg.setTolerance(kKrylovTolerance);
    cg.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, n_)));
    cg.compute(m);
  } else {
    auto& bicg = impl_->solver.emplace<Eigen::BiCGSTAB<Impl::Sparse, Eigen::IncompleteLUT<double>>>();
    bicg.setTolerance(kKrylovTolerance);
    bicg.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, n_)));
    bicg.compute(m);
    if (bicg.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "ILUT preconditioner failed");
  }
}

LinearSystem::~LinearSystem() = default;

Eigen::VectorXd LinearSystem::solve(const Eigen::VectorXd& b) const {
  return std::visit(
      [&](const auto& s) -> Eigen::VectorXd {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Eigen::PartialPivLU<Eigen::MatrixXd>>) {
          return s.solve(b);
        } else {
          Eigen::VectorXd x = s.solve(b);
          if (s.info() != Eigen::Success) {
            // Krylov solvers may stall just above the requested tolerance
            // on very flat problems; accept a small residual.
            const double res = (impl_->matrix * x - b).norm();
            if (!(res <= 1e-10 * std::max(1.0, b.norm()))) {
              fail(ErrorCode::SingularSystem, "linear solve did not converge");
            }
          }
          return x;
        }
      },
      impl_->solver);
}

LimitTracker::LimitTracker(std::size_t components, double growth, double tolerance)
    : components_(components),
      growth_(growth),
      tolerance_(tolerance),
      state_(components, State::Pending),
      estimate_(components, std::numeric_limits<double>::quiet_NaN()) {}

void LimitTracker::push(std::span<const double> raw) {
  history_.emplace_back(raw.begin(), raw.end());
  for (std::size_t c = 0; c < components_; ++c) {
    if (state_[c] == State::Pending) update(c);
  }
}

// Richardson table over history entries [end - count, end), eliminating error
// terms R^{-1}, R^{-2}, ... in turn.
double LimitTracker::richardson(std::size_t c, std::size_t end, std::size_t count) const {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = history_[end - count + i][c];
  double factor = 1.0;
  for (std::size_t level = 1; level < count; ++level) {
    factor *= growth_;
    for (std::size_t i = count - 1; i >= level; --i) {
      t[i] = (factor * t[i] - t[i - 1]) / (factor - 1.0);
    }
  }
  return t[count - 1];
}

void LimitTracker::update(std::size_t c) {
  const std::size_t n = history_.size();
  const double x = history_[n - 1][c];
  if (!std::isfinite(x)) return;
  if (n < 2) return;
  const double d1 = x - history_[n - 2][c];
  if (std::abs(d1) <= tolerance_ * std::max(1.0, std::abs(x))) {
    state_[c] = State::Converged;
    estimate_[c] = x;
    return;
  }
  if (n < 3) return;
  const double d0 = history_[n - 2][c] - history_[n - 3][c];
  const double ratio = d0 != 0.0 ? d1 / d0 : std::numeric_limits<double>::infinity();

  if (ratio > 0.0 && ratio <= 0.75) {
    const double cur = richardson(c, n, std::min<std::size_t>(n, 4));
    const double prev = richardson(c, n - 1, std::min<std::size_t>(n - 1, 4));
    if (std::abs(cur - prev) <= tolerance_ * std::max(1.0, std::abs(cur))) {
      state_[c] = State::Converged;
      estimate_[c] = cur;
      return;
    }
  }

  if (n >= 4) {
    const double dm = history_[n - 3][c] - history_[n - 4][c];
    const bool same_sign = (dm > 0 && d0 > 0 && d1 > 0) || (dm < 0 && d0 < 0 && d1 < 0);
    if (same_sign && d0 / dm >= 0.9 && d1 / d0 >= 0.9) state_[c] = State::Diverging;
  }
}

bool LimitTracker::all_settled(std::span<const std::size_t> components, bool allow_divergence) const {
  return std::all_of(components.begin(), components.end(), [&](std::size_t c) {
    return state_[c] == State::Converged || (allow_divergence && state_[c] == State::Diverging);
  });
}

}  // namespace cbp::detail
