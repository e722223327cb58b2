#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/spectral.hpp"

namespace cbp {

bool is_irreducible(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  if (n != a.cols() || n == 0) return false;
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (Eigen::Index y = 0; y < n; ++y) {
        const double v = transpose ? a(y, x) : a(x, y);
        if (v > 0.0 && !seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

namespace {

struct Bounds {
  double lo, hi;
};

// Collatz-Wielandt bounds for B v with v > 0.
Bounds collatz(const Eigen::VectorXd& bv, const Eigen::VectorXd& v) {
  Bounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = bv(i) / v(i);
    b.lo = std::min(b.lo, r);
    b.hi = std::max(b.hi, r);
  }
  return b;
}

// Dominant eigenvector of the positive-diagonal matrix B = A + I. Plain power
// iteration first; if that is slow, shifted inverse iteration with the shift
// kept above rho(B), so (sigma I - B)^{-1} stays entrywise positive.
Eigen::VectorXd dominant(const Eigen::MatrixXd& b, double& rho, int& iterations) {
  const auto n = b.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  constexpr double kTol = 1e-14;
  constexpr int kPowerSteps = 2000;
  constexpr int kInverseSteps = 200;
  Bounds bd{0.0, 0.0};
  for (iterations = 0; iterations < kPowerSteps; ++iterations) {
    const Eigen::VectorXd bv = b * v;
    bd = collatz(bv, v);
    if (bd.hi - bd.lo <= kTol * bd.hi) {
      rho = 0.5 * (bd.lo + bd.hi);
      return v;
    }
    v = bv / bv.sum();
  }
  for (int k = 0; k < kInverseSteps; ++k, ++iterations) {
    const double sigma = bd.hi + std::max(bd.hi - bd.lo, 1e-12 * bd.hi);
    Eigen::MatrixXd shifted = -b;
    shifted.diagonal().array() += sigma;
    Eigen::VectorXd w = shifted.partialPivLu().solve(v);
    if (!w.allFinite() || (w.array() <= 0.0).any()) break;
    v = w / w.sum();
    bd = collatz(b * v, v);
    if (bd.hi - bd.lo <= kTol * bd.hi) {
      rho = 0.5 * (bd.lo + bd.hi);
      return v;
    }
  }
  fail(ErrorCode::NoConvergence, "Perron iteration did not converge");
}

}  // namespace

PerronResult perron_root(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) fail(ErrorCode::InvalidArgument, "Perron root needs a square matrix");
  if ((a.array() < 0.0).any() || !a.allFinite()) {
    fail(ErrorCode::InvalidArgument, "Perron root needs a finite nonnegative matrix");
  }
  PerronResult out;
  if (a.rows() == 1) {
    out.rho = a(0, 0);
    out.left = out.right = Eigen::VectorXd::Ones(1);
    return out;
  }
  if (!is_irreducible(a)) fail(ErrorCode::NotIrreducible, "matrix is reducible");
  Eigen::MatrixXd b = a;
  b.diagonal().array() += 1.0;
  double rho_r = 0.0, rho_l = 0.0;
  int it_r = 0, it_l = 0;
  out.right = dominant(b, rho_r, it_r);
  const Eigen::MatrixXd bt = b.transpose();
  out.left = dominant(bt, rho_l, it_l);
  out.rho = 0.5 * (rho_r + rho_l) - 1.0;
  out.iterations = it_r + it_l;
  const double res = (a * out.right - out.rho * out.right).lpNorm<Eigen::Infinity>() /
                     out.right.lpNorm<Eigen::Infinity>();
  if (!(res <= 1e-12 * std::max(1.0, out.rho))) {
    fail(ErrorCode::NoConvergence, "Perron residual too large");
  }
  return out;
}

}  // namespace cbp
