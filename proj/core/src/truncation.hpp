#pragma once

// Internal helpers for absorbing-box truncation of lattice walks and for the
// linear solves behind every hitting-time functional.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cbp/chain.hpp"

namespace cbp::detail {

/// Axis-aligned box of lattice points, row-major indexed.
class Box {
 public:
  Box(std::vector<std::int64_t> lo, std::vector<std::int64_t> hi);

  /// Bounding box of `sites` enlarged by `radius` in every direction.
  static Box around(std::span<const Site> sites, std::int64_t radius);

  std::size_t size() const { return size_; }
  int dim() const { return static_cast<int>(lo_.size()); }
  std::optional<std::size_t> index(const Site& s) const;
  Site site(std::size_t idx) const;
  /// Number of points of the box enlarged by `extra`, saturating.
  std::size_t size_if_grown(std::int64_t extra) const;

 private:
  std::vector<std::int64_t> lo_, hi_, extent_;
  std::size_t size_ = 0;
};

/// Solves A x = b for one matrix and many right-hand sides. Small systems use
/// dense LU, moderate ones sparse LU, very large ones Krylov iterations.
class LinearSystem {
 public:
  LinearSystem(Eigen::SparseMatrix<double> a, bool symmetric);
  ~LinearSystem();
  LinearSystem(const LinearSystem&) = delete;
  LinearSystem& operator=(const LinearSystem&) = delete;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  std::size_t size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
};

/// Tracks a vector of functionals across growing truncation radii and
/// decides, per component, whether the limit has been reached. Besides raw
/// successive differences it accepts Richardson-extrapolated limits (error
/// expansion in powers of 1/R), which is what makes lambda = 0 quantities on
/// Z^d attainable at all.
class LimitTracker {
 public:
  enum class State { Pending, Converged, Diverging };

  LimitTracker(std::size_t components, double growth, double tolerance);

  void push(std::span<const double> raw);
  std::size_t rounds() const { return history_.size(); }

  State state(std::size_t c) const { return state_[c]; }
  double estimate(std::size_t c) const { return estimate_[c]; }
  double last(std::size_t c) const { return history_.back()[c]; }
  bool all_settled(std::span<const std::size_t> components, bool allow_divergence) const;

 private:
  double richardson(std::size_t c, std::size_t end, std::size_t count) const;
  void update(std::size_t c);

  std::size_t components_;
  double growth_;
  double tolerance_;
  std::vector<std::vector<double>> history_;
  std::vector<State> state_;
  std::vector<double> estimate_;
};

}  // namespace cbp::detail
