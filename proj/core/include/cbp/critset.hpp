#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbp/model.hpp"
#include "cbp/spectral.hpp"

namespace cbp {

enum class SkipReason { None, PrefixSupercritical, NegativeSolution, ResidualTooLarge };
std::string_view to_string(SkipReason r) noexcept;

struct MeanSolution {
  std::optional<double> m;  ///< empty when no nonnegative critical value exists
  double residual = 0.0;    ///< |rho(D) - 1| at the solution
  SkipReason reason = SkipReason::None;
};

struct CritPoint {
  std::vector<double> m;
  double residual = 0.0;
};

struct CritSkip {
  std::vector<double> prefix;
  SkipReason reason = SkipReason::None;
};

struct CritSetResult {
  std::vector<double> axis_bounds;
  std::vector<CritPoint> points;
  std::vector<CritSkip> skipped;
  int resolution = 0;
};

/// Criticality set in offspring-mean space. D(0) depends on the means only
/// through its diagonal, so the taboo hitting probabilities are computed
/// once per solver.
class CritSetSolver {
 public:
  /// Throws AlphaZero unless every alpha lies in (0, 1).
  explicit CritSetSolver(const CbpModel& model);

  std::size_t size() const { return alpha_.size(); }
  const Eigen::MatrixXd& hitting() const { return p_; }

  Eigen::MatrixXd d_matrix(const std::vector<double>& means) const;
  double rho(const std::vector<double>& means) const;

  /// Critical m_i given the other means (entry i of `means` is ignored).
  /// Throws DegenerateMinor when det(D - I)_{i,i} vanishes.
  MeanSolution solve(const std::vector<double>& means, std::size_t i) const;

  /// M_1..M_N; each bound is checked to flip the regime under +-1e-6.
  std::vector<double> axis_bounds() const;

  /// Nested grid over (m_1..m_{N-1}) with `resolution` points per axis,
  /// each axis spanning [0, M_i(prefix)]; m_N solved per cell. `extra`
  /// prefixes are traced in addition to the grid.
  CritSetResult trace(int resolution, const std::vector<std::vector<double>>& extra = {},
                      int workers = 1) const;

 private:
  std::vector<double> alpha_;
  Eigen::MatrixXd p_;
};

namespace critset {

MeanSolution solve_m_i(const CbpModel& model, std::size_t i);
std::vector<double> axis_bounds(const CbpModel& model);
CritSetResult trace_critset(const CbpModel& model, int resolution, int workers = 1);

}  // namespace critset
}  // namespace cbp
