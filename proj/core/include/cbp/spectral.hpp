#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cbp/chain.hpp"
#include "cbp/model.hpp"

namespace cbp {

struct PerronResult {
  double rho = 0.0;
  Eigen::VectorXd left;   ///< u^T A = rho u^T, unit sum
  Eigen::VectorXd right;  ///< A v = rho v, unit sum
  int iterations = 0;
};

/// Strong connectivity of the support graph of a square nonnegative matrix.
bool is_irreducible(const Eigen::MatrixXd& a);

/// Perron root of a nonnegative irreducible matrix by power iteration on
/// A + I. Throws NotIrreducible or NoConvergence.
PerronResult perron_root(const Eigen::MatrixXd& a);

struct MatrixWithDerivative {
  Eigen::MatrixXd value;
  Eigen::MatrixXd derivative;  ///< elementwise d/dlambda; may hold -inf at lambda = 0
};

/// Catalyst-to-catalyst taboo transforms _{W_j}Fbar*_{w_i,w_j}(lambda),
/// cached per lambda. Entry (i, j) starts at w_i and targets w_j.
class CatalystKernel {
 public:
  explicit CatalystKernel(const CbpModel& model);

  const CbpModel& model() const { return model_; }
  std::size_t size() const { return model_.size(); }

  struct Table {
    Eigen::MatrixXd value, derivative;
  };
  /// Transforms at lambda (derivatives included).
  const Table& at(double lambda) const;
  /// Transforms at lambda without derivatives. On truncated lattices the
  /// derivative can fail to converge where the value does.
  const Eigen::MatrixXd& value_at(double lambda) const;
  /// _{W_j}Fbar_{w_i,w_j}(0): direct-jump atoms.
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  /// _{W_j}Fbar_{w_i,w_j}(infinity): total taboo hitting probabilities.
  const Eigen::MatrixXd& totals() const;

 private:
  CbpModel model_;
  Eigen::MatrixXd atoms_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<Table>> cache_;
  mutable std::map<double, std::unique_ptr<Eigen::MatrixXd>> values_;
  mutable std::unique_ptr<Eigen::MatrixXd> totals_;
};

enum class Regime { Supercritical, Critical, Subcritical };
std::string_view to_string(Regime r) noexcept;

/// Mean matrix of the auxiliary Bellman-Harris process with its type
/// bookkeeping: types 0..N-1 are catalysts, type L(j)+i is the i-th
/// intermediate type of catalyst j heading for catalyst k(i, j).
struct BlockMatrix {
  Eigen::MatrixXd m;
  std::vector<std::vector<std::size_t>> k_sets;  ///< K_j, ascending
  std::vector<std::size_t> offset;               ///< L(j), zero-based
  std::size_t types = 0;                         ///< L
};

struct DeltaReport {
  double delta = 0.0;        ///< det(I - D(lambda))
  double derivative = 0.0;   ///< d/dlambda det(I - D(lambda)); +inf allowed
  Eigen::MatrixXd adjuncts;  ///< (i, j): (-1)^{i+j} det(I - D(lambda))_{i,j}
  Eigen::MatrixXd d;         ///< D(lambda)
};

struct SpectralReport {
  double rho_d = 0.0;  ///< Perron root of D(0)
  Regime regime = Regime::Subcritical;
  bool boundary = false;  ///< |rho_d - 1| < tol_band
  double tol_band = 1e-9;
  std::optional<double> nu;  ///< Malthusian parameter (0 when critical)
  double lambda_hi = 0.0;    ///< bracket end with rho(D(lambda_hi)) < 1
  int bisection_steps = 0;
};

struct ClassifyOptions {
  double tol_band = 1e-9;
  double root_tolerance = 1e-12;
  int max_doublings = 80;
  int max_bisections = 400;
  /// Skip the Malthusian root; a supercritical report then has no nu.
  /// Near a lattice threshold nu can be too small to resolve by truncation.
  bool regime_only = false;
};

namespace spectral {

/// Submatrix of `a` with row i and column j removed.
Eigen::MatrixXd minor(const Eigen::MatrixXd& a, Eigen::Index i, Eigen::Index j);

MatrixWithDerivative build_D(const CatalystKernel& kernel, double lambda);
MatrixWithDerivative build_D(const CbpModel& model, double lambda);
BlockMatrix build_M(const CatalystKernel& kernel);
Eigen::MatrixXd build_H(const CatalystKernel& kernel, const BlockMatrix& m, double lambda);
Eigen::MatrixXd build_M_hat(const CatalystKernel& kernel, const BlockMatrix& m);
/// Matrices built from transforms without taboo and from the resolvent.
Eigen::MatrixXd build_D_tilde(const CbpModel& model, double lambda);
Eigen::MatrixXd build_D_hat(const CbpModel& model, double lambda);

double rho_D(const CatalystKernel& kernel, double lambda);

SpectralReport classify(const CatalystKernel& kernel, const ClassifyOptions& opts = {});
SpectralReport classify(const CbpModel& model, const ClassifyOptions& opts = {});

/// Without `with_derivative` the derivative field is left at 0 and no
/// derivative solves are made.
DeltaReport delta_and_adjuncts(const CatalystKernel& kernel, double lambda, bool with_derivative = true);
DeltaReport delta_and_adjuncts(const CbpModel& model, double lambda, bool with_derivative = true);

/// Largest root of det D_tilde(lambda) on (lo, hi], located by a downward
/// grid scan and refined by bisection. Throws BracketNotFound.
double d_tilde_root(const CbpModel& model, double lo, double hi, int grid = 200);

}  // namespace spectral
}  // namespace cbp
