#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cbp/error.hpp"
#include "cbp/model.hpp"

namespace cbp::oracle {

/// Generator of the first-moment flow on a finite chain: rows of Q off the
/// catalysts; at w_k the diagonal is beta_k(alpha_k m_k - 1) and the
/// off-diagonal entries are beta_k(1 - alpha_k) q(w_k, y) / (-q(w_k, w_k)).
Eigen::MatrixXd mean_generator(const CbpModel& model);

/// e^{-shift t} m_1(t; x, y), rows x, columns y.
Eigen::MatrixXd mean_field(const CbpModel& model, double t, double shift = 0.0);

/// e^{-shift t} M_1(t; x).
Eigen::VectorXd total_mean(const CbpModel& model, double t, double shift = 0.0);

/// Rightmost real eigenvalue of the mean generator.
double growth_rate(const CbpModel& model);

struct SecondMoments {
  Eigen::MatrixXd m1;  ///< e^{-shift t} m_1(t; x, y)
  Eigen::VectorXd M1;  ///< e^{-shift t} M_1(t; x)
  Eigen::MatrixXd m2;  ///< e^{-2 shift t} m_2(t; x, y)
  Eigen::VectorXd M2;  ///< e^{-2 shift t} M_2(t; x)
};

/// Second factorial moments from the linear ODE m_2' = A m_2 + S(t) with
/// S(w_k, .) = beta_k alpha_k f''_k(1) m_1(t; w_k, .)^2, integrated together
/// with the first moments by an adaptive Dormand-Prince scheme.
/// Throws StiffnessFailure when the step size collapses.
SecondMoments second_moments(const CbpModel& model, double t, double shift = 0.0, double tol = 1e-10);

/// All compositions of n into positive parts; result[r] holds those with r
/// parts (result[0] is empty).
std::vector<std::vector<std::vector<int>>> compositions(int n);

/// h_{n,k} by explicit enumeration of compositions with the multinomial
/// weight n!/(i_1!..i_r!) formed directly.
template <class T>
T h_brute_force(const T& alpha, const std::vector<T>& fact, int n, const std::vector<T>& z) {
  if (n < 2 || fact.size() < static_cast<std::size_t>(n) || z.size() + 1 < static_cast<std::size_t>(n)) {
    fail(ErrorCode::InvalidArgument, "h_brute_force: inconsistent arguments");
  }
  auto fac = [](int k) {
    T out(1);
    for (int i = 2; i <= k; ++i) out *= T(i);
    return out;
  };
  const auto groups = compositions(n);
  T total(0);
  for (int r = 2; r <= n; ++r) {
    T inner(0);
    for (const auto& parts : groups[static_cast<std::size_t>(r)]) {
      T denom(1);
      T prod(1);
      for (int p : parts) {
        denom *= fac(p);
        prod *= z[static_cast<std::size_t>(p - 1)];
      }
      inner += fac(n) / denom * prod;
    }
    total += fact[static_cast<std::size_t>(r - 1)] / fac(r) * inner;
  }
  return alpha * total;
}

/// Spectral radius by a general eigensolver.
double spectral_radius(const Eigen::MatrixXd& a);

/// Total taboo hitting probabilities between catalysts, (i, j) from w_i to
/// w_j avoiding the other catalysts.
Eigen::MatrixXd catalyst_hitting(const CbpModel& model);

/// Critical m_i with the other means fixed, by bisection on the spectral
/// radius of D(0). Empty when even m_i = 0 is supercritical.
std::optional<double> critical_mean(const CbpModel& model, std::size_t i, std::vector<double> means,
                                    double tol = 1e-13);

}  // namespace cbp::oracle
