#pragma once

#include <vector>

#include <Eigen/Dense>

#include "klyap/expr.hpp"

namespace klyap {

/// Linear part of f at the origin together with its real, simple spectrum.
struct Linearization {
  Eigen::MatrixXd jacobian;                      // E = Df(0)
  std::vector<double> eigenvalues;               // sorted descending
  std::vector<Eigen::VectorXd> left_eigenvectors;  // unit 2-norm, w^T E = lambda w^T

  int dim() const noexcept { return static_cast<int>(jacobian.rows()); }
  double max_eigenvalue() const { return eigenvalues.front(); }
  /// min_i |lambda_i|, the decay rate of the slowest mode.
  double spectral_abscissa() const;
};

/// Computes E = Df(0) symbolically and the left eigenpairs of E.
///
/// Left eigenvectors are obtained as right eigenvectors of E^T, normalised to
/// unit length with the sign chosen so that the largest-magnitude entry is
/// positive. Throws ValidationError when f(0) != 0, and NumericError for
/// complex, repeated or non-negative eigenvalues.
Linearization linearize(const VectorField& field);

/// G(x) = f(x) - E x.
Eigen::VectorXd nonlinear_part(const VectorField& field, const Linearization& lin,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// One classical RK4 step.
Eigen::VectorXd rk4_step(const VectorField& field, const Eigen::Ref<const Eigen::VectorXd>& x,
                         double dt);

/// Fixed-step RK4 from t = 0 to t_end. The last step is shortened so the
/// trajectory ends exactly at t_end. Throws NumericError naming the time at
/// which the state stopped being finite.
Trajectory integrate_flow(const VectorField& field, const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double t_end, double dt);

}  // namespace klyap
