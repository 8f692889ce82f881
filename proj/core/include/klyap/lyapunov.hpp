#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klyap/dynamics.hpp"
#include "klyap/geometry.hpp"
#include "klyap/koopman.hpp"

namespace klyap {

/// P solving Lambda^T P + P Lambda = -I for Lambda = diag(eigenvalues), which
/// is diag(1 / (2 |lambda_i|)). Throws NumericError unless every eigenvalue is
/// strictly negative.
Eigen::MatrixXd solve_P(std::span<const double> eigenvalues);

/// V(x) = sum_ij P_ij phi_i(x) phi_j(x) built from d eigenfunctions.
class LyapunovModel {
 public:
  explicit LyapunovModel(EigenfunctionSet eigenfunctions);

  int dim() const noexcept { return dim_; }
  const Eigen::MatrixXd& P() const noexcept { return p_; }
  const Eigen::MatrixXd& Lambda() const noexcept { return lambda_; }
  const EigenfunctionSet& eigenfunctions() const noexcept { return eigenfunctions_; }

  double V(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd grad_V(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Orbital derivative grad V(x) . f(x) through the chain rule.
  double Vdot(const VectorField& field, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// sum_ij P_ij (lambda_i + lambda_j) phi_i phi_j: equals Vdot when every
  /// phi_i is an exact eigenfunction.
  double Vdot_eigen_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  EigenfunctionSet eigenfunctions_;
  int dim_;
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd p_;
};

struct LyapunovDiagnostics {
  double fill_distance = 0.0;
  double lambda_bar = 0.0;  // max_i lambda_i
  double alpha = 0.0;       // min_i |lambda_i|
  double p_frobenius = 0.0;
  double exp_bound_m = 1.0;  // M in ||exp(Lambda t)|| <= M exp(-alpha t)
  double p_bound = 0.0;      // M^2 / (2 alpha)
  bool p_bound_holds = true;
  double lyapunov_residual = 0.0;  // ||Lambda^T P + P Lambda + I||_inf
  std::vector<double> phi_sup;     // sup over the probe grid of |phi_i|
  std::vector<double> condition_estimates;
  Box probe_domain;
  int probe_resolution = 0;

  void write(std::ostream& os) const;
};

/// Bound-related quantities for the error estimate of V*. Condition estimates
/// are taken from kernel eigenfunctions when present.
LyapunovDiagnostics diagnostics(const LyapunovModel& model, double fill_distance,
                                const Linearization& lin, const Box& probe_domain,
                                int probe_resolution);

enum class SurfaceQuantity { kV, kVdot };

std::string to_string(SurfaceQuantity q);

/// Samples of V* or its orbital derivative on a uniform 2-D grid; row-major
/// with x1 varying fastest.
struct SurfaceGrid {
  Box domain;
  int resolution = 0;
  SurfaceQuantity quantity = SurfaceQuantity::kV;
  std::vector<double> values;

  Eigen::Vector2d point(int i1, int i2) const;
  double at(int i1, int i2) const {
    return values[static_cast<std::size_t>(i2) * static_cast<std::size_t>(resolution) +
                  static_cast<std::size_t>(i1)];
  }

  /// "# domain a b c d; resolution nx ny; quantity Q" followed by x1,x2,value
  /// rows.
  void write_csv(std::ostream& os) const;
};

SurfaceGrid grid_eval(const LyapunovModel& model, const VectorField& field, const Box& domain,
                      int resolution, SurfaceQuantity quantity);

}  // namespace klyap
