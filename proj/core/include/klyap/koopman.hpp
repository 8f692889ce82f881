#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "klyap/collocation.hpp"
#include "klyap/dynamics.hpp"
#include "klyap/expr.hpp"

namespace klyap {

/// A (possibly approximate) principal Koopman eigenfunction phi with
/// grad phi . f = lambda phi.
class EigenfunctionModel {
 public:
  virtual ~EigenfunctionModel() = default;

  virtual double eigenvalue() const = 0;
  virtual int dim() const = 0;
  virtual double value(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  virtual double value_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     Eigen::Ref<Eigen::VectorXd> grad) const = 0;

  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// phi*(x) = w^T x + h*(x) with h* from symmetric collocation.
class KernelEigenfunction final : public EigenfunctionModel {
 public:
  KernelEigenfunction(Eigen::VectorXd w, CollocationSolution h);

  double eigenvalue() const override { return h_.lambda(); }
  int dim() const override { return static_cast<int>(w_.size()); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double value_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> grad) const override;

  const Eigen::VectorXd& w() const noexcept { return w_; }
  const CollocationSolution& nonlinear_part() const noexcept { return h_; }

 private:
  Eigen::VectorXd w_;
  CollocationSolution h_;
};

/// Eigenfunction given in closed form, e.g. x2 + 3*x1^2. Gradients are
/// symbolic.
class AnalyticEigenfunction final : public EigenfunctionModel {
 public:
  AnalyticEigenfunction(double lambda, Expr phi);

  double eigenvalue() const override { return lambda_; }
  int dim() const override { return phi_.dim(); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double value_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> grad) const override;

 private:
  double lambda_;
  Expr phi_;
  std::vector<Expr> grad_;
};

using EigenfunctionSet = std::vector<std::shared_ptr<const EigenfunctionModel>>;

/// Solves one collocation problem per eigenpair of `lin`, in the order of
/// lin.eigenvalues. `eta` as in CollocationProblem.
std::vector<std::shared_ptr<const KernelEigenfunction>> build_eigenfunctions(
    std::shared_ptr<const Kernel> kernel, std::shared_ptr<const VectorField> field,
    const Linearization& lin, const Eigen::MatrixXd& centers, const Box& domain,
    std::optional<double> eta);

struct PathIntegralOptions {
  double t_max = 20.0;
  double dt = 1e-3;
  /// Integration stops early once |integrand| stays below this threshold for
  /// `quiet_steps` consecutive steps.
  double negligible = 1e-12;
  int quiet_steps = 100;
};

/// phi(x) = w^T x + int_0^inf exp(-lambda t) w^T G(s_t(x)) dt, by trapezoidal
/// quadrature along an RK4 trajectory.
///
/// Throws ValidationError when -lambda + 2 lambda_max >= 0 (the integral need
/// not converge) and NumericError if the trajectory blows up.
double path_integral_phi(const VectorField& field, const Linearization& lin, double lambda,
                         const Eigen::Ref<const Eigen::VectorXd>& w,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const PathIntegralOptions& options = {});

/// Whether the path-integral representation is valid for `lambda`.
bool path_integral_converges(const Linearization& lin, double lambda);

}  // namespace klyap
