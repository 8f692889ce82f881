#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klyap/dynamics.hpp"
#include "klyap/expr.hpp"
#include "klyap/geometry.hpp"
#include "klyap/kernel.hpp"

namespace klyap {

/// Data of the minimal-norm problem for the nonlinear part h of one principal
/// eigenfunction:
///
///     min ||g||_H  s.t.  g(0) = 0,  grad g(0) = 0,
///                        grad g(z_j) . f(z_j) - lambda g(z_j) = -w^T G(z_j).
struct CollocationProblem {
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const VectorField> field;
  Linearization lin;
  double lambda = 0.0;
  Eigen::VectorXd w;
  Eigen::MatrixXd centers;  // n x d, one centre per row
  Box domain;
  /// Ridge added to the PDE rows. Empty selects 1e-10 * trace(A) / m.
  std::optional<double> eta;

  /// Problem for the `index`-th eigenpair of `lin`.
  static CollocationProblem for_eigenpair(std::shared_ptr<const Kernel> kernel,
                                          std::shared_ptr<const VectorField> field,
                                          const Linearization& lin, int index,
                                          Eigen::MatrixXd centers, Box domain,
                                          std::optional<double> eta);

  int num_centers() const noexcept { return static_cast<int>(centers.rows()); }
  int dim() const noexcept { return static_cast<int>(centers.cols()); }
  /// n + 1 + d functionals.
  int system_size() const noexcept { return num_centers() + 1 + dim(); }

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

/// Gram system of the functionals, ordered (PDE at each centre, value at the
/// origin, d partial derivatives at the origin).
struct CollocationSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  /// Ridge that was added to the first n diagonal entries.
  double eta = 0.0;
};

/// Riesz representer of g -> (D g)(center):
/// grad_y k(x, y)|_{y=center} . f(center) - lambda k(x, center).
double k_pde(const CollocationProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
             const Eigen::Ref<const Eigen::VectorXd>& center);

/// Builds the symmetric Gram matrix and right-hand side and applies the ridge.
CollocationSystem assemble_system(const CollocationProblem& problem);

/// Solver report attached to a CollocationSolution.
struct CollocationDiagnostics {
  double condition_estimate = 0.0;
  double eta = 0.0;
  double residual = 0.0;  // ||A alpha - b||_inf including the ridge
  std::string method;
  std::vector<std::string> warnings;
};

/// h*(x) = sum_j a_j k_PDE(x, z_j) + a_n k(x, 0) + sum_l a_{n+1+l} d_{y_l} k(x, 0).
///
/// Immutable; evaluation is reentrant.
class CollocationSolution {
 public:
  using Diagnostics = CollocationDiagnostics;

  CollocationSolution(std::shared_ptr<const Kernel> kernel,
                      std::shared_ptr<const VectorField> field, double lambda,
                      Eigen::MatrixXd centers, Eigen::VectorXd alpha, Diagnostics diagnostics = {});

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Value and gradient in one pass.
  double evaluate_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> grad) const;

  /// (D h*)(x) = grad h*(x) . f(x) - lambda h*(x).
  double apply_operator(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  double lambda() const noexcept { return lambda_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  /// One centre per row, the layout the constructor takes.
  Eigen::MatrixXd centers() const { return centers_.transpose(); }
  const Kernel& kernel() const noexcept { return *kernel_; }
  const VectorField& field() const noexcept { return *field_; }
  const Diagnostics& diagnostics() const noexcept { return diagnostics_; }
  int dim() const noexcept { return field_->dim(); }

 private:
  std::shared_ptr<const Kernel> kernel_;
  std::shared_ptr<const VectorField> field_;
  double lambda_;
  Eigen::MatrixXd centers_;
  Eigen::MatrixXd center_field_;  // f(z_j), n x d
  Eigen::VectorXd alpha_;
  Diagnostics diagnostics_;
};

/// Validates, assembles and solves. A condition estimate above 1e12 is
/// reported as a warning in the diagnostics, not as an error.
CollocationSolution solve(const CollocationProblem& problem);

/// Lower bound on sup_{x in box} min_j |x - z_j|_2 obtained from a uniform probe
/// grid with `probe_resolution` points per axis (corners included).
double fill_distance(const Eigen::Ref<const Eigen::MatrixXd>& centers, const Box& box,
                     int probe_resolution = 201);

}  // namespace klyap
