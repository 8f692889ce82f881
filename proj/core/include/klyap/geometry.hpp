#pragma once

#include <Eigen/Dense>

namespace klyap {

/// Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Throws ValidationError unless lower < upper componentwise.
  Box(Eigen::VectorXd lower, Eigen::VectorXd upper);

  /// The square [-half_width, half_width]^d.
  static Box centered(int dim, double half_width);

  int dim() const noexcept { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const;
};

/// `n` equispaced values from lo to hi inclusive.
Eigen::VectorXd linspace(double lo, double hi, int n);

/// Tensor grid with `n` points per axis, boundary included. Rows are points;
/// the first coordinate varies fastest.
Eigen::MatrixXd grid_points(const Box& box, int n);

/// Uniform grid of collocation centres. A grid point that coincides with the
/// origin is shifted by half a cell diagonal, since the origin carries its own
/// value and gradient constraints.
Eigen::MatrixXd collocation_centers(const Box& box, int n);

}  // namespace klyap
