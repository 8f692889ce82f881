#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace klyap {

/// Values of k and its first derivatives along fixed directions at one
/// (x, y) pair. This is everything needed to apply two first-order
/// differential functionals, one in each argument.
struct KernelJet {
  double value = 0.0;       // k(x, y)
  double grad_x_dot_u = 0.0;  // grad_x k(x, y) . u
  double grad_y_dot_v = 0.0;  // grad_y k(x, y) . v
  double cross_form = 0.0;    // u^T (d^2 k / dx dy^T) v
};

/// A symmetric positive definite kernel with closed-form derivatives.
///
/// The collocation code only talks to this interface, so adding another
/// family means overriding these members. Implementations are immutable and
/// every member is safe to call concurrently.
class Kernel {
 public:
  using Point = std::span<const double>;

  virtual ~Kernel() = default;

  virtual int dim() const noexcept = 0;
  virtual std::string_view family() const noexcept = 0;

  virtual double value(Point x, Point y) const = 0;
  virtual void grad_x(Point x, Point y, std::span<double> out) const = 0;
  virtual void grad_y(Point x, Point y, std::span<double> out) const = 0;
  /// Row-major d x d matrix with entries d^2 k / (dx_r dy_s).
  virtual void cross_hessian(Point x, Point y, std::span<double> out) const = 0;

  virtual KernelJet jet(Point x, Point y, Point u, Point v) const;

  double value(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::VectorXd grad_x(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::VectorXd grad_y(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::MatrixXd cross_hessian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Gram matrix K_ij = k(z_i, z_j) for the rows of `points`.
  Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& points) const;
};

/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
class GaussianKernel final : public Kernel {
 public:
  GaussianKernel(double sigma, int dim);

  double sigma() const noexcept { return sigma_; }
  int dim() const noexcept override { return dim_; }
  std::string_view family() const noexcept override { return "gaussian"; }

  using Kernel::cross_hessian;
  using Kernel::grad_x;
  using Kernel::grad_y;
  using Kernel::value;

  double value(Point x, Point y) const override;
  void grad_x(Point x, Point y, std::span<double> out) const override;
  void grad_y(Point x, Point y, std::span<double> out) const override;
  void cross_hessian(Point x, Point y, std::span<double> out) const override;
  KernelJet jet(Point x, Point y, Point u, Point v) const override;

 private:
  double sq_dist(Point x, Point y) const;

  double sigma_;
  double inv_sigma2_;
  int dim_;
};

}  // namespace klyap
