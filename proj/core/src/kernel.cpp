#include "klyap/kernel.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "klyap/error.hpp"

namespace klyap {

namespace {

std::span<const double> as_span(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

KernelJet Kernel::jet(Point x, Point y, Point u, Point v) const {
  const auto d = static_cast<std::size_t>(dim());
  std::vector<double> gx(d), gy(d), h(d * d);
  grad_x(x, y, gx);
  grad_y(x, y, gy);
  cross_hessian(x, y, h);

  KernelJet j;
  j.value = value(x, y);
  for (std::size_t r = 0; r < d; ++r) {
    j.grad_x_dot_u += gx[r] * u[r];
    j.grad_y_dot_v += gy[r] * v[r];
    for (std::size_t s = 0; s < d; ++s) j.cross_form += u[r] * h[r * d + s] * v[s];
  }
  return j;
}

double Kernel::value(const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return value(as_span(x), as_span(y));
}

Eigen::VectorXd Kernel::grad_x(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::VectorXd out(dim());
  grad_x(as_span(x), as_span(y), std::span<double>(out.data(), static_cast<std::size_t>(dim())));
  return out;
}

Eigen::VectorXd Kernel::grad_y(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::VectorXd out(dim());
  grad_y(as_span(x), as_span(y), std::span<double>(out.data(), static_cast<std::size_t>(dim())));
  return out;
}

Eigen::MatrixXd Kernel::cross_hessian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const Eigen::Ref<const Eigen::VectorXd>& y) const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor out(dim(), dim());
  cross_hessian(as_span(x), as_span(y),
                std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::MatrixXd Kernel::gram(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = points.row(i).transpose();
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Eigen::VectorXd xj = points.row(j).transpose();
      k(i, j) = k(j, i) = value(xi, xj);
    }
  }
  return k;
}

GaussianKernel::GaussianKernel(double sigma, int dim)
    : sigma_(sigma), inv_sigma2_(1.0 / (sigma * sigma)), dim_(dim) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("kernel", fmt::format("sigma must be positive, got {}", sigma));
  }
  if (dim < 1) throw ValidationError("kernel", "kernel dimension must be at least 1");
}

double GaussianKernel::sq_dist(Point x, Point y) const {
  double s = 0.0;
  for (int r = 0; r < dim_; ++r) {
    const double diff = x[r] - y[r];
    s += diff * diff;
  }
  return s;
}

double GaussianKernel::value(Point x, Point y) const {
  return std::exp(-0.5 * sq_dist(x, y) * inv_sigma2_);
}

void GaussianKernel::grad_x(Point x, Point y, std::span<double> out) const {
  const double k = value(x, y);
  for (int r = 0; r < dim_; ++r) out[r] = -(x[r] - y[r]) * inv_sigma2_ * k;
}

void GaussianKernel::grad_y(Point x, Point y, std::span<double> out) const {
  const double k = value(x, y);
  for (int r = 0; r < dim_; ++r) out[r] = (x[r] - y[r]) * inv_sigma2_ * k;
}

// (I / sigma^2 - (x - y)(x - y)^T / sigma^4) k(x, y)
void GaussianKernel::cross_hessian(Point x, Point y, std::span<double> out) const {
  const double k = value(x, y);
  for (int r = 0; r < dim_; ++r) {
    const double dr = x[r] - y[r];
    for (int s = 0; s < dim_; ++s) {
      const double ds = x[s] - y[s];
      const double delta = (r == s) ? inv_sigma2_ : 0.0;
      out[static_cast<std::size_t>(r * dim_ + s)] = (delta - dr * ds * inv_sigma2_ * inv_sigma2_) * k;
    }
  }
}

KernelJet GaussianKernel::jet(Point x, Point y, Point u, Point v) const {
  double dist2 = 0.0, du = 0.0, dv = 0.0, uv = 0.0;
  for (int r = 0; r < dim_; ++r) {
    const double diff = x[r] - y[r];
    dist2 += diff * diff;
    du += diff * u[r];
    dv += diff * v[r];
    uv += u[r] * v[r];
  }
  const double k = std::exp(-0.5 * dist2 * inv_sigma2_);
  KernelJet j;
  j.value = k;
  j.grad_x_dot_u = -du * inv_sigma2_ * k;
  j.grad_y_dot_v = dv * inv_sigma2_ * k;
  j.cross_form = (uv * inv_sigma2_ - du * dv * inv_sigma2_ * inv_sigma2_) * k;
  return j;
}

}  // namespace klyap
