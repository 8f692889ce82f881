#include "klyap/lyapunov.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "klyap/error.hpp"

namespace klyap {

Eigen::MatrixXd solve_P(std::span<const double> eigenvalues) {
  const auto d = static_cast<Eigen::Index>(eigenvalues.size());
  if (d == 0) throw ValidationError("lyapunov", "empty spectrum");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double l = eigenvalues[static_cast<std::size_t>(i)];
    if (!(l < 0.0)) {
      throw NumericError("lyapunov", fmt::format("Lambda is not Hurwitz: eigenvalue {}", l));
    }
    p(i, i) = 1.0 / (2.0 * std::abs(l));
  }
  return p;
}

LyapunovModel::LyapunovModel(EigenfunctionSet eigenfunctions)
    : eigenfunctions_(std::move(eigenfunctions)) {
  if (eigenfunctions_.empty()) throw ValidationError("lyapunov", "no eigenfunctions");
  dim_ = eigenfunctions_.front()->dim();
  if (static_cast<int>(eigenfunctions_.size()) != dim_) {
    throw ValidationError("lyapunov", fmt::format("need {} eigenfunctions, got {}", dim_,
                                                  eigenfunctions_.size()));
  }
  std::vector<double> spectrum;
  for (const auto& ef : eigenfunctions_) {
    if (ef->dim() != dim_) throw ValidationError("lyapunov", "eigenfunction dimension mismatch");
    spectrum.push_back(ef->eigenvalue());
  }
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    for (std::size_t j = i + 1; j < spectrum.size(); ++j) {
      if (spectrum[i] == spectrum[j]) {
        throw ValidationError("lyapunov", "eigenvalues must be distinct");
      }
    }
  }
  lambda_ = Eigen::Map<const Eigen::VectorXd>(spectrum.data(), dim_).asDiagonal();
  p_ = solve_P(spectrum);
}

double LyapunovModel::V(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd phi(dim_);
  for (int i = 0; i < dim_; ++i) phi(i) = eigenfunctions_[static_cast<std::size_t>(i)]->value(x);
  return phi.dot(p_ * phi);
}

Eigen::VectorXd LyapunovModel::grad_V(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd phi(dim_);
  Eigen::MatrixXd grads(dim_, dim_);  // row i = grad phi_i
  Eigen::VectorXd g(dim_);
  for (int i = 0; i < dim_; ++i) {
    phi(i) = eigenfunctions_[static_cast<std::size_t>(i)]->value_with_gradient(x, g);
    grads.row(i) = g.transpose();
  }
  // grad V = 2 sum_ij P_ij phi_j grad phi_i (P symmetric)
  return 2.0 * grads.transpose() * (p_ * phi);
}

double LyapunovModel::Vdot(const VectorField& field,
                           const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return grad_V(x).dot(field(x));
}

double LyapunovModel::Vdot_eigen_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd phi(dim_);
  for (int i = 0; i < dim_; ++i) phi(i) = eigenfunctions_[static_cast<std::size_t>(i)]->value(x);
  double v = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      v += p_(i, j) * (lambda_(i, i) + lambda_(j, j)) * phi(i) * phi(j);
    }
  }
  return v;
}

LyapunovDiagnostics diagnostics(const LyapunovModel& model, double fill_distance,
                                const Linearization& lin, const Box& probe_domain,
                                int probe_resolution) {
  LyapunovDiagnostics out{.probe_domain = probe_domain};
  out.fill_distance = fill_distance;
  out.lambda_bar = lin.max_eigenvalue();
  out.alpha = lin.spectral_abscissa();
  out.p_frobenius = model.P().norm();
  // Lambda is diagonal, so ||exp(Lambda t)||_2 = exp(-alpha t) exactly.
  out.exp_bound_m = 1.0;
  out.p_bound = out.exp_bound_m * out.exp_bound_m / (2.0 * out.alpha);
  out.p_bound_holds = out.p_frobenius <= out.p_bound * (1.0 + 1e-12);
  const Eigen::MatrixXd residual = model.Lambda().transpose() * model.P() +
                                   model.P() * model.Lambda() +
                                   Eigen::MatrixXd::Identity(model.dim(), model.dim());
  out.lyapunov_residual = residual.lpNorm<Eigen::Infinity>();
  out.probe_resolution = probe_resolution;

  const Eigen::MatrixXd probes = grid_points(probe_domain, probe_resolution);
  for (const auto& ef : model.eigenfunctions()) {
    double sup = 0.0;
#pragma omp parallel for reduction(max : sup)
    for (Eigen::Index p = 0; p < probes.rows(); ++p) {
      sup = std::max(sup, std::abs(ef->value(probes.row(p).transpose())));
    }
    out.phi_sup.push_back(sup);
    if (const auto* kef = dynamic_cast<const KernelEigenfunction*>(ef.get())) {
      out.condition_estimates.push_back(kef->nonlinear_part().diagnostics().condition_estimate);
    }
  }
  return out;
}

void LyapunovDiagnostics::write(std::ostream& os) const {
  fmt::print(os, "fill_distance = {:.17g}\n", fill_distance);
  fmt::print(os, "lambda_bar = {:.17g}\n", lambda_bar);
  fmt::print(os, "alpha = {:.17g}\n", alpha);
  fmt::print(os, "P_frobenius = {:.17g}\n", p_frobenius);
  fmt::print(os, "P_bound_M = {:.17g}\n", exp_bound_m);
  fmt::print(os, "P_bound = {:.17g}\n", p_bound);
  fmt::print(os, "P_bound_holds = {}\n", p_bound_holds ? "yes" : "no (bound uses the operator "
                                                                  "norm; Frobenius norm exceeds it)");
  fmt::print(os, "lyapunov_residual = {:.17g}\n", lyapunov_residual);
  fmt::print(os, "probe_domain = {} {} {} {}\n", probe_domain.lower(0), probe_domain.upper(0),
             probe_domain.dim() > 1 ? probe_domain.lower(1) : 0.0,
             probe_domain.dim() > 1 ? probe_domain.upper(1) : 0.0);
  fmt::print(os, "probe_resolution = {}\n", probe_resolution);
  for (std::size_t i = 0; i < phi_sup.size(); ++i) {
    fmt::print(os, "phi_sup[{}] = {:.17g}\n", i + 1, phi_sup[i]);
  }
  for (std::size_t i = 0; i < condition_estimates.size(); ++i) {
    fmt::print(os, "condition_estimate[{}] = {:.6e}\n", i + 1, condition_estimates[i]);
  }
}

std::string to_string(SurfaceQuantity q) { return q == SurfaceQuantity::kV ? "V" : "Vdot"; }

Eigen::Vector2d SurfaceGrid::point(int i1, int i2) const {
  const auto coord = [&](int axis, int i) {
    if (i == resolution - 1) return domain.upper(axis);
    return domain.lower(axis) + (domain.upper(axis) - domain.lower(axis)) * i / (resolution - 1);
  };
  return {coord(0, i1), coord(1, i2)};
}

void SurfaceGrid::write_csv(std::ostream& os) const {
  fmt::print(os, "# domain {:.17g} {:.17g} {:.17g} {:.17g}; resolution {} {}; quantity {}\n",
             domain.lower(0), domain.upper(0), domain.lower(1), domain.upper(1), resolution,
             resolution, to_string(quantity));
  for (int i2 = 0; i2 < resolution; ++i2) {
    for (int i1 = 0; i1 < resolution; ++i1) {
      const Eigen::Vector2d x = point(i1, i2);
      fmt::print(os, "{:.17g},{:.17g},{:.17g}\n", x(0), x(1), at(i1, i2));
    }
  }
}

SurfaceGrid grid_eval(const LyapunovModel& model, const VectorField& field, const Box& domain,
                      int resolution, SurfaceQuantity quantity) {
  if (resolution < 2) throw ValidationError("lyapunov", "grid resolution must be >= 2");
  if (domain.dim() != 2 || model.dim() != 2) {
    throw ValidationError("lyapunov", "surface grids are two-dimensional");
  }
  SurfaceGrid grid{domain, resolution, quantity, {}};
  grid.values.resize(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
#pragma omp parallel for schedule(dynamic)
  for (int i2 = 0; i2 < resolution; ++i2) {
    for (int i1 = 0; i1 < resolution; ++i1) {
      const Eigen::VectorXd x = grid.point(i1, i2);
      const double v =
          quantity == SurfaceQuantity::kV ? model.V(x) : model.Vdot(field, x);
      grid.values[static_cast<std::size_t>(i2) * static_cast<std::size_t>(resolution) +
                  static_cast<std::size_t>(i1)] = v;
    }
  }
  return grid;
}

}  // namespace klyap
