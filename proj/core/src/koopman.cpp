#include "klyap/koopman.hpp"

#include <cmath>

#include <fmt/format.h>

#include "klyap/error.hpp"

namespace klyap {

Eigen::VectorXd EigenfunctionModel::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(dim());
  value_with_gradient(x, g);
  return g;
}

KernelEigenfunction::KernelEigenfunction(Eigen::VectorXd w, CollocationSolution h)
    : w_(std::move(w)), h_(std::move(h)) {
  if (w_.size() != h_.dim()) {
    throw ValidationError("koopman", "eigenvector and collocation solution differ in dimension");
  }
}

double KernelEigenfunction::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return w_.dot(x) + h_.evaluate(x);
}

double KernelEigenfunction::value_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                Eigen::Ref<Eigen::VectorXd> grad) const {
  const double h = h_.evaluate_with_gradient(x, grad);
  grad += w_;
  return w_.dot(x) + h;
}

AnalyticEigenfunction::AnalyticEigenfunction(double lambda, Expr phi)
    : lambda_(lambda), phi_(std::move(phi)) {
  for (int r = 0; r < phi_.dim(); ++r) grad_.push_back(phi_.derivative(r));
}

double AnalyticEigenfunction::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return phi_.eval(x);
}

double AnalyticEigenfunction::value_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                  Eigen::Ref<Eigen::VectorXd> grad) const {
  for (std::size_t r = 0; r < grad_.size(); ++r) {
    grad(static_cast<Eigen::Index>(r)) = grad_[r].eval(x);
  }
  return phi_.eval(x);
}

std::vector<std::shared_ptr<const KernelEigenfunction>> build_eigenfunctions(
    std::shared_ptr<const Kernel> kernel, std::shared_ptr<const VectorField> field,
    const Linearization& lin, const Eigen::MatrixXd& centers, const Box& domain,
    std::optional<double> eta) {
  std::vector<std::shared_ptr<const KernelEigenfunction>> out;
  for (int i = 0; i < lin.dim(); ++i) {
    auto problem = CollocationProblem::for_eigenpair(kernel, field, lin, i, centers, domain, eta);
    out.push_back(std::make_shared<const KernelEigenfunction>(
        lin.left_eigenvectors[static_cast<std::size_t>(i)], solve(problem)));
  }
  return out;
}

bool path_integral_converges(const Linearization& lin, double lambda) {
  return -lambda + 2.0 * lin.max_eigenvalue() < 0.0;
}

double path_integral_phi(const VectorField& field, const Linearization& lin, double lambda,
                         const Eigen::Ref<const Eigen::VectorXd>& w,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const PathIntegralOptions& options) {
  if (!path_integral_converges(lin, lambda)) {
    throw ValidationError(
        "koopman", fmt::format("path integral does not converge for lambda = {:.6g}: "
                               "-lambda + 2 lambda_max = {:.6g} >= 0",
                               lambda, -lambda + 2.0 * lin.max_eigenvalue()));
  }
  if (!(options.t_max > 0.0) || !(options.dt > 0.0)) {
    throw ValidationError("koopman", "path integral needs t_max > 0 and dt > 0");
  }

  auto integrand = [&](double t, const Eigen::VectorXd& state) {
    return std::exp(-lambda * t) * w.dot(nonlinear_part(field, lin, state));
  };

  Eigen::VectorXd state = x;
  double t = 0.0;
  double g_prev = integrand(t, state);
  double integral = 0.0;
  int quiet = std::abs(g_prev) < options.negligible ? 1 : 0;

  while (t < options.t_max && quiet < options.quiet_steps) {
    const double step = std::min(options.dt, options.t_max - t);
    state = rk4_step(field, state, step);
    t += step;
    if (!state.allFinite()) {
      throw NumericError("koopman",
                         fmt::format("trajectory from ({}) blew up at t = {:.6g}",
                                     fmt::join(x.begin(), x.end(), ", "), t));
    }
    const double g = integrand(t, state);
    integral += 0.5 * step * (g_prev + g);
    g_prev = g;
    quiet = std::abs(g) < options.negligible ? quiet + 1 : 0;
  }
  return w.dot(x) + integral;
}

}  // namespace klyap
