#include "klyap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "klyap/error.hpp"

namespace klyap {

double Linearization::spectral_abscissa() const {
  double alpha = std::abs(eigenvalues.front());
  for (double l : eigenvalues) alpha = std::min(alpha, std::abs(l));
  return alpha;
}

Linearization linearize(const VectorField& field) {
  const int d = field.dim();
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);

  const Eigen::VectorXd f0 = field(origin);
  if (f0.lpNorm<Eigen::Infinity>() > 1e-12) {
    throw ValidationError("dynamics",
                          fmt::format("the origin is not an equilibrium: |f(0)|_inf = {:.3e}",
                                      f0.lpNorm<Eigen::Infinity>()));
  }

  Linearization lin;
  lin.jacobian = field.jacobian(origin);
  const double scale = std::max(1.0, lin.jacobian.lpNorm<Eigen::Infinity>());

  Eigen::EigenSolver<Eigen::MatrixXd> solver(lin.jacobian.transpose());
  if (solver.info() != Eigen::Success) {
    throw NumericError("dynamics", "eigen-decomposition of the Jacobian failed");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();

  for (int i = 0; i < d; ++i) {
    if (std::abs(values(i).imag()) > 1e-10 * scale) {
      throw NumericError("dynamics",
                         fmt::format("complex eigenvalue {:.6g}{:+.6g}i; only real spectra are "
                                     "supported",
                                     values(i).real(), values(i).imag()));
    }
    if (values(i).real() >= 0.0) {
      throw NumericError("dynamics",
                         fmt::format("eigenvalue {:.6g} is not negative; the origin must be a "
                                     "hyperbolic stable equilibrium",
                                     values(i).real()));
    }
  }

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values(a).real() > values(b).real(); });

  for (std::size_t k = 1; k < order.size(); ++k) {
    const double gap = values(order[k - 1]).real() - values(order[k]).real();
    if (gap <= 1e-9 * scale) {
      throw NumericError("dynamics", fmt::format("repeated eigenvalue {:.6g}; eigenvalues must "
                                                 "be simple",
                                                 values(order[k]).real()));
    }
  }

  for (int i : order) {
    Eigen::VectorXd w = vectors.col(i).real();
    w.normalize();
    Eigen::Index imax = 0;
    w.cwiseAbs().maxCoeff(&imax);
    if (w(imax) < 0.0) w = -w;

    const double lambda = values(i).real();
    const double residual =
        (w.transpose() * lin.jacobian - lambda * w.transpose()).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10 * scale) {
      throw NumericError("dynamics",
                         fmt::format("left eigenvector residual {:.3e} too large", residual));
    }
    lin.eigenvalues.push_back(lambda);
    lin.left_eigenvectors.push_back(std::move(w));
  }
  return lin;
}

Eigen::VectorXd nonlinear_part(const VectorField& field, const Linearization& lin,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != field.dim() || lin.dim() != field.dim()) {
    throw ValidationError("dynamics", "dimension mismatch in nonlinear_part");
  }
  return field(x) - lin.jacobian * x;
}

Eigen::VectorXd rk4_step(const VectorField& field, const Eigen::Ref<const Eigen::VectorXd>& x,
                         double dt) {
  const Eigen::VectorXd k1 = field(x);
  const Eigen::VectorXd k2 = field(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = field(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = field(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate_flow(const VectorField& field, const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0)) {
    throw ValidationError("dynamics", "integrate_flow needs t_end > 0 and dt > 0");
  }
  if (x0.size() != field.dim()) {
    throw ValidationError("dynamics", "initial condition has the wrong dimension");
  }

  // Number of steps, tolerant to t_end being an integer multiple of dt up to
  // rounding.
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.emplace_back(x0);

  Eigen::VectorXd x = x0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = traj.times.back();
    const double t_next = (k == steps) ? t_end : static_cast<double>(k) * dt;
    x = rk4_step(field, x, t_next - t_prev);
    if (!x.allFinite()) {
      throw NumericError("dynamics",
                         fmt::format("trajectory left the finite range at t = {:.6g}", t_next));
    }
    traj.times.push_back(t_next);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace klyap
