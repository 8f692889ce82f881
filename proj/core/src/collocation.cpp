#include "klyap/collocation.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "klyap/error.hpp"
#include "klyap/linalg.hpp"

namespace klyap {

namespace {

using Span = std::span<const double>;

Span row_span(const Eigen::MatrixXd& rowmajor_copy, Eigen::Index i, int d) {
  return {rowmajor_copy.data() + i * d, static_cast<std::size_t>(d)};
}

Span as_span(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Centres and f(centres) stored point-contiguous (d x n column-major), so that
// column i is the i-th point.
Eigen::MatrixXd points_by_column(const Eigen::MatrixXd& rows) { return rows.transpose(); }

Eigen::MatrixXd field_at(const VectorField& field, const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd out(centers.rows(), centers.cols());
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    out.row(j) = field(centers.row(j).transpose()).transpose();
  }
  return out;
}

}  // namespace

CollocationProblem CollocationProblem::for_eigenpair(std::shared_ptr<const Kernel> kernel,
                                                     std::shared_ptr<const VectorField> field,
                                                     const Linearization& lin, int index,
                                                     Eigen::MatrixXd centers, Box domain,
                                                     std::optional<double> eta) {
  if (index < 0 || index >= lin.dim()) {
    throw ValidationError("collocation", fmt::format("eigenpair index {} out of range", index));
  }
  const auto i = static_cast<std::size_t>(index);
  return CollocationProblem{std::move(kernel), std::move(field),     lin,
                            lin.eigenvalues[i], lin.left_eigenvectors[i], std::move(centers),
                            std::move(domain), eta};
}

void CollocationProblem::validate() const {
  if (!kernel || !field) throw ValidationError("collocation", "kernel and field are required");
  const int d = field->dim();
  if (kernel->dim() != d || lin.dim() != d || w.size() != d || domain.dim() != d ||
      (centers.rows() > 0 && centers.cols() != d)) {
    throw ValidationError("collocation", "dimension mismatch between problem components");
  }
  if (eta && !(*eta >= 0.0)) throw ValidationError("collocation", "eta must be non-negative");

  bool matched = false;
  for (std::size_t i = 0; i < lin.eigenvalues.size(); ++i) {
    if (std::abs(lin.eigenvalues[i] - lambda) <= 1e-12 * std::max(1.0, std::abs(lambda)) &&
        (lin.left_eigenvectors[i] - w).lpNorm<Eigen::Infinity>() <= 1e-12) {
      matched = true;
    }
  }
  if (!matched) {
    throw ValidationError("collocation",
                          "lambda and w are not an eigenpair of the linearization");
  }

  const Eigen::Index n = centers.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = centers.row(i).transpose();
    if (zi.norm() <= 1e-12) {
      throw ValidationError("collocation", "the origin must not be a collocation centre");
    }
    if (!domain.contains(zi, 1e-12)) {
      throw ValidationError("collocation", fmt::format("centre {} lies outside the domain", i));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((centers.row(i) - centers.row(j)).norm() <= 1e-12) {
        throw ValidationError("collocation",
                              fmt::format("duplicate collocation centres {} and {}", i, j));
      }
    }
  }
}

double k_pde(const CollocationProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
             const Eigen::Ref<const Eigen::VectorXd>& center) {
  const Eigen::VectorXd fc = (*problem.field)(center);
  const KernelJet j = problem.kernel->jet(as_span(x), as_span(center), as_span(fc), as_span(fc));
  return j.grad_y_dot_v - problem.lambda * j.value;
}

CollocationSystem assemble_system(const CollocationProblem& problem) {
  problem.validate();
  const Kernel& k = *problem.kernel;
  const int d = problem.dim();
  const Eigen::Index n = problem.num_centers();
  const Eigen::Index m = problem.system_size();
  const double lambda = problem.lambda;

  const Eigen::MatrixXd z = points_by_column(problem.centers);
  const Eigen::MatrixXd f = points_by_column(field_at(*problem.field, problem.centers));
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(d, d);
  const Span zero = as_span(origin);
  auto e = [&](int l) { return Span(unit.data() + l * d, static_cast<std::size_t>(d)); };

  CollocationSystem sys;
  sys.a.resize(m, m);
  sys.b = Eigen::VectorXd::Zero(m);

  // PDE x PDE block: D applied in both arguments.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Span zi = row_span(z, i, d);
    const Span fi = row_span(f, i, d);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const KernelJet jt = k.jet(zi, row_span(z, j, d), fi, row_span(f, j, d));
      const double entry = jt.cross_form - lambda * jt.grad_x_dot_u - lambda * jt.grad_y_dot_v +
                           lambda * lambda * jt.value;
      sys.a(i, j) = entry;
      sys.a(j, i) = entry;
    }
  }

  // PDE x origin functionals.
  for (Eigen::Index i = 0; i < n; ++i) {
    const Span zi = row_span(z, i, d);
    const Span fi = row_span(f, i, d);
    const KernelJet jv = k.jet(zi, zero, fi, zero);
    const double value_entry = jv.grad_x_dot_u - lambda * jv.value;
    sys.a(i, n) = sys.a(n, i) = value_entry;
    for (int l = 0; l < d; ++l) {
      const KernelJet jd = k.jet(zi, zero, fi, e(l));
      const double deriv_entry = jd.cross_form - lambda * jd.grad_y_dot_v;
      sys.a(i, n + 1 + l) = sys.a(n + 1 + l, i) = deriv_entry;
    }
  }

  // Origin x origin block.
  sys.a(n, n) = k.value(zero, zero);
  for (int l = 0; l < d; ++l) {
    const double vd = k.jet(zero, zero, zero, e(l)).grad_y_dot_v;
    sys.a(n, n + 1 + l) = sys.a(n + 1 + l, n) = vd;
    for (int r = 0; r < d; ++r) {
      sys.a(n + 1 + r, n + 1 + l) = k.jet(zero, zero, e(r), e(l)).cross_form;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = problem.centers.row(i).transpose();
    sys.b(i) = -problem.w.dot(nonlinear_part(*problem.field, problem.lin, zi));
  }

  sys.eta = problem.eta ? *problem.eta : 1e-10 * sys.a.trace() / static_cast<double>(m);
  sys.a.diagonal().head(n).array() += sys.eta;
  return sys;
}

CollocationSolution::CollocationSolution(std::shared_ptr<const Kernel> kernel,
                                         std::shared_ptr<const VectorField> field, double lambda,
                                         Eigen::MatrixXd centers, Eigen::VectorXd alpha,
                                         Diagnostics diagnostics)
    : kernel_(std::move(kernel)),
      field_(std::move(field)),
      lambda_(lambda),
      alpha_(std::move(alpha)),
      diagnostics_(std::move(diagnostics)) {
  if (!kernel_ || !field_) throw ValidationError("collocation", "kernel and field are required");
  const int d = field_->dim();
  if (centers.rows() > 0 && centers.cols() != d) {
    throw ValidationError("collocation", "centre dimension does not match the field");
  }
  if (alpha_.size() != centers.rows() + 1 + d) {
    throw ValidationError("collocation",
                          fmt::format("expected {} coefficients, got {}", centers.rows() + 1 + d,
                                      alpha_.size()));
  }
  centers_ = points_by_column(centers);
  center_field_ = points_by_column(field_at(*field_, centers));
}

double CollocationSolution::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int d = dim();
  const Eigen::Index n = centers_.cols();
  const Span xs = as_span(x);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);
  const Span zero = as_span(origin);

  double h = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (alpha_(j) == 0.0) continue;
    const Span fj = row_span(center_field_, j, d);
    const KernelJet jt = kernel_->jet(xs, row_span(centers_, j, d), fj, fj);
    h += alpha_(j) * (jt.grad_y_dot_v - lambda_ * jt.value);
  }
  h += alpha_(n) * kernel_->value(xs, zero);
  std::vector<double> gy(static_cast<std::size_t>(d));
  kernel_->grad_y(xs, zero, gy);
  for (int l = 0; l < d; ++l) h += alpha_(n + 1 + l) * gy[static_cast<std::size_t>(l)];
  return h;
}

double CollocationSolution::evaluate_with_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                   Eigen::Ref<Eigen::VectorXd> grad) const {
  const int d = dim();
  const auto du = static_cast<std::size_t>(d);
  const Eigen::Index n = centers_.cols();
  const Span xs = as_span(x);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);
  const Span zero = as_span(origin);
  const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(d, d);
  auto e = [&](int l) { return Span(unit.data() + l * d, du); };

  grad.setZero();
  double h = 0.0;
  std::vector<double> gx(du), hess(du * du);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = alpha_(j);
    if (a == 0.0) continue;
    const Span zj = row_span(centers_, j, d);
    const Span fj = row_span(center_field_, j, d);
    // grad_x k_PDE(x, z_j) = H(x, z_j) f_j - lambda grad_x k(x, z_j)
    kernel_->grad_x(xs, zj, gx);
    kernel_->cross_hessian(xs, zj, hess);
    for (std::size_t r = 0; r < du; ++r) {
      double hf = 0.0;
      for (std::size_t s = 0; s < du; ++s) hf += hess[r * du + s] * fj[s];
      grad(static_cast<Eigen::Index>(r)) += a * (hf - lambda_ * gx[r]);
    }
    const KernelJet jt = kernel_->jet(xs, zj, fj, fj);
    h += a * (jt.grad_y_dot_v - lambda_ * jt.value);
  }

  h += alpha_(n) * kernel_->value(xs, zero);
  kernel_->grad_x(xs, zero, gx);
  for (std::size_t r = 0; r < du; ++r) grad(static_cast<Eigen::Index>(r)) += alpha_(n) * gx[r];

  for (int l = 0; l < d; ++l) {
    const double a = alpha_(n + 1 + l);
    if (a == 0.0) continue;
    for (int r = 0; r < d; ++r) {
      const KernelJet jt = kernel_->jet(xs, zero, e(r), e(l));
      if (r == 0) h += a * jt.grad_y_dot_v;
      grad(r) += a * jt.cross_form;
    }
  }
  return h;
}

Eigen::VectorXd CollocationSolution::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(dim());
  evaluate_with_gradient(x, g);
  return g;
}

double CollocationSolution::apply_operator(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(dim());
  const double h = evaluate_with_gradient(x, g);
  return g.dot((*field_)(x)) - lambda_ * h;
}

CollocationSolution solve(const CollocationProblem& problem) {
  CollocationSystem sys = assemble_system(problem);
  SymmetricSolve result = solve_symmetric(sys.a, sys.b);

  CollocationSolution::Diagnostics diag;
  diag.condition_estimate = result.condition_estimate;
  diag.eta = sys.eta;
  diag.residual = result.residual;
  diag.method = result.method;
  if (result.condition_estimate > 1e12) {
    diag.warnings.push_back(
        fmt::format("Gram system is ill-conditioned (condition estimate {:.3e})",
                    result.condition_estimate));
  }
  if (result.method != "bunch-kaufman") {
    diag.warnings.push_back("symmetric factorisation failed; used least-squares fallback");
  }
  return CollocationSolution(problem.kernel, problem.field, problem.lambda, problem.centers,
                             std::move(result.x), std::move(diag));
}

double fill_distance(const Eigen::Ref<const Eigen::MatrixXd>& centers, const Box& box,
                     int probe_resolution) {
  if (centers.rows() == 0) throw ValidationError("collocation", "fill distance of an empty set");
  if (probe_resolution < 2) throw ValidationError("collocation", "probe_resolution must be >= 2");
  if (centers.cols() != box.dim()) {
    throw ValidationError("collocation", "centre dimension does not match the box");
  }
  const Eigen::MatrixXd probes = grid_points(box, probe_resolution);
  const Eigen::MatrixXd z = centers.transpose();
  double worst = 0.0;
#pragma omp parallel for reduction(max : worst)
  for (Eigen::Index p = 0; p < probes.rows(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      best = std::min(best, (z.col(j) - probes.row(p).transpose()).squaredNorm());
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace klyap
