#include "klyap/geometry.hpp"

#include <fmt/format.h>

#include "klyap/error.hpp"

namespace klyap {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw ValidationError("geometry", "box bounds must be non-empty and of equal dimension");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < upper(i))) {
      throw ValidationError("geometry",
                            fmt::format("degenerate box along axis {}: [{}, {}]", i + 1,
                                        lower(i), upper(i)));
    }
  }
}

Box Box::centered(int dim, double half_width) {
  return Box(Eigen::VectorXd::Constant(dim, -half_width),
             Eigen::VectorXd::Constant(dim, half_width));
}

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (x(i) < lower(i) - tol || x(i) > upper(i) + tol) return false;
  }
  return true;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  if (n < 2) throw ValidationError("geometry", "a grid axis needs at least 2 points");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * i / (n - 1);
  v(n - 1) = hi;
  return v;
}

Eigen::MatrixXd grid_points(const Box& box, int n) {
  const int d = box.dim();
  std::vector<Eigen::VectorXd> axes;
  Eigen::Index total = 1;
  for (int a = 0; a < d; ++a) {
    axes.push_back(linspace(box.lower(a), box.upper(a), n));
    total *= n;
  }
  Eigen::MatrixXd pts(total, d);
  for (Eigen::Index p = 0; p < total; ++p) {
    Eigen::Index rem = p;
    for (int a = 0; a < d; ++a) {
      pts(p, a) = axes[static_cast<std::size_t>(a)](rem % n);
      rem /= n;
    }
  }
  return pts;
}

Eigen::MatrixXd collocation_centers(const Box& box, int n) {
  Eigen::MatrixXd pts = grid_points(box, n);
  const Eigen::VectorXd half_cell = 0.5 * (box.upper - box.lower) / (n - 1);
  for (Eigen::Index p = 0; p < pts.rows(); ++p) {
    if (pts.row(p).norm() <= 1e-12) pts.row(p) += half_cell.transpose();
  }
  return pts;
}

}  // namespace klyap
