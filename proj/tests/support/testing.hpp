#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "klyap/expr.hpp"

namespace klyap::testing {

/// |a - b| <= tol * max(1, |b|): relative for large references, absolute
/// near zero where a relative test is meaningless.
inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline std::vector<Eigen::VectorXd> random_points(int count, int dim, double lo, double hi,
                                                  unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int r = 0; r < dim; ++r) x(r) = u(rng);
    out.push_back(x);
  }
  return out;
}

/// Central difference of a scalar function, step scaled with |x|.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                        const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index r = 0; r < x.size(); ++r) {
    const double h = step * std::max(1.0, std::abs(x(r)));
    Eigen::VectorXd xp = x, xm = x;
    xp(r) += h;
    xm(r) -= h;
    g(r) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return g;
}

/// Largest rel_error over the entries of two vectors.
inline double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, rel_error(a(i), b(i)));
  return worst;
}

/// Random polynomial built from +, -, *, small powers and constants.
inline Expr random_polynomial(std::mt19937& rng, int dim, int depth) {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<int> var(0, dim - 1);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  if (depth == 0) {
    return pick(rng) < 2 ? Expr::constant(coeff(rng), dim) : Expr::variable(var(rng), dim);
  }
  const Expr a = random_polynomial(rng, dim, depth - 1);
  switch (pick(rng)) {
    case 0: return a + random_polynomial(rng, dim, depth - 1);
    case 1: return a - random_polynomial(rng, dim, depth - 1);
    case 2:
    case 3: return a * random_polynomial(rng, dim, depth - 1);
    case 4: return pow(a, 2);
    default: return -a;
  }
}

}  // namespace klyap::testing
