#include <lapacke.h>

#include <limits>
#include <vector>

#include <fmt/format.h>

#include "klyap/error.hpp"
#include "klyap/linalg.hpp"

namespace klyap {

namespace {

SymmetricSolve least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd x = b;
  Eigen::VectorXd singular(n);
  lapack_int rank = 0;
  const lapack_int info = LAPACKE_dgelsd(LAPACK_COL_MAJOR, n, n, 1, work.data(), n, x.data(), n,
                                         singular.data(), -1.0, &rank);
  if (info != 0 || !x.allFinite()) {
    throw NumericError("collocation",
                       fmt::format("least-squares fallback failed (dgelsd info = {})", info));
  }
  SymmetricSolve out;
  out.x = std::move(x);
  out.method = "least-squares";
  out.condition_estimate = singular(n - 1) > 0.0 ? singular(0) / singular(n - 1)
                                                 : std::numeric_limits<double>::infinity();
  out.residual = (a * out.x - b).lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace

SymmetricSolve solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw ValidationError("collocation", "solve_symmetric: dimension mismatch");
  }
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return SymmetricSolve{Eigen::VectorXd(), 1.0, "bunch-kaufman", 0.0};

  Eigen::MatrixXd factor = a;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const double anorm = LAPACKE_dlansy(LAPACK_COL_MAJOR, '1', 'L', n, factor.data(), n);
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factor.data(), n, ipiv.data());
  if (info != 0) return least_squares(a, b);

  auto back_solve = [&](Eigen::VectorXd& rhs) {
    return LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, factor.data(), n, ipiv.data(), rhs.data(),
                          n);
  };

  Eigen::VectorXd x = b;
  if (back_solve(x) != 0 || !x.allFinite()) return least_squares(a, b);

  for (int round = 0; round < 2; ++round) {
    Eigen::VectorXd correction = b - a.selfadjointView<Eigen::Lower>() * x;
    if (back_solve(correction) != 0 || !correction.allFinite()) break;
    x += correction;
  }
  if (!x.allFinite()) return least_squares(a, b);

  double rcond = 0.0;
  info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, factor.data(), n, ipiv.data(), anorm, &rcond);

  SymmetricSolve out;
  out.x = std::move(x);
  out.method = "bunch-kaufman";
  out.condition_estimate =
      (info == 0 && rcond > 0.0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  out.residual = (a.selfadjointView<Eigen::Lower>() * out.x - b).lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace klyap
