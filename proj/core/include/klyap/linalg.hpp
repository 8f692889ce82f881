#pragma once

#include <string>

#include <Eigen/Dense>

namespace klyap {

struct SymmetricSolve {
  Eigen::VectorXd x;
  /// Estimate of the 1-norm condition number of the matrix.
  double condition_estimate = 0.0;
  /// "bunch-kaufman" or "least-squares".
  std::string method;
  /// ||A x - b||_inf after refinement.
  double residual = 0.0;
};

/// Solves A x = b for symmetric A.
///
/// Tries a Bunch-Kaufman factorisation first (LAPACK dsytrf), followed by two
/// rounds of iterative refinement. If the factorisation breaks down (exactly
/// singular pivot) or the refined solution is not finite, falls back to a
/// minimum-norm least-squares solve (dgelsd). Throws NumericError if that
/// fails as well.
SymmetricSolve solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

}  // namespace klyap
