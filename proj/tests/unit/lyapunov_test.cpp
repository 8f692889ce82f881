#include "klyap/lyapunov.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "klyap/error.hpp"
#include "testing.hpp"

namespace klyap {
namespace {

using testing::random_points;

// Example 1 with its closed-form eigenfunctions substituted.
struct ExactExampleOne {
  VectorField field = VectorField::parse(std::vector<std::string>{"-2*x1", "-3*(x2 - x1^2)"});
  LyapunovModel model{EigenfunctionSet{
      std::make_shared<const AnalyticEigenfunction>(-2.0, Expr::parse("x1", 2)),
      std::make_shared<const AnalyticEigenfunction>(-3.0, Expr::parse("x2 + 3*x1^2", 2))}};
};

TEST(SolveP, DiagonalSpectra) {
  const std::vector<double> l2{-2.0, -3.0};
  const Eigen::MatrixXd p = solve_P(l2);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(p(1, 1), 1.0 / 6.0);
  EXPECT_EQ(p(0, 1), 0.0);
  EXPECT_EQ(p(1, 0), 0.0);

  const std::vector<double> l1{-0.5};
  EXPECT_DOUBLE_EQ(solve_P(l1)(0, 0), 1.0);
}

TEST(SolveP, LyapunovEquationResidual) {
  for (const std::vector<double>& spectrum :
       {std::vector<double>{-2.0, -3.0},
        std::vector<double>{(-3.0 + std::sqrt(5.0)) / 2.0, (-3.0 - std::sqrt(5.0)) / 2.0}}) {
    const Eigen::MatrixXd p = solve_P(spectrum);
    const Eigen::MatrixXd l =
        Eigen::Map<const Eigen::VectorXd>(spectrum.data(), 2).asDiagonal();
    const Eigen::MatrixXd r = l.transpose() * p + p * l + Eigen::MatrixXd::Identity(2, 2);
    EXPECT_LE(r.lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(SolveP, RejectsNonHurwitz) {
  const std::vector<double> bad{-1.0, 0.0};
  EXPECT_THROW(solve_P(bad), NumericError);
  EXPECT_THROW(solve_P(std::vector<double>{}), ValidationError);
}

TEST(LyapunovModel, ClosedFormValues) {
  const ExactExampleOne ex;
  const Eigen::Vector2d x(1, 0);
  EXPECT_NEAR(ex.model.V(x), 1.75, 1e-10);
  EXPECT_NEAR(ex.model.Vdot(ex.field, x), -10.0, 1e-10);
  EXPECT_EQ(ex.model.V(Eigen::Vector2d::Zero()), 0.0);
  EXPECT_EQ(ex.model.Vdot(ex.field, Eigen::Vector2d::Zero()), 0.0);
}

TEST(LyapunovModel, ChainRuleMatchesEigenForm) {
  const ExactExampleOne ex;
  for (const auto& x : random_points(100, 2, -3, 3, 41)) {
    const double chain = ex.model.Vdot(ex.field, x);
    EXPECT_NEAR(chain, ex.model.Vdot_eigen_form(x), 1e-10 * std::max(1.0, std::abs(chain)));
  }
}

TEST(LyapunovModel, GradientMatchesFiniteDifferences) {
  const ExactExampleOne ex;
  for (const auto& x : random_points(100, 2, -3, 3, 42)) {
    const auto fd = testing::central_gradient(
        [&](const Eigen::VectorXd& y) { return ex.model.V(y); }, x);
    EXPECT_LT(testing::max_rel_error(ex.model.grad_V(x), fd), 1e-6);
  }
}

TEST(LyapunovModel, RejectsInconsistentSets) {
  EXPECT_THROW(LyapunovModel(EigenfunctionSet{}), ValidationError);
  EXPECT_THROW(LyapunovModel(EigenfunctionSet{std::make_shared<const AnalyticEigenfunction>(
                   -2.0, Expr::parse("x1", 2))}),
               ValidationError);
  EXPECT_THROW(
      LyapunovModel(EigenfunctionSet{
          std::make_shared<const AnalyticEigenfunction>(-2.0, Expr::parse("x1", 2)),
          std::make_shared<const AnalyticEigenfunction>(-2.0, Expr::parse("x2", 2))}),
      ValidationError);
}

TEST(Diagnostics, ExampleOneBound) {
  const ExactExampleOne ex;
  const auto lin = linearize(ex.field);
  const auto diag = diagnostics(ex.model, 0.12, lin, Box::centered(2, 2.0), 21);
  EXPECT_DOUBLE_EQ(diag.alpha, 2.0);
  EXPECT_DOUBLE_EQ(diag.lambda_bar, -2.0);
  EXPECT_DOUBLE_EQ(diag.exp_bound_m, 1.0);
  EXPECT_DOUBLE_EQ(diag.p_bound, 0.25);
  EXPECT_NEAR(diag.p_frobenius, 0.300463, 1e-6);
  EXPECT_FALSE(diag.p_bound_holds);
  EXPECT_LE(diag.lyapunov_residual, 1e-12);
  EXPECT_EQ(diag.fill_distance, 0.12);
  ASSERT_EQ(diag.phi_sup.size(), 2u);
  EXPECT_DOUBLE_EQ(diag.phi_sup[0], 2.0);
  EXPECT_DOUBLE_EQ(diag.phi_sup[1], 14.0);
  EXPECT_TRUE(diag.condition_estimates.empty());

  std::ostringstream os;
  diag.write(os);
  EXPECT_NE(os.str().find("P_frobenius = 0.3004626"), std::string::npos) << os.str();
  EXPECT_NE(os.str().find("P_bound = 0.25"), std::string::npos);
}

TEST(Diagnostics, ScalarBoundIsTight) {
  const auto field = VectorField::parse(std::vector<std::string>{"-x1"});
  const LyapunovModel model(EigenfunctionSet{
      std::make_shared<const AnalyticEigenfunction>(-1.0, Expr::parse("x1", 1))});
  const auto diag = diagnostics(model, 0.1, linearize(field),
                                Box(Eigen::VectorXd::Constant(1, -1), Eigen::VectorXd::Ones(1)), 5);
  EXPECT_DOUBLE_EQ(model.P()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(diag.p_bound, 0.5);
  EXPECT_TRUE(diag.p_bound_holds);
}

TEST(SurfaceGrid, CornersArePositive) {
  const ExactExampleOne ex;
  const auto grid = grid_eval(ex.model, ex.field, Box::centered(2, 1.0), 2, SurfaceQuantity::kV);
  ASSERT_EQ(grid.values.size(), 4u);
  for (double v : grid.values) EXPECT_GE(v, 0.0);
  EXPECT_EQ(grid.point(1, 0), Eigen::Vector2d(1, -1));
}

TEST(SurfaceGrid, OriginEntryIsZero) {
  const ExactExampleOne ex;
  const auto grid = grid_eval(ex.model, ex.field, Box::centered(2, 2.0), 81, SurfaceQuantity::kV);
  EXPECT_EQ(grid.point(40, 40), Eigen::Vector2d::Zero());
  EXPECT_EQ(grid.at(40, 40), 0.0);
  const auto vdot =
      grid_eval(ex.model, ex.field, Box::centered(2, 2.0), 81, SurfaceQuantity::kVdot);
  EXPECT_EQ(vdot.at(40, 40), 0.0);
  for (int i2 = 0; i2 < 81; ++i2) {
    for (int i1 = 0; i1 < 81; ++i1) {
      if (i1 == 40 && i2 == 40) continue;
      EXPECT_GT(grid.at(i1, i2), 0.0);
      EXPECT_LT(vdot.at(i1, i2), 0.0);
    }
  }
}

TEST(SurfaceGrid, CsvLayout) {
  const ExactExampleOne ex;
  const auto grid =
      grid_eval(ex.model, ex.field, Box::centered(2, 1.0), 3, SurfaceQuantity::kVdot);
  std::ostringstream os;
  grid.write_csv(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# domain -1 1 -1 1; resolution 3 3; quantity Vdot");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 6), "-1,-1,");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 5), "0,-1,");
  int rows = 2;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 9);
}

TEST(SurfaceGrid, RejectsNonPlanar) {
  const auto field = VectorField::parse(std::vector<std::string>{"-x1"});
  const LyapunovModel model(EigenfunctionSet{
      std::make_shared<const AnalyticEigenfunction>(-1.0, Expr::parse("x1", 1))});
  EXPECT_THROW(grid_eval(model, field, Box::centered(2, 1.0), 5, SurfaceQuantity::kV),
               ValidationError);
}

}  // namespace
}  // namespace klyap
