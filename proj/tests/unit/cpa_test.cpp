#include "klyap/cpa.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "klyap/error.hpp"
#include "testing.hpp"

namespace klyap {
namespace {

VectorField field(std::vector<std::string> text) { return VectorField::parse(text); }

std::vector<double> sample(const Triangulation& tri, double (*fn)(const Eigen::VectorXd&)) {
  return sample_vertices(tri, fn);
}

TEST(Triangulation, FullScale) {
  const auto tri = build_triangulation(Box::centered(2, 2.0), 108);
  EXPECT_EQ(tri.vertices.size(), 11881u);
  EXPECT_EQ(tri.simplices.size(), 23328u);
  ASSERT_TRUE(tri.origin_vertex.has_value());
  EXPECT_EQ(tri.vertices[static_cast<std::size_t>(*tri.origin_vertex)], Eigen::Vector2d::Zero());
}

TEST(Triangulation, SmallCount) {
  const auto tri = build_triangulation(Box::centered(2, 1.0), 2);
  EXPECT_EQ(tri.vertices.size(), 9u);
  EXPECT_EQ(tri.simplices.size(), 8u);
  EXPECT_EQ(*tri.origin_vertex, 4);
  // Every simplex touching the origin lists it first.
  int touching = 0;
  for (const auto& s : tri.simplices) {
    if (s[1] == 4 || s[2] == 4) ADD_FAILURE() << "origin not first";
    touching += s[0] == 4;
  }
  EXPECT_EQ(touching, 6);
}

TEST(Triangulation, Layout) {
  const auto tri = build_triangulation(Box(Eigen::Vector2d(1, 1), Eigen::Vector2d(3, 2)), 2);
  EXPECT_FALSE(tri.origin_vertex.has_value());
  EXPECT_EQ(tri.vertices[1], Eigen::Vector2d(2, 1));  // x1 varies fastest
  EXPECT_EQ(tri.vertices[3], Eigen::Vector2d(1, 1.5));
  const std::array<int, 3> lower{0, 1, 4}, upper{0, 3, 4};
  EXPECT_EQ(tri.simplices[0], lower);
  EXPECT_EQ(tri.simplices[1], upper);
}

TEST(Triangulation, Guards) {
  EXPECT_THROW(build_triangulation(Box::centered(2, 1.0), 1), ValidationError);
  EXPECT_THROW(build_triangulation(Box::centered(2, 1.0), 3), ValidationError);
  EXPECT_THROW(build_triangulation(Box::centered(3, 1.0), 4), ValidationError);
  // Asymmetric box where an odd N still puts the origin on a vertex.
  const auto tri = build_triangulation(Box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(2, 2)), 3);
  EXPECT_EQ(*tri.origin_vertex, tri.vertex_index(1, 1));
}

TEST(SimplexGradient, AffineReproduction) {
  const auto tri = build_triangulation(Box::centered(2, 2.0), 8);
  const auto v1 = sample(tri, [](const Eigen::VectorXd& x) { return x(0); });
  const auto v2 = sample(tri, [](const Eigen::VectorXd& x) { return 2 * x(0) + 3 * x(1) + 7; });
  for (int s = 0; s < static_cast<int>(tri.simplices.size()); ++s) {
    EXPECT_LT((simplex_gradient(tri, s, v1) - Eigen::Vector2d(1, 0)).norm(), 1e-12);
    EXPECT_LT((simplex_gradient(tri, s, v2) - Eigen::Vector2d(2, 3)).norm(), 1e-12);
  }
  for (const auto& x : testing::random_points(100, 2, -2, 2, 61)) {
    EXPECT_NEAR(interpolate(tri, v2, x), 2 * x(0) + 3 * x(1) + 7, 1e-12);
  }
}

TEST(SimplexGradient, QuadraticOnRightTriangle) {
  const double h = 0.25;
  Triangulation tri{Box(Eigen::Vector2d(0, 0), Eigen::Vector2d(h, h)), 1, {}, {}, std::nullopt};
  tri.vertices = {Eigen::Vector2d(0, 0), Eigen::Vector2d(h, 0), Eigen::Vector2d(0, h)};
  tri.simplices = {{0, 1, 2}};
  const std::vector<double> values{0.0, h * h, 0.0};  // V = x1^2
  const Eigen::Vector2d g = simplex_gradient(tri, 0, values);
  EXPECT_NEAR(g(0), h, 1e-15);
  EXPECT_NEAR(g(1), 0.0, 1e-15);
}

TEST(EstimateB, ExampleOneIsExact) {
  const auto b = estimate_B(field({"-2*x1", "-3*(x2 - x1^2)"}), Box::centered(2, 2.0), 21);
  EXPECT_EQ(b.b(0, 0), 6.0);
  EXPECT_EQ(b.b(0, 1), 0.0);
  EXPECT_EQ(b.b(1, 0), 0.0);
  EXPECT_EQ(b.b(1, 1), 0.0);
}

TEST(EstimateB, DuffingBoundaryMaximum) {
  const auto f = field({"x2", "-3*x2 - x1 - x1^3"});
  const auto exact = estimate_B(f, Box::centered(2, 2.0), 41, 1.0);
  EXPECT_DOUBLE_EQ(exact.b(0, 0), 12.0);
  EXPECT_EQ(exact.b(0, 1), 0.0);
  EXPECT_EQ(exact.b(1, 1), 0.0);
  const auto padded = estimate_B(f, Box::centered(2, 2.0), 41, 1.1);
  EXPECT_DOUBLE_EQ(padded.b(0, 0), 13.2);
}

TEST(EstimateB, LinearFieldAndOverrides) {
  const auto lin = field({"-x1 + x2", "-2*x2"});
  EXPECT_EQ(estimate_B(lin, Box::centered(2, 1.0), 11).b.norm(), 0.0);

  const auto ex1 = field({"-2*x1", "-3*(x2 - x1^2)"});
  Eigen::Matrix2d ok;
  ok << 7, 0, 0, 1;
  EXPECT_EQ(estimate_B(ex1, Box::centered(2, 2.0), 11, 1.1, BBound{ok}).b, ok);
  Eigen::Matrix2d low;
  low << 2, 0, 0, 0;
  EXPECT_THROW(estimate_B(ex1, Box::centered(2, 2.0), 11, 1.1, BBound{low}), ValidationError);
}

TEST(ComputeE, Formula) {
  const auto tri = build_triangulation(Box::centered(2, 2.0), 8);
  const double h = 0.5;
  Eigen::Matrix2d b;
  b << 6, 0, 0, 0;
  const BBound bound{b};
  // Simplex 0 is (v00, v10, v11): x_1 - x_0 = (h, 0), x_2 - x_0 = (h, h).
  EXPECT_EQ(compute_E(tri, 0, 0, bound), 0.0);
  EXPECT_NEAR(compute_E(tri, 0, 1, bound), 3 * h * h, 1e-15);
  EXPECT_NEAR(compute_E(tri, 0, 2, bound), 0.5 * 6 * h * (h + h), 1e-15);
  EXPECT_EQ(compute_E(tri, 5, 2, BBound{Eigen::Matrix2d::Zero()}), 0.0);
}

TEST(ComputeE, QuadraticInMeshSize) {
  Eigen::Matrix2d b;
  b << 2, 1, 1, 3;
  const BBound bound{b};
  const Box box(Eigen::Vector2d(1, 1), Eigen::Vector2d(3, 3));
  const auto coarse = build_triangulation(box, 4);
  const auto fine = build_triangulation(box, 8);
  for (int s = 0; s < 2; ++s) {
    for (int i = 1; i < 3; ++i) {
      EXPECT_NEAR(compute_E(fine, s, i, bound), compute_E(coarse, s, i, bound) / 4.0, 1e-14);
    }
  }
}

TEST(Certify, ZeroValuesFailPositivity) {
  const auto tri = build_triangulation(Box::centered(2, 1.0), 4);
  const std::vector<double> zeros(tri.vertices.size(), 0.0);
  const auto report =
      certify(tri, zeros, field({"-x1", "-x2"}), BBound{Eigen::Matrix2d::Zero()});
  EXPECT_EQ(report.vertex_failures, tri.vertices.size() - 1);
  EXPECT_FALSE(report.certified());
  std::ostringstream os;
  report.write_failures_csv(os, tri);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "simplex_index,vertex_index,x1,x2,lhs_margin");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("-1,0,-1,-1,", 0), 0u) << line;
}

TEST(Certify, QuadraticForStableLinearSystem) {
  const auto tri = build_triangulation(Box::centered(2, 2.0), 40);
  const auto values = sample(tri, [](const Eigen::VectorXd& x) { return x.squaredNorm(); });
  const auto report =
      certify(tri, values, field({"-x1", "-x2"}), BBound{Eigen::Matrix2d::Zero()});
  EXPECT_EQ(report.vertex_failures, 0u);
  EXPECT_EQ(report.skipped_origin_checks, 6u);
  const double ring = 2.0 * tri.cell_size().norm();
  EXPECT_LE(report.failure_radius, ring);
  for (const auto& c : report.simplex_results) {
    if (tri.vertices[static_cast<std::size_t>(c.vertex)].norm() > ring) {
      EXPECT_TRUE(c.passed) << "simplex " << c.simplex << " vertex " << c.vertex;
    }
  }
}

TEST(Certify, LargerBNeverHelps) {
  const auto tri = build_triangulation(Box::centered(2, 2.0), 20);
  const auto f = field({"-2*x1", "-3*(x2 - x1^2)"});
  const auto values =
      sample(tri, [](const Eigen::VectorXd& x) { return x(0) * x(0) + 0.5 * x(1) * x(1); });
  Eigen::Matrix2d small;
  small << 6, 0, 0, 0;
  Eigen::Matrix2d big;
  big << 8, 0.5, 0.5, 1;
  const auto a = certify(tri, values, f, BBound{small});
  const auto b = certify(tri, values, f, BBound{big});
  ASSERT_EQ(a.simplex_results.size(), b.simplex_results.size());
  for (std::size_t i = 0; i < a.simplex_results.size(); ++i) {
    EXPECT_GE(b.simplex_results[i].lhs, a.simplex_results[i].lhs);
    if (!a.simplex_results[i].passed) EXPECT_FALSE(b.simplex_results[i].passed);
  }
  EXPECT_GE(b.simplex_failures, a.simplex_failures);
}

TEST(Certify, SummaryMentionsCounts) {
  const auto tri = build_triangulation(Box::centered(2, 1.0), 2);
  const auto values = sample(tri, [](const Eigen::VectorXd& x) { return x.squaredNorm(); });
  const auto report =
      certify(tri, values, field({"-x1", "-x2"}), BBound{Eigen::Matrix2d::Zero()});
  std::ostringstream os;
  report.write_summary(os);
  EXPECT_NE(os.str().find("vertices = 9"), std::string::npos) << os.str();
  EXPECT_NE(os.str().find("triangles = 8"), std::string::npos);
  EXPECT_EQ(report.simplex_results.size() + report.skipped_origin_checks, 24u);
}

TEST(Certify, Guards) {
  const auto tri = build_triangulation(Box::centered(2, 1.0), 2);
  std::vector<double> values(tri.vertices.size(), 1.0);
  const auto f = field({"-x1", "-x2"});
  EXPECT_THROW(certify(tri, std::vector<double>(3, 1.0), f, BBound{Eigen::Matrix2d::Zero()}),
               ValidationError);
  values[2] = std::nan("");
  EXPECT_THROW(certify(tri, values, f, BBound{Eigen::Matrix2d::Zero()}), ValidationError);

  Triangulation flat{Box::centered(2, 1.0), 1, {}, {}, std::nullopt};
  flat.vertices = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0)};
  flat.simplices = {{0, 1, 2}};
  EXPECT_THROW(certify(flat, std::vector<double>(3, 1.0), f, BBound{Eigen::Matrix2d::Zero()}),
               NumericError);
}

}  // namespace
}  // namespace klyap
