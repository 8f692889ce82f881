#include "klyap/config.hpp"

#include <filesystem>
#include <sstream>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "klyap/error.hpp"

namespace klyap {
namespace {

using ::testing::HasSubstr;

const std::filesystem::path kConfigs = std::filesystem::path(KLYAP_SOURCE_DIR) / "configs";

constexpr const char* kMinimal = R"(
[system]
f1 = -x1
f2 = -2*x2

[domain]
lower = -1 -1
upper = 1 1
)";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(Config, BundledExampleOne) {
  const auto cfg = load_config(kConfigs / "example1.cfg");
  ASSERT_EQ(cfg.dim(), 2);
  EXPECT_EQ(cfg.system[1], "-3*(x2 - x1^2)");
  EXPECT_EQ(cfg.collocation.grid_n, 60);
  EXPECT_EQ(cfg.collocation.sigma, 3.0);
  ASSERT_TRUE(cfg.collocation.eta.has_value());
  EXPECT_EQ(*cfg.collocation.eta, 1e-10);
  EXPECT_EQ(cfg.domain.lower, Eigen::Vector2d(-5, -5));
  EXPECT_EQ(cfg.test_grid.resolution, 81);
  EXPECT_EQ(cfg.cpa.cells, 108);
  ASSERT_TRUE(cfg.cpa.b_override.has_value());
  EXPECT_EQ((*cfg.cpa.b_override)(0, 0), 6.0);
  EXPECT_EQ(cfg.oracle.points.size(), 10u);
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("out/example1"));
}

TEST(Config, BundledDuffing) {
  const auto cfg = load_config(kConfigs / "duffing.cfg");
  EXPECT_EQ(cfg.dim(), 2);
  EXPECT_FALSE(cfg.cpa.b_override.has_value());
  EXPECT_TRUE(cfg.cpa.enabled);
}

TEST(Config, Defaults) {
  const auto cfg = parse(kMinimal);
  EXPECT_EQ(cfg.collocation.grid_n, 60);
  EXPECT_FALSE(cfg.collocation.eta.has_value());
  EXPECT_FALSE(cfg.collocation.dump_system);
  EXPECT_TRUE(cfg.cpa.enabled);
  EXPECT_EQ(cfg.cpa.safety, 1.1);
  EXPECT_TRUE(cfg.oracle.points.empty());
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("out"));
}

TEST(Config, CpaDefaultsOffOutsideTwoD) {
  const auto cfg = parse("[system]\nf1 = -x1\n[domain]\nlower = -1\nupper = 1\n");
  EXPECT_FALSE(cfg.cpa.enabled);
  EXPECT_THAT(error_of("[system]\nf1 = -x1\n[domain]\nlower = -1\nupper = 1\n"
                       "[cpa]\nenabled = yes\n"),
              HasSubstr("cpa.enabled"));
}

TEST(Config, GridSizeNamesTheField) {
  EXPECT_THAT(error_of(std::string(kMinimal) + "[collocation]\ngrid_n = 1\n"),
              HasSubstr("collocation.grid_n: must be >= 2"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[collocation]\ngrid_n = 2.5\n"),
              HasSubstr("collocation.grid_n"));
}

TEST(Config, RejectsUnknownNames) {
  EXPECT_THAT(error_of(std::string(kMinimal) + "[collocation]\ngridn = 10\n"),
              HasSubstr("collocation.gridn: unknown key"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[solver]\nx = 1\n"),
              HasSubstr("solver: unknown section"));
  EXPECT_THAT(error_of("[system]\nf1 = -x1\nf3 = -x2\n[domain]\nlower = -1\nupper = 1\n"),
              HasSubstr("component f2 is missing"));
}

TEST(Config, RejectsBadValues) {
  EXPECT_THAT(error_of(std::string(kMinimal) + "[collocation]\nsigma = -1\n"),
              HasSubstr("collocation.sigma"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[collocation]\neta = tiny\n"),
              HasSubstr("collocation.eta"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[cpa]\nB = 1 2 3\n"), HasSubstr("cpa.B"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[cpa]\nenabled = maybe\n"),
              HasSubstr("not a boolean"));
  EXPECT_THAT(error_of(std::string(kMinimal) + "[oracle]\npoints = 1 0; 2\n"),
              HasSubstr("oracle.points"));
  EXPECT_THAT(error_of("[system]\nf1 = -x1\nf2 = -x2\n[domain]\nlower = -1 -1\n"),
              HasSubstr("domain"));
  EXPECT_THAT(error_of("[system]\nf1 = -x1\nf2 = -x2\n[domain]\nlower = -1 1\nupper = 1 1\n"),
              HasSubstr("degenerate"));
}

TEST(Config, ParseErrorReportsLine) {
  EXPECT_THAT(error_of("[system]\nf1 = -x1\nthis line is broken\n"), HasSubstr("test.cfg line 3"));
}

TEST(Config, EtaModes) {
  EXPECT_FALSE(parse(std::string(kMinimal) + "[collocation]\neta = relative\n")
                   .collocation.eta.has_value());
  EXPECT_EQ(*parse(std::string(kMinimal) + "[collocation]\neta = 0\n").collocation.eta, 0.0);
}

TEST(Config, MatrixIsRowMajor) {
  const auto cfg = parse(std::string(kMinimal) + "[cpa]\nB = 1 2 3 4\n");
  const Eigen::MatrixXd& b = *cfg.cpa.b_override;
  EXPECT_EQ(b(0, 1), 2.0);
  EXPECT_EQ(b(1, 0), 3.0);
}

TEST(Config, PointsList) {
  const auto cfg = parse(std::string(kMinimal) + "[oracle]\npoints = 1 0; -0.5 0.25\n");
  ASSERT_EQ(cfg.oracle.points.size(), 2u);
  EXPECT_EQ(cfg.oracle.points[1], Eigen::Vector2d(-0.5, 0.25));
}

TEST(Config, WriteRoundTrips) {
  const auto original = load_config(kConfigs / "example1.cfg");
  std::ostringstream first;
  original.write(first);
  const auto again = parse(first.str());
  std::ostringstream second;
  again.write(second);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(again.system, original.system);
  EXPECT_EQ(again.oracle.points.size(), original.oracle.points.size());
  EXPECT_EQ(*again.cpa.b_override, *original.cpa.b_override);
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(load_config("/nonexistent/klyap.cfg"), IoError);
}

}  // namespace
}  // namespace klyap
