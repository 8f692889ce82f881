#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klyap/geometry.hpp"

namespace klyap {

struct CollocationConfig {
  int grid_n = 60;
  double sigma = 3.0;
  /// Absolute ridge on the PDE rows; empty means relative (1e-10 trace/m).
  std::optional<double> eta;
  int fill_probe_resolution = 201;
  bool dump_system = false;
};

struct TestGridConfig {
  Box domain = Box::centered(2, 2.0);
  int resolution = 81;
};

struct CpaConfig {
  bool enabled = true;
  Box domain = Box::centered(2, 2.0);
  int cells = 108;
  std::optional<Eigen::MatrixXd> b_override;
  double safety = 1.1;
  int probe_resolution = 201;
};

struct OracleConfig {
  bool enabled = true;
  double t_max = 20.0;
  double dt = 1e-3;
  std::vector<Eigen::VectorXd> points;
  double tolerance = 1e-2;
};

/// Everything one pipeline run needs. See README for the file grammar.
struct RunConfig {
  std::vector<std::string> system;
  Box domain = Box::centered(2, 5.0);
  CollocationConfig collocation;
  TestGridConfig test_grid;
  CpaConfig cpa;
  OracleConfig oracle;
  std::filesystem::path output_dir = "out";

  int dim() const noexcept { return static_cast<int>(system.size()); }

  /// Throws ValidationError naming the offending field.
  void validate() const;

  /// Canonical text form of the configuration, parseable by parse_config.
  void write(std::ostream& os) const;
};

/// Throws IoError if the file cannot be read and ValidationError (with the line
/// number) on malformed text or invalid values.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in, const std::string& source_name = "<config>");

}  // namespace klyap
