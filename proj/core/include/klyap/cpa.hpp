#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "klyap/expr.hpp"
#include "klyap/geometry.hpp"

namespace klyap {

/// Regular triangulation of a 2-D box: N x N cells, each split along its
/// bottom-left to top-right diagonal. Vertices are numbered row-major with x1
/// varying fastest. The first vertex of each simplex is its x_0; for the
/// simplices touching the origin, the origin is moved to that position.
struct Triangulation {
  Box domain;
  int cells = 0;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> simplices;
  std::optional<int> origin_vertex;

  int vertex_index(int i1, int i2) const { return i2 * (cells + 1) + i1; }
  Eigen::Vector2d cell_size() const;
};

/// Throws ValidationError for N < 2, non-2-D boxes and boxes containing the
/// origin where it is not a grid vertex (e.g. odd N on a symmetric box).
Triangulation build_triangulation(const Box& domain, int cells);

/// Constant gradient of the affine interpolant on one simplex.
Eigen::Vector2d simplex_gradient(const Triangulation& tri, int simplex,
                                 std::span<const double> vertex_values);

/// Continuous piecewise affine interpolant of vertex values at x (inside the
/// box).
double interpolate(const Triangulation& tri, std::span<const double> vertex_values,
                   const Eigen::Ref<const Eigen::Vector2d>& x);

/// Evaluates `fn` at every vertex.
std::vector<double> sample_vertices(const Triangulation& tri,
                                    const std::function<double(const Eigen::VectorXd&)>& fn);

/// Global bound B_rs >= |d^2 f_j / dx_r dx_s| for all j, used on every simplex.
struct BBound {
  Eigen::MatrixXd b;
};

/// Maximum of |second partials| over a probe grid, times `safety`. Entries
/// whose second partials are all constant expressions are exact and are not
/// inflated. An `override` is returned as-is after checking it dominates the
/// probe maxima.
BBound estimate_B(const VectorField& field, const Box& domain, int probe_resolution,
                  double safety = 1.1, const std::optional<BBound>& override = std::nullopt);

/// E_{nu,i} = 1/2 sum_rs B_rs |[x_i - x_0]_r| (|[x_i - x_0]_s| + |[x_i - x_0]_d|).
double compute_E(const Triangulation& tri, int simplex, int local_vertex, const BBound& bound);

struct VertexCheck {
  int vertex = 0;
  double value = 0.0;
  bool passed = false;
};

struct SimplexCheck {
  int simplex = 0;
  int local_vertex = 0;
  int vertex = 0;
  /// grad V_nu . f(x_i) + ||grad V_nu||_1 E_{nu,i}; must be < 0.
  double lhs = 0.0;
  bool passed = false;
};

struct CertificationReport {
  std::vector<VertexCheck> vertex_results;
  std::vector<SimplexCheck> simplex_results;
  std::size_t vertex_failures = 0;
  std::size_t simplex_failures = 0;
  std::size_t skipped_origin_checks = 0;
  double failure_radius = 0.0;
  double max_lhs = 0.0;
  int cells = 0;
  Box domain;

  double simplex_pass_fraction() const;
  bool certified() const { return vertex_failures == 0 && simplex_failures == 0; }

  void write_summary(std::ostream& os) const;
  /// Header plus one row per failure:
  /// simplex_index,vertex_index,x1,x2,lhs_margin. Positivity failures use
  /// simplex_index -1 and lhs_margin = -V (|V| at the origin).
  void write_failures_csv(std::ostream& os, const Triangulation& tri) const;
};

/// Checks V_0 = 0 (|V_0| <= 1e-10) and V_x > 0 at every vertex, and the
/// decrease condition at every (simplex, vertex) pair except the origin.
CertificationReport certify(const Triangulation& tri, std::span<const double> vertex_values,
                            const VectorField& field, const BBound& bound);

}  // namespace klyap
