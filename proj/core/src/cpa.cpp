#include "klyap/cpa.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "klyap/error.hpp"

namespace klyap {

namespace {

constexpr double kOriginValueTolerance = 1e-10;

bool is_grid_aligned(double lo, double hi, int cells, int& index) {
  // Grid index of 0 on [lo, hi] split into `cells` intervals, if any.
  const double pos = -lo / (hi - lo) * cells;
  index = static_cast<int>(std::lround(pos));
  return std::abs(pos - index) <= 1e-9;
}

}  // namespace

Eigen::Vector2d Triangulation::cell_size() const {
  return (domain.upper - domain.lower) / cells;
}

Triangulation build_triangulation(const Box& domain, int cells) {
  if (domain.dim() != 2) throw ValidationError("cpa", "triangulations are two-dimensional");
  if (cells < 2) throw ValidationError("cpa", "need at least 2 cells per axis");

  const bool has_origin = domain.contains(Eigen::Vector2d::Zero());

  Triangulation tri{domain, cells, {}, {}, std::nullopt};
  const int n = cells + 1;
  const Eigen::VectorXd ax1 = linspace(domain.lower(0), domain.upper(0), n);
  const Eigen::VectorXd ax2 = linspace(domain.lower(1), domain.upper(1), n);
  tri.vertices.reserve(static_cast<std::size_t>(n * n));
  for (int i2 = 0; i2 < n; ++i2) {
    for (int i1 = 0; i1 < n; ++i1) tri.vertices.emplace_back(ax1(i1), ax2(i2));
  }

  if (has_origin) {
    int o1 = 0, o2 = 0;
    if (!is_grid_aligned(domain.lower(0), domain.upper(0), cells, o1) ||
        !is_grid_aligned(domain.lower(1), domain.upper(1), cells, o2)) {
      throw ValidationError(
          "cpa", fmt::format("the origin lies in the domain but is not a vertex of the {} x {} "
                             "grid (a symmetric box needs an even N)",
                             cells, cells));
    }
    tri.origin_vertex = tri.vertex_index(o1, o2);
    tri.vertices[static_cast<std::size_t>(*tri.origin_vertex)] = Eigen::Vector2d::Zero();
  }

  tri.simplices.reserve(static_cast<std::size_t>(2 * cells * cells));
  auto push = [&](std::array<int, 3> s) {
    if (tri.origin_vertex) {
      auto it = std::find(s.begin(), s.end(), *tri.origin_vertex);
      if (it != s.end()) std::rotate(s.begin(), it, s.end());
    }
    tri.simplices.push_back(s);
  };
  for (int i2 = 0; i2 < cells; ++i2) {
    for (int i1 = 0; i1 < cells; ++i1) {
      const int v00 = tri.vertex_index(i1, i2);
      const int v10 = tri.vertex_index(i1 + 1, i2);
      const int v01 = tri.vertex_index(i1, i2 + 1);
      const int v11 = tri.vertex_index(i1 + 1, i2 + 1);
      push({v00, v10, v11});
      push({v00, v01, v11});
    }
  }
  return tri;
}

Eigen::Vector2d simplex_gradient(const Triangulation& tri, int simplex,
                                 std::span<const double> vertex_values) {
  const auto& s = tri.simplices.at(static_cast<std::size_t>(simplex));
  const Eigen::Vector2d& x0 = tri.vertices[static_cast<std::size_t>(s[0])];
  Eigen::Matrix2d diffs;
  diffs.row(0) = (tri.vertices[static_cast<std::size_t>(s[1])] - x0).transpose();
  diffs.row(1) = (tri.vertices[static_cast<std::size_t>(s[2])] - x0).transpose();
  const double det = diffs.determinant();
  const double scale = diffs.squaredNorm();
  if (!(std::abs(det) > 1e-14 * scale)) {
    throw NumericError("cpa", fmt::format("degenerate simplex {}", simplex));
  }
  const double v0 = vertex_values[static_cast<std::size_t>(s[0])];
  const Eigen::Vector2d rhs(vertex_values[static_cast<std::size_t>(s[1])] - v0,
                            vertex_values[static_cast<std::size_t>(s[2])] - v0);
  return diffs.inverse() * rhs;
}

double interpolate(const Triangulation& tri, std::span<const double> vertex_values,
                   const Eigen::Ref<const Eigen::Vector2d>& x) {
  if (!tri.domain.contains(x, 1e-12)) throw ValidationError("cpa", "point outside the domain");
  const Eigen::Vector2d h = tri.cell_size();
  const Eigen::Vector2d local = (x - tri.domain.lower).cwiseQuotient(h);
  const int i1 = std::clamp(static_cast<int>(std::floor(local(0))), 0, tri.cells - 1);
  const int i2 = std::clamp(static_cast<int>(std::floor(local(1))), 0, tri.cells - 1);
  const double u = local(0) - i1;
  const double v = local(1) - i2;
  // Lower triangle (v00, v10, v11) holds points with v <= u.
  const int simplex = 2 * (i2 * tri.cells + i1) + (v <= u ? 0 : 1);
  const auto& s = tri.simplices[static_cast<std::size_t>(simplex)];
  const Eigen::Vector2d grad = simplex_gradient(tri, simplex, vertex_values);
  return vertex_values[static_cast<std::size_t>(s[0])] +
         grad.dot(x - tri.vertices[static_cast<std::size_t>(s[0])]);
}

std::vector<double> sample_vertices(const Triangulation& tri,
                                    const std::function<double(const Eigen::VectorXd&)>& fn) {
  std::vector<double> values(tri.vertices.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < tri.vertices.size(); ++i) {
    values[i] = fn(Eigen::VectorXd(tri.vertices[i]));
  }
  return values;
}

BBound estimate_B(const VectorField& field, const Box& domain, int probe_resolution,
                  double safety, const std::optional<BBound>& override) {
  const int d = field.dim();
  if (domain.dim() != d) throw ValidationError("cpa", "domain and field dimensions differ");
  if (!(safety >= 1.0)) throw ValidationError("cpa", "B safety factor must be >= 1");
  if (probe_resolution < 2) throw ValidationError("cpa", "probe_resolution must be >= 2");

  const Eigen::MatrixXd probes = grid_points(domain, probe_resolution);
  Eigen::MatrixXd probe_max = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd estimate = Eigen::MatrixXd::Zero(d, d);
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) {
      bool all_constant = true;
      double worst = 0.0;
      for (int j = 0; j < d; ++j) {
        const Expr second = field.partial(j, r).derivative(s);
        if (second.is_constant()) {
          worst = std::max(worst, std::abs(second.constant_value()));
          continue;
        }
        all_constant = false;
        for (Eigen::Index p = 0; p < probes.rows(); ++p) {
          worst = std::max(worst, std::abs(second.eval(probes.row(p).transpose())));
        }
      }
      probe_max(r, s) = worst;
      estimate(r, s) = all_constant ? worst : worst * safety;
    }
  }

  if (!override) return BBound{estimate};

  const Eigen::MatrixXd& b = override->b;
  if (b.rows() != d || b.cols() != d) {
    throw ValidationError("cpa", fmt::format("B override must be {0}x{0}", d));
  }
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) {
      if (!(b(r, s) >= 0.0) || b(r, s) < probe_max(r, s) * (1.0 - 1e-12)) {
        throw ValidationError(
            "cpa", fmt::format("B override entry ({},{}) = {} is below the sampled maximum {} "
                               "of the second partials",
                               r + 1, s + 1, b(r, s), probe_max(r, s)));
      }
    }
  }
  return *override;
}

double compute_E(const Triangulation& tri, int simplex, int local_vertex, const BBound& bound) {
  if (local_vertex < 0 || local_vertex > 2) throw ValidationError("cpa", "vertex index out of range");
  const auto& s = tri.simplices.at(static_cast<std::size_t>(simplex));
  const Eigen::Vector2d diff = (tri.vertices[static_cast<std::size_t>(s[local_vertex])] -
                                tri.vertices[static_cast<std::size_t>(s[0])])
                                   .cwiseAbs();
  const int d = 2;
  double e = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int q = 0; q < d; ++q) e += bound.b(r, q) * diff(r) * (diff(q) + diff(d - 1));
  }
  return 0.5 * e;
}

CertificationReport certify(const Triangulation& tri, std::span<const double> vertex_values,
                            const VectorField& field, const BBound& bound) {
  if (vertex_values.size() != tri.vertices.size()) {
    throw ValidationError("cpa", "one value per triangulation vertex is required");
  }
  if (field.dim() != 2 || bound.b.rows() != 2 || bound.b.cols() != 2) {
    throw ValidationError("cpa", "certification is implemented for planar systems");
  }
  for (double v : vertex_values) {
    if (!std::isfinite(v)) throw ValidationError("cpa", "non-finite vertex value");
  }

  CertificationReport report{.domain = tri.domain};
  report.cells = tri.cells;

  report.vertex_results.resize(tri.vertices.size());
  std::vector<Eigen::Vector2d> f_at(tri.vertices.size());
  for (std::size_t i = 0; i < tri.vertices.size(); ++i) {
    const bool is_origin = tri.origin_vertex && static_cast<int>(i) == *tri.origin_vertex;
    const double v = vertex_values[i];
    const bool ok = is_origin ? std::abs(v) <= kOriginValueTolerance : v > 0.0;
    report.vertex_results[i] = {static_cast<int>(i), v, ok};
    f_at[i] = field(tri.vertices[i]);
  }

  report.simplex_results.resize(3 * tri.simplices.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::size_t nu = 0; nu < tri.simplices.size(); ++nu) {
    try {
      const auto& s = tri.simplices[nu];
      const Eigen::Vector2d grad = simplex_gradient(tri, static_cast<int>(nu), vertex_values);
      const double grad_l1 = grad.lpNorm<1>();
      for (int i = 0; i < 3; ++i) {
        const auto vi = static_cast<std::size_t>(s[static_cast<std::size_t>(i)]);
        SimplexCheck check{static_cast<int>(nu), i, static_cast<int>(vi), 0.0, true};
        if (!(tri.origin_vertex && static_cast<int>(vi) == *tri.origin_vertex)) {
          check.lhs =
              grad.dot(f_at[vi]) + grad_l1 * compute_E(tri, static_cast<int>(nu), i, bound);
          check.passed = check.lhs < 0.0;
        }
        report.simplex_results[3 * nu + static_cast<std::size_t>(i)] = check;
      }
    } catch (...) {
#pragma omp critical(klyap_cpa_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Drop the origin checks, which hold with equality by construction.
  std::erase_if(report.simplex_results, [&](const SimplexCheck& c) {
    const bool skip = tri.origin_vertex && c.vertex == *tri.origin_vertex;
    if (skip) ++report.skipped_origin_checks;
    return skip;
  });

  double radius = 0.0;
  double max_lhs = -std::numeric_limits<double>::infinity();
  for (const auto& v : report.vertex_results) {
    if (!v.passed) {
      ++report.vertex_failures;
      radius = std::max(radius, tri.vertices[static_cast<std::size_t>(v.vertex)].norm());
    }
  }
  for (const auto& c : report.simplex_results) {
    max_lhs = std::max(max_lhs, c.lhs);
    if (!c.passed) {
      ++report.simplex_failures;
      radius = std::max(radius, tri.vertices[static_cast<std::size_t>(c.vertex)].norm());
    }
  }
  report.failure_radius = radius;
  report.max_lhs = report.simplex_results.empty() ? 0.0 : max_lhs;
  return report;
}

double CertificationReport::simplex_pass_fraction() const {
  if (simplex_results.empty()) return 1.0;
  return 1.0 - static_cast<double>(simplex_failures) / static_cast<double>(simplex_results.size());
}

void CertificationReport::write_summary(std::ostream& os) const {
  fmt::print(os, "domain = {} {} {} {}\n", domain.lower(0), domain.upper(0), domain.lower(1),
             domain.upper(1));
  fmt::print(os, "cells = {}\n", cells);
  fmt::print(os, "vertices = {}\n", vertex_results.size());
  fmt::print(os, "triangles = {}\n", 2 * static_cast<std::size_t>(cells) * cells);
  fmt::print(os, "vertex_checks = {}\n", vertex_results.size());
  fmt::print(os, "vertex_failures = {}\n", vertex_failures);
  fmt::print(os, "simplex_checks = {}\n", simplex_results.size());
  fmt::print(os, "simplex_failures = {}\n", simplex_failures);
  fmt::print(os, "skipped_origin_checks = {}\n", skipped_origin_checks);
  fmt::print(os, "simplex_pass_fraction = {:.17g}\n", simplex_pass_fraction());
  fmt::print(os, "max_lhs = {:.17g}\n", max_lhs);
  fmt::print(os, "failure_radius = {:.17g}\n", failure_radius);
  fmt::print(os, "certified = {}\n", certified() ? "yes" : "no");
}

void CertificationReport::write_failures_csv(std::ostream& os, const Triangulation& tri) const {
  fmt::print(os, "simplex_index,vertex_index,x1,x2,lhs_margin\n");
  for (const auto& v : vertex_results) {
    if (v.passed) continue;
    const auto& x = tri.vertices[static_cast<std::size_t>(v.vertex)];
    const bool is_origin = tri.origin_vertex && v.vertex == *tri.origin_vertex;
    fmt::print(os, "-1,{},{:.17g},{:.17g},{:.17g}\n", v.vertex, x(0), x(1),
               is_origin ? std::abs(v.value) : -v.value);
  }
  for (const auto& c : simplex_results) {
    if (c.passed) continue;
    const auto& x = tri.vertices[static_cast<std::size_t>(c.vertex)];
    fmt::print(os, "{},{},{:.17g},{:.17g},{:.17g}\n", c.simplex, c.vertex, x(0), x(1), c.lhs);
  }
}

}  // namespace klyap
