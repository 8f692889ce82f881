#include <memory>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "klyap/collocation.hpp"
#include "klyap/cpa.hpp"
#include "klyap/dynamics.hpp"
#include "klyap/geometry.hpp"
#include "klyap/kernel.hpp"

namespace {

using namespace klyap;

std::shared_ptr<const VectorField> example_field() {
  const std::vector<std::string> text{"-2*x1", "-3*(x2 - x1^2)"};
  return std::make_shared<const VectorField>(VectorField::parse(text));
}

void BM_AssembleGram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto field = example_field();
  const auto lin = linearize(*field);
  const Box box = Box::centered(2, 5.0);
  const auto problem = CollocationProblem::for_eigenpair(
      std::make_shared<const GaussianKernel>(3.0, 2), field, lin, 1, collocation_centers(box, n),
      box, 1e-10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_system(problem));
  }
}
BENCHMARK(BM_AssembleGram)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto field = example_field();
  const auto lin = linearize(*field);
  const Box box = Box::centered(2, 5.0);
  const auto problem = CollocationProblem::for_eigenpair(
      std::make_shared<const GaussianKernel>(3.0, 2), field, lin, 1, collocation_centers(box, n),
      box, 1e-10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(problem));
  }
}
BENCHMARK(BM_Solve)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const auto field = example_field();
  const Box box = Box::centered(2, 2.0);
  const auto tri = build_triangulation(box, cells);
  const auto values = sample_vertices(
      tri, [](const Eigen::VectorXd& x) { return x(0) * x(0) + 0.5 * x(1) * x(1); });
  Eigen::MatrixXd b(2, 2);
  b << 6, 0, 0, 0;
  const BBound bound{b};
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify(tri, values, *field, bound));
  }
  state.counters["checks"] = static_cast<double>(3 * tri.simplices.size());
}
BENCHMARK(BM_Certify)->Arg(36)->Arg(108)->Unit(benchmark::kMillisecond);

void BM_FillDistance(benchmark::State& state) {
  const Box box = Box::centered(2, 5.0);
  const Eigen::MatrixXd centers = collocation_centers(box, 60);
  const int probes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fill_distance(centers, box, probes));
  }
}
BENCHMARK(BM_FillDistance)->Arg(51)->Arg(201)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
