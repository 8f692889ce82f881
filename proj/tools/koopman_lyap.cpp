#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "klyap/config.hpp"
#include "klyap/error.hpp"
#include "klyap/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

void add_common(CLI::App& sub, Options& opts) {
  sub.add_option("config", opts.config, "Configuration file")->required();
  sub.add_option("--output-dir", opts.output_dir, "Overrides [output] dir");
  sub.add_option("--threads", opts.threads, "Number of OpenMP threads")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov functions from kernel approximations of Koopman eigenfunctions",
               "koopman-lyap"};
  app.require_subcommand(1);

  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"linearize", "Jacobian at the origin and its left eigenpairs"},
      {"eigenfunctions", "Collocation solve for every principal eigenfunction"},
      {"lyapunov", "Lyapunov function, surface grids and diagnostics"},
      {"certify", "CPA certification of a previously computed Lyapunov function"},
      {"oracle-check", "Compare eigenfunctions with the path-integral formula"},
      {"run", "All stages"},
  };
  for (const auto& [name, help] : commands) add_common(*app.add_subcommand(name, help), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(klyap::ErrorKind::kValidation);
  }

  try {
    const auto stage = klyap::parse_stage(app.get_subcommands().front()->get_name());
    if (opts.threads) omp_set_num_threads(*opts.threads);
    auto cfg = klyap::load_config(opts.config);
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    const auto manifest = klyap::run_stage(stage, cfg, std::cout);
    std::cout << fmt::format("wrote {} files to {}\n", manifest.files.size() + 1,
                             cfg.output_dir.string());
    return 0;
  } catch (const klyap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: [cli] " << e.what() << '\n';
    return static_cast<int>(klyap::ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(klyap::ErrorKind::kNumeric);
  }
}
