#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "klyap/config.hpp"

namespace klyap {

enum class Stage { kLinearize, kEigenfunctions, kLyapunov, kCertify, kOracleCheck, kRun };

std::string_view to_string(Stage stage);
/// Throws ValidationError for unknown names.
Stage parse_stage(std::string_view name);

struct ManifestFile {
  std::string name;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Record of one invocation. Written as manifest.json next to the outputs and
/// listing every other file found in the output directory.
struct RunManifest {
  std::string stage;
  std::string config;  // canonical echo of the effective configuration
  std::vector<double> eigenvalues;
  std::optional<double> fill_distance;
  std::vector<double> condition_estimates;
  std::vector<std::string> warnings;
  std::optional<bool> certified;
  std::optional<double> simplex_pass_fraction;
  std::optional<double> failure_radius;
  std::optional<double> oracle_max_difference;
  std::vector<ManifestFile> files;

  void write_json(std::ostream& os) const;
};

/// Runs the prefix of the pipeline that `stage` needs and writes that stage's
/// outputs into cfg.output_dir, followed by manifest.json. Human-readable
/// progress goes to `log`.
///
/// kCertify reads lyapunov_model.json from the output directory instead of
/// recomputing the model; kRun executes every stage in memory.
RunManifest run_stage(Stage stage, const RunConfig& cfg, std::ostream& log);

inline RunManifest run_pipeline(const RunConfig& cfg, std::ostream& log) {
  return run_stage(Stage::kRun, cfg, log);
}

}  // namespace klyap
