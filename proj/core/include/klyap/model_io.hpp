#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klyap/koopman.hpp"
#include "klyap/lyapunov.hpp"

namespace klyap {

/// A Lyapunov model restored from (or about to be written to) disk, with
/// everything needed to evaluate it again.
struct StoredModel {
  std::vector<std::string> system;
  double sigma = 0.0;
  std::shared_ptr<const VectorField> field;
  std::shared_ptr<const Kernel> kernel;
  std::vector<std::shared_ptr<const KernelEigenfunction>> eigenfunctions;

  LyapunovModel lyapunov() const;
};

/// JSON with the system, kernel, centres and, per eigenfunction, lambda, w,
/// alpha and solver diagnostics, plus P. Doubles are written in round-trip
/// precision so a reloaded model evaluates bit-identically.
void save_model(const std::filesystem::path& path, const StoredModel& model);

/// Throws IoError if the file is missing or unreadable and ValidationError if
/// its content is malformed.
StoredModel load_model(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// One matrix row per line, comma separated, 17 significant digits.
void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace klyap
