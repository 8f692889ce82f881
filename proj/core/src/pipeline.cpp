#include "klyap/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "klyap/collocation.hpp"
#include "klyap/cpa.hpp"
#include "klyap/dynamics.hpp"
#include "klyap/error.hpp"
#include "klyap/kernel.hpp"
#include "klyap/koopman.hpp"
#include "klyap/lyapunov.hpp"
#include "klyap/model_io.hpp"

namespace klyap {

namespace {

namespace fs = std::filesystem;

constexpr const char* kModelFile = "lyapunov_model.json";
constexpr const char* kManifestFile = "manifest.json";

std::string format_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += fmt::format("{}{:.17g}", i ? ", " : "", v(i));
  return out + "]";
}

/// Output file that reports failures as I/O errors naming the path.
class OutputFile {
 public:
  explicit OutputFile(fs::path path) : path_(std::move(path)), out_(path_) {
    if (!out_) throw IoError("cli", fmt::format("cannot write '{}'", path_.string()));
  }
  std::ofstream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw IoError("cli", fmt::format("write to '{}' failed", path_.string()));
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  OutputFile file(path);
  fn(file.stream());
  file.close();
}

/// State shared between stages of one invocation.
struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  fs::path dir;
  RunManifest manifest;

  std::shared_ptr<const VectorField> field;
  std::optional<Linearization> lin;
  std::shared_ptr<const GaussianKernel> kernel;
  Eigen::MatrixXd centers;
  std::vector<std::shared_ptr<const KernelEigenfunction>> eigenfunctions;
  std::optional<LyapunovModel> model;
};

void do_linearize(Context& ctx) {
  ctx.field = std::make_shared<const VectorField>(VectorField::parse(ctx.cfg.system));
  ctx.lin = linearize(*ctx.field);
  const auto& lin = *ctx.lin;
  ctx.manifest.eigenvalues = lin.eigenvalues;

  std::string text = "E =\n";
  for (int i = 0; i < lin.dim(); ++i) text += "  " + format_vector(lin.jacobian.row(i).transpose()) + "\n";
  for (int i = 0; i < lin.dim(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    text += fmt::format("lambda[{}] = {:.17g}\nw[{}] = {}\n", i + 1, lin.eigenvalues[idx], i + 1,
                        format_vector(lin.left_eigenvectors[idx]));
  }
  ctx.log << text;
  write_file(ctx.dir / "linearization.txt", [&](std::ostream& os) { os << text; });
}

void do_eigenfunctions(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& col = cfg.collocation;
  const auto& lin = *ctx.lin;
  ctx.kernel = std::make_shared<const GaussianKernel>(col.sigma, cfg.dim());
  ctx.centers = collocation_centers(cfg.domain, col.grid_n);
  const double rho = fill_distance(ctx.centers, cfg.domain, col.fill_probe_resolution);
  ctx.manifest.fill_distance = rho;

  fmt::print(ctx.log, "collocation: {} centres, Gram size {}, fill distance {:.6g}\n",
             ctx.centers.rows(), ctx.centers.rows() + 1 + cfg.dim(), rho);

  std::string report = fmt::format("centers = {}\nsigma = {:.17g}\nfill_distance = {:.17g}\n",
                                   ctx.centers.rows(), col.sigma, rho);
  for (int i = 0; i < lin.dim(); ++i) {
    auto problem = CollocationProblem::for_eigenpair(ctx.kernel, ctx.field, lin, i, ctx.centers,
                                                     cfg.domain, col.eta);
    if (col.dump_system) {
      const auto system = assemble_system(problem);
      write_file(ctx.dir / fmt::format("system_{}_A.csv", i + 1),
                 [&](std::ostream& os) { write_matrix_csv(os, system.a); });
      write_file(ctx.dir / fmt::format("system_{}_b.csv", i + 1),
                 [&](std::ostream& os) { write_matrix_csv(os, system.b); });
    }
    auto ef = std::make_shared<const KernelEigenfunction>(
        lin.left_eigenvectors[static_cast<std::size_t>(i)], solve(problem));
    const auto& diag = ef->nonlinear_part().diagnostics();
    write_file(ctx.dir / fmt::format("alpha_{}.csv", i + 1),
               [&](std::ostream& os) { write_matrix_csv(os, ef->nonlinear_part().alpha()); });

    report += fmt::format(
        "\n[eigenfunction {}]\nlambda = {:.17g}\nw = {}\nmethod = {}\ncondition_estimate = "
        "{:.6e}\neta = {:.6e}\nresidual = {:.6e}\n",
        i + 1, ef->eigenvalue(), format_vector(ef->w()), diag.method, diag.condition_estimate,
        diag.eta, diag.residual);
    for (const auto& w : diag.warnings) {
      report += fmt::format("warning = {}\n", w);
      ctx.manifest.warnings.push_back(fmt::format("eigenfunction {}: {}", i + 1, w));
      fmt::print(ctx.log, "warning: eigenfunction {}: {}\n", i + 1, w);
    }
    fmt::print(ctx.log, "eigenfunction {}: lambda = {:.6g}, cond = {:.3e}, residual = {:.3e}\n",
               i + 1, ef->eigenvalue(), diag.condition_estimate, diag.residual);
    ctx.manifest.condition_estimates.push_back(diag.condition_estimate);
    ctx.eigenfunctions.push_back(std::move(ef));
  }
  write_file(ctx.dir / "collocation.txt", [&](std::ostream& os) { os << report; });
}

void do_lyapunov(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ctx.model.emplace(EigenfunctionSet(ctx.eigenfunctions.begin(), ctx.eigenfunctions.end()));
  const auto& model = *ctx.model;

  const auto diag = diagnostics(model, *ctx.manifest.fill_distance, *ctx.lin, cfg.test_grid.domain,
                                cfg.test_grid.resolution);
  write_file(ctx.dir / "diagnostics.txt", [&](std::ostream& os) { diag.write(os); });

  if (cfg.dim() == 2) {
    for (auto q : {SurfaceQuantity::kV, SurfaceQuantity::kVdot}) {
      const auto grid =
          grid_eval(model, *ctx.field, cfg.test_grid.domain, cfg.test_grid.resolution, q);
      write_file(ctx.dir / (to_string(q) + ".csv"), [&](std::ostream& os) { grid.write_csv(os); });
    }
  } else {
    ctx.manifest.warnings.push_back("surface grids are only written for 2-D systems");
  }

  StoredModel stored{cfg.system, cfg.collocation.sigma, ctx.field, ctx.kernel, ctx.eigenfunctions};
  save_model(ctx.dir / kModelFile, stored);
  fmt::print(ctx.log, "lyapunov: P diagonal {}, residual {:.3e}\n",
             format_vector(model.P().diagonal()), diag.lyapunov_residual);
}

void load_stored_model(Context& ctx) {
  auto stored = load_model(ctx.dir / kModelFile);
  if (stored.system != ctx.cfg.system) {
    throw ValidationError("cli", fmt::format("'{}' was computed for a different system",
                                             (ctx.dir / kModelFile).string()));
  }
  ctx.field = stored.field;
  ctx.eigenfunctions = stored.eigenfunctions;
  ctx.model.emplace(stored.lyapunov());
  for (const auto& ef : ctx.eigenfunctions) ctx.manifest.eigenvalues.push_back(ef->eigenvalue());
}

void do_certify(Context& ctx) {
  const auto& cpa = ctx.cfg.cpa;
  if (!cpa.enabled) {
    ctx.manifest.warnings.push_back("certification disabled in the configuration");
    ctx.log << "certify: disabled\n";
    return;
  }
  const auto tri = build_triangulation(cpa.domain, cpa.cells);
  const auto& model = *ctx.model;
  const auto values =
      sample_vertices(tri, [&](const Eigen::VectorXd& x) { return model.V(x); });
  std::optional<BBound> override;
  if (cpa.b_override) override = BBound{*cpa.b_override};
  const auto bound = estimate_B(*ctx.field, cpa.domain, cpa.probe_resolution, cpa.safety, override);
  const auto report = certify(tri, values, *ctx.field, bound);

  write_file(ctx.dir / "cpa_report.txt", [&](std::ostream& os) {
    report.write_summary(os);
    for (int r = 0; r < bound.b.rows(); ++r) {
      fmt::print(os, "B[{}] = {}\n", r + 1, format_vector(bound.b.row(r).transpose()));
    }
  });
  write_file(ctx.dir / "cpa_failures.csv",
             [&](std::ostream& os) { report.write_failures_csv(os, tri); });

  ctx.manifest.certified = report.certified();
  ctx.manifest.simplex_pass_fraction = report.simplex_pass_fraction();
  ctx.manifest.failure_radius = report.failure_radius;
  fmt::print(ctx.log,
             "certify: {} vertices, {} triangles, {} vertex failures, {} simplex failures, "
             "pass fraction {:.6f}, failure radius {:.4g}\n",
             tri.vertices.size(), tri.simplices.size(), report.vertex_failures,
             report.simplex_failures, report.simplex_pass_fraction(), report.failure_radius);
}

void do_oracle(Context& ctx) {
  const auto& oc = ctx.cfg.oracle;
  if (!oc.enabled || oc.points.empty()) {
    ctx.manifest.warnings.push_back("oracle check disabled or without sample points");
    ctx.log << "oracle-check: nothing to do\n";
    return;
  }
  const auto& lin = *ctx.lin;
  PathIntegralOptions opts;
  opts.t_max = oc.t_max;
  opts.dt = oc.dt;

  std::string csv = "eigen_index,lambda,point_index";
  for (int r = 0; r < ctx.cfg.dim(); ++r) csv += fmt::format(",x{}", r + 1);
  csv += ",phi_collocation,phi_path_integral,abs_difference\n";

  std::string table = fmt::format("{:>5}  {:>12}  {:>14}  {}\n", "index", "lambda",
                                  "max_abs_diff", "status");
  double overall = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < ctx.eigenfunctions.size(); ++i) {
    const auto& ef = *ctx.eigenfunctions[i];
    const double lambda = ef.eigenvalue();
    if (!path_integral_converges(lin, lambda)) {
      table += fmt::format("{:>5}  {:>12.6g}  {:>14}  skipped (path integral diverges)\n", i + 1,
                           lambda, "-");
      continue;
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < oc.points.size(); ++p) {
      const auto& x = oc.points[p];
      const double phi = ef.value(x);
      const double ref = path_integral_phi(*ctx.field, lin, lambda, ef.w(), x, opts);
      const double diff = std::abs(phi - ref);
      worst = std::max(worst, diff);
      csv += fmt::format("{},{:.17g},{}", i + 1, lambda, p + 1);
      for (Eigen::Index r = 0; r < x.size(); ++r) csv += fmt::format(",{:.17g}", x(r));
      csv += fmt::format(",{:.17g},{:.17g},{:.17g}\n", phi, ref, diff);
    }
    any = true;
    overall = std::max(overall, worst);
    table += fmt::format("{:>5}  {:>12.6g}  {:>14.6e}  {}\n", i + 1, lambda, worst,
                         worst <= oc.tolerance ? "ok" : "exceeds tolerance");
  }
  if (any) ctx.manifest.oracle_max_difference = overall;
  write_file(ctx.dir / "oracle_check.csv", [&](std::ostream& os) { os << csv; });
  ctx.log << table;
}

std::vector<ManifestFile> inventory(const fs::path& dir) {
  std::vector<ManifestFile> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifestFile) continue;
    files.push_back({rel, entry.file_size(), sha256_file(entry.path())});
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return files;
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kLinearize: return "linearize";
    case Stage::kEigenfunctions: return "eigenfunctions";
    case Stage::kLyapunov: return "lyapunov";
    case Stage::kCertify: return "certify";
    case Stage::kOracleCheck: return "oracle-check";
    case Stage::kRun: return "run";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (auto s : {Stage::kLinearize, Stage::kEigenfunctions, Stage::kLyapunov, Stage::kCertify,
                 Stage::kOracleCheck, Stage::kRun}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("cli", fmt::format("unknown subcommand '{}'", name));
}

void RunManifest::write_json(std::ostream& os) const {
  nlohmann::ordered_json doc;
  doc["stage"] = stage;
  doc["config"] = config;
  doc["eigenvalues"] = eigenvalues;
  doc["fill_distance"] = fill_distance ? nlohmann::ordered_json(*fill_distance) : nlohmann::ordered_json(nullptr);
  doc["condition_estimates"] = condition_estimates;
  doc["warnings"] = warnings;
  if (certified) {
    doc["cpa"] = {{"certified", *certified},
                  {"simplex_pass_fraction", *simplex_pass_fraction},
                  {"failure_radius", *failure_radius}};
  }
  if (oracle_max_difference) doc["oracle_max_difference"] = *oracle_max_difference;
  auto list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    list.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  }
  // The manifest cannot hash itself; it is listed without a checksum.
  list.push_back({{"name", kManifestFile}, {"bytes", nullptr}, {"sha256", nullptr}});
  doc["files"] = std::move(list);
  os << doc.dump(2) << '\n';
}

RunManifest run_stage(Stage stage, const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  Context ctx{cfg, log, cfg.output_dir, {}, {}, {}, {}, {}, {}, {}};
  ctx.manifest.stage = std::string(to_string(stage));
  {
    std::ostringstream echo;
    cfg.write(echo);
    ctx.manifest.config = echo.str();
  }

  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec || !fs::is_directory(ctx.dir)) {
    throw IoError("cli", fmt::format("cannot create output directory '{}': {}",
                                     ctx.dir.string(), ec ? ec.message() : "not a directory"));
  }

  switch (stage) {
    case Stage::kLinearize:
      do_linearize(ctx);
      break;
    case Stage::kEigenfunctions:
      do_linearize(ctx);
      do_eigenfunctions(ctx);
      break;
    case Stage::kLyapunov:
      do_linearize(ctx);
      do_eigenfunctions(ctx);
      do_lyapunov(ctx);
      break;
    case Stage::kCertify:
      load_stored_model(ctx);
      do_certify(ctx);
      break;
    case Stage::kOracleCheck:
      do_linearize(ctx);
      do_eigenfunctions(ctx);
      do_oracle(ctx);
      break;
    case Stage::kRun:
      do_linearize(ctx);
      do_eigenfunctions(ctx);
      do_lyapunov(ctx);
      do_certify(ctx);
      do_oracle(ctx);
      break;
  }

  ctx.manifest.files = inventory(ctx.dir);
  write_file(ctx.dir / kManifestFile, [&](std::ostream& os) { ctx.manifest.write_json(os); });
  return ctx.manifest;
}

}  // namespace klyap
