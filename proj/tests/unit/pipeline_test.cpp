#include "klyap/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "klyap/error.hpp"
#include "klyap/lyapunov.hpp"
#include "klyap/model_io.hpp"

namespace klyap {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;

constexpr const char* kSmall = R"(
[system]
f1 = -2*x1
f2 = -3*(x2 - x1^2)

[domain]
lower = -3 -3
upper = 3 3

[collocation]
grid_n = 12
sigma = 3
eta = 1e-10
fill_probe_resolution = 41
dump_system = true

[test_grid]
lower = -1 -1
upper = 1 1
resolution = 11

[cpa]
lower = -1 -1
upper = 1 1
cells = 8
B = 6 0 0 0

[oracle]
t_max = 20
dt = 1e-3
points = 0.5 0.5; -0.5 0.25
tolerance = 1e-1
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / fmt_name(info->name());
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  static std::string fmt_name(const std::string& test) { return "klyap_pipeline_" + test; }

  RunConfig config(const std::string& sub) const {
    std::istringstream in(kSmall);
    auto cfg = parse_config(in);
    cfg.output_dir = root_ / sub;
    return cfg;
  }

  fs::path root_;
  std::ostringstream log_;
};

TEST_F(Pipeline, RunWritesEveryOutput) {
  const auto cfg = config("run");
  const auto manifest = run_pipeline(cfg, log_);
  EXPECT_EQ(manifest.stage, "run");
  ASSERT_EQ(manifest.eigenvalues.size(), 2u);
  EXPECT_EQ(manifest.eigenvalues[0], -2.0);
  ASSERT_TRUE(manifest.certified.has_value());
  ASSERT_TRUE(manifest.oracle_max_difference.has_value());

  for (const char* name :
       {"linearization.txt", "alpha_1.csv", "alpha_2.csv", "system_1_A.csv", "system_2_b.csv",
        "collocation.txt", "diagnostics.txt", "V.csv", "Vdot.csv", "lyapunov_model.json",
        "cpa_report.txt", "cpa_failures.csv", "oracle_check.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(cfg.output_dir / name)) << name;
  }

  // Every file on disk except the manifest itself is listed with its size and hash.
  std::size_t on_disk = 0;
  for (const auto& entry : fs::recursive_directory_iterator(cfg.output_dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    ++on_disk;
    const auto rel = fs::relative(entry.path(), cfg.output_dir).generic_string();
    const auto it = std::find_if(manifest.files.begin(), manifest.files.end(),
                                 [&](const ManifestFile& f) { return f.name == rel; });
    ASSERT_NE(it, manifest.files.end()) << rel;
    EXPECT_EQ(it->bytes, entry.file_size());
    EXPECT_EQ(it->sha256, sha256_file(entry.path()));
  }
  EXPECT_EQ(on_disk, manifest.files.size());

  const auto json = nlohmann::json::parse(slurp(cfg.output_dir / "manifest.json"));
  EXPECT_EQ(json["stage"], "run");
  EXPECT_THAT(json["config"].get<std::string>(), HasSubstr("grid_n = 12"));
  EXPECT_EQ(json["files"].size(), manifest.files.size() + 1);
}

TEST_F(Pipeline, Deterministic) {
  const auto a = config("a");
  const auto b = config("b");
  run_pipeline(a, log_);
  run_pipeline(b, log_);
  for (const char* name : {"alpha_1.csv", "alpha_2.csv", "V.csv", "Vdot.csv",
                           "cpa_failures.csv", "oracle_check.csv", "diagnostics.txt"}) {
    EXPECT_EQ(slurp(a.output_dir / name), slurp(b.output_dir / name)) << name;
  }
}

TEST_F(Pipeline, CertifyReusesStoredModel) {
  const auto cfg = config("split");
  run_stage(Stage::kLyapunov, cfg, log_);
  EXPECT_FALSE(fs::exists(cfg.output_dir / "cpa_report.txt"));
  const auto manifest = run_stage(Stage::kCertify, cfg, log_);
  EXPECT_EQ(manifest.stage, "certify");
  EXPECT_TRUE(manifest.certified.has_value());
  EXPECT_TRUE(fs::exists(cfg.output_dir / "cpa_report.txt"));

  const auto full = config("full");
  run_pipeline(full, log_);
  EXPECT_EQ(slurp(cfg.output_dir / "cpa_failures.csv"), slurp(full.output_dir / "cpa_failures.csv"));
}

TEST_F(Pipeline, StoredModelEvaluatesIdentically) {
  const auto cfg = config("model");
  run_stage(Stage::kLyapunov, cfg, log_);
  const auto stored = load_model(cfg.output_dir / "lyapunov_model.json");
  EXPECT_EQ(stored.system, cfg.system);
  EXPECT_EQ(stored.sigma, 3.0);
  const auto model = stored.lyapunov();
  std::ostringstream v;
  grid_eval(model, *stored.field, cfg.test_grid.domain, cfg.test_grid.resolution,
            SurfaceQuantity::kV)
      .write_csv(v);
  EXPECT_EQ(v.str(), slurp(cfg.output_dir / "V.csv"));
}

TEST_F(Pipeline, CertifyWithoutModelNamesTheFile) {
  const auto cfg = config("empty");
  try {
    run_stage(Stage::kCertify, cfg, log_);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_THAT(e.what(), HasSubstr("lyapunov_model.json"));
  }
}

TEST_F(Pipeline, CertifyRejectsModelForOtherSystem) {
  auto cfg = config("other");
  run_stage(Stage::kLyapunov, cfg, log_);
  cfg.system[0] = "-x1";
  EXPECT_THROW(run_stage(Stage::kCertify, cfg, log_), ValidationError);
}

TEST_F(Pipeline, CorruptModelIsValidationError) {
  const auto cfg = config("corrupt");
  fs::create_directories(cfg.output_dir);
  std::ofstream(cfg.output_dir / "lyapunov_model.json") << "{\"format\": 3";
  EXPECT_THROW(run_stage(Stage::kCertify, cfg, log_), ValidationError);
}

TEST_F(Pipeline, UnwritableOutputIsIoError) {
  auto cfg = config("blocker");
  fs::create_directories(root_);
  std::ofstream(root_ / "plain_file") << "x";
  cfg.output_dir = root_ / "plain_file" / "out";
  EXPECT_THROW(run_stage(Stage::kLinearize, cfg, log_), IoError);
}

TEST_F(Pipeline, ComplexEigenvaluesAreNumericError) {
  auto cfg = config("duffing");
  cfg.system = {"x2", "-0.5*x2 - x1 - x1^3"};
  cfg.cpa.b_override.reset();
  EXPECT_THROW(run_stage(Stage::kLinearize, cfg, log_), NumericError);
}

TEST_F(Pipeline, LinearizeOnly) {
  const auto cfg = config("lin");
  const auto manifest = run_stage(Stage::kLinearize, cfg, log_);
  EXPECT_EQ(manifest.files.size(), 1u);
  EXPECT_EQ(manifest.files[0].name, "linearization.txt");
  EXPECT_THAT(slurp(cfg.output_dir / "linearization.txt"), HasSubstr("-3"));
  EXPECT_FALSE(manifest.certified.has_value());
}

TEST(StageNames, RoundTrip) {
  for (auto s : {Stage::kLinearize, Stage::kEigenfunctions, Stage::kLyapunov, Stage::kCertify,
                 Stage::kOracleCheck, Stage::kRun}) {
    EXPECT_EQ(parse_stage(to_string(s)), s);
  }
  EXPECT_EQ(to_string(Stage::kOracleCheck), "oracle-check");
  EXPECT_THROW(parse_stage("verify"), ValidationError);
}

}  // namespace
}  // namespace klyap
