#include "klyap/model_io.hpp"

#include <array>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "klyap/error.hpp"

namespace klyap {

namespace {

using nlohmann::json;

json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json_rows(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd r = m.row(i).transpose();
    rows.push_back(to_json(r));
  }
  return rows;
}

Eigen::VectorXd vector_from(const json& j, const char* what, Eigen::Index expected = -1) {
  const auto values = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected) {
    throw ValidationError("model_io", fmt::format("'{}' has {} entries, expected {}", what,
                                                  values.size(), expected));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

Eigen::MatrixXd rows_from(const json& j, const char* what, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = vector_from(j[i], what, cols).transpose();
  }
  return m;
}

}  // namespace

LyapunovModel StoredModel::lyapunov() const {
  return LyapunovModel(EigenfunctionSet(eigenfunctions.begin(), eigenfunctions.end()));
}

void save_model(const std::filesystem::path& path, const StoredModel& model) {
  if (model.eigenfunctions.empty()) {
    throw ValidationError("model_io", "model has no eigenfunctions");
  }
  const Eigen::MatrixXd centers = model.eigenfunctions.front()->nonlinear_part().centers();

  json doc;
  doc["format"] = "koopman-lyap-model";
  doc["version"] = 1;
  doc["system"] = model.system;
  doc["kernel"] = {{"family", "gaussian"}, {"sigma", model.sigma}};
  doc["centers"] = to_json_rows(centers);
  json efs = json::array();
  std::vector<double> lambdas;
  for (const auto& ef : model.eigenfunctions) {
    const auto& h = ef->nonlinear_part();
    const auto& diag = h.diagnostics();
    efs.push_back({{"lambda", ef->eigenvalue()},
                   {"w", to_json(ef->w())},
                   {"alpha", to_json(h.alpha())},
                   {"condition_estimate", diag.condition_estimate},
                   {"eta", diag.eta},
                   {"residual", diag.residual},
                   {"method", diag.method}});
    lambdas.push_back(ef->eigenvalue());
  }
  doc["eigenfunctions"] = std::move(efs);
  doc["P"] = to_json_rows(solve_P(lambdas));

  std::ofstream out(path);
  if (!out) throw IoError("model_io", fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("model_io", fmt::format("write to '{}' failed", path.string()));
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("model_io", fmt::format("model file '{}' not found or unreadable; run the "
                                          "lyapunov stage first",
                                          path.string()));
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("model_io", fmt::format("'{}' is not valid JSON: {}", path.string(),
                                                  e.what()));
  }

  try {
    if (doc.at("format") != "koopman-lyap-model") {
      throw ValidationError("model_io", fmt::format("'{}' is not a model file", path.string()));
    }
    StoredModel model;
    model.system = doc.at("system").get<std::vector<std::string>>();
    const int d = static_cast<int>(model.system.size());
    model.field = std::make_shared<const VectorField>(VectorField::parse(model.system));
    const auto& kernel = doc.at("kernel");
    if (kernel.at("family") != "gaussian") {
      throw ValidationError("model_io", "unsupported kernel family");
    }
    model.sigma = kernel.at("sigma").get<double>();
    model.kernel = std::make_shared<const GaussianKernel>(model.sigma, d);
    const Eigen::MatrixXd centers = rows_from(doc.at("centers"), "centers", d);
    const Eigen::Index m = centers.rows() + 1 + d;

    for (const auto& ef : doc.at("eigenfunctions")) {
      CollocationSolution::Diagnostics diag;
      diag.condition_estimate = ef.at("condition_estimate").get<double>();
      diag.eta = ef.at("eta").get<double>();
      diag.residual = ef.at("residual").get<double>();
      diag.method = ef.at("method").get<std::string>();
      CollocationSolution h(model.kernel, model.field, ef.at("lambda").get<double>(), centers,
                            vector_from(ef.at("alpha"), "alpha", m), std::move(diag));
      model.eigenfunctions.push_back(std::make_shared<const KernelEigenfunction>(
          vector_from(ef.at("w"), "w", d), std::move(h)));
    }
    if (static_cast<int>(model.eigenfunctions.size()) != d) {
      throw ValidationError("model_io", fmt::format("expected {} eigenfunctions, found {}", d,
                                                    model.eigenfunctions.size()));
    }
    return model;
  } catch (const json::exception& e) {
    throw ValidationError("model_io", fmt::format("malformed model file '{}': {}",
                                                  path.string(), e.what()));
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("model_io", fmt::format("cannot read '{}'", path.string()));

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("model_io", "SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += fmt::format("{:.17g}", m(i, j));
    }
    line += '\n';
    os << line;
  }
}

}  // namespace klyap
