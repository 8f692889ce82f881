#include "klyap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "klyap/error.hpp"

namespace klyap {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"domain", {"lower", "upper"}},
      {"collocation", {"grid_n", "sigma", "eta", "fill_probe_resolution", "dump_system"}},
      {"test_grid", {"lower", "upper", "resolution"}},
      {"cpa", {"enabled", "lower", "upper", "cells", "B", "safety", "probe_resolution"}},
      {"oracle", {"enabled", "t_max", "dt", "points", "tolerance"}},
      {"output", {"dir"}},
  };
  return keys;
}

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw ValidationError("config", fmt::format("{}: {}", field, message));
}

std::vector<double> parse_numbers(const std::string& field, const std::string& text) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      invalid(field, fmt::format("'{}' is not a number", token));
    }
    if (used != token.size()) invalid(field, fmt::format("'{}' is not a number", token));
    out.push_back(v);
  }
  return out;
}

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  std::string field(const std::string& key) const { return name_ + "." + key; }

  double number(const std::string& key, double fallback) const {
    auto text = raw(key);
    if (!text) return fallback;
    auto values = parse_numbers(field(key), *text);
    if (values.size() != 1) invalid(field(key), "expected a single number");
    return values.front();
  }

  int integer(const std::string& key, int fallback) const {
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) invalid(field(key), "expected an integer");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto text = raw(key);
    if (!text) return fallback;
    if (*text == "true" || *text == "yes" || *text == "1" || *text == "on") return true;
    if (*text == "false" || *text == "no" || *text == "0" || *text == "off") return false;
    invalid(field(key), fmt::format("'{}' is not a boolean", *text));
  }

  std::optional<Eigen::VectorXd> vector(const std::string& key) const {
    auto text = raw(key);
    if (!text) return std::nullopt;
    auto values = parse_numbers(field(key), *text);
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }

  std::optional<Box> box(int dim) const {
    auto lo = vector("lower");
    auto hi = vector("upper");
    if (!lo && !hi) return std::nullopt;
    if (!lo || !hi) invalid(name_, "both lower and upper must be given");
    if (lo->size() != dim) invalid(field("lower"), fmt::format("expected {} values", dim));
    if (hi->size() != dim) invalid(field("upper"), fmt::format("expected {} values", dim));
    for (int i = 0; i < dim; ++i) {
      if (!((*lo)(i) < (*hi)(i))) {
        invalid(name_, fmt::format("degenerate box along axis {}", i + 1));
      }
    }
    return Box(*lo, *hi);
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

Section section(const pt::ptree& root, const std::string& name) {
  auto child = root.get_child_optional(pt::ptree::path_type(name, '\0'));
  return Section(name, child ? &*child : nullptr);
}

void check_box_dim(const Box& box, int dim, const std::string& field) {
  if (box.dim() != dim) invalid(field, fmt::format("box must be {}-dimensional", dim));
}

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt::format("{:.17g}", v(i));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  const int d = dim();
  if (d < 1) invalid("system", "at least one component f1 is required");
  check_box_dim(domain, d, "domain");
  if (collocation.grid_n < 2) invalid("collocation.grid_n", "must be >= 2");
  if (!(collocation.sigma > 0.0)) invalid("collocation.sigma", "must be positive");
  if (collocation.eta && !(*collocation.eta >= 0.0)) {
    invalid("collocation.eta", "must be non-negative or 'relative'");
  }
  if (collocation.fill_probe_resolution < 2) {
    invalid("collocation.fill_probe_resolution", "must be >= 2");
  }
  check_box_dim(test_grid.domain, d, "test_grid");
  if (test_grid.resolution < 2) invalid("test_grid.resolution", "must be >= 2");
  if (cpa.enabled) {
    if (d != 2) invalid("cpa.enabled", "certification is only available for 2-D systems");
    check_box_dim(cpa.domain, d, "cpa");
    if (cpa.cells < 2) invalid("cpa.cells", "must be >= 2");
    if (!(cpa.safety >= 1.0)) invalid("cpa.safety", "must be >= 1");
    if (cpa.probe_resolution < 2) invalid("cpa.probe_resolution", "must be >= 2");
    if (cpa.b_override &&
        (cpa.b_override->rows() != d || cpa.b_override->cols() != d)) {
      invalid("cpa.B", fmt::format("expected {} values", d * d));
    }
  }
  if (oracle.enabled) {
    if (!(oracle.t_max > 0.0)) invalid("oracle.t_max", "must be positive");
    if (!(oracle.dt > 0.0)) invalid("oracle.dt", "must be positive");
    if (!(oracle.tolerance > 0.0)) invalid("oracle.tolerance", "must be positive");
    for (const auto& p : oracle.points) {
      if (p.size() != d) invalid("oracle.points", fmt::format("each point needs {} values", d));
    }
  }
  if (output_dir.empty()) invalid("output.dir", "must not be empty");
}

void RunConfig::write(std::ostream& os) const {
  fmt::print(os, "[system]\n");
  for (std::size_t j = 0; j < system.size(); ++j) fmt::print(os, "f{} = {}\n", j + 1, system[j]);
  fmt::print(os, "\n[domain]\nlower = {}\nupper = {}\n", join(domain.lower), join(domain.upper));
  fmt::print(os, "\n[collocation]\ngrid_n = {}\nsigma = {:.17g}\neta = {}\n", collocation.grid_n,
             collocation.sigma,
             collocation.eta ? fmt::format("{:.17g}", *collocation.eta) : "relative");
  fmt::print(os, "fill_probe_resolution = {}\ndump_system = {}\n",
             collocation.fill_probe_resolution, collocation.dump_system);
  fmt::print(os, "\n[test_grid]\nlower = {}\nupper = {}\nresolution = {}\n",
             join(test_grid.domain.lower), join(test_grid.domain.upper), test_grid.resolution);
  fmt::print(os, "\n[cpa]\nenabled = {}\nlower = {}\nupper = {}\ncells = {}\n", cpa.enabled,
             join(cpa.domain.lower), join(cpa.domain.upper), cpa.cells);
  if (cpa.b_override) {
    const Eigen::MatrixXd bt = cpa.b_override->transpose();  // row-major listing
    fmt::print(os, "B = {}\n", join(Eigen::Map<const Eigen::VectorXd>(bt.data(), bt.size())));
  }
  fmt::print(os, "safety = {:.17g}\nprobe_resolution = {}\n", cpa.safety, cpa.probe_resolution);
  fmt::print(os, "\n[oracle]\nenabled = {}\nt_max = {:.17g}\ndt = {:.17g}\ntolerance = {:.17g}\n",
             oracle.enabled, oracle.t_max, oracle.dt, oracle.tolerance);
  if (!oracle.points.empty()) {
    std::string pts;
    for (std::size_t i = 0; i < oracle.points.size(); ++i) {
      if (i) pts += "; ";
      pts += join(oracle.points[i]);
    }
    fmt::print(os, "points = {}\n", pts);
  }
  fmt::print(os, "\n[output]\ndir = {}\n", output_dir.string());
}

RunConfig parse_config(std::istream& in, const std::string& source_name) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config", fmt::format("{} line {}: {}", source_name, e.line(),
                                                e.message()));
  }

  for (const auto& [name, sub] : root) {
    if (name == "system") continue;
    auto it = known_keys().find(name);
    if (it == known_keys().end()) invalid(name, "unknown section");
    if (sub.empty() && !sub.data().empty()) invalid(name, "key outside of a section");
    for (const auto& [key, value] : sub) {
      if (!it->second.count(key)) invalid(name + "." + key, "unknown key");
    }
  }

  RunConfig cfg;
  auto system = root.get_child_optional(pt::ptree::path_type("system", '\0'));
  if (!system) invalid("system", "missing [system] section");
  std::map<int, std::string> components;
  for (const auto& [key, value] : *system) {
    int index = 0;
    if (key.size() < 2 || key[0] != 'f' ||
        std::from_chars(key.data() + 1, key.data() + key.size(), index).ptr !=
            key.data() + key.size() ||
        index < 1) {
      invalid("system." + key, "keys must be f1, f2, ...");
    }
    components[index] = value.data();
  }
  for (const auto& [index, text] : components) {
    if (index != static_cast<int>(cfg.system.size()) + 1) {
      invalid("system", fmt::format("component f{} is missing", cfg.system.size() + 1));
    }
    cfg.system.push_back(text);
  }
  const int d = cfg.dim();
  if (d < 1) invalid("system", "at least one component f1 is required");

  if (auto box = section(root, "domain").box(d)) {
    cfg.domain = *box;
  } else {
    invalid("domain", "missing [domain] section");
  }

  const Section col = section(root, "collocation");
  cfg.collocation.grid_n = col.integer("grid_n", cfg.collocation.grid_n);
  cfg.collocation.sigma = col.number("sigma", cfg.collocation.sigma);
  if (auto eta = col.raw("eta"); eta && *eta != "relative") {
    cfg.collocation.eta = col.number("eta", 0.0);
  }
  cfg.collocation.fill_probe_resolution =
      col.integer("fill_probe_resolution", cfg.collocation.fill_probe_resolution);
  cfg.collocation.dump_system = col.boolean("dump_system", cfg.collocation.dump_system);

  const Section tg = section(root, "test_grid");
  cfg.test_grid.domain = tg.box(d).value_or(Box::centered(d, 2.0));
  cfg.test_grid.resolution = tg.integer("resolution", cfg.test_grid.resolution);

  const Section cp = section(root, "cpa");
  cfg.cpa.enabled = cp.boolean("enabled", d == 2);
  cfg.cpa.domain = cp.box(d).value_or(Box::centered(d, 2.0));
  cfg.cpa.cells = cp.integer("cells", cfg.cpa.cells);
  if (auto b = cp.vector("B")) {
    if (b->size() != d * d) invalid("cpa.B", fmt::format("expected {} values", d * d));
    // Listed row-major in the file.
    cfg.cpa.b_override = Eigen::Map<const Eigen::MatrixXd>(b->data(), d, d).transpose();
  }
  cfg.cpa.safety = cp.number("safety", cfg.cpa.safety);
  cfg.cpa.probe_resolution = cp.integer("probe_resolution", cfg.cpa.probe_resolution);

  const Section orc = section(root, "oracle");
  cfg.oracle.enabled = orc.boolean("enabled", cfg.oracle.enabled);
  cfg.oracle.t_max = orc.number("t_max", cfg.oracle.t_max);
  cfg.oracle.dt = orc.number("dt", cfg.oracle.dt);
  cfg.oracle.tolerance = orc.number("tolerance", cfg.oracle.tolerance);
  if (auto pts = orc.raw("points")) {
    std::istringstream list(*pts);
    std::string item;
    while (std::getline(list, item, ';')) {
      auto values = parse_numbers("oracle.points", item);
      if (values.empty()) continue;
      cfg.oracle.points.push_back(
          Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
  }

  if (auto dir = section(root, "output").raw("dir")) cfg.output_dir = *dir;

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config", fmt::format("cannot read config file '{}'", path.string()));
  return parse_config(in, path.string());
}

}  // namespace klyap
