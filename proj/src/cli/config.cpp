#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hencky/cli.hpp"

namespace hencky {

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error("config field '" + field + "'" + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                         ": " + message),
      field_(std::move(field)),
      line_(line) {}

namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Reads typed values out of the parsed tree and reports errors with field paths.
class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ConfigError(path, locate(path), message);
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }
  long long integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<long long>();
  }
  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<SymTensor> tensors(const json& v, const std::string& path, int dim) const {
    if (!v.is_array()) fail(path, "expected an array of upper-triangle lists");
    std::vector<SymTensor> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      const auto u = numbers(v[i], p);
      if (u.size() != sym_size(dim)) {
        fail(p, "expected " + std::to_string(sym_size(dim)) + " upper-triangle entries for dim " + std::to_string(dim));
      }
      out.push_back(SymTensor::from_upper(dim, u));
    }
    return out;
  }
  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : obj.items()) {
      if (!allowed.count(item.key())) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
    }
  }

 private:
  /// Line of the last key of `path` found in order in the text. A missing key
  /// reports the line of its deepest present parent; 0 if none is present.
  int locate(const std::string& path) const {
    std::size_t pos = 0;
    int line = 0;
    std::size_t start = 0;
    while (start <= path.size()) {
      std::size_t end = path.find('.', start);
      if (end == std::string::npos) end = path.size();
      std::string key = path.substr(start, end - start);
      key = key.substr(0, key.find('['));
      const std::size_t at = text_.find("\"" + key + "\"", pos);
      if (at == std::string::npos) return line;
      pos = at;
      line = line_of_offset(text_, at);
      start = end + 1;
    }
    return line;
  }

  const std::string& text_;
};

}  // namespace

MicroDensity RunConfig::make_density() const {
  MicroDensity f = make_builtin(density.name, density.params, dim);
  if (density.alpha || density.beta) {
    f = f.with_growth(Growth{density.alpha.value_or(f.growth().alpha), density.beta.value_or(f.growth().beta)});
  }
  return f;
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.density.name = "laminate-two-phase";
  cfg.density.params = {1.0, 4.0, 0.5};
  cfg.strains = strain_panel(2, 3, 0);
  cfg.deltas = default_deltas();
  cfg.t_schedule = geometric_schedule(1.0, 1e3);
  cfg.directions = {SymTensor::from_upper(2, std::vector<double>{1.0, 0.0, -1.0})};
  cfg.stresses = {SymTensor::zero(2)};
  cfg.fields = {{"gradient", 0}, {"solenoidal", 0}, {"random", 1}};
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0),
                      std::string("JSON syntax error: ") + e.what());
  }
  const Reader rd(text);
  rd.only_keys(root, "", {"density", "dim", "strains", "k_list", "m", "boundary", "deltas", "t_schedule",
                          "directions", "stresses", "fields", "solver", "output_dir", "verify"});

  RunConfig cfg;
  if (root.contains("dim")) {
    const long long dim = rd.integer(root["dim"], "dim");
    if (dim != 2 && dim != 3) rd.fail("dim", "must be 2 or 3");
    cfg.dim = static_cast<int>(dim);
  }
  const int n = cfg.dim;

  if (!root.contains("density")) rd.fail("density", "missing required field");
  const json& d = root["density"];
  rd.only_keys(d, "density", {"name", "params", "alpha", "beta"});
  if (!d.contains("name")) rd.fail("density.name", "missing required field");
  cfg.density.name = rd.string(d["name"], "density.name");
  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), cfg.density.name) == names.end()) {
    rd.fail("density.name", "unknown catalog density '" + cfg.density.name + "'");
  }
  if (d.contains("params")) cfg.density.params = rd.numbers(d["params"], "density.params");
  for (const char* key : {"alpha", "beta"}) {
    if (!d.contains(key)) continue;
    const double v = rd.number(d[key], std::string("density.") + key);
    if (!(v > 0.0)) rd.fail(std::string("density.") + key, "must be > 0");
    (std::string(key) == "alpha" ? cfg.density.alpha : cfg.density.beta) = v;
  }
  try {
    (void)make_builtin(cfg.density.name, cfg.density.params, n);
  } catch (const std::invalid_argument& e) {
    rd.fail("density.params", e.what());
  }
  try {
    (void)cfg.make_density();
  } catch (const std::invalid_argument& e) {
    rd.fail(cfg.density.alpha ? "density.alpha" : "density.beta", e.what());
  }

  cfg.strains = root.contains("strains") ? rd.tensors(root["strains"], "strains", n) : strain_panel(n, 3, 0);
  if (cfg.strains.empty()) rd.fail("strains", "must not be empty");

  if (root.contains("k_list")) {
    const json& k = root["k_list"];
    if (!k.is_array() || k.empty()) rd.fail("k_list", "expected a non-empty array of integers");
    cfg.k_list.clear();
    for (std::size_t i = 0; i < k.size(); ++i) {
      const std::string p = "k_list[" + std::to_string(i) + "]";
      const long long v = rd.integer(k[i], p);
      if (v < 1 || v > 64) rd.fail(p, "must be in [1, 64]");
      if (!cfg.k_list.empty() && v <= cfg.k_list.back()) rd.fail(p, "k_list must be strictly ascending");
      cfg.k_list.push_back(static_cast<int>(v));
    }
  }
  if (root.contains("m")) {
    const long long m = rd.integer(root["m"], "m");
    if (m < 2 || m > 512) rd.fail("m", "must be in [2, 512]");
    cfg.m = static_cast<int>(m);
  }
  if (root.contains("boundary")) {
    const std::string b = rd.string(root["boundary"], "boundary");
    if (b == "dirichlet") {
      cfg.boundary = Boundary::dirichlet;
    } else if (b == "periodic") {
      cfg.boundary = Boundary::periodic;
    } else {
      rd.fail("boundary", "must be \"dirichlet\" or \"periodic\"");
    }
  }

  if (root.contains("deltas")) {
    cfg.deltas = rd.numbers(root["deltas"], "deltas");
    if (cfg.deltas.empty()) rd.fail("deltas", "must not be empty");
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
      const std::string p = "deltas[" + std::to_string(i) + "]";
      if (cfg.deltas[i] < 0.0) rd.fail(p, "must be >= 0");
      if (i > 0 && !(cfg.deltas[i] < cfg.deltas[i - 1])) rd.fail(p, "deltas must be strictly descending");
    }
    if (cfg.deltas.back() != 0.0) rd.fail("deltas", "last entry must be 0");
  } else {
    cfg.deltas = default_deltas();
  }

  if (root.contains("t_schedule")) {
    cfg.t_schedule = rd.numbers(root["t_schedule"], "t_schedule");
    if (cfg.t_schedule.size() < 3) rd.fail("t_schedule", "needs at least three entries");
    for (std::size_t i = 0; i < cfg.t_schedule.size(); ++i) {
      const std::string p = "t_schedule[" + std::to_string(i) + "]";
      if (!(cfg.t_schedule[i] > 0.0)) rd.fail(p, "must be > 0");
      if (i > 0 && !(cfg.t_schedule[i] > cfg.t_schedule[i - 1])) rd.fail(p, "t_schedule must be increasing");
    }
  } else {
    cfg.t_schedule = geometric_schedule(1.0, 1e3);
  }

  if (root.contains("directions")) {
    cfg.directions = rd.tensors(root["directions"], "directions", n);
    for (std::size_t i = 0; i < cfg.directions.size(); ++i) {
      const SymTensor& P = cfg.directions[i];
      if (std::abs(P.trace()) > 1e-12 * (1.0 + P.norm())) {
        rd.fail("directions[" + std::to_string(i) + "]", "recession directions must be traceless");
      }
    }
  } else {
    SymTensor P(n);
    P.at(0, 0) = 1.0;
    P.at(1, 1) = -1.0;
    cfg.directions = {P};
  }

  cfg.stresses = root.contains("stresses") ? rd.tensors(root["stresses"], "stresses", n)
                                           : std::vector<SymTensor>{SymTensor::zero(n)};

  if (root.contains("fields")) {
    const json& f = root["fields"];
    if (!f.is_array()) rd.fail("fields", "expected an array of objects");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string p = "fields[" + std::to_string(i) + "]";
      rd.only_keys(f[i], p, {"kind", "seed"});
      if (!f[i].contains("kind")) rd.fail(p + ".kind", "missing required field");
      FieldConfig fc;
      fc.kind = rd.string(f[i]["kind"], p + ".kind");
      if (fc.kind != "gradient" && fc.kind != "solenoidal" && fc.kind != "random") {
        rd.fail(p + ".kind", "must be \"gradient\", \"solenoidal\" or \"random\"");
      }
      if (f[i].contains("seed")) {
        const long long s = rd.integer(f[i]["seed"], p + ".seed");
        if (s < 0) rd.fail(p + ".seed", "must be >= 0");
        fc.seed = static_cast<std::uint64_t>(s);
      }
      cfg.fields.push_back(fc);
    }
  } else {
    cfg.fields = default_config().fields;
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    rd.only_keys(s, "solver", {"tolerance", "max_iters", "restarts", "seed", "smoothing", "noise_scale"});
    if (s.contains("tolerance")) {
      cfg.solver.tolerance = rd.number(s["tolerance"], "solver.tolerance");
      if (!(cfg.solver.tolerance > 0.0)) rd.fail("solver.tolerance", "must be > 0");
    }
    if (s.contains("max_iters")) {
      const long long v = rd.integer(s["max_iters"], "solver.max_iters");
      if (v < 1 || v > 10'000'000) rd.fail("solver.max_iters", "must be in [1, 1e7]");
      cfg.solver.max_iters = static_cast<int>(v);
    }
    if (s.contains("restarts")) {
      const long long v = rd.integer(s["restarts"], "solver.restarts");
      if (v < 1 || v > 100'000) rd.fail("solver.restarts", "must be in [1, 1e5]");
      cfg.solver.restarts = static_cast<int>(v);
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) rd.fail("solver.seed", "expected a non-negative integer");
      cfg.solver.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("smoothing")) {
      cfg.solver.smoothing = rd.number(s["smoothing"], "solver.smoothing");
      if (cfg.solver.smoothing < 0.0) rd.fail("solver.smoothing", "must be >= 0");
    }
    if (s.contains("noise_scale")) {
      cfg.solver.noise_scale = rd.number(s["noise_scale"], "solver.noise_scale");
      if (cfg.solver.noise_scale < 0.0) rd.fail("solver.noise_scale", "must be >= 0");
    }
  }

  if (root.contains("output_dir")) {
    cfg.output_dir = rd.string(root["output_dir"], "output_dir");
    if (cfg.output_dir.empty()) rd.fail("output_dir", "must not be empty");
  }

  if (root.contains("verify")) {
    const json& v = root["verify"];
    rd.only_keys(v, "verify", {"samples", "dual_points"});
    if (v.contains("samples")) {
      const long long s = rd.integer(v["samples"], "verify.samples");
      if (s < 1 || s > 10'000'000) rd.fail("verify.samples", "must be in [1, 1e7]");
      cfg.verify.samples = static_cast<int>(s);
    }
    if (v.contains("dual_points")) {
      const long long s = rd.integer(v["dual_points"], "verify.dual_points");
      if (s < 1 || s > 1000) rd.fail("verify.dual_points", "must be in [1, 1000]");
      cfg.verify.dual_points = static_cast<int>(s);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", 0, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace hencky
