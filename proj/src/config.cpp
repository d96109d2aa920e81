#include "fpratelab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>

namespace fpl {
namespace {

using nlohmann::json;

std::string join_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

/// Walks a JSON document, collecting every schema violation.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  bool object(const json& j, const std::string& path) {
    if (!j.is_object()) {
      fail(path.empty() ? "<root>" : path, "expected an object");
      return false;
    }
    return true;
  }

  void only_keys(const json& obj, const std::string& path,
                 std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(join_path(path, key), "unknown key");
      }
    }
  }

  const json* field(const json& obj, const std::string& path, std::string_view key, bool required) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
      if (required) fail(join_path(path, key), "required field is missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& path, std::string_view key,
                               bool required) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(join_path(path, key), "expected a number");
      return std::nullopt;
    }
    const double d = v->get<double>();
    if (!std::isfinite(d)) {
      fail(join_path(path, key), "must be finite");
      return std::nullopt;
    }
    return d;
  }

  std::optional<long long> integer(const json& obj, const std::string& path, std::string_view key,
                                   bool required) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      fail(join_path(path, key), "expected an integer");
      return std::nullopt;
    }
    return v->get<long long>();
  }

  std::optional<std::vector<double>> numbers(const json& obj, const std::string& path,
                                             std::string_view key, bool required) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    const std::string p = join_path(path, key);
    if (!v->is_array()) {
      fail(p, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        fail(p + "[" + std::to_string(i) + "]", "expected a finite number");
        ok = false;
      } else {
        out.push_back(e.get<double>());
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }
};

std::array<double, 2> to_point(const std::vector<double>& v) {
  std::array<double, 2> p{0.0, 0.0};
  for (std::size_t i = 0; i < v.size() && i < 2; ++i) p[i] = v[i];
  return p;
}

std::optional<DriftSpec> read_drift(Reader& r, const json& obj, int dim) {
  const std::string path = "drift";
  if (!r.object(obj, path)) return std::nullopt;
  const json* type = r.field(obj, path, "type", true);
  if (!type) return std::nullopt;
  if (!type->is_string()) {
    r.fail("drift.type", "expected a string");
    return std::nullopt;
  }
  const std::string t = type->get<std::string>();
  const std::size_t errors_before = r.errors.size();
  auto check_len = [&](const std::optional<std::vector<double>>& v, std::string_view key) {
    if (v && dim > 0 && static_cast<int>(v->size()) != dim) {
      r.fail(join_path(path, key), "expected " + std::to_string(dim) + " components");
    }
  };

  if (t == "zero") {
    r.only_keys(obj, path, {"type"});
    return ZeroDrift{};
  }
  if (t == "gradient_quadratic") {
    r.only_keys(obj, path, {"type", "center", "strength"});
    const auto center = r.numbers(obj, path, "center", true);
    const auto strength = r.number(obj, path, "strength", true);
    check_len(center, "center");
    if (strength && !(*strength > 0.0)) r.fail("drift.strength", "must be > 0");
    if (r.errors.size() != errors_before) return std::nullopt;
    return GradientQuadraticDrift{to_point(*center), *strength};
  }
  if (t == "linear_rotation") {
    r.only_keys(obj, path, {"type", "center", "omega"});
    const auto center = r.numbers(obj, path, "center", true);
    const auto omega = r.number(obj, path, "omega", true);
    check_len(center, "center");
    if (omega && dim == 1 && *omega != 0.0) r.fail("drift.omega", "must be 0 on a 1D domain");
    if (r.errors.size() != errors_before) return std::nullopt;
    return LinearRotationDrift{to_point(*center), *omega};
  }
  if (t == "neural") {
    r.only_keys(obj, path, {"type", "lambda", "weights", "sigmoid_slope"});
    const auto lambda = r.numbers(obj, path, "lambda", true);
    const auto slope = r.number(obj, path, "sigmoid_slope", true);
    check_len(lambda, "lambda");
    if (slope && !(*slope > 0.0)) r.fail("drift.sigmoid_slope", "must be > 0");
    NeuralDrift d;
    const json* w = r.field(obj, path, "weights", true);
    if (w) {
      if (!w->is_array() || (dim > 0 && static_cast<int>(w->size()) != dim)) {
        r.fail("drift.weights", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                                    " array of numbers");
      } else {
        for (std::size_t i = 0; i < w->size(); ++i) {
          const std::string row_path = "drift.weights[" + std::to_string(i) + "]";
          const json& row = (*w)[i];
          if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            r.fail(row_path, "expected " + std::to_string(dim) + " numbers");
            continue;
          }
          for (std::size_t j = 0; j < row.size(); ++j) {
            const std::string p = row_path + "[" + std::to_string(j) + "]";
            if (!row[j].is_number() || !std::isfinite(row[j].get<double>())) {
              r.fail(p, "expected a finite number");
            } else if (row[j].get<double>() < 0.0) {
              r.fail(p, "weights must be >= 0");
            } else {
              d.weights[i][j] = row[j].get<double>();
            }
          }
        }
      }
    }
    if (r.errors.size() != errors_before) return std::nullopt;
    d.lambda = to_point(*lambda);
    d.sigmoid_slope = *slope;
    return d;
  }
  r.fail("drift.type", "unknown drift type '" + t +
                           "' (expected neural, gradient_quadratic, linear_rotation or zero)");
  return std::nullopt;
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

bool OutputConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

Grid ExperimentConfig::grid() const { return Grid::build(domain.lower, domain.upper, cells); }

StepOptions ExperimentConfig::step_options() const {
  return {evolve.dt, evolve.final_time, evolve.theta, evolve.snapshot_stride};
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Byte offsets point one past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError({"parse error at " + locate(text, at) + ": " + e.what()});
  }

  Reader r;
  ExperimentConfig cfg;
  if (!r.object(root, "")) throw ConfigError(r.errors);
  r.only_keys(root, "", {"domain", "cells", "diffusion", "drift", "solver", "evolve", "outputs"});

  int dim = 0;
  if (const json* cells = r.field(root, "", "cells", true)) {
    if (!cells->is_array() || cells->empty() || cells->size() > 2) {
      r.fail("cells", "expected an array of 1 or 2 integers");
    } else {
      dim = static_cast<int>(cells->size());
      for (std::size_t i = 0; i < cells->size(); ++i) {
        const std::string p = "cells[" + std::to_string(i) + "]";
        const json& c = (*cells)[i];
        if (!c.is_number_integer()) {
          r.fail(p, "expected an integer");
        } else if (c.get<long long>() < 2 || c.get<long long>() > 1 << 20) {
          r.fail(p, "must be an integer in [2, 2^20]");
        } else {
          cfg.cells.push_back(static_cast<int>(c.get<long long>()));
        }
      }
    }
  }

  if (const json* domain = r.field(root, "", "domain", true); domain && r.object(*domain, "domain")) {
    r.only_keys(*domain, "domain", {"lower", "upper"});
    auto lower = r.numbers(*domain, "domain", "lower", true);
    auto upper = r.numbers(*domain, "domain", "upper", true);
    if (lower && dim && static_cast<int>(lower->size()) != dim) {
      r.fail("domain.lower", "expected " + std::to_string(dim) + " components to match cells");
    }
    if (upper && dim && static_cast<int>(upper->size()) != dim) {
      r.fail("domain.upper", "expected " + std::to_string(dim) + " components to match cells");
    }
    if (lower && upper && lower->size() == upper->size()) {
      for (std::size_t a = 0; a < lower->size(); ++a) {
        if (!((*upper)[a] > (*lower)[a])) {
          r.fail("domain.upper[" + std::to_string(a) + "]", "must be greater than domain.lower");
        }
      }
    }
    if (lower) cfg.domain.lower = *lower;
    if (upper) cfg.domain.upper = *upper;
  }

  if (auto d = r.number(root, "", "diffusion", false)) {
    if (!(*d > 0.0)) r.fail("diffusion", "must be > 0");
    cfg.diffusion = *d;
  }

  if (const json* drift = r.field(root, "", "drift", true)) {
    if (auto spec = read_drift(r, *drift, dim)) cfg.drift = *spec;
  }

  if (const json* solver = r.field(root, "", "solver", false); solver && r.object(*solver, "solver")) {
    r.only_keys(*solver, "solver", {"tol", "max_iter", "shift"});
    if (auto v = r.number(*solver, "solver", "tol", false)) {
      if (!(*v > 0.0 && *v < 1.0)) r.fail("solver.tol", "must lie in (0, 1)");
      cfg.solver.tol = *v;
    }
    if (auto v = r.integer(*solver, "solver", "max_iter", false)) {
      if (*v < 1 || *v > 1000000) r.fail("solver.max_iter", "must lie in [1, 1e6]");
      cfg.solver.max_iter = static_cast<int>(*v);
    }
    if (auto v = r.number(*solver, "solver", "shift", false)) {
      if (!(*v > 0.0 && *v < 1.0)) r.fail("solver.shift", "must lie in (0, 1)");
      cfg.solver.shift = *v;
    }
  }

  if (const json* ev = r.field(root, "", "evolve", false); ev && r.object(*ev, "evolve")) {
    r.only_keys(*ev, "evolve", {"dt", "T", "theta", "snapshot_stride", "seed"});
    if (auto v = r.number(*ev, "evolve", "dt", false)) {
      if (!(*v > 0.0)) r.fail("evolve.dt", "must be > 0");
      cfg.evolve.dt = *v;
    }
    if (auto v = r.number(*ev, "evolve", "T", false)) {
      if (!(*v > 0.0)) r.fail("evolve.T", "must be > 0");
      cfg.evolve.final_time = *v;
    }
    if (auto v = r.number(*ev, "evolve", "theta", false)) {
      if (!(*v >= 0.5 && *v <= 1.0)) r.fail("evolve.theta", "must lie in [0.5, 1]");
      cfg.evolve.theta = *v;
    }
    if (auto v = r.integer(*ev, "evolve", "snapshot_stride", false)) {
      if (*v < 0) r.fail("evolve.snapshot_stride", "must be >= 0");
      cfg.evolve.snapshot_stride = static_cast<int>(*v);
    }
    if (const json* s = r.field(*ev, "evolve", "seed", false)) {
      if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
        r.fail("evolve.seed", "expected a nonnegative integer");
      } else {
        cfg.evolve.seed = s->get<std::uint64_t>();
      }
    }
    if (cfg.evolve.dt > 0.0 && cfg.evolve.final_time > 0.0 &&
        cfg.evolve.final_time / cfg.evolve.dt > 1e7) {
      r.fail("evolve.dt", "T / dt exceeds 1e7 steps");
    }
  }

  if (const json* out = r.field(root, "", "outputs", false); out && r.object(*out, "outputs")) {
    r.only_keys(*out, "outputs", {"directory", "formats"});
    if (const json* d = r.field(*out, "outputs", "directory", false)) {
      if (!d->is_string() || d->get<std::string>().empty()) {
        r.fail("outputs.directory", "expected a nonempty string");
      } else {
        cfg.outputs.directory = d->get<std::string>();
      }
    }
    if (const json* f = r.field(*out, "outputs", "formats", false)) {
      if (!f->is_array()) {
        r.fail("outputs.formats", "expected an array of strings");
      } else {
        cfg.outputs.formats.clear();
        for (std::size_t i = 0; i < f->size(); ++i) {
          const json& e = (*f)[i];
          if (!e.is_string() || (e != "csv" && e != "json")) {
            r.fail("outputs.formats[" + std::to_string(i) + "]", "expected \"csv\" or \"json\"");
          } else {
            cfg.outputs.formats.push_back(e.get<std::string>());
          }
        }
      }
    }
  }

  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

json config_to_json(const ExperimentConfig& c) {
  const int dim = static_cast<int>(c.cells.size());
  auto point = [dim](const std::array<double, 2>& p) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(p[i]);
    return a;
  };
  json drift = std::visit(
      [&](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ZeroDrift>) {
          return {{"type", "zero"}};
        } else if constexpr (std::is_same_v<T, GradientQuadraticDrift>) {
          return {{"type", "gradient_quadratic"}, {"center", point(d.center)}, {"strength", d.strength}};
        } else if constexpr (std::is_same_v<T, LinearRotationDrift>) {
          return {{"type", "linear_rotation"}, {"center", point(d.center)}, {"omega", d.omega}};
        } else {
          json w = json::array();
          for (int i = 0; i < dim; ++i) w.push_back(point(d.weights[i]));
          return {{"type", "neural"},
                  {"lambda", point(d.lambda)},
                  {"weights", w},
                  {"sigmoid_slope", d.sigmoid_slope}};
        }
      },
      c.drift);
  return {
      {"domain", {{"lower", c.domain.lower}, {"upper", c.domain.upper}}},
      {"cells", c.cells},
      {"diffusion", c.diffusion},
      {"drift", drift},
      {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"shift", c.solver.shift}}},
      {"evolve",
       {{"dt", c.evolve.dt},
        {"T", c.evolve.final_time},
        {"theta", c.evolve.theta},
        {"snapshot_stride", c.evolve.snapshot_stride},
        {"seed", c.evolve.seed}}},
      {"outputs", {{"directory", c.outputs.directory}, {"formats", c.outputs.formats}}},
  };
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canon = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fpl
