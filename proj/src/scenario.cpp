#include "membrane/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace membrane {

using nlohmann::json;

namespace {

const json& require(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError("missing field \"" + key + "\"");
  return *it;
}

double require_number(const json& doc, const std::string& key) {
  const json& v = require(doc, key);
  if (!v.is_number()) throw ConfigError("field \"" + key + "\" must be a number");
  return v.get<double>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("field \"" + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("field \"" + key + "\" must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix matrix_from(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("field \"" + key + "\" must be an array of rows");
  const Index rows = static_cast<Index>(v.size());
  Matrix m;
  for (Index r = 0; r < rows; ++r) {
    const auto row = number_list(v[static_cast<std::size_t>(r)], key);
    if (r == 0) m.resize(rows, static_cast<Index>(row.size()));
    if (static_cast<Index>(row.size()) != m.cols()) {
      throw ConfigError("field \"" + key + "\" has ragged rows");
    }
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

json to_json_rows(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

GeometryConfig parse_geometry(const json& g) {
  GeometryConfig out;
  const std::string type = require(g, "type").get<std::string>();
  if (type == "interval") {
    out.kind = GeometryConfig::Kind::interval;
    out.breakpoints = number_list(require(g, "breakpoints"), "breakpoints");
    for (const auto& v : require(g, "cells_per_subdomain")) {
      out.cells_per_subdomain.push_back(v.get<int>());
    }
    for (const auto& m : require(g, "membranes")) {
      MembraneSpec1d spec;
      spec.tau_left = require_number(m, "tau_left");
      spec.tau_right = require_number(m, "tau_right");
      spec.b_left_right = require_number(m, "b_left_right");
      spec.b_right_left = require_number(m, "b_right_left");
      out.membranes_1d.push_back(spec);
    }
    const auto ot = number_list(require(g, "outer_tau"), "outer_tau");
    if (ot.size() != 2) throw ConfigError("interval outer_tau needs two entries");
    out.outer_tau_1d = {ot[0], ot[1]};
  } else if (type == "rectangles") {
    out.kind = GeometryConfig::Kind::rectangles;
    out.h = require_number(g, "h");
    for (const auto& r : require(g, "rectangles")) {
      Rectangle rect;
      rect.x0 = require_number(r, "x0");
      rect.y0 = require_number(r, "y0");
      rect.x1 = require_number(r, "x1");
      rect.y1 = require_number(r, "y1");
      rect.subdomain = require(r, "subdomain").get<int>();
      out.rectangles.push_back(rect);
    }
    for (const auto& m : require(g, "membranes")) {
      MembraneSpec2d spec;
      const auto pair = require(m, "pair");
      if (!pair.is_array() || pair.size() != 2) {
        throw ConfigError("membrane \"pair\" must hold two subdomains");
      }
      spec.k = pair[0].get<int>();
      spec.l = pair[1].get<int>();
      const auto tau = number_list(require(m, "tau"), "tau");
      const auto b = number_list(require(m, "b"), "b");
      if (tau.size() != 2 || b.size() != 2) {
        throw ConfigError("membrane \"tau\" and \"b\" need two entries each");
      }
      spec.tau_k = tau[0];
      spec.tau_l = tau[1];
      spec.b_kl = b[0];
      spec.b_lk = b[1];
      out.membranes_2d.push_back(spec);
    }
    out.outer_tau_2d = number_list(require(g, "outer_tau"), "outer_tau");
  } else if (type == "measured") {
    out.kind = GeometryConfig::Kind::measured;
    out.lambda = to_vector(number_list(require(g, "lambda"), "lambda"));
    out.n = static_cast<int>(out.lambda.size());
    out.rho = matrix_from(require(g, "rho"), "rho");
    out.varrho = matrix_from(require(g, "varrho"), "varrho");
    out.cbar = to_vector(number_list(require(g, "cbar"), "cbar"));
  } else {
    throw ConfigError("unknown geometry type \"" + type + "\"");
  }
  return out;
}

json geometry_to_json(const GeometryConfig& g) {
  json out;
  switch (g.kind) {
    case GeometryConfig::Kind::interval: {
      out["type"] = "interval";
      out["breakpoints"] = g.breakpoints;
      out["cells_per_subdomain"] = g.cells_per_subdomain;
      json membranes = json::array();
      for (const auto& m : g.membranes_1d) {
        membranes.push_back({{"tau_left", m.tau_left},
                             {"tau_right", m.tau_right},
                             {"b_left_right", m.b_left_right},
                             {"b_right_left", m.b_right_left}});
      }
      out["membranes"] = std::move(membranes);
      out["outer_tau"] = {g.outer_tau_1d.first, g.outer_tau_1d.second};
      break;
    }
    case GeometryConfig::Kind::rectangles: {
      out["type"] = "rectangles";
      out["h"] = g.h;
      json rects = json::array();
      for (const auto& r : g.rectangles) {
        rects.push_back({{"x0", r.x0},
                         {"y0", r.y0},
                         {"x1", r.x1},
                         {"y1", r.y1},
                         {"subdomain", r.subdomain}});
      }
      out["rectangles"] = std::move(rects);
      json membranes = json::array();
      for (const auto& m : g.membranes_2d) {
        membranes.push_back({{"pair", {m.k, m.l}},
                             {"tau", {m.tau_k, m.tau_l}},
                             {"b", {m.b_kl, m.b_lk}}});
      }
      out["membranes"] = std::move(membranes);
      out["outer_tau"] = g.outer_tau_2d;
      break;
    }
    case GeometryConfig::Kind::measured: {
      out["type"] = "measured";
      out["lambda"] = std::vector<double>(g.lambda.data(), g.lambda.data() + g.lambda.size());
      out["rho"] = to_json_rows(g.rho);
      out["varrho"] = to_json_rows(g.varrho);
      out["cbar"] = std::vector<double>(g.cbar.data(), g.cbar.data() + g.cbar.size());
      break;
    }
  }
  return out;
}

}  // namespace

int ScenarioConfig::n_subdomains() const {
  switch (geometry.kind) {
    case GeometryConfig::Kind::interval:
      return static_cast<int>(geometry.breakpoints.size()) - 1;
    case GeometryConfig::Kind::rectangles: {
      int n = 0;
      for (const auto& r : geometry.rectangles) n = std::max(n, r.subdomain);
      return n;
    }
    case GeometryConfig::Kind::measured:
      return geometry.n;
  }
  return 0;
}

namespace {
ScenarioConfig parse_scenario_impl(const json& doc);
}

// json type errors (wrong field types etc.) are configuration errors
ScenarioConfig parse_scenario(const json& doc) {
  try {
    return parse_scenario_impl(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario document: ") + e.what());
  }
}

namespace {

ScenarioConfig parse_scenario_impl(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario document must be an object");
  const std::string schema = require(doc, "schema").get<std::string>();
  if (schema != "membrane-scenario/1") {
    throw ConfigError("unsupported schema \"" + schema + "\"");
  }

  ScenarioConfig config;
  config.name = require(doc, "name").get<std::string>();
  config.geometry = parse_geometry(require(doc, "geometry"));
  const int n = config.n_subdomains();
  if (n < 1) throw ConfigError("scenario needs at least one subdomain");

  if (config.geometry.kind != GeometryConfig::Kind::measured) {
    const json& coeff = require(doc, "coefficients");
    config.a = number_list(require(coeff, "a"), "a");
    config.c = number_list(require(coeff, "c"), "c");
    if (static_cast<int>(config.a.size()) != n ||
        static_cast<int>(config.c.size()) != n) {
      throw ConfigError("coefficients need one (a, c) entry per subdomain");
    }
  } else if (doc.contains("coefficients")) {
    throw ConfigError("measured geometries carry their potential in cbar");
  }

  config.kappa = number_list(require(doc, "kappa"), "kappa");
  if (config.kappa.empty()) throw ConfigError("kappa list must not be empty");
  for (std::size_t i = 0; i < config.kappa.size(); ++i) {
    if (!(config.kappa[i] > 0.0)) throw ConfigError("kappa values must be positive");
    if (i > 0 && !(config.kappa[i - 1] < config.kappa[i])) {
      throw ConfigError("kappa list must be strictly increasing");
    }
  }

  const std::string orientation = require(doc, "orientation").get<std::string>();
  if (orientation == "forward") {
    config.orientation = Orientation::forward;
  } else if (orientation == "backward") {
    config.orientation = Orientation::backward;
  } else {
    throw ConfigError("orientation must be \"forward\" or \"backward\"");
  }

  const json& init = require(doc, "initial");
  const std::string init_type = require(init, "type").get<std::string>();
  if (init_type == "indicator") {
    config.initial.kind = InitialConfig::Kind::indicator;
    for (const auto& s : require(init, "subdomains")) {
      const int k = s.get<int>();
      if (k < 1 || k > n) {
        throw ConfigError("initial datum references unknown subdomain " +
                          std::to_string(k));
      }
      config.initial.subdomains.push_back(k);
    }
  } else if (init_type == "constant") {
    config.initial.kind = InitialConfig::Kind::constant;
    config.initial.value = require_number(init, "value");
  } else if (init_type == "per_subdomain") {
    config.initial.kind = InitialConfig::Kind::per_subdomain;
    config.initial.values = number_list(require(init, "values"), "values");
    if (static_cast<int>(config.initial.values.size()) != n) {
      throw ConfigError("per-subdomain initial datum needs one value per subdomain");
    }
  } else if (init_type == "cells") {
    config.initial.kind = InitialConfig::Kind::cells;
    config.initial.values = number_list(require(init, "values"), "values");
  } else {
    throw ConfigError("unknown initial datum type \"" + init_type + "\"");
  }

  const json& source = require(doc, "source");
  const std::string source_type = require(source, "type").get<std::string>();
  if (source_type == "none") {
    config.source.kind = SourceConfig::Kind::none;
  } else if (source_type == "per_subdomain") {
    config.source.kind = SourceConfig::Kind::per_subdomain;
    config.source.values = number_list(require(source, "values"), "values");
    if (static_cast<int>(config.source.values.size()) != n) {
      throw ConfigError("per-subdomain source needs one value per subdomain");
    }
  } else {
    throw ConfigError("unknown source type \"" + source_type + "\"");
  }

  config.times = number_list(require(doc, "times"), "times");
  if (config.times.empty()) throw ConfigError("times list must not be empty");
  for (std::size_t i = 0; i < config.times.size(); ++i) {
    if (config.times[i] < 0.0) throw ConfigError("times must be nonnegative");
    if (i > 0 && !(config.times[i - 1] < config.times[i])) {
      throw ConfigError("times must be strictly increasing");
    }
  }

  if (doc.contains("solver")) {
    const json& solver = doc["solver"];
    const std::string scheme = require(solver, "scheme").get<std::string>();
    if (scheme == "implicit-euler") {
      config.solver.scheme = Scheme::implicit_euler;
    } else if (scheme == "crank-nicolson") {
      config.solver.scheme = Scheme::crank_nicolson;
    } else {
      throw ConfigError("scheme must be \"implicit-euler\" or \"crank-nicolson\"");
    }
    config.solver.dt = require_number(solver, "dt");
    if (!(config.solver.dt > 0.0)) throw ConfigError("solver dt must be positive");
    if (solver.contains("dt_per_kappa")) {
      config.solver.dt_per_kappa = solver["dt_per_kappa"].get<double>();
      if (config.solver.dt_per_kappa < 0.0) {
        throw ConfigError("dt_per_kappa must be nonnegative");
      }
    }
  }

  if (doc.contains("mc")) {
    McConfig mc;
    mc.n_particles = require(doc["mc"], "n_particles").get<long>();
    mc.dt = require_number(doc["mc"], "dt");
    if (mc.n_particles <= 0) throw ConfigError("n_particles must be positive");
    if (!(mc.dt > 0.0)) throw ConfigError("mc dt must be positive");
    config.mc = mc;
  }

  config.seed = require(doc, "seed").get<std::uint64_t>();
  config.output = doc.value("output", std::string("out"));
  return config;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

json to_json(const ScenarioConfig& config) {
  json doc;
  doc["schema"] = "membrane-scenario/1";
  doc["name"] = config.name;
  doc["geometry"] = geometry_to_json(config.geometry);
  if (config.geometry.kind != GeometryConfig::Kind::measured) {
    doc["coefficients"] = {{"a", config.a}, {"c", config.c}};
  }
  doc["kappa"] = config.kappa;
  doc["orientation"] =
      config.orientation == Orientation::forward ? "forward" : "backward";
  json init;
  switch (config.initial.kind) {
    case InitialConfig::Kind::indicator:
      init = {{"type", "indicator"}, {"subdomains", config.initial.subdomains}};
      break;
    case InitialConfig::Kind::constant:
      init = {{"type", "constant"}, {"value", config.initial.value}};
      break;
    case InitialConfig::Kind::per_subdomain:
      init = {{"type", "per_subdomain"}, {"values", config.initial.values}};
      break;
    case InitialConfig::Kind::cells:
      init = {{"type", "cells"}, {"values", config.initial.values}};
      break;
  }
  doc["initial"] = std::move(init);
  if (config.source.kind == SourceConfig::Kind::none) {
    doc["source"] = {{"type", "none"}};
  } else {
    doc["source"] = {{"type", "per_subdomain"}, {"values", config.source.values}};
  }
  doc["times"] = config.times;
  json solver;
  solver["scheme"] = config.solver.scheme == Scheme::implicit_euler
                         ? "implicit-euler"
                         : "crank-nicolson";
  solver["dt"] = config.solver.dt;
  if (config.solver.dt_per_kappa > 0.0) {
    solver["dt_per_kappa"] = config.solver.dt_per_kappa;
  }
  doc["solver"] = std::move(solver);
  if (config.mc) {
    doc["mc"] = {{"n_particles", config.mc->n_particles}, {"dt", config.mc->dt}};
  }
  doc["seed"] = config.seed;
  doc["output"] = config.output;
  return doc;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return to_json(a) == to_json(b);
}

namespace {

const std::map<std::string, const char*>& preset_texts() {
  static const std::map<std::string, const char*> presets = {
      {"figure1", R"json({
  "schema": "membrane-scenario/1",
  "name": "figure1",
  "geometry": {
    "type": "interval",
    "breakpoints": [-1.0, 0.0, 1.0],
    "cells_per_subdomain": [200, 200],
    "membranes": [{"tau_left": 0.6666666666666666, "tau_right": 0.3333333333333333,
                   "b_left_right": 1.0, "b_right_left": 1.0}],
    "outer_tau": [0.0, 0.0]
  },
  "coefficients": {"a": [1.0, 1.0], "c": [0.0, 0.0]},
  "kappa": [0.1, 1.0, 10.0],
  "orientation": "forward",
  "initial": {"type": "indicator", "subdomains": [1]},
  "source": {"type": "none"},
  "times": [0.0, 0.05, 0.15, 0.3, 0.5, 1.0, 6.0],
  "solver": {"scheme": "crank-nicolson", "dt": 0.001, "dt_per_kappa": 0.01},
  "seed": 12345,
  "output": "out"
})json"},
      {"figure1-mc", R"json({
  "schema": "membrane-scenario/1",
  "name": "figure1-mc",
  "geometry": {
    "type": "interval",
    "breakpoints": [-1.0, 0.0, 1.0],
    "cells_per_subdomain": [200, 200],
    "membranes": [{"tau_left": 0.6666666666666666, "tau_right": 0.3333333333333333,
                   "b_left_right": 1.0, "b_right_left": 1.0}],
    "outer_tau": [0.0, 0.0]
  },
  "coefficients": {"a": [1.0, 1.0], "c": [0.0, 0.0]},
  "kappa": [1.0],
  "orientation": "forward",
  "initial": {"type": "indicator", "subdomains": [1]},
  "source": {"type": "none"},
  "times": [0.5, 1.0, 2.0],
  "solver": {"scheme": "crank-nicolson", "dt": 0.001, "dt_per_kappa": 0.01},
  "mc": {"n_particles": 100000, "dt": 0.0001},
  "seed": 20240817,
  "output": "out"
})json"},
      {"kinase", R"json({
  "schema": "membrane-scenario/1",
  "name": "kinase",
  "geometry": {
    "type": "measured",
    "lambda": [4.1887902047863905],
    "rho": [[6.283185307179586, 0.0]],
    "varrho": [[0.0]],
    "cbar": [1.0]
  },
  "kappa": [1.0],
  "orientation": "backward",
  "initial": {"type": "per_subdomain", "values": [0.0]},
  "source": {"type": "per_subdomain", "values": [1.5]},
  "times": [0.1, 1.0, 10.0],
  "seed": 1,
  "output": "out"
})json"},
      {"kinase1d", R"json({
  "schema": "membrane-scenario/1",
  "name": "kinase1d",
  "geometry": {
    "type": "interval",
    "breakpoints": [0.0, 1.0],
    "cells_per_subdomain": [200],
    "membranes": [],
    "outer_tau": [0.75, 0.75]
  },
  "coefficients": {"a": [1.0], "c": [1.0]},
  "kappa": [1.0, 10.0, 100.0],
  "orientation": "backward",
  "initial": {"type": "constant", "value": 1.0},
  "source": {"type": "per_subdomain", "values": [1.0]},
  "times": [1.0],
  "solver": {"scheme": "crank-nicolson", "dt": 0.001, "dt_per_kappa": 0.01},
  "seed": 1,
  "output": "out"
})json"},
      {"neuro", R"json({
  "schema": "membrane-scenario/1",
  "name": "neuro",
  "geometry": {
    "type": "measured",
    "lambda": [1.0, 2.0, 4.0],
    "rho": [[0.5, 0.0, 1.0, 0.0],
            [0.0, 0.75, 0.0, 0.5],
            [0.0, 0.0, 1.5, 0.0]],
    "varrho": [[0.0, 1.0, 0.0],
               [0.75, 0.0, 0.5],
               [0.0, 1.5, 0.0]],
    "cbar": [0.0, 0.0, 0.5]
  },
  "kappa": [1.0],
  "orientation": "backward",
  "initial": {"type": "per_subdomain", "values": [0.0, 0.0, 0.0]},
  "source": {"type": "per_subdomain", "values": [0.0, 0.0, 0.25]},
  "times": [0.5, 1.0, 2.0, 5.0, 10.0],
  "seed": 1,
  "output": "out"
})json"},
      {"calcium", R"json({
  "schema": "membrane-scenario/1",
  "name": "calcium",
  "geometry": {
    "type": "measured",
    "lambda": [0.5, 0.25, 2.0],
    "rho": [[0.0, 0.0, 0.0, 0.24],
            [0.0, 0.0, 0.0, 0.16],
            [0.12, 0.36, 0.28, 0.0]],
    "varrho": [[0.0, 0.0, 0.24],
               [0.0, 0.0, 0.16],
               [0.36, 0.28, 0.0]],
    "cbar": [0.0, 0.0, 0.0]
  },
  "kappa": [1.0],
  "orientation": "forward",
  "initial": {"type": "per_subdomain", "values": [1.2, 0.9, 0.3]},
  "source": {"type": "none"},
  "times": [0.5, 1.0, 2.0, 5.0],
  "seed": 1,
  "output": "out"
})json"},
      {"square2d", R"json({
  "schema": "membrane-scenario/1",
  "name": "square2d",
  "geometry": {
    "type": "rectangles",
    "h": 0.03125,
    "rectangles": [{"x0": 0.0, "y0": 0.0, "x1": 0.5, "y1": 1.0, "subdomain": 1},
                   {"x0": 0.5, "y0": 0.0, "x1": 1.0, "y1": 1.0, "subdomain": 2}],
    "membranes": [{"pair": [1, 2], "tau": [0.5, 0.25], "b": [1.0, 1.0]}],
    "outer_tau": [0.0, 0.0]
  },
  "coefficients": {"a": [1.0, 1.5], "c": [0.0, 0.0]},
  "kappa": [1.0, 10.0],
  "orientation": "forward",
  "initial": {"type": "indicator", "subdomains": [1]},
  "source": {"type": "none"},
  "times": [0.25, 1.0],
  "solver": {"scheme": "crank-nicolson", "dt": 0.002, "dt_per_kappa": 0.02},
  "seed": 7,
  "output": "out"
})json"},
      {"killing1d", R"json({
  "schema": "membrane-scenario/1",
  "name": "killing1d",
  "geometry": {
    "type": "interval",
    "breakpoints": [0.0, 1.0, 2.5],
    "cells_per_subdomain": [100, 150],
    "membranes": [{"tau_left": 0.4, "tau_right": 0.6,
                   "b_left_right": 0.5, "b_right_left": 0.8}],
    "outer_tau": [0.2, 0.0]
  },
  "coefficients": {"a": [1.0, 2.0], "c": [0.1, 0.0]},
  "kappa": [1.0, 10.0],
  "orientation": "forward",
  "initial": {"type": "constant", "value": 1.0},
  "source": {"type": "none"},
  "times": [0.5, 1.0],
  "solver": {"scheme": "crank-nicolson", "dt": 0.001, "dt_per_kappa": 0.01},
  "seed": 3,
  "output": "out"
})json"}};
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_texts()) names.push_back(name);
  return names;
}

ScenarioConfig preset(const std::string& name) {
  const auto& presets = preset_texts();
  auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [n, t] : presets) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown scenario \"" + name + "\" (have: " + known + ")");
  }
  return parse_scenario_text(it->second);
}

ScenarioObjects build_scenario(const ScenarioConfig& config) {
  ScenarioObjects objects;
  const int n = config.n_subdomains();

  switch (config.geometry.kind) {
    case GeometryConfig::Kind::interval: {
      auto mesh = std::make_shared<PartitionedMesh>(build_mesh_1d(
          config.geometry.breakpoints, config.geometry.cells_per_subdomain,
          config.geometry.membranes_1d, config.geometry.outer_tau_1d));
      auto coeff = std::make_shared<CoefficientField>(
          subdomain_coefficients(*mesh, config.a, config.c));
      objects.measured = measure_geometry(*mesh, *coeff);
      objects.mesh = std::move(mesh);
      objects.coeff = std::move(coeff);
      break;
    }
    case GeometryConfig::Kind::rectangles: {
      auto mesh = std::make_shared<PartitionedMesh>(build_mesh_2d(
          config.geometry.rectangles, config.geometry.h,
          config.geometry.membranes_2d, config.geometry.outer_tau_2d));
      auto coeff = std::make_shared<CoefficientField>(
          subdomain_coefficients(*mesh, config.a, config.c));
      objects.measured = measure_geometry(*mesh, *coeff);
      objects.mesh = std::move(mesh);
      objects.coeff = std::move(coeff);
      break;
    }
    case GeometryConfig::Kind::measured: {
      objects.measured = measured_geometry_direct(
          config.geometry.n, config.geometry.lambda, config.geometry.rho,
          config.geometry.varrho, config.geometry.cbar);
      break;
    }
  }
  objects.chain = build_chain(objects.measured);

  // initial datum in H0 coordinates, and as a field when there is a mesh
  Vector z0 = Vector::Zero(n);
  switch (config.initial.kind) {
    case InitialConfig::Kind::indicator:
      for (int k : config.initial.subdomains) z0[k - 1] = 1.0;
      break;
    case InitialConfig::Kind::constant:
      z0.setConstant(config.initial.value);
      break;
    case InitialConfig::Kind::per_subdomain:
      z0 = to_vector(config.initial.values);
      break;
    case InitialConfig::Kind::cells:
      break;  // handled below, needs the mesh
  }

  if (objects.mesh) {
    if (config.initial.kind == InitialConfig::Kind::cells) {
      if (static_cast<Index>(config.initial.values.size()) !=
          objects.mesh->n_cells()) {
        throw ConfigError("per-cell initial datum needs one value per cell");
      }
      objects.u0_field = to_vector(config.initial.values);
      objects.z0 = project(*objects.mesh, objects.u0_field);
    } else {
      objects.u0_field = expand(*objects.mesh, {z0, MassKind::average});
      objects.z0 = {z0, MassKind::average};
    }
  } else {
    if (config.initial.kind == InitialConfig::Kind::cells) {
      throw ConfigError("per-cell initial data need a mesh-backed geometry");
    }
    objects.z0 = {z0, MassKind::average};
  }

  objects.source_h0 = Vector::Zero(n);
  if (config.source.kind == SourceConfig::Kind::per_subdomain) {
    objects.source_h0 = to_vector(config.source.values);
    objects.has_source = true;
  }
  return objects;
}

}  // namespace membrane
