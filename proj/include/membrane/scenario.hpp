#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "membrane/fv_solver.hpp"
#include "membrane/geometry.hpp"
#include "membrane/limit_chain.hpp"
#include "membrane/types.hpp"

namespace membrane {

struct GeometryConfig {
  enum class Kind { interval, rectangles, measured };
  Kind kind = Kind::interval;

  // interval
  std::vector<double> breakpoints;
  std::vector<int> cells_per_subdomain;
  std::vector<MembraneSpec1d> membranes_1d;
  std::pair<double, double> outer_tau_1d{0.0, 0.0};

  // rectangles
  double h = 0.0;
  std::vector<Rectangle> rectangles;
  std::vector<MembraneSpec2d> membranes_2d;
  std::vector<double> outer_tau_2d;

  // measured
  int n = 0;
  Vector lambda;
  Matrix rho;
  Matrix varrho;
  Vector cbar;
};

struct InitialConfig {
  enum class Kind { indicator, constant, per_subdomain, cells };
  Kind kind = Kind::indicator;
  std::vector<int> subdomains;  // indicator
  double value = 1.0;           // constant
  std::vector<double> values;   // per_subdomain or cells
};

struct SourceConfig {
  enum class Kind { none, per_subdomain };
  Kind kind = Kind::none;
  std::vector<double> values;
};

struct SolverConfig {
  Scheme scheme = Scheme::crank_nicolson;
  double dt = 1e-3;
  double dt_per_kappa = 0.0;  // when > 0, the step is min(dt, dt_per_kappa/kappa)

  double effective_dt(double kappa) const {
    return dt_per_kappa > 0.0 ? std::min(dt, dt_per_kappa / kappa) : dt;
  }
};

struct McConfig {
  long n_particles = 0;
  double dt = 0.0;
};

/// One validated scenario document (JSON schema "membrane-scenario/1").
struct ScenarioConfig {
  std::string name;
  GeometryConfig geometry;
  std::vector<double> a;  // per subdomain; empty for measured geometries
  std::vector<double> c;
  std::vector<double> kappa;
  Orientation orientation = Orientation::forward;
  InitialConfig initial;
  SourceConfig source;
  std::vector<double> times;
  SolverConfig solver;
  std::optional<McConfig> mc;
  std::uint64_t seed = 0;
  std::string output = "out";

  int n_subdomains() const;
};

ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

/// Presets compiled into the binary; they go through the same JSON
/// parser and validation as user files.
std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);

/// The scenario instantiated: mesh (absent for measured geometries),
/// measured data, limit chain, and initial/source data both as fields
/// and in H0 coordinates.
struct ScenarioObjects {
  std::shared_ptr<const PartitionedMesh> mesh;
  std::shared_ptr<const CoefficientField> coeff;
  MeasuredGeometry measured;
  LimitChain chain;
  Vector u0_field;    // empty when there is no mesh
  MassVector z0;      // averages
  Vector source_h0;   // zero when no source
  bool has_source = false;
};

ScenarioObjects build_scenario(const ScenarioConfig& config);

}  // namespace membrane
