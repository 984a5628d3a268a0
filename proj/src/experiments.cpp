#include "membrane/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

namespace membrane {

namespace {

namespace fs = std::filesystem;

std::ofstream open_csv(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / name;
  std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
  if (!out) throw ConfigError("cannot open output file " + path.string());
  return out;
}

std::string format_kappa(double kappa) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%g", kappa);
  return buffer;
}

/// Run fn(i) for i in [0, count) on up to `workers` threads.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

FieldSourceFn make_field_source(const ScenarioObjects& objects) {
  if (!objects.has_source) return {};
  const Vector field = expand(*objects.mesh, {objects.source_h0, MassKind::average});
  return [field](double) { return field; };
}

SourceFn make_h0_source(const ScenarioObjects& objects) {
  if (!objects.has_source) return {};
  const Vector values = objects.source_h0;
  return [values](double) { return values; };
}

void require_mesh(const ScenarioObjects& objects, const std::string& what) {
  if (!objects.mesh) {
    throw ConfigError(what + " needs a mesh-backed geometry; "
                      "measured scenarios support the limit subcommand only");
  }
}

void print_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << name << " =\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      os << (c ? " " : "  ") << format_g17(m(r, c));
    }
    os << "\n";
  }
}

}  // namespace

int resolve_worker_count() {
  if (const char* env = std::getenv("MEMBRANE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<int>(std::min<long>(n, 64));
    throw ConfigError("MEMBRANE_THREADS must be a positive integer");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

std::string format_g17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

AssembledPair assemble_checked(const ScenarioObjects& objects, double kappa) {
  AssembledPair pair{assemble(objects.mesh, objects.coeff, kappa, Orientation::backward),
                     assemble(objects.mesh, objects.coeff, kappa, Orientation::forward)};
  const GeneratorInvariantReport report =
      check_generator_pair(pair.backward, pair.forward);
  if (report.conservative && report.kernel_residual > 1e-12) {
    throw NumericalError("backward generator does not preserve constants");
  }
  if (report.conservative && report.mass_residual > 1e-12) {
    throw NumericalError("forward generator does not conserve mass");
  }
  if (report.duality_gap > 1e-12) {
    throw NumericalError("V L_forward != L_backward^T V beyond 1e-12");
  }
  if (report.min_accretive < -1e-9) {
    throw NumericalError("backward generator fails the accretivity probe");
  }
  return pair;
}

const GeneratorMatrix& oriented(const AssembledPair& pair, Orientation orientation) {
  return orientation == Orientation::backward ? pair.backward : pair.forward;
}

std::vector<KappaRun> sweep_pde(const ScenarioConfig& config,
                                const ScenarioObjects& objects, int workers) {
  require_mesh(objects, "a PDE sweep");
  const int count = static_cast<int>(config.kappa.size());
  std::vector<KappaRun> runs(count);
  const FieldSourceFn source = make_field_source(objects);
  parallel_for(count, workers, [&](int i) {
    const double kappa = config.kappa[static_cast<std::size_t>(i)];
    try {
      const AssembledPair pair = assemble_checked(objects, kappa);
      runs[static_cast<std::size_t>(i)].kappa = kappa;
      runs[static_cast<std::size_t>(i)].evolution =
          evolve(oriented(pair, config.orientation), objects.u0_field,
                 config.times, config.solver.effective_dt(kappa),
                 config.solver.scheme, source);
    } catch (const NumericalError& e) {
      throw NumericalError("kappa=" + format_kappa(kappa) + ", t in [0," +
                           format_kappa(config.times.back()) + "]: " + e.what());
    }
  });
  return runs;
}

std::vector<ConvergenceRow> convergence_table(const ScenarioConfig& config,
                                              const ScenarioObjects& objects,
                                              int workers) {
  require_mesh(objects, "a convergence run");
  if (config.kappa.size() < 2) {
    throw ConfigError("a convergence run needs at least two kappa values");
  }

  const std::vector<MassVector> limit = evolve_limit(
      objects.chain, objects.z0, make_h0_source(objects), config.times,
      config.orientation);
  std::vector<Vector> limit_fields;
  limit_fields.reserve(limit.size());
  for (const auto& z : limit) limit_fields.push_back(expand(*objects.mesh, z));

  // limit resolvent at lambda = 1: (I - G) w = P u0
  const Matrix g = objects.chain.generator(config.orientation);
  const Matrix lhs = Matrix::Identity(g.rows(), g.cols()) - g;
  const Vector w = lhs.partialPivLu().solve(objects.z0.values);
  const Vector limit_resolvent = expand(*objects.mesh, {w, MassKind::average});

  const std::vector<KappaRun> runs = sweep_pde(config, objects, workers);

  std::vector<ConvergenceRow> table;
  std::vector<double> resolvent_distance(runs.size());
  parallel_for(static_cast<int>(runs.size()), workers, [&](int i) {
    const AssembledPair pair = assemble_checked(objects, runs[i].kappa);
    const Vector u = resolve(oriented(pair, config.orientation), 1.0, objects.u0_field);
    resolvent_distance[i] = lp_distance(*objects.mesh, u, limit_resolvent, LpNorm::l2);
  });

  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t ti = 0; ti < config.times.size(); ++ti) {
      ConvergenceRow row;
      row.kappa = runs[i].kappa;
      row.t = config.times[ti];
      const Vector& u = runs[i].evolution.states[ti];
      row.e_l1 = lp_distance(*objects.mesh, u, limit_fields[ti], LpNorm::l1);
      row.e_l2 = lp_distance(*objects.mesh, u, limit_fields[ti], LpNorm::l2);
      row.e_linf = lp_distance(*objects.mesh, u, limit_fields[ti], LpNorm::linf);
      row.e_resolvent = resolvent_distance[i];
      table.push_back(row);
    }
  }
  return table;
}

void run_scenario(const ScenarioConfig& config, const std::string& out_dir,
                  int workers) {
  const ScenarioObjects objects = build_scenario(config);
  require_mesh(objects, "simulate");
  const std::vector<KappaRun> runs = sweep_pde(config, objects, workers);
  const PartitionedMesh& mesh = *objects.mesh;

  for (const auto& run : runs) {
    auto out = open_csv(out_dir, "snapshots_k" + format_kappa(run.kappa) + ".csv");
    out << (mesh.dimension == 1 ? "t,x,subdomain,u" : "t,x,y,subdomain,u") << "\n";
    for (std::size_t ti = 0; ti < run.evolution.times.size(); ++ti) {
      const Vector& u = run.evolution.states[ti];
      for (Index i = 0; i < mesh.n_cells(); ++i) {
        out << format_g17(run.evolution.times[ti]) << ","
            << format_g17(mesh.cell_centers(i, 0)) << ",";
        if (mesh.dimension == 2) out << format_g17(mesh.cell_centers(i, 1)) << ",";
        out << mesh.cell_subdomain[i] << "," << format_g17(u[i]) << "\n";
      }
    }
  }

  auto masses = open_csv(out_dir, "masses.csv");
  masses << "kappa,t";
  for (int k = 1; k <= mesh.n_subdomains; ++k) masses << ",v_" << k;
  masses << "\n";
  for (const auto& run : runs) {
    for (std::size_t ti = 0; ti < run.evolution.times.size(); ++ti) {
      const Vector v = subdomain_masses(mesh, run.evolution.states[ti]);
      masses << format_g17(run.kappa) << "," << format_g17(run.evolution.times[ti]);
      for (Index k = 0; k < v.size(); ++k) masses << "," << format_g17(v[k]);
      masses << "\n";
    }
  }
}

bool run_convergence(const ScenarioConfig& config, const std::string& out_dir,
                     int workers) {
  const ScenarioObjects objects = build_scenario(config);
  const std::vector<ConvergenceRow> table =
      convergence_table(config, objects, workers);

  auto out = open_csv(out_dir, "convergence.csv");
  out << "kappa,t,e_L1,e_L2,e_Linf,e_resolvent\n";
  for (const auto& row : table) {
    out << format_g17(row.kappa) << "," << format_g17(row.t) << ","
        << format_g17(row.e_l1) << "," << format_g17(row.e_l2) << ","
        << format_g17(row.e_linf) << "," << format_g17(row.e_resolvent) << "\n";
  }

  // monotonicity at the final requested time
  const double t_last = config.times.back();
  std::vector<ConvergenceRow> last;
  for (const auto& row : table) {
    if (row.t == t_last) last.push_back(row);
  }
  bool all_pass = true;
  auto check = [&](const std::string& name, auto getter) {
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < last.size(); ++i) {
      if (!(getter(last[i + 1]) < getter(last[i]))) decreasing = false;
    }
    std::cout << (decreasing ? "PASS" : "FAIL") << ": " << name
              << " strictly decreasing in kappa at t=" << format_kappa(t_last)
              << "\n";
    all_pass = all_pass && decreasing;
  };
  check("e_L1", [](const ConvergenceRow& r) { return r.e_l1; });
  check("e_L2", [](const ConvergenceRow& r) { return r.e_l2; });
  check("e_Linf", [](const ConvergenceRow& r) { return r.e_linf; });
  check("e_resolvent", [](const ConvergenceRow& r) { return r.e_resolvent; });
  for (std::size_t i = 0; i + 1 < last.size(); ++i) {
    std::cout << "INFO: e_L2(" << format_kappa(last[i + 1].kappa) << ")/e_L2("
              << format_kappa(last[i].kappa)
              << ") = " << format_g17(last[i + 1].e_l2 / last[i].e_l2) << "\n";
  }
  return all_pass;
}

void run_limit(const ScenarioConfig& config, const std::string& out_dir) {
  const ScenarioObjects objects = build_scenario(config);
  const std::vector<MassVector> trajectory = evolve_limit(
      objects.chain, objects.z0, make_h0_source(objects), config.times,
      config.orientation);

  print_matrix(std::cout, "Q", objects.chain.q);
  print_matrix(std::cout, "Q*", objects.chain.qstar);
  print_matrix(std::cout, "C", Matrix(objects.chain.c.asDiagonal()));
  std::cout << "mu =";
  for (Index k = 0; k < objects.chain.mu.size(); ++k) {
    std::cout << " " << format_g17(objects.chain.mu[k]);
  }
  std::cout << "\n";

  auto out = open_csv(out_dir, "limit.csv");
  out << "t";
  for (Index k = 1; k <= objects.chain.size(); ++k) out << ",z_" << k;
  out << "\n";
  for (std::size_t ti = 0; ti < trajectory.size(); ++ti) {
    out << format_g17(config.times[ti]);
    for (Index k = 0; k < trajectory[ti].values.size(); ++k) {
      out << "," << format_g17(trajectory[ti].values[k]);
    }
    out << "\n";
  }
}

McResult run_mc_scenario(const ScenarioConfig& config, double kappa, int workers) {
  if (!config.mc) throw ConfigError("scenario has no \"mc\" section");
  if (config.geometry.kind != GeometryConfig::Kind::interval) {
    throw ConfigError("mc runs need an interval geometry");
  }
  // The walk needs subdomain boundaries, not the PDE resolution: one cell
  // per subdomain keeps the step-width precondition independent of h.
  const int n = static_cast<int>(config.geometry.breakpoints.size()) - 1;
  const PartitionedMesh walk_mesh =
      build_mesh_1d(config.geometry.breakpoints, std::vector<int>(n, 1),
                    config.geometry.membranes_1d, config.geometry.outer_tau_1d);
  const CoefficientField coeff = subdomain_coefficients(walk_mesh, config.a, config.c);

  Vector density;
  switch (config.initial.kind) {
    case InitialConfig::Kind::indicator:
    case InitialConfig::Kind::constant:
    case InitialConfig::Kind::per_subdomain: {
      ScenarioObjects objects;  // reuse the H0 interpretation of the datum
      objects = build_scenario(config);
      density = expand(walk_mesh, objects.z0);
      break;
    }
    case InitialConfig::Kind::cells:
      throw ConfigError("mc initial data must be subdomain-resolved");
  }

  McOptions options;
  options.n_particles = config.mc->n_particles;
  options.dt = config.mc->dt;
  options.seed = config.seed;
  options.workers = workers;
  return simulate(walk_mesh, coeff, kappa, density, config.times, options);
}

void run_mc(const ScenarioConfig& config, const std::string& out_dir, int workers) {
  for (double kappa : config.kappa) {
    const McResult result = run_mc_scenario(config, kappa, workers);
    auto out = open_csv(out_dir, "occupancy_k" + format_kappa(kappa) + ".csv");
    const Index n = result.occupancy.cols();
    out << "t";
    for (Index k = 1; k <= n; ++k) out << ",occ_" << k;
    for (Index k = 1; k <= n; ++k) out << ",se_" << k;
    out << "\n";
    for (std::size_t ti = 0; ti < result.times.size(); ++ti) {
      out << format_g17(result.times[ti]);
      for (Index k = 0; k < n; ++k) {
        out << "," << format_g17(result.occupancy(static_cast<Index>(ti), k));
      }
      for (Index k = 0; k < n; ++k) {
        out << "," << format_g17(result.standard_error(static_cast<Index>(ti), k));
      }
      out << "\n";
    }
  }
}

}  // namespace membrane
