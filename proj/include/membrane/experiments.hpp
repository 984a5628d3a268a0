#pragma once

#include <string>
#include <vector>

#include "membrane/mc_particle.hpp"
#include "membrane/scenario.hpp"

namespace membrane {

/// Worker count from MEMBRANE_THREADS, falling back to the hardware.
int resolve_worker_count();

/// Floating-point formatting used in every CSV: 17 significant digits,
/// so files are byte-stable for a fixed config and seed.
std::string format_g17(double value);

/// Backward/forward pair at one kappa with the structural identities
/// (constants kernel, mass conservation, discrete duality) verified.
struct AssembledPair {
  GeneratorMatrix backward;
  GeneratorMatrix forward;
};

AssembledPair assemble_checked(const ScenarioObjects& objects, double kappa);

const GeneratorMatrix& oriented(const AssembledPair& pair, Orientation orientation);

struct KappaRun {
  double kappa = 0.0;
  EvolveResult evolution;
};

/// Evolve the PDE for every kappa in the list (concurrently up to
/// `workers`), with the scenario's source and dt rule.
std::vector<KappaRun> sweep_pde(const ScenarioConfig& config,
                                const ScenarioObjects& objects, int workers);

struct ConvergenceRow {
  double kappa = 0.0;
  double t = 0.0;
  double e_l1 = 0.0;
  double e_l2 = 0.0;
  double e_linf = 0.0;
  double e_resolvent = 0.0;
};

/// L^p distances between the PDE trajectory and the expanded limit
/// trajectory, plus the resolvent distance at lambda = 1.
std::vector<ConvergenceRow> convergence_table(const ScenarioConfig& config,
                                              const ScenarioObjects& objects,
                                              int workers);

void run_scenario(const ScenarioConfig& config, const std::string& out_dir,
                  int workers);

/// Returns true when every monotonicity criterion passed.
bool run_convergence(const ScenarioConfig& config, const std::string& out_dir,
                     int workers);

void run_limit(const ScenarioConfig& config, const std::string& out_dir);

McResult run_mc_scenario(const ScenarioConfig& config, double kappa, int workers);

void run_mc(const ScenarioConfig& config, const std::string& out_dir, int workers);

}  // namespace membrane
