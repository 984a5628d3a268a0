// Acceptance suite: runs every shipped criterion end to end and prints
// one PASS/FAIL line per criterion.  Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "membrane/experiments.hpp"
#include "membrane/mc_particle.hpp"
#include "membrane/scenario.hpp"

using namespace membrane;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %2d %s (%s)\n", ok ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::vector<double> dense_grid(double t_end, double dt) {
  std::vector<double> times;
  const long n = std::lround(t_end / dt);
  for (long k = 1; k <= n; ++k) times.push_back(dt * static_cast<double>(k));
  return times;
}

const std::vector<std::string> kMeshPresets = {"figure1", "figure1-mc", "kinase1d",
                                               "square2d", "killing1d"};

void criterion1_figure1_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  ScenarioConfig config = preset("figure1");
  const ScenarioObjects objects = build_scenario(config);
  const GeneratorMatrix forward =
      assemble(objects.mesh, objects.coeff, 10.0, Orientation::forward);
  const std::vector<double> times = dense_grid(6.0, 1e-3);
  const EvolveResult run = evolve(forward, objects.u0_field, times, 1e-3,
                                  Scheme::crank_nicolson);
  double worst = std::abs(1.0 - (1.0 / 3.0 + 2.0 / 3.0));  // t = 0
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const double v_minus = subdomain_masses(*objects.mesh, run.states[i])[0];
    const double limit = 1.0 / 3.0 + (2.0 / 3.0) * std::exp(-run.times[i]);
    worst = std::max(worst, std::abs(v_minus - limit));
  }
  const double elapsed = seconds_since(start);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "sup_t |v_- - limit| = %.3g <= 0.02, runtime %.1fs <= 10s", worst,
                elapsed);
  report(1, "two-interval mass curve matches the two-state chain",
         worst <= 0.02 && elapsed <= 10.0, detail);
}

void criterion2_limit_matrix_exactness() {
  // mesh route with dyadic cells, so every measured quantity is exact
  const PartitionedMesh mesh = build_mesh_1d(
      {-1.0, 0.0, 1.0}, {2, 2}, {{2.0 / 3.0, 1.0 / 3.0, 1.0, 1.0}}, {0.0, 0.0});
  const CoefficientField coeff = subdomain_coefficients(mesh, {1.0, 1.0}, {0.0, 0.0});
  const LimitChain from_mesh = build_chain(measure_geometry(mesh, coeff));

  Matrix rho = Matrix::Zero(2, 3);
  rho(0, 2) = 2.0 / 3.0;
  rho(1, 1) = 1.0 / 3.0;
  Matrix varrho = Matrix::Zero(2, 2);
  varrho(0, 1) = 2.0 / 3.0;
  varrho(1, 0) = 1.0 / 3.0;
  const LimitChain direct = build_chain(
      measured_geometry_direct(2, Vector::Ones(2), rho, varrho, Vector::Zero(2)));

  Matrix expected(2, 2);
  expected << -(2.0 / 3.0), 2.0 / 3.0, 1.0 / 3.0, -(1.0 / 3.0);
  const bool mesh_exact = (from_mesh.q.array() == expected.array()).all();
  const bool direct_exact = (direct.q.array() == expected.array()).all();

  const ScenarioObjects kinase = build_scenario(preset("kinase"));
  const double q = -kinase.chain.q(0, 0);
  const double rel = std::abs(q - 1.5) / 1.5;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "Q bit-exact (mesh %d, direct %d), |q - 3aC|/3aC = %.3g <= 1e-14",
                mesh_exact, direct_exact, rel);
  report(2, "limit matrices from rational inputs are exact",
         mesh_exact && direct_exact && rel <= 1e-14, detail);
}

void criterion3_structure_goldens() {
  const ScenarioObjects neuro = build_scenario(preset("neuro"));
  Matrix neuro_expected(3, 3);
  neuro_expected << -1.5, 1.0, 0.0, 0.375, -0.625, 0.25, 0.0, 0.375, -0.375;
  const double neuro_gap = (neuro.chain.q - neuro_expected).cwiseAbs().maxCoeff();
  const bool neuro_zeros = neuro.chain.q(0, 2) == 0.0 && neuro.chain.q(2, 0) == 0.0;

  const ScenarioObjects calcium = build_scenario(preset("calcium"));
  Matrix calcium_expected(3, 3);
  calcium_expected << -0.48, 0.0, 0.72, 0.0, -0.64, 1.12, 0.12, 0.08, -0.38;
  const double calcium_gap =
      (calcium.chain.qstar - calcium_expected).cwiseAbs().maxCoeff();
  const bool calcium_zeros =
      calcium.chain.qstar(0, 1) == 0.0 && calcium.chain.qstar(1, 0) == 0.0;

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "|Q_neuro - golden| = %.3g, |Q*_calcium - golden| = %.3g <= 1e-12",
                neuro_gap, calcium_gap);
  report(3, "pool and store chains match their hand-computed matrices",
         neuro_gap <= 1e-12 && calcium_gap <= 1e-12 && neuro_zeros && calcium_zeros,
         detail);
}

void criterion4_conservation_duality() {
  bool ok = true;
  double worst_gap = 0.0;
  for (const std::string& name : kMeshPresets) {
    const ScenarioConfig config = preset(name);
    const ScenarioObjects objects = build_scenario(config);
    for (double kappa : config.kappa) {
      const GeneratorMatrix backward =
          assemble(objects.mesh, objects.coeff, kappa, Orientation::backward);
      const GeneratorMatrix forward =
          assemble(objects.mesh, objects.coeff, kappa, Orientation::forward);
      const GeneratorInvariantReport r = check_generator_pair(backward, forward);
      if (r.conservative) {
        ok = ok && r.kernel_residual <= 1e-12 && r.mass_residual <= 1e-12;
        worst_gap = std::max({worst_gap, r.kernel_residual, r.mass_residual});
      }
      ok = ok && r.duality_gap <= 1e-12;
      worst_gap = std::max(worst_gap, r.duality_gap);
    }
  }

  std::mt19937 rng(271828);
  std::normal_distribution<double> normal;
  double worst_adjoint = 0.0;
  bool row_sums_ok = true;
  std::vector<std::string> all = kMeshPresets;
  all.insert(all.end(), {"kinase", "neuro", "calcium"});
  for (const std::string& name : all) {
    const ScenarioObjects objects = build_scenario(preset(name));
    const LimitChain& chain = objects.chain;
    const int n = static_cast<int>(chain.size());
    const double scale = std::max(1.0, chain.q.cwiseAbs().maxCoeff());
    for (int pair = 0; pair < 100; ++pair) {
      Vector x(n), y(n);
      for (int k = 0; k < n; ++k) {
        x[k] = normal(rng);
        y[k] = normal(rng);
      }
      const double gap = std::abs(mu_inner(chain.q * x, y, chain.mu) -
                                  mu_inner(x, chain.qstar * y, chain.mu)) /
                         scale;
      worst_adjoint = std::max(worst_adjoint, gap);
    }
    row_sums_ok =
        row_sums_ok && chain.q.rowwise().sum().maxCoeff() <= 1e-14 * scale;
  }
  // conservative chain: row sums exactly zero
  const ScenarioObjects figure1 = build_scenario(preset("figure1"));
  row_sums_ok = row_sums_ok &&
                figure1.chain.q.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-15;

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "worst generator residual %.3g, worst mu-adjoint gap %.3g <= 1e-12",
                worst_gap, worst_adjoint);
  report(4, "conservation, duality and adjointness on every scenario",
         ok && worst_adjoint <= 1e-12 && row_sums_ok, detail);
}

void criterion5_convergence_suite() {
  const auto start = std::chrono::steady_clock::now();
  ScenarioConfig config = preset("figure1");
  config.kappa = {1.0, 10.0, 100.0, 1000.0};
  config.times = {1.0};
  const ScenarioObjects objects = build_scenario(config);
  const int workers = resolve_worker_count();
  const auto table = convergence_table(config, objects, workers);

  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    decreasing = decreasing && table[i + 1].e_l1 < table[i].e_l1 &&
                 table[i + 1].e_l2 < table[i].e_l2 &&
                 table[i + 1].e_linf < table[i].e_linf &&
                 table[i + 1].e_resolvent < table[i].e_resolvent;
  }
  const double ratio1 = table[2].e_l2 / table[1].e_l2;
  const double ratio2 = table[3].e_l2 / table[2].e_l2;
  const double elapsed = seconds_since(start);
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "e_L2 = {%.2e, %.2e, %.2e, %.2e}, last ratios %.3f, %.3f <= 0.3, "
                "runtime %.1fs <= 60s",
                table[0].e_l2, table[1].e_l2, table[2].e_l2, table[3].e_l2, ratio1,
                ratio2, elapsed);
  report(5, "errors against the limit shrink monotonically in kappa",
         decreasing && ratio1 <= 0.3 && ratio2 <= 0.3 && elapsed <= 60.0, detail);
}

void criterion6_positivity_contractivity() {
  const ScenarioObjects objects = build_scenario(preset("figure1"));
  const GeneratorMatrix forward =
      assemble(objects.mesh, objects.coeff, 10.0, Orientation::forward);
  const std::vector<double> times = dense_grid(1.0, 1e-3);
  const EvolveResult run = evolve(forward, objects.u0_field, times, 1e-3,
                                  Scheme::implicit_euler);
  double min_u = 0.0, max_u = 1.0;
  for (const auto& state : run.states) {
    min_u = std::min(min_u, state.minCoeff());
    max_u = std::max(max_u, state.maxCoeff());
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "min u = %.3g >= -1e-13, max u = %.17g <= 1 + 1e-13",
                min_u, max_u);
  report(6, "implicit Euler forward evolution stays in [0, 1]",
         min_u >= -1e-13 && max_u <= 1.0 + 1e-13, detail);
}

void criterion7_form_operator_identity() {
  std::mt19937 rng(161803);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst_identity = 0.0;
  double worst_negative = 0.0;
  for (const std::string& name : kMeshPresets) {
    const ScenarioConfig config = preset(name);
    const ScenarioObjects objects = build_scenario(config);
    const PartitionedMesh& mesh = *objects.mesh;
    const CoefficientField& coeff = *objects.coeff;
    const double kappa = config.kappa.front();
    const GeneratorMatrix backward =
        assemble(objects.mesh, objects.coeff, kappa, Orientation::backward);
    for (int pair = 0; pair < 50; ++pair) {
      Vector u(mesh.n_cells()), v(mesh.n_cells());
      for (Index i = 0; i < mesh.n_cells(); ++i) {
        u[i] = unif(rng);
        v[i] = unif(rng);
      }
      const TraceSet ut =
          eliminate_traces(mesh, coeff, kappa, Orientation::backward, u);
      const TraceSet vt =
          eliminate_traces(mesh, coeff, kappa, Orientation::backward, v);
      const double form = evaluate_form(mesh, coeff, kappa, u, ut, v, vt);
      const double pairing =
          (backward.matrix * u).cwiseProduct(mesh.cell_volumes).dot(v);
      worst_identity = std::max(
          worst_identity, std::abs(form + pairing) / std::max(1.0, std::abs(form)));
      const double quad = evaluate_form(mesh, coeff, kappa, u, ut, u, ut);
      worst_negative =
          std::min(worst_negative, quad / std::max(1.0, std::abs(quad)));
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |a[u,v] + <Lu,v>_V|/scale = %.3g <= 1e-10, min Re a[u,u] "
                ">= %.3g >= -1e-12",
                worst_identity, worst_negative);
  report(7, "discrete form matches the backward operator and is accretive",
         worst_identity <= 1e-10 && worst_negative >= -1e-12, detail);
}

void criterion8_averaging_sanity() {
  auto mesh = std::make_shared<PartitionedMesh>(
      build_mesh_1d({0.0, 1.0}, {200}, {}, {0.0, 0.0}));
  auto coeff = std::make_shared<CoefficientField>(
      subdomain_coefficients(*mesh, {1.0}, {0.0}));
  const GeneratorMatrix gen = assemble(mesh, coeff, 1.0, Orientation::backward);
  Vector u0 = Vector::Zero(mesh->n_cells());
  u0.head(100).setConstant(1.0);
  const EvolveResult run = evolve(gen, u0, {6.0}, 1e-3, Scheme::crank_nicolson);
  const double gap = (run.states[0].array() - 0.5).abs().maxCoeff();
  char detail[120];
  std::snprintf(detail, sizeof(detail), "|u(6) - mean(u0)|_inf = %.3g <= 1e-3", gap);
  report(8, "fast diffusion averages a Neumann box", gap <= 1e-3, detail);
}

void criterion9_monte_carlo() {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioConfig config = preset("figure1-mc");
  const int workers = resolve_worker_count();
  const McResult mc = run_mc_scenario(config, 1.0, workers);
  const McResult rerun = run_mc_scenario(config, 1.0, workers);
  const bool deterministic =
      (mc.occupancy.array() == rerun.occupancy.array()).all();

  const ScenarioObjects objects = build_scenario(config);
  const GeneratorMatrix forward =
      assemble(objects.mesh, objects.coeff, 1.0, Orientation::forward);
  Vector density = objects.u0_field;
  density /= subdomain_masses(*objects.mesh, density).sum();
  const EvolveResult pde = evolve(forward, density, config.times, 5e-4,
                                  Scheme::crank_nicolson);
  bool within = true;
  double worst_pull = 0.0;
  for (std::size_t ti = 0; ti < config.times.size(); ++ti) {
    const double oracle =
        subdomain_masses(*objects.mesh, pde.states[ti])[0];
    const double gap =
        std::abs(mc.occupancy(static_cast<Index>(ti), 0) - oracle);
    const double se = mc.standard_error(static_cast<Index>(ti), 0);
    within = within && gap <= 3.0 * se;
    worst_pull = std::max(worst_pull, gap / se);
  }
  const double elapsed = seconds_since(start);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |occ - pde|/se = %.2f <= 3, bit-identical rerun %d, "
                "runtime %.0fs <= 120s",
                worst_pull, deterministic, elapsed);
  report(9, "particle occupancy matches the forward PDE",
         within && deterministic && elapsed <= 120.0, detail);
}

void criterion10_inhomogeneous_limit() {
  const ScenarioConfig kinase = preset("kinase");
  const ScenarioObjects objects = build_scenario(kinase);
  const double q = -objects.chain.q(0, 0);
  const SourceFn source = [&](double) { return objects.source_h0; };
  const auto trajectory = evolve_limit(objects.chain, objects.z0, source,
                                       kinase.times, Orientation::backward);
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < kinase.times.size(); ++i) {
    const double expected =
        q / (q + 1.0) * (1.0 - std::exp(-(q + 1.0) * kinase.times[i]));
    worst_rel = std::max(
        worst_rel, std::abs(trajectory[i].values[0] - expected) / expected);
  }

  ScenarioConfig sweep = preset("kinase1d");
  const ScenarioObjects sweep_objects = build_scenario(sweep);
  const auto table = convergence_table(sweep, sweep_objects, resolve_worker_count());
  const bool decreasing =
      table[1].e_l2 < table[0].e_l2 && table[2].e_l2 < table[1].e_l2;

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "limit vs closed form rel err %.3g <= 1e-8, PDE sweep e_L2 = "
                "{%.2e, %.2e, %.2e} decreasing",
                worst_rel, table[0].e_l2, table[1].e_l2, table[2].e_l2);
  report(10, "driven scalar limit matches the closed form and its PDE sweep",
         worst_rel <= 1e-8 && decreasing, detail);
}

}  // namespace

int main() {
  criterion1_figure1_reproduction();
  criterion2_limit_matrix_exactness();
  criterion3_structure_goldens();
  criterion4_conservation_duality();
  criterion5_convergence_suite();
  criterion6_positivity_contractivity();
  criterion7_form_operator_identity();
  criterion8_averaging_sanity();
  criterion9_monte_carlo();
  criterion10_inhomogeneous_limit();
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures;
}
