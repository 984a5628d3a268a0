#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "membrane/geometry.hpp"
#include "membrane/limit_chain.hpp"
#include "membrane/types.hpp"

namespace membrane {

/// Discrete generator of the diffusion semigroup at speed kappa.
/// Backward carries the transmission law N_k(u) = -tau_k (u_k - b_kl u_l),
/// forward its adjoint N_k(u) = -(tau_k u_k - tau_l b_lk u_l); the two
/// matrices satisfy V L_forward = L_backward^T V with V = diag(volumes).
struct GeneratorMatrix {
  SparseMatrix matrix;
  Orientation orientation = Orientation::backward;
  double kappa = 1.0;
  std::shared_ptr<const PartitionedMesh> mesh;
  std::shared_ptr<const CoefficientField> coeff;
};

GeneratorMatrix assemble(std::shared_ptr<const PartitionedMesh> mesh,
                         std::shared_ptr<const CoefficientField> coeff,
                         double kappa, Orientation orientation);

enum class Scheme { implicit_euler, crank_nicolson };

struct EvolveResult {
  std::vector<double> times;
  std::vector<Vector> states;
};

using FieldSourceFn = std::function<Vector(double)>;

/// Theta scheme (I - theta dt L) u' = (I + (1-theta) dt L) u + dt f(t+theta dt),
/// stepping through the strictly increasing output times with step <= dt.
/// Every linear solve is checked to relative residual 1e-10.
EvolveResult evolve(const GeneratorMatrix& gen, const Vector& u0,
                    const std::vector<double>& output_times, double dt,
                    Scheme scheme, const FieldSourceFn& source = {});

/// Solve (lambda I - L) u = f to relative residual 1e-10.
Vector resolve(const GeneratorMatrix& gen, double lambda, const Vector& f);

/// Membrane/outer boundary traces obtained by the local elimination the
/// assembler uses; indexed like mesh.membrane_faces / mesh.outer_faces.
struct TraceSet {
  Vector membrane_left;
  Vector membrane_right;
  Vector outer;
};

TraceSet eliminate_traces(const PartitionedMesh& mesh,
                          const CoefficientField& coeff, double kappa,
                          Orientation orientation, const Vector& u);

/// Discrete sesquilinear form a_kappa[u, v]: gradient energy over faces
/// (including the half-cell pieces next to membranes), the potential term,
/// and the membrane term tau_k (u_k - b u_l) v_k.  Equals -<L_backward u, v>_V
/// when u's traces come from the backward elimination.
double evaluate_form(const PartitionedMesh& mesh, const CoefficientField& coeff,
                     double kappa, const Vector& u, const TraceSet& u_traces,
                     const Vector& v, const TraceSet& v_traces);

enum class LpNorm { l1, l2, linf };

/// Volume-weighted discrete L^p distance between two fields on one mesh.
double lp_distance(const PartitionedMesh& mesh, const Vector& u,
                   const Vector& v, LpNorm p);

/// Residuals of the structural identities of a backward/forward pair,
/// each scaled by the magnitude of the data entering it.
struct GeneratorInvariantReport {
  double kernel_residual = 0.0;    // |L_b 1|_inf / |L_b|_inf (conservative case)
  double mass_residual = 0.0;      // |1^T V L_f|_inf / |V L_f|_max (conservative)
  double duality_gap = 0.0;        // max |V L_f - L_b^T V| / max entry
  double min_accretive = 0.0;      // min over probes of <-L_b u, u>_V / |u|_V^2
  bool conservative = false;
};

GeneratorInvariantReport check_generator_pair(const GeneratorMatrix& backward,
                                              const GeneratorMatrix& forward,
                                              int n_probes = 8,
                                              unsigned seed = 1234);

/// Total mass per subdomain, v_k = sum over cells of u * volume.
Vector subdomain_masses(const PartitionedMesh& mesh, const Vector& u);

}  // namespace membrane
