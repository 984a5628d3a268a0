#include "membrane/fv_solver.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <random>
#include <vector>

namespace membrane {

namespace {

/// Traces of a membrane face as linear functions of the adjacent cell
/// values: g_left = gl_ul u_L + gl_ur u_R, g_right = gr_ul u_L + gr_ur u_R.
struct MembraneElimination {
  double gl_ul, gl_ur, gr_ul, gr_ur;
};

/// Solve the 2x2 system equating the one-sided diffusive fluxes
/// alpha (g - u_cell) to the membrane law of the chosen orientation.
MembraneElimination eliminate_membrane(const MembraneFace& f, double alpha_l,
                                       double alpha_r, Orientation orientation) {
  // backward: flux out of side k is -tau_k (g_k - b_kl g_l)
  // forward:  flux out of side k is -(tau_k g_k - tau_l b_lk g_l)
  const double coupling_l =
      (orientation == Orientation::backward) ? f.tau_left * f.b_left_right
                                             : f.tau_right * f.b_right_left;
  const double coupling_r =
      (orientation == Orientation::backward) ? f.tau_right * f.b_right_left
                                             : f.tau_left * f.b_left_right;
  const double dl = alpha_l + f.tau_left;
  const double dr = alpha_r + f.tau_right;
  const double det = dl * dr - coupling_l * coupling_r;
  if (!(det > 0.0)) {
    throw NumericalError("singular 2x2 trace system on a membrane face");
  }
  MembraneElimination e;
  e.gl_ul = dr * alpha_l / det;
  e.gl_ur = coupling_l * alpha_r / det;
  e.gr_ul = coupling_r * alpha_l / det;
  e.gr_ur = dl * alpha_r / det;
  return e;
}

double interior_transmissibility(const InteriorFace& f, const CoefficientField& c,
                                 double kappa) {
  const double half = 0.5 * f.dist;
  return kappa * f.area / (half / c.a[f.cell_a] + half / c.a[f.cell_b]);
}

double face_alpha(double kappa, double a, double dist) { return kappa * a / dist; }

}  // namespace

GeneratorMatrix assemble(std::shared_ptr<const PartitionedMesh> mesh,
                         std::shared_ptr<const CoefficientField> coeff,
                         double kappa, Orientation orientation) {
  if (!mesh || !coeff) throw ConfigError("assemble needs a mesh and coefficients");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  coeff->validate();
  if (coeff->a.size() != mesh->n_cells()) {
    throw ConfigError("coefficient field does not match the mesh");
  }

  const Index n = mesh->n_cells();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * static_cast<std::size_t>(n));

  for (const auto& f : mesh->interior_faces) {
    const double t = interior_transmissibility(f, *coeff, kappa);
    const double wa = t / mesh->cell_volumes[f.cell_a];
    const double wb = t / mesh->cell_volumes[f.cell_b];
    triplets.emplace_back(f.cell_a, f.cell_a, -wa);
    triplets.emplace_back(f.cell_a, f.cell_b, wa);
    triplets.emplace_back(f.cell_b, f.cell_b, -wb);
    triplets.emplace_back(f.cell_b, f.cell_a, wb);
  }

  for (const auto& f : mesh->membrane_faces) {
    const double alpha_l = face_alpha(kappa, coeff->a[f.cell_left], f.dist_left);
    const double alpha_r = face_alpha(kappa, coeff->a[f.cell_right], f.dist_right);
    const MembraneElimination e =
        eliminate_membrane(f, alpha_l, alpha_r, orientation);
    const double wl = f.area * alpha_l / mesh->cell_volumes[f.cell_left];
    const double wr = f.area * alpha_r / mesh->cell_volumes[f.cell_right];
    triplets.emplace_back(f.cell_left, f.cell_left, wl * (e.gl_ul - 1.0));
    triplets.emplace_back(f.cell_left, f.cell_right, wl * e.gl_ur);
    triplets.emplace_back(f.cell_right, f.cell_right, wr * (e.gr_ur - 1.0));
    triplets.emplace_back(f.cell_right, f.cell_left, wr * e.gr_ul);
  }

  for (const auto& f : mesh->outer_faces) {
    if (f.tau == 0.0) continue;  // Neumann
    const double alpha = face_alpha(kappa, coeff->a[f.cell], f.dist);
    const double w = f.area * alpha * f.tau / (alpha + f.tau);
    triplets.emplace_back(f.cell, f.cell, -w / mesh->cell_volumes[f.cell]);
  }

  for (Index i = 0; i < n; ++i) {
    if (coeff->c[i] != 0.0) triplets.emplace_back(i, i, -coeff->c[i]);
  }

  GeneratorMatrix gen;
  gen.matrix.resize(n, n);
  gen.matrix.setFromTriplets(triplets.begin(), triplets.end());
  gen.matrix.makeCompressed();
  gen.orientation = orientation;
  gen.kappa = kappa;
  gen.mesh = std::move(mesh);
  gen.coeff = std::move(coeff);
  return gen;
}

namespace {

class CheckedSolver {
 public:
  explicit CheckedSolver(const SparseMatrix& m) : m_(m) {
    Vector row_sums = Vector::Zero(m_.rows());
    for (int k = 0; k < m_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m_, k); it; ++it) {
        row_sums[it.row()] += std::abs(it.value());
      }
    }
    norm_ = row_sums.size() > 0 ? row_sums.maxCoeff() : 0.0;
    solver_.compute(m_);
    if (solver_.info() != Eigen::Success) {
      throw NumericalError("sparse factorization failed");
    }
  }

  /// Normwise backward error |Ax - b| / (|A| |x| + |b|) below 1e-10.
  Vector solve(const Vector& rhs) const {
    Vector x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) {
      throw NumericalError("sparse solve failed");
    }
    const double scale = norm_ * x.norm() + rhs.norm();
    const double residual = (m_ * x - rhs).norm();
    if (residual > 1e-10 * std::max(scale, 1e-300)) {
      throw NumericalError("linear solve residual above 1e-10");
    }
    return x;
  }

 private:
  SparseMatrix m_;
  Eigen::SparseLU<SparseMatrix> solver_;
  double norm_ = 0.0;
};

SparseMatrix identity_sparse(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

EvolveResult evolve(const GeneratorMatrix& gen, const Vector& u0,
                    const std::vector<double>& output_times, double dt,
                    Scheme scheme, const FieldSourceFn& source) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (u0.size() != gen.matrix.rows()) {
    throw ConfigError("initial field length does not match the mesh");
  }
  for (std::size_t i = 0; i + 1 < output_times.size(); ++i) {
    if (!(output_times[i] < output_times[i + 1])) {
      throw ConfigError("output times must be strictly increasing");
    }
  }
  if (!output_times.empty() && output_times.front() < 0.0) {
    throw ConfigError("output times must be nonnegative");
  }

  const double theta = (scheme == Scheme::implicit_euler) ? 1.0 : 0.5;
  const Index n = u0.size();
  const SparseMatrix id = identity_sparse(n);

  EvolveResult result;
  Vector u = u0;
  double t = 0.0;

  double cached_h = -1.0;
  std::unique_ptr<CheckedSolver> solver;
  SparseMatrix explicit_part;

  for (double target : output_times) {
    const double span = target - t;
    if (span > 0.0) {
      const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / dt - 1e-9)));
      const double h = span / static_cast<double>(steps);
      if (std::abs(h - cached_h) > 1e-15 * std::max(1.0, h)) {
        solver = std::make_unique<CheckedSolver>(
            SparseMatrix(id - theta * h * gen.matrix));
        explicit_part = id + (1.0 - theta) * h * gen.matrix;
        cached_h = h;
      }
      for (long k = 0; k < steps; ++k) {
        Vector rhs = explicit_part * u;
        if (source) {
          Vector f = source(t + theta * h);
          if (f.size() != n) throw ConfigError("source field length mismatch");
          rhs += h * f;
        }
        u = solver->solve(rhs);
        t += h;
      }
      t = target;  // guard against accumulated roundoff
    }
    result.times.push_back(target);
    result.states.push_back(u);
  }
  return result;
}

Vector resolve(const GeneratorMatrix& gen, double lambda, const Vector& f) {
  if (!(lambda > 0.0)) throw ConfigError("resolvent parameter must be positive");
  if (f.size() != gen.matrix.rows()) {
    throw ConfigError("field length does not match the mesh");
  }
  const SparseMatrix m =
      SparseMatrix(lambda * identity_sparse(f.size()) - gen.matrix);
  return CheckedSolver(m).solve(f);
}

TraceSet eliminate_traces(const PartitionedMesh& mesh,
                          const CoefficientField& coeff, double kappa,
                          Orientation orientation, const Vector& u) {
  if (u.size() != mesh.n_cells()) {
    throw ConfigError("field length does not match the mesh");
  }
  TraceSet traces;
  traces.membrane_left.resize(static_cast<Index>(mesh.membrane_faces.size()));
  traces.membrane_right.resize(static_cast<Index>(mesh.membrane_faces.size()));
  traces.outer.resize(static_cast<Index>(mesh.outer_faces.size()));

  for (std::size_t m = 0; m < mesh.membrane_faces.size(); ++m) {
    const auto& f = mesh.membrane_faces[m];
    const double alpha_l = face_alpha(kappa, coeff.a[f.cell_left], f.dist_left);
    const double alpha_r = face_alpha(kappa, coeff.a[f.cell_right], f.dist_right);
    const MembraneElimination e =
        eliminate_membrane(f, alpha_l, alpha_r, orientation);
    const double ul = u[f.cell_left];
    const double ur = u[f.cell_right];
    traces.membrane_left[static_cast<Index>(m)] = e.gl_ul * ul + e.gl_ur * ur;
    traces.membrane_right[static_cast<Index>(m)] = e.gr_ul * ul + e.gr_ur * ur;
  }
  for (std::size_t o = 0; o < mesh.outer_faces.size(); ++o) {
    const auto& f = mesh.outer_faces[o];
    const double alpha = face_alpha(kappa, coeff.a[f.cell], f.dist);
    traces.outer[static_cast<Index>(o)] = alpha * u[f.cell] / (alpha + f.tau);
  }
  return traces;
}

double evaluate_form(const PartitionedMesh& mesh, const CoefficientField& coeff,
                     double kappa, const Vector& u, const TraceSet& u_traces,
                     const Vector& v, const TraceSet& v_traces) {
  if (u.size() != mesh.n_cells() || v.size() != mesh.n_cells()) {
    throw ConfigError("field length does not match the mesh");
  }
  double form = 0.0;

  for (const auto& f : mesh.interior_faces) {
    const double t = interior_transmissibility(f, coeff, kappa);
    form += t * (u[f.cell_b] - u[f.cell_a]) * (v[f.cell_b] - v[f.cell_a]);
  }

  for (std::size_t m = 0; m < mesh.membrane_faces.size(); ++m) {
    const auto& f = mesh.membrane_faces[m];
    const Index mi = static_cast<Index>(m);
    const double alpha_l = face_alpha(kappa, coeff.a[f.cell_left], f.dist_left);
    const double alpha_r = face_alpha(kappa, coeff.a[f.cell_right], f.dist_right);
    const double gul = u_traces.membrane_left[mi];
    const double gur = u_traces.membrane_right[mi];
    const double gvl = v_traces.membrane_left[mi];
    const double gvr = v_traces.membrane_right[mi];
    // half-cell gradient energy on both sides
    form += f.area * alpha_l * (gul - u[f.cell_left]) * (gvl - v[f.cell_left]);
    form += f.area * alpha_r * (gur - u[f.cell_right]) * (gvr - v[f.cell_right]);
    // membrane term tau_k (u_k - b_kl u_l) v_k, both sides
    form += f.area * f.tau_left * (gul - f.b_left_right * gur) * gvl;
    form += f.area * f.tau_right * (gur - f.b_right_left * gul) * gvr;
  }

  for (std::size_t o = 0; o < mesh.outer_faces.size(); ++o) {
    const auto& f = mesh.outer_faces[o];
    const Index oi = static_cast<Index>(o);
    const double alpha = face_alpha(kappa, coeff.a[f.cell], f.dist);
    const double gu = u_traces.outer[oi];
    const double gv = v_traces.outer[oi];
    form += f.area * alpha * (gu - u[f.cell]) * (gv - v[f.cell]);
    form += f.area * f.tau * gu * gv;
  }

  for (Index i = 0; i < mesh.n_cells(); ++i) {
    form += coeff.c[i] * u[i] * v[i] * mesh.cell_volumes[i];
  }
  return form;
}

double lp_distance(const PartitionedMesh& mesh, const Vector& u,
                   const Vector& v, LpNorm p) {
  if (u.size() != mesh.n_cells() || v.size() != mesh.n_cells()) {
    throw ConfigError("lp_distance needs fields on the same mesh");
  }
  const Vector d = (u - v).cwiseAbs();
  switch (p) {
    case LpNorm::l1:
      return d.dot(mesh.cell_volumes);
    case LpNorm::l2:
      return std::sqrt(d.cwiseProduct(d).dot(mesh.cell_volumes));
    case LpNorm::linf:
      return d.size() > 0 ? d.maxCoeff() : 0.0;
  }
  return 0.0;
}

GeneratorInvariantReport check_generator_pair(const GeneratorMatrix& backward,
                                              const GeneratorMatrix& forward,
                                              int n_probes, unsigned seed) {
  if (backward.orientation != Orientation::backward ||
      forward.orientation != Orientation::forward) {
    throw ConfigError("check_generator_pair expects (backward, forward)");
  }
  if (backward.mesh != forward.mesh) {
    throw ConfigError("generator pair must share one mesh");
  }
  const PartitionedMesh& mesh = *backward.mesh;
  const Vector& vol = mesh.cell_volumes;
  const Index n = mesh.n_cells();

  GeneratorInvariantReport report;

  bool conservative = (backward.coeff->c.array() == 0.0).all();
  for (const auto& f : mesh.membrane_faces) {
    if (f.b_left_right != 1.0 || f.b_right_left != 1.0) conservative = false;
  }
  for (const auto& f : mesh.outer_faces) {
    if (f.tau != 0.0) conservative = false;
  }
  report.conservative = conservative;

  const Matrix weighted_forward = vol.asDiagonal() * Matrix(forward.matrix);
  const Matrix weighted_backward = Matrix(backward.matrix).transpose() * vol.asDiagonal();
  const double scale_b = Matrix(backward.matrix).cwiseAbs().maxCoeff();
  const double scale_f = weighted_forward.cwiseAbs().maxCoeff();
  if (conservative) {
    report.kernel_residual =
        (backward.matrix * Vector::Ones(n)).cwiseAbs().maxCoeff() /
        std::max(scale_b, 1e-300);
    const Vector col_sums = weighted_forward.colwise().sum();
    report.mass_residual =
        col_sums.cwiseAbs().maxCoeff() / std::max(scale_f, 1e-300);
  }

  const double gap = (weighted_forward - weighted_backward).cwiseAbs().maxCoeff();
  report.duality_gap = gap / std::max(scale_f, 1e-300);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double min_acc = std::numeric_limits<double>::infinity();
  for (int p = 0; p < n_probes; ++p) {
    Vector u(n);
    for (Index i = 0; i < n; ++i) u[i] = unif(rng);
    const double num = -(backward.matrix * u).cwiseProduct(vol).dot(u);
    const double den = u.cwiseProduct(vol).dot(u);
    min_acc = std::min(min_acc, num / den);
  }
  report.min_accretive = min_acc;
  return report;
}

Vector subdomain_masses(const PartitionedMesh& mesh, const Vector& u) {
  Vector masses = Vector::Zero(mesh.n_subdomains);
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    masses[mesh.cell_subdomain[i] - 1] += u[i] * mesh.cell_volumes[i];
  }
  return masses;
}

}  // namespace membrane
