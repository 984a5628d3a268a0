#pragma once

#include <functional>
#include <vector>

#include "membrane/geometry.hpp"
#include "membrane/types.hpp"

namespace membrane {

/// Which Kolmogorov equation a generator belongs to: backward acts on
/// expectations / subdomain averages, forward on densities.
enum class Orientation { backward, forward };

/// The finite-state chain obtained when diffusion speed goes to infinity
/// with membrane flux held constant.  q(k,l) = varrho(k,l)/lambda(k) off
/// the diagonal, q(k,k) = -sum_l rho(k,l)/lambda(k) including the outer
/// boundary; qstar is the adjoint with respect to the lambda-weighted
/// inner product.
struct LimitChain {
  Matrix q;
  Matrix qstar;
  Vector c;   // subdomain-averaged potential
  Vector mu;  // lambda(Omega_k), the weights of the state space

  Index size() const { return mu.size(); }
  /// q - diag(c) for backward, qstar - diag(c) for forward.
  Matrix generator(Orientation orientation) const;
};

LimitChain build_chain(const MeasuredGeometry& geom);

/// <x,y>_mu = sum_k x_k y_k lambda_k.
double mu_inner(const Vector& x, const Vector& y, const Vector& mu);

enum class MassKind {
  average,  // H0 coordinates: one value per subdomain
  total     // per-subdomain totals, v_k = lambda_k * u_k
};

struct MassVector {
  Vector values;
  MassKind kind = MassKind::average;
};

MassVector to_average(const MassVector& v, const Vector& mu);
MassVector to_total(const MassVector& v, const Vector& mu);

/// Orthogonal projection onto piecewise-constant fields: component k is
/// the volume-weighted mean over subdomain k.
MassVector project(const PartitionedMesh& mesh, const Vector& field);

/// Piecewise-constant field taking the subdomain values of v.
Vector expand(const PartitionedMesh& mesh, const MassVector& v);

/// Matrix exponential e^{t m} by scaling and squaring of the
/// diagonally shifted series.  Exactly entrywise-nonnegative output
/// for Metzler input.
Matrix expm(const Matrix& m, double t);

/// Time-dependent source in H0 coordinates (may be empty for the
/// homogeneous problem).
using SourceFn = std::function<Vector(double)>;

/// Mild solution z(t) = e^{tG} z0 + int_0^t e^{(t-s)G} f(s) ds with
/// G = q - diag(c) (backward) or qstar - diag(c) (forward), evaluated at
/// the given times.  Total-mass input is accepted for the forward
/// orientation only and is converted in and out exactly.
std::vector<MassVector> evolve_limit(const LimitChain& chain,
                                     const MassVector& z0,
                                     const SourceFn& source,
                                     const std::vector<double>& t_grid,
                                     Orientation orientation);

}  // namespace membrane
