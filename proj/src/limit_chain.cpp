#include "membrane/limit_chain.hpp"

#include <cmath>
#include <limits>

namespace membrane {

Matrix LimitChain::generator(Orientation orientation) const {
  Matrix g = (orientation == Orientation::backward) ? q : qstar;
  g.diagonal() -= c;
  return g;
}

LimitChain build_chain(const MeasuredGeometry& geom) {
  const int n = geom.n;
  LimitChain chain;
  chain.q = Matrix::Zero(n, n);
  chain.qstar = Matrix::Zero(n, n);
  chain.c = geom.cbar;
  chain.mu = geom.lambda;

  for (int k = 0; k < n; ++k) {
    double outflow = geom.rho(k, 0);  // toward the exterior
    for (int l = 0; l < n; ++l) {
      if (l == k) continue;
      outflow += geom.rho(k, l + 1);
      chain.q(k, l) = geom.varrho(k, l) / geom.lambda[k];
      chain.qstar(k, l) = geom.varrho(l, k) / geom.lambda[k];
    }
    const double diag = -outflow / geom.lambda[k];
    chain.q(k, k) = diag;
    chain.qstar(k, k) = diag;
  }
  return chain;
}

double mu_inner(const Vector& x, const Vector& y, const Vector& mu) {
  return (x.array() * y.array() * mu.array()).sum();
}

MassVector to_average(const MassVector& v, const Vector& mu) {
  if (v.kind == MassKind::average) return v;
  return {v.values.cwiseQuotient(mu), MassKind::average};
}

MassVector to_total(const MassVector& v, const Vector& mu) {
  if (v.kind == MassKind::total) return v;
  return {v.values.cwiseProduct(mu), MassKind::total};
}

MassVector project(const PartitionedMesh& mesh, const Vector& field) {
  if (field.size() != mesh.n_cells()) {
    throw ConfigError("field length does not match the mesh");
  }
  Vector sums = Vector::Zero(mesh.n_subdomains);
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    sums[mesh.cell_subdomain[i] - 1] += field[i] * mesh.cell_volumes[i];
  }
  return {sums.cwiseQuotient(mesh.subdomain_volumes()), MassKind::average};
}

Vector expand(const PartitionedMesh& mesh, const MassVector& v) {
  const MassVector avg = to_average(v, mesh.subdomain_volumes());
  if (avg.values.size() != mesh.n_subdomains) {
    throw ConfigError("mass vector length does not match the mesh");
  }
  Vector field(mesh.n_cells());
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    field[i] = avg.values[mesh.cell_subdomain[i] - 1];
  }
  return field;
}

Matrix expm(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw ConfigError("expm needs a square matrix");
  if (!m.allFinite() || !std::isfinite(t) || t < 0.0) {
    throw ConfigError("expm needs finite entries and finite t >= 0");
  }
  const Index n = m.rows();
  if (t == 0.0 || n == 0) return Matrix::Identity(n, n);

  Matrix a = m * t;
  const double shift = a.diagonal().minCoeff();
  a.diagonal().array() -= shift;

  // pick s so that both the shifted matrix and the scalar shift are small
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff() + std::abs(shift);
  int s = 0;
  double scaled = norm;
  while (scaled > 0.5 && s < 64) {
    scaled *= 0.5;
    ++s;
  }
  const double pow2 = std::ldexp(1.0, s);
  const Matrix b = a / pow2;

  Matrix e = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 1; k <= 40; ++k) {
    term = (term * b) / static_cast<double>(k);
    e += term;
    if (term.cwiseAbs().maxCoeff() <= eps * e.cwiseAbs().maxCoeff()) break;
  }
  e *= std::exp(shift / pow2);
  for (int k = 0; k < s; ++k) e = e * e;
  return e;
}

namespace {

/// Composite Simpson for int_0^dt e^{(dt-s)G} f(t0+s) ds with doubling
/// until two successive estimates agree.
Vector duhamel_integral(const Matrix& g, double t0, double dt,
                        const SourceFn& source) {
  const Index n = g.rows();
  if (!source || dt == 0.0) return Vector::Zero(n);

  auto integrand = [&](double s) -> Vector {
    Vector f = source(t0 + s);
    if (f.size() != n) {
      throw ConfigError("source vector length does not match the chain");
    }
    return expm(g, dt - s) * f;
  };

  long intervals = 2;
  Vector prev;
  for (int round = 0; round < 22; ++round) {
    const double h = dt / static_cast<double>(intervals);
    Vector sum = integrand(0.0) + integrand(dt);
    for (long i = 1; i < intervals; ++i) {
      sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * h);
    }
    Vector estimate = (h / 3.0) * sum;
    if (round > 0) {
      const double diff = (estimate - prev).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, estimate.cwiseAbs().maxCoeff());
      if (diff <= 1e-8 * scale) return estimate;
    }
    prev = estimate;
    intervals *= 2;
  }
  throw NumericalError("source quadrature did not converge to 1e-8");
}

}  // namespace

std::vector<MassVector> evolve_limit(const LimitChain& chain,
                                     const MassVector& z0,
                                     const SourceFn& source,
                                     const std::vector<double>& t_grid,
                                     Orientation orientation) {
  if (t_grid.empty()) return {};
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    if (!(t_grid[i] < t_grid[i + 1])) {
      throw ConfigError("t_grid must be strictly increasing");
    }
  }
  if (!(t_grid.front() >= 0.0)) throw ConfigError("t_grid must start at t >= 0");

  const MassKind out_kind = z0.kind;
  if (out_kind == MassKind::total && orientation == Orientation::backward) {
    throw ConfigError(
        "total-mass coordinates evolve under the forward generator; "
        "convert to averages for a backward run");
  }

  const Matrix g = chain.generator(orientation);
  Vector z = to_average(z0, chain.mu).values;
  if (z.size() != chain.size()) {
    throw ConfigError("initial vector length does not match the chain");
  }

  std::vector<MassVector> out;
  out.reserve(t_grid.size());
  double t = 0.0;
  for (double target : t_grid) {
    const double dt = target - t;
    if (dt > 0.0) {
      z = (expm(g, dt) * z).eval();
      z += duhamel_integral(g, t, dt, source);
      t = target;
    }
    MassVector snapshot{z, MassKind::average};
    out.push_back(out_kind == MassKind::total ? to_total(snapshot, chain.mu)
                                              : snapshot);
  }
  return out;
}

}  // namespace membrane
