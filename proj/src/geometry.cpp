#include "membrane/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace membrane {

namespace {

void check_membrane_params(double tau_left, double tau_right, double b_lr,
                           double b_rl, const std::string& where) {
  auto fail = [&](const std::string& field, double value) {
    std::ostringstream os;
    os << where << ": " << field << " = " << value;
    throw ConfigError(os.str());
  };
  if (!(tau_left >= 0.0) || !std::isfinite(tau_left))
    fail("tau_left must be >= 0, got", tau_left);
  if (!(tau_right >= 0.0) || !std::isfinite(tau_right))
    fail("tau_right must be >= 0, got", tau_right);
  if (!(b_lr >= 0.0 && b_lr <= 1.0)) fail("b_left_right must be in [0,1], got", b_lr);
  if (!(b_rl >= 0.0 && b_rl <= 1.0)) fail("b_right_left must be in [0,1], got", b_rl);
}

/// Every subdomain must form a single face-connected component.
void check_connectivity(const PartitionedMesh& mesh) {
  const Index n = mesh.n_cells();
  std::vector<std::vector<int>> adj(n);
  for (const auto& f : mesh.interior_faces) {
    adj[f.cell_a].push_back(f.cell_b);
    adj[f.cell_b].push_back(f.cell_a);
  }
  std::vector<int> comp(n, -1);
  for (Index start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = static_cast<int>(start);
    std::vector<int> stack{static_cast<int>(start)};
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      for (int nb : adj[c]) {
        if (comp[nb] < 0) {
          comp[nb] = static_cast<int>(start);
          stack.push_back(nb);
        }
      }
    }
  }
  std::vector<std::set<int>> comps_of(mesh.n_subdomains + 1);
  for (Index i = 0; i < n; ++i) comps_of[mesh.cell_subdomain[i]].insert(comp[i]);
  for (int k = 1; k <= mesh.n_subdomains; ++k) {
    if (comps_of[k].empty()) {
      throw ConfigError("subdomain " + std::to_string(k) + " labels no cell");
    }
    if (comps_of[k].size() > 1) {
      throw ConfigError("subdomain " + std::to_string(k) +
                        " is not face-connected");
    }
  }
}

void check_faces(const PartitionedMesh& mesh) {
  for (const auto& f : mesh.membrane_faces) {
    if (f.left == f.right || f.left < 1 || f.right < 1 ||
        f.left > mesh.n_subdomains || f.right > mesh.n_subdomains) {
      throw ConfigError("membrane face must join two distinct subdomains");
    }
    check_membrane_params(f.tau_left, f.tau_right, f.b_left_right,
                          f.b_right_left, "membrane face");
  }
  for (const auto& f : mesh.outer_faces) {
    if (!(f.tau >= 0.0) || !std::isfinite(f.tau)) {
      throw ConfigError("outer face: tau must be >= 0, got " +
                        std::to_string(f.tau));
    }
  }
  if ((mesh.cell_volumes.array() <= 0.0).any()) {
    throw ConfigError("all cell volumes must be positive");
  }
}

}  // namespace

Vector PartitionedMesh::subdomain_volumes() const {
  Vector lambda = Vector::Zero(n_subdomains);
  for (Index i = 0; i < n_cells(); ++i) {
    lambda[cell_subdomain[i] - 1] += cell_volumes[i];
  }
  return lambda;
}

void CoefficientField::validate() const {
  if (a.size() != c.size()) throw ConfigError("coefficient fields a and c must have equal length");
  if (!(gamma > 0.0)) throw ConfigError("ellipticity bound gamma must be positive");
  if ((a.array() < gamma).any()) throw ConfigError("diffusivity a must satisfy a >= gamma > 0 everywhere");
  if ((c.array() < 0.0).any()) throw ConfigError("potential c must be nonnegative");
}

CoefficientField subdomain_coefficients(const PartitionedMesh& mesh,
                                        const std::vector<double>& a_by_subdomain,
                                        const std::vector<double>& c_by_subdomain) {
  if (static_cast<int>(a_by_subdomain.size()) != mesh.n_subdomains ||
      static_cast<int>(c_by_subdomain.size()) != mesh.n_subdomains) {
    throw ConfigError("need one (a, c) pair per subdomain");
  }
  CoefficientField coeff;
  const Index n = mesh.n_cells();
  coeff.a.resize(n);
  coeff.c.resize(n);
  for (Index i = 0; i < n; ++i) {
    coeff.a[i] = a_by_subdomain[mesh.cell_subdomain[i] - 1];
    coeff.c[i] = c_by_subdomain[mesh.cell_subdomain[i] - 1];
  }
  coeff.gamma = coeff.a.minCoeff();
  coeff.validate();
  return coeff;
}

void MeasuredGeometry::validate() const {
  if (n < 1) throw ConfigError("measured geometry needs at least one subdomain");
  if (lambda.size() != n || cbar.size() != n || rho.rows() != n ||
      rho.cols() != n + 1 || varrho.rows() != n || varrho.cols() != n) {
    throw ConfigError("measured geometry has inconsistent dimensions");
  }
  for (int k = 0; k < n; ++k) {
    if (!(lambda[k] > 0.0) || !std::isfinite(lambda[k])) {
      throw ConfigError("lambda(" + std::to_string(k + 1) + ") must be positive, got " +
                        std::to_string(lambda[k]));
    }
    if (!(cbar[k] >= 0.0)) {
      throw ConfigError("cbar(" + std::to_string(k + 1) + ") must be nonnegative");
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l <= n; ++l) {
      const double r = rho(k, l);
      if (!(r >= 0.0) || !std::isfinite(r)) {
        throw ConfigError("rho(" + std::to_string(k + 1) + "," + std::to_string(l) +
                          ") must be finite and nonnegative");
      }
      if (l >= 1) {
        const double vr = varrho(k, l - 1);
        if (!(vr >= 0.0) || !std::isfinite(vr)) {
          throw ConfigError("varrho(" + std::to_string(k + 1) + "," + std::to_string(l) +
                            ") must be finite and nonnegative");
        }
        if (vr > r) {
          throw ConfigError("varrho(" + std::to_string(k + 1) + "," + std::to_string(l) +
                            ") exceeds rho: survival-weighted permeability cannot exceed total");
        }
      }
    }
  }
}

PartitionedMesh build_mesh_1d(const std::vector<double>& breakpoints,
                              const std::vector<int>& cells_per_subdomain,
                              const std::vector<MembraneSpec1d>& membranes,
                              std::pair<double, double> outer_tau) {
  const int n_sub = static_cast<int>(breakpoints.size()) - 1;
  if (n_sub < 1) throw ConfigError("need at least 2 breakpoints");
  for (int k = 0; k + 1 < static_cast<int>(breakpoints.size()); ++k) {
    if (!(breakpoints[k] < breakpoints[k + 1])) {
      throw ConfigError("breakpoints must be strictly increasing at index " +
                        std::to_string(k + 1));
    }
  }
  if (static_cast<int>(cells_per_subdomain.size()) != n_sub) {
    throw ConfigError("need one cell count per subdomain");
  }
  for (int k = 0; k < n_sub; ++k) {
    if (cells_per_subdomain[k] < 1) {
      throw ConfigError("cells_per_subdomain[" + std::to_string(k) +
                        "] must be positive");
    }
  }
  if (static_cast<int>(membranes.size()) != n_sub - 1) {
    throw ConfigError("need one membrane spec per interior breakpoint");
  }
  for (int m = 0; m < n_sub - 1; ++m) {
    check_membrane_params(membranes[m].tau_left, membranes[m].tau_right,
                          membranes[m].b_left_right, membranes[m].b_right_left,
                          "membrane " + std::to_string(m + 1));
  }
  if (!(outer_tau.first >= 0.0) || !(outer_tau.second >= 0.0)) {
    throw ConfigError("outer tau values must be >= 0");
  }

  PartitionedMesh mesh;
  mesh.dimension = 1;
  mesh.n_subdomains = n_sub;

  Index total = 0;
  for (int k = 0; k < n_sub; ++k) total += cells_per_subdomain[k];
  mesh.cell_volumes.resize(total);
  mesh.cell_centers.resize(total, 1);
  mesh.cell_subdomain.resize(total);

  Index cell = 0;
  std::vector<Index> first_cell(n_sub), last_cell(n_sub);
  for (int k = 0; k < n_sub; ++k) {
    const int m = cells_per_subdomain[k];
    const double h = (breakpoints[k + 1] - breakpoints[k]) / m;
    first_cell[k] = cell;
    for (int i = 0; i < m; ++i, ++cell) {
      mesh.cell_volumes[cell] = h;
      mesh.cell_centers(cell, 0) = breakpoints[k] + (i + 0.5) * h;
      mesh.cell_subdomain[cell] = k + 1;
      if (i > 0) mesh.interior_faces.push_back({static_cast<int>(cell - 1),
                                                static_cast<int>(cell), 1.0, h});
    }
    last_cell[k] = cell - 1;
  }

  for (int m = 0; m < n_sub - 1; ++m) {
    MembraneFace f;
    f.left = m + 1;
    f.right = m + 2;
    f.cell_left = static_cast<int>(last_cell[m]);
    f.cell_right = static_cast<int>(first_cell[m + 1]);
    f.area = 1.0;  // 1d surface measure is the counting measure
    f.tau_left = membranes[m].tau_left;
    f.tau_right = membranes[m].tau_right;
    f.b_left_right = membranes[m].b_left_right;
    f.b_right_left = membranes[m].b_right_left;
    f.dist_left = 0.5 * mesh.cell_volumes[f.cell_left];
    f.dist_right = 0.5 * mesh.cell_volumes[f.cell_right];
    f.center[0] = breakpoints[m + 1];
    mesh.membrane_faces.push_back(f);
  }

  OuterFace lo;
  lo.cell = 0;
  lo.subdomain = 1;
  lo.tau = outer_tau.first;
  lo.dist = 0.5 * mesh.cell_volumes[0];
  lo.center[0] = breakpoints.front();
  mesh.outer_faces.push_back(lo);

  OuterFace hi;
  hi.cell = static_cast<int>(total - 1);
  hi.subdomain = n_sub;
  hi.tau = outer_tau.second;
  hi.dist = 0.5 * mesh.cell_volumes[total - 1];
  hi.center[0] = breakpoints.back();
  mesh.outer_faces.push_back(hi);

  check_faces(mesh);
  check_connectivity(mesh);
  return mesh;
}

PartitionedMesh build_mesh_2d(const std::vector<Rectangle>& rectangles,
                              double grid_h,
                              const std::vector<MembraneSpec2d>& membranes,
                              const std::vector<double>& outer_tau_by_subdomain) {
  if (rectangles.empty()) throw ConfigError("need at least one rectangle");
  if (!(grid_h > 0.0)) throw ConfigError("grid_h must be positive");

  auto snap = [grid_h](double x) -> long {
    const double q = x / grid_h;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) {
      throw ConfigError("rectangle edge at " + std::to_string(x) +
                        " is not aligned to the h-grid");
    }
    return static_cast<long>(r);
  };

  int n_sub = 0;
  struct IRect {
    long i0, j0, i1, j1;
    int label;
  };
  std::vector<IRect> irects;
  for (const auto& r : rectangles) {
    if (!(r.x0 < r.x1 && r.y0 < r.y1)) {
      throw ConfigError("rectangle must have positive extent");
    }
    if (r.subdomain < 1) throw ConfigError("subdomain labels must be >= 1");
    irects.push_back({snap(r.x0), snap(r.y0), snap(r.x1), snap(r.y1), r.subdomain});
    n_sub = std::max(n_sub, r.subdomain);
  }
  if (static_cast<int>(outer_tau_by_subdomain.size()) != n_sub) {
    throw ConfigError("need one outer tau per subdomain");
  }

  std::map<std::pair<long, long>, int> label_of;  // grid cell -> subdomain
  for (const auto& r : irects) {
    for (long i = r.i0; i < r.i1; ++i) {
      for (long j = r.j0; j < r.j1; ++j) {
        auto [it, inserted] = label_of.insert({{i, j}, r.label});
        if (!inserted) {
          throw ConfigError("rectangles overlap at cell (" + std::to_string(i) +
                            "," + std::to_string(j) + ")");
        }
      }
    }
  }

  // tau/b lookup per unordered subdomain pair
  struct PairData {
    double tau_k, tau_l, b_kl, b_lk;
    int k, l;
  };
  std::map<std::pair<int, int>, PairData> pair_data;
  for (const auto& m : membranes) {
    check_membrane_params(m.tau_k, m.tau_l, m.b_kl, m.b_lk,
                          "membrane pair (" + std::to_string(m.k) + "," +
                              std::to_string(m.l) + ")");
    if (m.k == m.l || m.k < 1 || m.l < 1 || m.k > n_sub || m.l > n_sub) {
      throw ConfigError("membrane pair must name two distinct subdomains");
    }
    auto key = std::minmax(m.k, m.l);
    pair_data[{key.first, key.second}] = {m.tau_k, m.tau_l, m.b_kl, m.b_lk, m.k, m.l};
  }

  PartitionedMesh mesh;
  mesh.dimension = 2;
  mesh.n_subdomains = n_sub;

  const Index n_cells = static_cast<Index>(label_of.size());
  mesh.cell_volumes.resize(n_cells);
  mesh.cell_centers.resize(n_cells, 2);
  mesh.cell_subdomain.resize(n_cells);
  std::map<std::pair<long, long>, int> index_of;
  Index idx = 0;
  for (const auto& [ij, label] : label_of) {
    index_of[ij] = static_cast<int>(idx);
    mesh.cell_volumes[idx] = grid_h * grid_h;
    mesh.cell_centers(idx, 0) = (ij.first + 0.5) * grid_h;
    mesh.cell_centers(idx, 1) = (ij.second + 0.5) * grid_h;
    mesh.cell_subdomain[idx] = label;
    ++idx;
  }

  auto make_face = [&](int ca, int cb, double fx, double fy) {
    const int la = mesh.cell_subdomain[ca];
    const int lb = mesh.cell_subdomain[cb];
    if (la == lb) {
      mesh.interior_faces.push_back({ca, cb, grid_h, grid_h});
      return;
    }
    auto key = std::minmax(la, lb);
    auto it = pair_data.find({key.first, key.second});
    if (it == pair_data.end()) {
      throw ConfigError("no membrane data for subdomain pair (" +
                        std::to_string(key.first) + "," +
                        std::to_string(key.second) + ")");
    }
    const PairData& pd = it->second;
    MembraneFace f;
    f.left = la;
    f.right = lb;
    f.cell_left = ca;
    f.cell_right = cb;
    f.area = grid_h;
    const bool same_order = (pd.k == la);
    f.tau_left = same_order ? pd.tau_k : pd.tau_l;
    f.tau_right = same_order ? pd.tau_l : pd.tau_k;
    f.b_left_right = same_order ? pd.b_kl : pd.b_lk;
    f.b_right_left = same_order ? pd.b_lk : pd.b_kl;
    f.dist_left = 0.5 * grid_h;
    f.dist_right = 0.5 * grid_h;
    f.center[0] = fx;
    f.center[1] = fy;
    mesh.membrane_faces.push_back(f);
  };

  auto make_outer = [&](int c, double fx, double fy) {
    OuterFace f;
    f.cell = c;
    f.subdomain = mesh.cell_subdomain[c];
    f.area = grid_h;
    f.tau = outer_tau_by_subdomain[f.subdomain - 1];
    f.dist = 0.5 * grid_h;
    f.center[0] = fx;
    f.center[1] = fy;
    mesh.outer_faces.push_back(f);
  };

  for (const auto& [ij, label] : label_of) {
    const auto [i, j] = ij;
    const int c = index_of[ij];
    // east neighbor
    auto e = index_of.find({i + 1, j});
    if (e != index_of.end()) {
      make_face(c, e->second, (i + 1) * grid_h, (j + 0.5) * grid_h);
    } else {
      make_outer(c, (i + 1) * grid_h, (j + 0.5) * grid_h);
    }
    if (index_of.find({i - 1, j}) == index_of.end()) {
      make_outer(c, i * grid_h, (j + 0.5) * grid_h);
    }
    // north neighbor
    auto nn = index_of.find({i, j + 1});
    if (nn != index_of.end()) {
      make_face(c, nn->second, (i + 0.5) * grid_h, (j + 1) * grid_h);
    } else {
      make_outer(c, (i + 0.5) * grid_h, (j + 1) * grid_h);
    }
    if (index_of.find({i, j - 1}) == index_of.end()) {
      make_outer(c, (i + 0.5) * grid_h, j * grid_h);
    }
  }

  check_faces(mesh);
  check_connectivity(mesh);

  // the union itself must be connected (membrane faces count as adjacency)
  {
    const Index n = mesh.n_cells();
    std::vector<std::vector<int>> adj(n);
    for (const auto& f : mesh.interior_faces) {
      adj[f.cell_a].push_back(f.cell_b);
      adj[f.cell_b].push_back(f.cell_a);
    }
    for (const auto& f : mesh.membrane_faces) {
      adj[f.cell_left].push_back(f.cell_right);
      adj[f.cell_right].push_back(f.cell_left);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    Index count = 1;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      for (int nb : adj[c]) {
        if (!seen[nb]) {
          seen[nb] = 1;
          ++count;
          stack.push_back(nb);
        }
      }
    }
    if (count != n) throw ConfigError("the union of rectangles is not connected");
  }
  return mesh;
}

MeasuredGeometry measure_geometry(const PartitionedMesh& mesh,
                                  const CoefficientField& coeff) {
  if (coeff.a.size() != mesh.n_cells()) {
    throw ConfigError("coefficient field does not match the mesh");
  }
  const int n = mesh.n_subdomains;
  MeasuredGeometry g;
  g.n = n;
  g.lambda = mesh.subdomain_volumes();
  g.rho = Matrix::Zero(n, n + 1);
  g.varrho = Matrix::Zero(n, n);

  for (const auto& f : mesh.membrane_faces) {
    g.rho(f.left - 1, f.right) += f.tau_left * f.area;
    g.rho(f.right - 1, f.left) += f.tau_right * f.area;
    g.varrho(f.left - 1, f.right - 1) += f.b_left_right * f.tau_left * f.area;
    g.varrho(f.right - 1, f.left - 1) += f.b_right_left * f.tau_right * f.area;
  }
  for (const auto& f : mesh.outer_faces) {
    g.rho(f.subdomain - 1, 0) += f.tau * f.area;
  }

  Vector csum = Vector::Zero(n);
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    csum[mesh.cell_subdomain[i] - 1] += coeff.c[i] * mesh.cell_volumes[i];
  }
  g.cbar = csum.cwiseQuotient(g.lambda);

  g.validate();
  return g;
}

MeasuredGeometry measured_geometry_direct(int n, Vector lambda, Matrix rho,
                                          Matrix varrho, Vector cbar) {
  MeasuredGeometry g;
  g.n = n;
  g.lambda = std::move(lambda);
  g.rho = std::move(rho);
  g.varrho = std::move(varrho);
  g.cbar = std::move(cbar);
  g.validate();
  return g;
}

}  // namespace membrane
