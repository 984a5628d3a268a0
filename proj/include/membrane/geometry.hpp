#pragma once

#include <utility>
#include <vector>

#include "membrane/types.hpp"

namespace membrane {

/// Subdomain labels are 1..N; 0 is reserved for the exterior.
inline constexpr int kExterior = 0;

/// Interface patch between two cells of different subdomains.
/// Permeability tau_* and survival b_* are piecewise constant per face;
/// b toward the exterior is always 0, which is why outer (Robin) faces
/// are kept in a separate list without survival data.
struct MembraneFace {
  int left = 0;         // subdomain label on the left/first side
  int right = 0;        // subdomain label on the other side
  int cell_left = -1;   // adjacent cell indices
  int cell_right = -1;
  double area = 1.0;    // surface measure (1 in 1d, edge length in 2d)
  double tau_left = 0.0;
  double tau_right = 0.0;
  double b_left_right = 1.0;  // survival when crossing left -> right
  double b_right_left = 1.0;
  double dist_left = 0.0;   // cell-center-to-face distances
  double dist_right = 0.0;
  double center[2] = {0.0, 0.0};
};

/// Face between two cells of the same subdomain.
struct InteriorFace {
  int cell_a = -1;
  int cell_b = -1;
  double area = 1.0;
  double dist = 0.0;  // distance between the two cell centers
};

/// Robin face on the outer boundary of the domain.
struct OuterFace {
  int cell = -1;
  int subdomain = 0;
  double area = 1.0;
  double tau = 0.0;
  double dist = 0.0;  // cell-center-to-face distance
  double center[2] = {0.0, 0.0};
};

struct PartitionedMesh {
  int dimension = 1;  // 1 or 2
  int n_subdomains = 0;
  Vector cell_volumes;
  Matrix cell_centers;  // n_cells x dimension
  std::vector<int> cell_subdomain;
  std::vector<InteriorFace> interior_faces;
  std::vector<MembraneFace> membrane_faces;
  std::vector<OuterFace> outer_faces;

  Index n_cells() const { return cell_volumes.size(); }
  /// lambda(Omega_k) for k = 1..N, as the exact sum of cell volumes.
  Vector subdomain_volumes() const;
};

/// Per-cell scalar diffusivity a > 0 and potential c >= 0.
struct CoefficientField {
  Vector a;
  Vector c;
  double gamma = 0.0;  // ellipticity lower bound, min a

  void validate() const;
};

/// Expand per-subdomain (a_k, c_k) values to per-cell fields.
CoefficientField subdomain_coefficients(const PartitionedMesh& mesh,
                                        const std::vector<double>& a_by_subdomain,
                                        const std::vector<double>& c_by_subdomain);

/// Integrated geometry data: everything the limit chain needs.
/// rho(k-1, l)   = total permeability of Gamma_{k,l} seen from Omega_k,
///                 l = 0..N with column 0 the outer boundary.
/// varrho(k-1, l-1) = survival-weighted permeability, k,l = 1..N.
struct MeasuredGeometry {
  int n = 0;
  Vector lambda;
  Matrix rho;     // N x (N+1)
  Matrix varrho;  // N x N
  Vector cbar;    // subdomain-averaged potential

  void validate() const;
};

struct MembraneSpec1d {
  double tau_left = 0.0;
  double tau_right = 0.0;
  double b_left_right = 1.0;
  double b_right_left = 1.0;
};

/// Uniform cells within each interval; one membrane face per interior
/// breakpoint (surface measure 1); Robin data at the two ends.
PartitionedMesh build_mesh_1d(const std::vector<double>& breakpoints,
                              const std::vector<int>& cells_per_subdomain,
                              const std::vector<MembraneSpec1d>& membranes,
                              std::pair<double, double> outer_tau);

struct Rectangle {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  int subdomain = 0;
};

/// Membrane data for the (k, l) subdomain pair.
struct MembraneSpec2d {
  int k = 0;
  int l = 0;
  double tau_k = 0.0;
  double tau_l = 0.0;
  double b_kl = 1.0;
  double b_lk = 1.0;
};

/// Rectilinear union of axis-aligned rectangles on a uniform h-grid.
/// Membrane faces are generated on every shared edge segment between
/// differently labeled cells; outer faces on the boundary of the union.
PartitionedMesh build_mesh_2d(const std::vector<Rectangle>& rectangles,
                              double grid_h,
                              const std::vector<MembraneSpec2d>& membranes,
                              const std::vector<double>& outer_tau_by_subdomain);

MeasuredGeometry measure_geometry(const PartitionedMesh& mesh,
                                  const CoefficientField& coeff);

/// Pass-through constructor for geometries known only by their integrals
/// (e.g. 3d domains entering via measured volumes and permeabilities).
MeasuredGeometry measured_geometry_direct(int n, Vector lambda, Matrix rho,
                                          Matrix varrho, Vector cbar);

}  // namespace membrane
