#include <doctest.h>

#include <cmath>

#include "membrane/geometry.hpp"

using namespace membrane;

namespace {

PartitionedMesh figure1_mesh(int cells_per_side) {
  return build_mesh_1d({-1.0, 0.0, 1.0}, {cells_per_side, cells_per_side},
                       {{2.0 / 3.0, 1.0 / 3.0, 1.0, 1.0}}, {0.0, 0.0});
}

CoefficientField unit_coefficients(const PartitionedMesh& mesh, double c = 0.0) {
  return subdomain_coefficients(mesh,
                                std::vector<double>(mesh.n_subdomains, 1.0),
                                std::vector<double>(mesh.n_subdomains, c));
}

}  // namespace

TEST_CASE("1d mesh for the two-interval scenario") {
  const PartitionedMesh mesh = figure1_mesh(2);
  CHECK(mesh.n_cells() == 4);
  CHECK(mesh.n_subdomains == 2);
  REQUIRE(mesh.membrane_faces.size() == 1);
  const MembraneFace& f = mesh.membrane_faces[0];
  CHECK(f.center[0] == 0.0);
  CHECK(f.area == 1.0);
  CHECK(f.tau_left == 2.0 / 3.0);
  CHECK(f.tau_right == 1.0 / 3.0);
  CHECK(f.left == 1);
  CHECK(f.right == 2);
  CHECK(mesh.interior_faces.size() == 2);
  CHECK(mesh.outer_faces.size() == 2);
}

TEST_CASE("single-cell Neumann mesh") {
  const PartitionedMesh mesh = build_mesh_1d({0.0, 1.0}, {1}, {}, {0.0, 0.0});
  CHECK(mesh.n_cells() == 1);
  CHECK(mesh.membrane_faces.empty());
  CHECK(mesh.cell_volumes[0] == 1.0);
}

TEST_CASE("fully reflecting membrane is kept in the face list") {
  const PartitionedMesh mesh =
      build_mesh_1d({0.0, 1.0, 2.0}, {3, 3}, {{0.0, 0.0, 1.0, 1.0}}, {0.0, 0.0});
  REQUIRE(mesh.membrane_faces.size() == 1);
  CHECK(mesh.membrane_faces[0].tau_left == 0.0);
  CHECK(mesh.membrane_faces[0].tau_right == 0.0);
}

TEST_CASE("1d mesh rejects bad input naming the offending entry") {
  CHECK_THROWS_WITH_AS(
      build_mesh_1d({0.0, 1.0, 0.5}, {1, 1}, {{1.0, 1.0, 1.0, 1.0}}, {0.0, 0.0}),
      doctest::Contains("strictly increasing"), ConfigError);
  CHECK_THROWS_WITH_AS(
      build_mesh_1d({0.0, 1.0, 2.0}, {1, 1}, {{-0.5, 1.0, 1.0, 1.0}}, {0.0, 0.0}),
      doctest::Contains("tau_left"), ConfigError);
  CHECK_THROWS_WITH_AS(
      build_mesh_1d({0.0, 1.0, 2.0}, {1, 1}, {{0.5, 1.0, 1.5, 1.0}}, {0.0, 0.0}),
      doctest::Contains("b_left_right"), ConfigError);
  CHECK_THROWS_AS(build_mesh_1d({0.0, 1.0}, {0}, {}, {0.0, 0.0}), ConfigError);
}

TEST_CASE("measure_geometry reproduces the two-interval membrane data") {
  const PartitionedMesh mesh = figure1_mesh(2);
  const MeasuredGeometry g = measure_geometry(mesh, unit_coefficients(mesh));
  CHECK(g.lambda[0] == 1.0);  // 0.5 + 0.5 sums exactly
  CHECK(g.lambda[1] == 1.0);
  CHECK(g.rho(0, 2) == 2.0 / 3.0);
  CHECK(g.rho(1, 1) == 1.0 / 3.0);
  CHECK(g.rho(0, 0) == 0.0);
  CHECK(g.rho(1, 0) == 0.0);
  CHECK(g.varrho(0, 1) == 2.0 / 3.0);  // b == 1
  CHECK(g.varrho(1, 0) == 1.0 / 3.0);
  CHECK(g.cbar[0] == 0.0);
}

TEST_CASE("measure_geometry with all tau zero") {
  const PartitionedMesh mesh =
      build_mesh_1d({0.0, 1.0, 2.0}, {3, 3}, {{0.0, 0.0, 1.0, 1.0}}, {0.0, 0.0});
  const MeasuredGeometry g = measure_geometry(mesh, unit_coefficients(mesh));
  CHECK(g.rho.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.varrho.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subdomain volumes match exact interval lengths") {
  const PartitionedMesh mesh = figure1_mesh(200);
  const Vector lambda = mesh.subdomain_volumes();
  CHECK(std::abs(lambda[0] - 1.0) <= 1e-12);
  CHECK(std::abs(lambda[1] - 1.0) <= 1e-12);
  const MeasuredGeometry g = measure_geometry(mesh, unit_coefficients(mesh));
  CHECK((g.lambda.array() == lambda.array()).all());  // the same exact sum
}

TEST_CASE("2d split unit square") {
  const std::vector<Rectangle> rects = {{0.0, 0.0, 0.5, 1.0, 1},
                                        {0.5, 0.0, 1.0, 1.0, 2}};
  const PartitionedMesh mesh =
      build_mesh_2d(rects, 0.25, {{1, 2, 0.5, 0.25, 1.0, 1.0}}, {0.0, 0.0});
  CHECK(mesh.n_cells() == 16);
  CHECK(mesh.membrane_faces.size() == 4);
  for (const auto& f : mesh.membrane_faces) {
    CHECK(f.area == 0.25);
    CHECK(f.left != f.right);
    CHECK(f.left >= 1);
    CHECK(f.right >= 1);
  }
  const MeasuredGeometry g = measure_geometry(mesh, unit_coefficients(mesh));
  CHECK(g.lambda[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.lambda[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("2d shared edge integrates tau and b tau") {
  const std::vector<Rectangle> rects = {{0.0, 0.0, 1.0, 1.0, 1},
                                        {1.0, 0.0, 2.0, 1.0, 2}};
  const PartitionedMesh mesh =
      build_mesh_2d(rects, 0.25, {{1, 2, 0.4, 0.4, 0.5, 0.5}}, {0.0, 0.0});
  const MeasuredGeometry g = measure_geometry(mesh, unit_coefficients(mesh));
  CHECK(g.rho(0, 2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(g.varrho(0, 1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("rho and varrho are invariant under mesh refinement") {
  const std::vector<Rectangle> rects = {{0.0, 0.0, 0.5, 1.0, 1},
                                        {0.5, 0.0, 1.0, 1.0, 2}};
  const std::vector<MembraneSpec2d> membranes = {{1, 2, 0.37, 0.81, 0.9, 0.6}};
  const PartitionedMesh coarse = build_mesh_2d(rects, 0.25, membranes, {0.3, 0.7});
  const PartitionedMesh fine = build_mesh_2d(rects, 0.125, membranes, {0.3, 0.7});
  const MeasuredGeometry gc = measure_geometry(coarse, unit_coefficients(coarse));
  const MeasuredGeometry gf = measure_geometry(fine, unit_coefficients(fine));
  CHECK((gc.rho - gf.rho).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((gc.varrho - gf.varrho).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((gc.lambda - gf.lambda).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("2d builder rejects malformed input") {
  CHECK_THROWS_WITH_AS(
      build_mesh_2d({{0.0, 0.0, 1.0, 1.0, 1}, {0.5, 0.0, 1.5, 1.0, 2}}, 0.25,
                    {{1, 2, 1.0, 1.0, 1.0, 1.0}}, {0.0, 0.0}),
      doctest::Contains("overlap"), ConfigError);
  CHECK_THROWS_WITH_AS(
      build_mesh_2d({{0.0, 0.0, 0.9, 1.0, 1}}, 0.25, {}, {0.0}),
      doctest::Contains("aligned"), ConfigError);
  // connected union but subdomain 1 split in two
  CHECK_THROWS_WITH_AS(
      build_mesh_2d({{0.0, 0.0, 1.0, 1.0, 1},
                     {1.0, 0.0, 2.0, 1.0, 2},
                     {2.0, 0.0, 3.0, 1.0, 1}},
                    0.5, {{1, 2, 1.0, 1.0, 1.0, 1.0}}, {0.0, 0.0}),
      doctest::Contains("not face-connected"), ConfigError);
  // fully disconnected union
  CHECK_THROWS_AS(
      build_mesh_2d({{0.0, 0.0, 1.0, 1.0, 1}, {2.0, 0.0, 3.0, 1.0, 2}}, 0.5,
                    {{1, 2, 1.0, 1.0, 1.0, 1.0}}, {0.0, 0.0}),
      ConfigError);
  // a label gap: subdomain 2 labels no cell
  CHECK_THROWS_AS(
      build_mesh_2d({{0.0, 0.0, 1.0, 1.0, 1}, {1.0, 0.0, 2.0, 1.0, 3}}, 0.5,
                    {{1, 3, 1.0, 1.0, 1.0, 1.0}}, {0.0, 0.0, 0.0}),
      ConfigError);
}

TEST_CASE("corner contact of four subdomains is allowed, faces stay pairwise") {
  const std::vector<Rectangle> rects = {{0.0, 0.0, 0.5, 0.5, 1},
                                        {0.5, 0.0, 1.0, 0.5, 2},
                                        {0.0, 0.5, 0.5, 1.0, 3},
                                        {0.5, 0.5, 1.0, 1.0, 4}};
  std::vector<MembraneSpec2d> membranes;
  for (int k = 1; k <= 4; ++k) {
    for (int l = k + 1; l <= 4; ++l) membranes.push_back({k, l, 1.0, 1.0, 1.0, 1.0});
  }
  const PartitionedMesh mesh =
      build_mesh_2d(rects, 0.25, membranes, {0.0, 0.0, 0.0, 0.0});
  for (const auto& f : mesh.membrane_faces) CHECK(f.left != f.right);
  CHECK(mesh.membrane_faces.size() == 8);  // 2 per shared edge of length 0.5
}

TEST_CASE("measured geometry for the unit ball boundary data") {
  const double a_c = 0.5;
  Matrix rho(1, 2);
  rho << a_c * 4.0 * M_PI, 0.0;
  const MeasuredGeometry g = measured_geometry_direct(
      1, Vector::Constant(1, 4.0 * M_PI / 3.0), rho, Matrix::Zero(1, 1),
      Vector::Constant(1, 1.0));
  CHECK(g.rho(0, 0) / g.lambda[0] == doctest::Approx(3.0 * a_c).epsilon(1e-14));
}

TEST_CASE("measured geometry validation") {
  Matrix rho = Matrix::Zero(1, 2);
  Matrix varrho = Matrix::Zero(1, 1);
  CHECK_NOTHROW(measured_geometry_direct(1, Vector::Constant(1, 1.0), rho, varrho,
                                         Vector::Zero(1)));
  CHECK_THROWS_AS(measured_geometry_direct(1, Vector::Constant(1, -1.0), rho,
                                           varrho, Vector::Zero(1)),
                  ConfigError);
  Matrix rho2 = Matrix::Zero(2, 3);
  Matrix varrho2 = Matrix::Zero(2, 2);
  varrho2(0, 1) = 0.5;  // varrho above rho
  CHECK_THROWS_WITH_AS(
      measured_geometry_direct(2, Vector::Constant(2, 1.0), rho2, varrho2,
                               Vector::Zero(2)),
      doctest::Contains("exceeds rho"), ConfigError);
}

TEST_CASE("coefficient field validation") {
  const PartitionedMesh mesh = figure1_mesh(2);
  CHECK_THROWS_AS(subdomain_coefficients(mesh, {1.0, -1.0}, {0.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(subdomain_coefficients(mesh, {1.0, 1.0}, {0.0, -0.1}),
                  ConfigError);
  CHECK_THROWS_AS(subdomain_coefficients(mesh, {1.0}, {0.0}), ConfigError);
}
