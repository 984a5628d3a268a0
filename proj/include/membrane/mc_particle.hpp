#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "membrane/geometry.hpp"
#include "membrane/types.hpp"

namespace membrane {

/// Philox 4x32-10 counter-based generator.  A block of four 32-bit words
/// is a pure function of (key, counter), so independent streams are just
/// distinct counter prefixes and parallel runs reproduce serial ones.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter);

struct McOptions {
  long n_particles = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;  // capped by the caller (MEMBRANE_THREADS)
};

struct McResult {
  std::vector<double> times;
  Matrix occupancy;       // n_times x N, live fraction per subdomain
  Matrix standard_error;  // n_times x N, binomial
};

/// Euler-Maruyama walk of the underlying process on a 1d mesh: reflection
/// at Neumann ends, membrane crossing accepted with probability
/// tau_side sqrt(pi dt / (kappa a)), killing via survival factors b, the
/// outer Robin permeability and the potential c.  Particles are assigned
/// to fixed-size blocks with one RNG stream each, so the result depends
/// on (seed, n_particles) but not on the worker count.
McResult simulate(const PartitionedMesh& mesh, const CoefficientField& coeff,
                  double kappa, const Vector& u0_density,
                  const std::vector<double>& t_grid, const McOptions& options);

}  // namespace membrane
