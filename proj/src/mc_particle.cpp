#include "membrane/mc_particle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace membrane {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter) {
  std::array<std::uint32_t, 4> c = counter;
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(c, k0, k1);
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
  }
  return c;
}

namespace {

constexpr long kBlockSize = 8192;

inline double to_unit(std::uint32_t x) {
  // (0, 1]: safe as a log() argument
  return (static_cast<double>(x) + 1.0) * 0x1p-32;
}

/// Per-subdomain data of a 1d partitioned mesh in walk-friendly form.
struct Walk1d {
  int n = 0;
  std::vector<double> edge;       // n+1 subdomain boundaries
  std::vector<double> sigma;      // step stddev per subdomain
  std::vector<double> p_ckill;    // 1 - exp(-c dt)
  std::vector<double> a, c;
  // membrane m sits at edge[m+1] between subdomains m and m+1 (0-based)
  std::vector<double> p_cross_from_left;   // tau_left-side acceptance
  std::vector<double> p_cross_from_right;  // tau_right-side acceptance
  std::vector<double> b_lr, b_rl;
  double p_kill_left = 0.0;   // outer Robin at edge[0]
  double p_kill_right = 0.0;  // outer Robin at edge[n]
  bool any_potential = false;
};

Walk1d prepare_walk(const PartitionedMesh& mesh, const CoefficientField& coeff,
                    double kappa, double dt) {
  if (mesh.dimension != 1) {
    throw ConfigError("the particle walk supports 1d meshes only");
  }
  if (!(dt > 0.0)) throw ConfigError("mc dt must be positive");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  coeff.validate();

  Walk1d w;
  w.n = mesh.n_subdomains;
  w.edge.assign(w.n + 1, 0.0);
  w.a.assign(w.n, 0.0);
  w.c.assign(w.n, 0.0);
  std::vector<bool> seen(w.n, false);
  double min_width = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    const int k = mesh.cell_subdomain[i] - 1;
    const double x0 = mesh.cell_centers(i, 0) - 0.5 * mesh.cell_volumes[i];
    const double x1 = mesh.cell_centers(i, 0) + 0.5 * mesh.cell_volumes[i];
    if (!seen[k]) {
      w.edge[k] = x0;
      w.edge[k + 1] = x1;
      w.a[k] = coeff.a[i];
      w.c[k] = coeff.c[i];
      seen[k] = true;
    } else {
      w.edge[k] = std::min(w.edge[k], x0);
      w.edge[k + 1] = std::max(w.edge[k + 1], x1);
      if (coeff.a[i] != w.a[k] || coeff.c[i] != w.c[k]) {
        throw ConfigError("mc needs per-subdomain constant coefficients");
      }
    }
    min_width = std::min(min_width, mesh.cell_volumes[i]);
  }

  for (int k = 0; k < w.n; ++k) {
    w.sigma.push_back(std::sqrt(2.0 * kappa * w.a[k] * dt));
    w.p_ckill.push_back(-std::expm1(-w.c[k] * dt));
    if (w.c[k] > 0.0) w.any_potential = true;
    if (!(w.sigma[k] < min_width)) {
      throw ConfigError("mc dt too large: step stddev exceeds the min cell width");
    }
  }

  auto contact_probability = [&](double tau, double a_side) {
    const double p = tau * std::sqrt(M_PI * dt / (kappa * a_side));
    if (p > 1.0) {
      throw ConfigError("mc dt too large for tau/kappa: crossing probability " +
                        std::to_string(p) + " exceeds 1");
    }
    return p;
  };

  w.p_cross_from_left.assign(w.n - 1, 0.0);
  w.p_cross_from_right.assign(w.n - 1, 0.0);
  w.b_lr.assign(w.n - 1, 1.0);
  w.b_rl.assign(w.n - 1, 1.0);
  for (const auto& f : mesh.membrane_faces) {
    const int m = std::min(f.left, f.right) - 1;
    w.p_cross_from_left[m] = contact_probability(f.tau_left, w.a[f.left - 1]);
    w.p_cross_from_right[m] = contact_probability(f.tau_right, w.a[f.right - 1]);
    w.b_lr[m] = f.b_left_right;
    w.b_rl[m] = f.b_right_left;
  }
  for (const auto& f : mesh.outer_faces) {
    const double p = contact_probability(f.tau, w.a[f.subdomain - 1]);
    if (f.subdomain == 1 && std::abs(f.center[0] - w.edge[0]) < 1e-12) {
      w.p_kill_left = p;
    } else {
      w.p_kill_right = p;
    }
  }
  return w;
}

/// One particle-step.  Returns false if the particle dies.
/// `u_decide` drives the combined crossing/survival draw, `z` the move.
inline bool advance(const Walk1d& w, double& x, int& sub, double z,
                    double u_decide) {
  double nx = x + w.sigma[sub] * z;
  // Resolve boundary events; the step stddev is below the cell width, so
  // more than a couple of iterations is practically impossible.
  for (int guard = 0; guard < 64; ++guard) {
    if (nx < w.edge[sub]) {
      if (sub == 0) {  // outer left boundary
        if (u_decide < w.p_kill_left) return false;
        nx = 2.0 * w.edge[0] - nx;
      } else {
        const int m = sub - 1;  // membrane from its right side
        const double p = w.p_cross_from_right[m];
        if (u_decide < p * w.b_rl[m]) {
          --sub;  // crossed and survived
          continue;
        }
        if (u_decide < p) return false;  // crossed and was killed
        nx = 2.0 * w.edge[sub] - nx;     // reflected
      }
    } else if (nx > w.edge[sub + 1]) {
      if (sub == w.n - 1) {  // outer right boundary
        if (u_decide < w.p_kill_right) return false;
        nx = 2.0 * w.edge[w.n] - nx;
      } else {
        const int m = sub;  // membrane from its left side
        const double p = w.p_cross_from_left[m];
        if (u_decide < p * w.b_lr[m]) {
          ++sub;
          continue;
        }
        if (u_decide < p) return false;
        nx = 2.0 * w.edge[sub + 1] - nx;
      }
    } else {
      x = nx;
      return true;
    }
  }
  throw NumericalError("particle step failed to settle after 64 reflections");
}

struct BlockCounts {
  std::vector<std::int64_t> counts;  // n_times * n
};

void run_block(const Walk1d& w, const std::vector<double>& cell_cdf,
               const PartitionedMesh& mesh, std::uint64_t seed, long block,
               long first, long last, const std::vector<long>& record_steps,
               long total_steps, BlockCounts& out) {
  const int n_sub = w.n;
  out.counts.assign(record_steps.size() * static_cast<std::size_t>(n_sub), 0);

  for (long p = first; p < last; ++p) {
    const std::uint32_t pid = static_cast<std::uint32_t>(p - block * kBlockSize);
    const std::uint32_t bid = static_cast<std::uint32_t>(block);
    std::uint32_t draw = 0;
    auto next_block = [&]() {
      return philox4x32(seed, {draw++, pid, bid, 0x6d656d62u});
    };

    // initial position from the density CDF over cells
    const auto init = next_block();
    const double u_cell = to_unit(init[0]);
    const std::size_t cell =
        std::lower_bound(cell_cdf.begin(), cell_cdf.end(), u_cell) -
        cell_cdf.begin();
    const Index ci = static_cast<Index>(std::min(cell, cell_cdf.size() - 1));
    double x = mesh.cell_centers(ci, 0) +
               (to_unit(init[1]) - 0.5) * mesh.cell_volumes[ci];
    int sub = mesh.cell_subdomain[ci] - 1;
    bool alive = true;

    std::size_t rec = 0;
    for (long step = 0; step < total_steps && alive; ++step) {
      while (rec < record_steps.size() && record_steps[rec] == step) {
        ++out.counts[rec * n_sub + sub];
        ++rec;
      }
      if (w.any_potential) {
        const auto r = next_block();
        const double z = std::sqrt(-2.0 * std::log(to_unit(r[0]))) *
                         std::cos(2.0 * M_PI * to_unit(r[1]));
        alive = advance(w, x, sub, z, to_unit(r[2]));
        if (alive && w.p_ckill[sub] > 0.0 && to_unit(r[3]) < w.p_ckill[sub]) {
          alive = false;
        }
      } else {
        // no potential: one Philox block covers two steps
        const auto r = next_block();
        const double radius = std::sqrt(-2.0 * std::log(to_unit(r[0])));
        const double angle = 2.0 * M_PI * to_unit(r[1]);
        alive = advance(w, x, sub, radius * std::cos(angle), to_unit(r[2]));
        ++step;
        if (alive && step < total_steps) {
          while (rec < record_steps.size() && record_steps[rec] == step) {
            ++out.counts[rec * n_sub + sub];
            ++rec;
          }
          alive = advance(w, x, sub, radius * std::sin(angle), to_unit(r[3]));
        } else if (!alive) {
          break;
        }
      }
    }
    if (alive) {
      while (rec < record_steps.size()) {
        ++out.counts[rec * n_sub + sub];
        ++rec;
      }
    }
  }
}

}  // namespace

McResult simulate(const PartitionedMesh& mesh, const CoefficientField& coeff,
                  double kappa, const Vector& u0_density,
                  const std::vector<double>& t_grid, const McOptions& options) {
  if (options.n_particles <= 0) {
    throw ConfigError("n_particles must be positive");
  }
  if (u0_density.size() != mesh.n_cells()) {
    throw ConfigError("initial density length does not match the mesh");
  }
  if ((u0_density.array() < 0.0).any()) {
    throw ConfigError("initial density must be nonnegative");
  }
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    if (!(t_grid[i] < t_grid[i + 1])) {
      throw ConfigError("t_grid must be strictly increasing");
    }
  }
  const Walk1d w = prepare_walk(mesh, coeff, kappa, options.dt);

  // sampling CDF over cells, weighted by density * volume
  std::vector<double> cdf(mesh.n_cells());
  double total = 0.0;
  for (Index i = 0; i < mesh.n_cells(); ++i) {
    total += u0_density[i] * mesh.cell_volumes[i];
    cdf[static_cast<std::size_t>(i)] = total;
  }
  if (!(total > 0.0)) throw ConfigError("initial density must have positive mass");
  for (auto& v : cdf) v /= total;

  std::vector<long> record_steps;
  long total_steps = 0;
  for (double t : t_grid) {
    if (t < 0.0) throw ConfigError("t_grid times must be nonnegative");
    const long s = std::lround(t / options.dt);
    record_steps.push_back(s);
    total_steps = std::max(total_steps, s);
  }
  ++total_steps;  // record at the final step index as well

  const long n = options.n_particles;
  const long n_blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<BlockCounts> per_block(static_cast<std::size_t>(n_blocks));

  const int workers =
      std::max(1, std::min<int>(options.workers, static_cast<int>(n_blocks)));
  std::atomic<long> next{0};
  auto work = [&]() {
    for (;;) {
      const long b = next.fetch_add(1);
      if (b >= n_blocks) break;
      run_block(w, cdf, mesh, options.seed, b, b * kBlockSize,
                std::min(n, (b + 1) * kBlockSize), record_steps, total_steps,
                per_block[static_cast<std::size_t>(b)]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  McResult result;
  result.times = t_grid;
  result.occupancy = Matrix::Zero(static_cast<Index>(t_grid.size()), w.n);
  result.standard_error = Matrix::Zero(static_cast<Index>(t_grid.size()), w.n);
  for (const auto& bc : per_block) {
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
      for (int k = 0; k < w.n; ++k) {
        result.occupancy(static_cast<Index>(ti), k) +=
            static_cast<double>(bc.counts[ti * w.n + k]);
      }
    }
  }
  result.occupancy /= static_cast<double>(n);
  for (Index ti = 0; ti < result.occupancy.rows(); ++ti) {
    for (int k = 0; k < w.n; ++k) {
      const double p = result.occupancy(ti, k);
      result.standard_error(ti, k) = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    }
  }
  return result;
}

}  // namespace membrane
