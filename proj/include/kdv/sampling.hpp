#pragma once

// Fixed training point sets, generated once before optimization.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kdv/network.hpp"
#include "kdv/physics.hpp"

namespace kdv::sampling {

struct SampleCounts {
  std::size_t n_ic = 128;
  std::size_t n_f = 8192;
  std::size_t n_b = 128;
  std::size_t n_t = 24;
  std::size_t n_q = 256;
};

struct InvariantGrid {
  std::vector<double> times;  // equispaced on [0, T], starts at 0
  physics::UniformGrid x;     // quadrature nodes on [a, b]
};

struct TrainSet {
  std::vector<double> ic_points;        // x at t = 0, equispaced with endpoints
  std::vector<nn::Point> collocation;   // strictly interior (t, x)
  std::vector<double> boundary_times;   // equispaced on [0, T]
  InvariantGrid invariant_grid;
};

/// Equispaced values on [a, b] including both endpoints (n >= 2).
std::vector<double> linspace(double a, double b, std::size_t n);

/// Collocation points are uniform pseudo-random from a 64-bit Mersenne
/// twister seeded with `seed`; everything else is deterministic.
TrainSet build_trainset(const physics::Domain& domain, std::uint64_t seed,
                        const SampleCounts& counts = {});

/// Writes `kind,t,x` rows (kinds: ic, collocation, boundary_lo, boundary_hi,
/// invariant).
void write_points_csv(const TrainSet& set, const physics::Domain& domain,
                      const std::filesystem::path& path);

}  // namespace kdv::sampling
