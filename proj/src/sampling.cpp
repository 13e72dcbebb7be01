#include "kdv/sampling.hpp"

#include <fstream>
#include <random>
#include <string>

#include "kdv/csv.hpp"
#include "kdv/error.hpp"

namespace kdv::sampling {

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw InvalidArgument("linspace needs at least 2 points");
  std::vector<double> v(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) v[i] = a + static_cast<double>(i) * h;
  v[n - 1] = b;
  return v;
}

TrainSet build_trainset(const physics::Domain& domain, std::uint64_t seed,
                        const SampleCounts& counts) {
  domain.validate();
  for (auto [name, n] : {std::pair{"n_ic", counts.n_ic}, std::pair{"n_f", counts.n_f},
                         std::pair{"n_b", counts.n_b}, std::pair{"n_t", counts.n_t},
                         std::pair{"n_q", counts.n_q}}) {
    if (n < 2) throw InvalidArgument(std::string(name) + " must be at least 2");
  }

  TrainSet set;
  set.ic_points = linspace(domain.x_min, domain.x_max, counts.n_ic);
  set.boundary_times = linspace(0.0, domain.t_max, counts.n_b);
  set.invariant_grid.times = linspace(0.0, domain.t_max, counts.n_t);
  set.invariant_grid.x = {domain.x_min, domain.x_max, counts.n_q};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto interior = [&](double lo, double hi) {
    for (;;) {
      const double v = lo + (hi - lo) * unit(rng);
      if (v > lo && v < hi) return v;
    }
  };
  set.collocation.reserve(counts.n_f);
  for (std::size_t i = 0; i < counts.n_f; ++i) {
    const double t = interior(0.0, domain.t_max);
    const double x = interior(domain.x_min, domain.x_max);
    set.collocation.push_back({t, x});
  }
  return set;
}

void write_points_csv(const TrainSet& set, const physics::Domain& domain,
                      const std::filesystem::path& path) {
  csv::Writer out(path, {"kind", "t", "x"});
  for (double x : set.ic_points) out.row("ic", 0.0, x);
  for (const auto& p : set.collocation) out.row("collocation", p.t, p.x);
  for (double t : set.boundary_times) out.row("boundary_lo", t, domain.x_min);
  for (double t : set.boundary_times) out.row("boundary_hi", t, domain.x_max);
  for (double t : set.invariant_grid.times) {
    for (double x : set.invariant_grid.x.nodes()) out.row("invariant", t, x);
  }
}

}  // namespace kdv::sampling
