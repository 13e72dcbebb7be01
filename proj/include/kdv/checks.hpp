#pragma once

// Self-contained property checks run by `kdv-spinn check`: derivatives
// against finite differences, residuals of the closed-form solutions,
// optimizer benchmarks and oracle conservation.

#include <cstdint>
#include <string>
#include <vector>

namespace kdv::checks {

struct Outcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Network jets (u_t, u_x, u_xx, u_xxx) vs fourth-order central differences
/// at random points; relative tolerances 1e-6 / 1e-6 / 1e-5 / 1e-3.
Outcome network_jets_vs_fd(std::uint64_t seed);

/// Parameter gradient of the full SP loss on a 2-8-1 net vs central
/// differences, relative to the gradient's max norm (<= 1e-5), for each case.
Outcome loss_gradient_vs_fd(std::uint64_t seed);

/// |residual| < 1e-6 at 1000 random points for the soliton and Hirota jets.
Outcome exact_residuals(std::uint64_t seed);

/// 256-node trapezoid mass/energy of the c = 1 soliton on [-20, 20].
Outcome soliton_invariants();

/// 10-D quadratic and 2-D Rosenbrock with strong-Wolfe verification.
Outcome optimizer_quadratic();
Outcome optimizer_rosenbrock();

/// ETDRK4 soliton to t = 1: max error < 1e-6, mass drift < 1e-10,
/// energy drift < 1e-8.
Outcome oracle_soliton();

/// Cosine case to t = 1 at dt and dt/2: change < 1e-8, conservation as above.
Outcome oracle_cosine();

std::vector<Outcome> property_suite(std::uint64_t seed = 20240611);

std::string format_line(const Outcome& o);

}  // namespace kdv::checks
