#pragma once

// Fourier pseudo-spectral ETDRK4 integrator for periodic KdV, used as an
// independent numerical reference.
//
//   u_hat' = L u_hat + N(u_hat),  L = i mu^2 k^3,  N = -(eta/2) i k F(u^2)
//
// phi-coefficients are computed by averaging over 32 points on a unit circle
// around each L h (contour integral), which avoids cancellation for small |L h|.

#include <complex>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "kdv/error.hpp"
#include "kdv/physics.hpp"

namespace kdv::spectral {

struct SpectralConfig {
  std::size_t n_modes = 512;  // power of two, >= 32
  double dt = 1e-4;
  bool dealias = true;  // 2/3 rule
  double x_min = -1.0;  // periodic interval [x_min, x_max)
  double x_max = 1.0;

  void validate() const;
};

/// The field exceeded 1e6 in magnitude or became non-finite.
class BlowUp : public Error {
 public:
  BlowUp(std::string what, double time) : Error(std::move(what)), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> u;  // on the collocation grid x_j = x_min + j h
};

class Solution {
 public:
  Solution(SpectralConfig cfg, physics::KdvParams params, std::vector<Snapshot> snaps);

  const SpectralConfig& config() const noexcept { return cfg_; }
  const physics::KdvParams& params() const noexcept { return params_; }
  const std::vector<Snapshot>& snapshots() const noexcept { return snaps_; }
  std::vector<double> grid() const;
  double spacing() const noexcept;

  /// Trigonometric interpolant of snapshot `i` at arbitrary x (periodic).
  double evaluate(std::size_t i, double x) const;
  std::vector<double> evaluate(std::size_t i, std::span<const double> xs) const;
  /// x-derivative of the interpolant (Nyquist mode dropped).
  double evaluate_dx(std::size_t i, double x) const;

  /// Periodic trapezoid (spectrally accurate) invariants of snapshot `i`.
  double mass(std::size_t i) const;
  double energy(std::size_t i) const;

  /// Index of the snapshot taken at time t (exact match within 1e-12).
  std::size_t index_of(double t) const;

 private:
  const std::vector<std::complex<double>>& spectrum(std::size_t i) const;

  SpectralConfig cfg_;
  physics::KdvParams params_;
  std::vector<Snapshot> snaps_;
  mutable std::map<std::size_t, std::vector<std::complex<double>>> spectra_;
};

/// Integrates from u(0, x) = ic(x) and records the field at each of the
/// ascending `t_samples` (t = 0 allowed). Throws BlowUp on divergence.
Solution solve(const std::function<double(double)>& ic, const physics::KdvParams& params,
               const SpectralConfig& cfg, std::span<const double> t_samples);

/// Writes `t,x,u` rows for every snapshot.
void write_snapshots_csv(const Solution& sol, const std::filesystem::path& path);

}  // namespace kdv::spectral
