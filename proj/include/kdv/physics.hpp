#pragma once

// KdV equation u_t + eta u u_x + mu^2 u_xxx = 0: residual, benchmark cases,
// closed-form reference solutions and the mass/energy functionals.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kdv/jet.hpp"

namespace kdv::physics {

using autodiff::BasicJet;
using autodiff::Jet;

struct KdvParams {
  double eta = 6.0;  // nonlinearity
  double mu = 1.0;   // dispersion
};

enum class Boundary { dirichlet_zero, periodic };

struct Domain {
  double x_min = -1.0;
  double x_max = 1.0;
  double t_max = 1.0;
  Boundary bc = Boundary::dirichlet_zero;

  double length() const noexcept { return x_max - x_min; }
  /// Throws InvalidArgument unless x_min < x_max and t_max > 0.
  void validate() const;
};

enum class CaseName { one_soliton, two_soliton, cosine };

struct SolitonIc {
  double c = 1.0;
  double x0 = 0.0;
};

struct TwoSolitonIc {
  double c1 = 1.0;
  double c2 = 0.3;
  double x1 = -5.0;
  double x2 = 5.0;
};

struct CosineIc {};

using InitialCondition = std::variant<SolitonIc, TwoSolitonIc, CosineIc>;

struct CaseSpec {
  CaseName name = CaseName::one_soliton;
  KdvParams params;
  Domain domain;
  InitialCondition ic;

  /// u0(x).
  double initial(double x) const;
  /// Reference solution where one exists in closed form (soliton cases).
  std::optional<double> exact(double t, double x) const;
};

/// The shipped benchmark definitions.
CaseSpec preset(CaseName name);

std::string_view to_string(CaseName name);
std::string_view to_string(Boundary bc);
std::optional<CaseName> parse_case(std::string_view s);

/// r = u_t + eta u u_x + mu^2 u_xxx.
template <class T>
T residual(const BasicJet<T>& u, const KdvParams& p) {
  return u.vt + p.eta * (u.v * u.vx) + (p.mu * p.mu) * u.vxxx;
}

/// (c/2) sech^2(sqrt(c)/2 (x - c t - x0)).
double soliton(double t, double x, double c, double x0);

/// Closed-form jet of the one-soliton (sech^2 derivative polynomials in tanh).
Jet soliton_jet(double t, double x, double c, double x0);

/// Sum of two sech^2 profiles at t = 0.
double two_soliton_ic(double x, double c1, double c2, double x1, double x2);

/// Hirota two-soliton u = 2 d^2/dx^2 log f, f = 1 + e^th1 + e^th2 + A e^(th1+th2)
/// with k_i = sqrt(c_i), A = ((k1-k2)/(k1+k2))^2, th1 = k1(x - x1) - k1^3 t and
/// th2 = k2(x - x2) - k2^3 t - log A, so both solitary waves sit at x1, x2 at
/// t = 0 when the slower one is ahead. Evaluated via exponentials normalized
/// by their maximum (log-sum-exp), so large arguments cannot overflow.
double hirota_two_soliton(double t, double x, double c1, double c2, double x1,
                          double x2);
Jet hirota_two_soliton_jet(double t, double x, double c1, double c2, double x1,
                           double x2);

/// 2 d^2/dx^2 log(1 + sum_j a_j exp(p_j x + q_j t)), exact jet. Exposed for
/// single-soliton limit checks.
Jet log_exponential_jet(double t, double x, std::span<const double> log_amp,
                        std::span<const double> p, std::span<const double> q);

double cosine_ic(double x);

/// n >= 2 equispaced nodes on [a, b], endpoints included.
struct UniformGrid {
  double a = 0.0;
  double b = 1.0;
  std::size_t n = 2;

  double h() const noexcept { return (b - a) / static_cast<double>(n - 1); }
  double node(std::size_t i) const noexcept {
    return i + 1 == n ? b : a + static_cast<double>(i) * h();
  }
  std::vector<double> nodes() const;
  void validate() const;
};

/// Trapezoid rule over equispaced samples, sequential summation.
template <class T>
T trapezoid(std::span<const T> f, double h) {
  T interior(0.0);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) interior = interior + f[i];
  return h * (0.5 * (f.front() + f.back()) + interior);
}

/// Energy density mu^2/2 u_x^2 - eta/6 u^3.
template <class T>
T energy_density(const T& u, const T& ux, const KdvParams& p) {
  return (0.5 * p.mu * p.mu) * (ux * ux) - (p.eta / 6.0) * (u * u * u);
}

/// Trapezoid approximation of the mass integral of u.
double mass(std::span<const double> u, const UniformGrid& grid);

/// Trapezoid approximation of the Hamiltonian.
double energy(std::span<const double> u, std::span<const double> ux,
              const UniformGrid& grid, const KdvParams& params);

}  // namespace kdv::physics
