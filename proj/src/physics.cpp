#include "kdv/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "kdv/error.hpp"

namespace kdv::physics {

void Domain::validate() const {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw InvalidArgument("degenerate spatial interval [" + std::to_string(x_min) + ", " +
                          std::to_string(x_max) + "]");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw InvalidArgument("time horizon must be positive, got " + std::to_string(t_max));
  }
}

double CaseSpec::initial(double x) const {
  return std::visit(
      [x](const auto& ic) -> double {
        using T = std::decay_t<decltype(ic)>;
        if constexpr (std::is_same_v<T, SolitonIc>) {
          return soliton(0.0, x, ic.c, ic.x0);
        } else if constexpr (std::is_same_v<T, TwoSolitonIc>) {
          return two_soliton_ic(x, ic.c1, ic.c2, ic.x1, ic.x2);
        } else {
          return cosine_ic(x);
        }
      },
      ic);
}

std::optional<double> CaseSpec::exact(double t, double x) const {
  if (const auto* s = std::get_if<SolitonIc>(&ic)) return soliton(t, x, s->c, s->x0);
  if (const auto* s = std::get_if<TwoSolitonIc>(&ic)) {
    return hirota_two_soliton(t, x, s->c1, s->c2, s->x1, s->x2);
  }
  return std::nullopt;
}

CaseSpec preset(CaseName name) {
  switch (name) {
    case CaseName::one_soliton:
      return {name, {6.0, 1.0}, {-20.0, 20.0, 3.0, Boundary::dirichlet_zero}, SolitonIc{1.0, 0.0}};
    case CaseName::two_soliton:
      return {name,
              {6.0, 1.0},
              {-40.0, 40.0, 10.0 * std::numbers::pi, Boundary::dirichlet_zero},
              TwoSolitonIc{1.0, 0.3, -5.0, 5.0}};
    case CaseName::cosine:
      return {name, {1.0, 0.05}, {-1.0, 1.0, 1.0, Boundary::periodic}, CosineIc{}};
  }
  throw InvalidArgument("unknown case");
}

std::string_view to_string(CaseName name) {
  switch (name) {
    case CaseName::one_soliton: return "one_soliton";
    case CaseName::two_soliton: return "two_soliton";
    case CaseName::cosine: return "cosine";
  }
  return "?";
}

std::string_view to_string(Boundary bc) {
  return bc == Boundary::periodic ? "periodic" : "dirichlet_zero";
}

std::optional<CaseName> parse_case(std::string_view s) {
  for (CaseName c : {CaseName::one_soliton, CaseName::two_soliton, CaseName::cosine}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

double soliton(double t, double x, double c, double x0) {
  if (!(c > 0.0)) throw InvalidArgument("soliton speed must be positive");
  const double s = 1.0 / std::cosh(0.5 * std::sqrt(c) * (x - c * t - x0));
  return 0.5 * c * s * s;
}

Jet soliton_jet(double t, double x, double c, double x0) {
  if (!(c > 0.0)) throw InvalidArgument("soliton speed must be positive");
  const double amp = 0.5 * c;
  const double kappa = 0.5 * std::sqrt(c);
  const double th = std::tanh(kappa * (x - c * t - x0));
  const double th2 = th * th;
  // y(z) = sech^2 z = 1 - tanh^2 z and its z-derivatives as polynomials in tanh.
  const double y0 = 1.0 - th2;
  const double y1 = -2.0 * th + 2.0 * th * th2;
  const double y2 = -2.0 + 8.0 * th2 - 6.0 * th2 * th2;
  const double y3 = 16.0 * th - 40.0 * th * th2 + 24.0 * th * th2 * th2;
  Jet j;
  j.v = amp * y0;
  j.vx = amp * kappa * y1;
  j.vxx = amp * kappa * kappa * y2;
  j.vxxx = amp * kappa * kappa * kappa * y3;
  j.vt = -c * j.vx;
  return j;
}

double two_soliton_ic(double x, double c1, double c2, double x1, double x2) {
  return soliton(0.0, x, c1, x1) + soliton(0.0, x, c2, x2);
}

Jet log_exponential_jet(double t, double x, std::span<const double> log_amp,
                        std::span<const double> p, std::span<const double> q) {
  const std::size_t m = log_amp.size();
  if (p.size() != m || q.size() != m) throw InvalidArgument("exponent lists differ in length");
  // Terms: the implicit 1 (exponent 0) followed by the given exponentials.
  double emax = 0.0;
  for (std::size_t j = 0; j < m; ++j) emax = std::max(emax, log_amp[j] + p[j] * x + q[j] * t);
  double w_sum = std::exp(-emax);
  std::array<double, 6> fx{};  // sum w p^n
  std::array<double, 3> ft{};  // sum w p^n q
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::exp(log_amp[j] + p[j] * x + q[j] * t - emax);
    w_sum += w;
    double pn = 1.0;
    for (std::size_t n = 1; n < fx.size(); ++n) {
      pn *= p[j];
      fx[n] += w * pn;
      if (n < ft.size()) ft[n] += w * pn * q[j];
    }
    ft[0] += w * q[j];
  }
  std::array<double, 6> F{};
  for (std::size_t n = 1; n < F.size(); ++n) F[n] = fx[n] / w_sum;
  std::array<double, 3> G{};
  for (std::size_t n = 0; n < G.size(); ++n) G[n] = ft[n] / w_sum;

  // x-derivatives of log f are the cumulants of the normalized weights.
  const double F1 = F[1], F2 = F[2], F3 = F[3], F4 = F[4], F5 = F[5];
  const double g2 = F2 - F1 * F1;
  const double g3 = F3 - 3.0 * F1 * F2 + 2.0 * F1 * F1 * F1;
  const double g4 = F4 - 4.0 * F1 * F3 - 3.0 * F2 * F2 + 12.0 * F1 * F1 * F2 -
                    6.0 * F1 * F1 * F1 * F1;
  const double g5 = F5 - 5.0 * F1 * F4 - 10.0 * F2 * F3 + 20.0 * F1 * F1 * F3 +
                    30.0 * F1 * F2 * F2 - 60.0 * F1 * F1 * F1 * F2 +
                    24.0 * F1 * F1 * F1 * F1 * F1;
  // d/dt F_n = G_n - F_n G_0.
  const double dF1 = G[1] - F1 * G[0];
  const double dF2 = G[2] - F2 * G[0];
  const double g2t = dF2 - 2.0 * F1 * dF1;

  return {2.0 * g2, 2.0 * g2t, 2.0 * g3, 2.0 * g4, 2.0 * g5};
}

namespace {

struct HirotaTerms {
  std::array<double, 3> log_amp;
  std::array<double, 3> p;
  std::array<double, 3> q;
};

HirotaTerms hirota_terms(double c1, double c2, double x1, double x2) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidArgument("soliton speeds must be positive");
  if (c1 == c2) throw InvalidArgument("two-soliton solution needs distinct speeds");
  const double k1 = std::sqrt(c1);
  const double k2 = std::sqrt(c2);
  const double log_a = 2.0 * std::log(std::abs(k1 - k2) / (k1 + k2));
  return {{-k1 * x1, -k2 * x2 - log_a, -k1 * x1 - k2 * x2},
          {k1, k2, k1 + k2},
          {-k1 * k1 * k1, -k2 * k2 * k2, -k1 * k1 * k1 - k2 * k2 * k2}};
}

}  // namespace

Jet hirota_two_soliton_jet(double t, double x, double c1, double c2, double x1, double x2) {
  const HirotaTerms h = hirota_terms(c1, c2, x1, x2);
  return log_exponential_jet(t, x, h.log_amp, h.p, h.q);
}

double hirota_two_soliton(double t, double x, double c1, double c2, double x1, double x2) {
  return hirota_two_soliton_jet(t, x, c1, c2, x1, x2).v;
}

double cosine_ic(double x) { return std::cos(std::numbers::pi * x); }

std::vector<double> UniformGrid::nodes() const {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = node(i);
  return v;
}

void UniformGrid::validate() const {
  if (n < 2) throw InvalidArgument("quadrature grid needs at least 2 nodes");
  if (!(a < b)) throw InvalidArgument("quadrature grid needs a < b");
}

double mass(std::span<const double> u, const UniformGrid& grid) {
  grid.validate();
  if (u.size() != grid.n) {
    throw InvalidArgument("mass: " + std::to_string(u.size()) + " samples for a " +
                          std::to_string(grid.n) + "-node grid");
  }
  return trapezoid(u, grid.h());
}

double energy(std::span<const double> u, std::span<const double> ux, const UniformGrid& grid,
              const KdvParams& params) {
  grid.validate();
  if (u.size() != grid.n || ux.size() != grid.n) {
    throw InvalidArgument("energy: sample counts (" + std::to_string(u.size()) + ", " +
                          std::to_string(ux.size()) + ") do not match the " +
                          std::to_string(grid.n) + "-node grid");
  }
  std::vector<double> density(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) density[i] = energy_density(u[i], ux[i], params);
  return trapezoid(std::span<const double>(density), grid.h());
}

}  // namespace kdv::physics
