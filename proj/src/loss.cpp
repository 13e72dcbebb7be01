#include "kdv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kdv/error.hpp"

namespace kdv::loss {

using nn::Derivs;
using nn::Point;

std::string_view to_string(Mode mode) {
  return mode == Mode::vanilla ? "vanilla" : "structure_preserving";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "sp" || s == "structure_preserving") return Mode::structure_preserving;
  if (s == "vanilla") return Mode::vanilla;
  return std::nullopt;
}

WeightState WeightState::initial(Mode mode) {
  WeightState s;
  s.mode = mode;
  if (mode == Mode::vanilla) s.gamma = s.omega = 0.0;
  return s;
}

Var ic_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
            const physics::CaseSpec& spec) {
  std::vector<Point> pts;
  pts.reserve(set.ic_points.size());
  for (double x : set.ic_points) pts.push_back({0.0, x});
  const auto u = net.forward_jets(g, pts, Derivs::value);
  std::vector<Var> terms;
  terms.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    terms.push_back(square(u[i].v - spec.initial(set.ic_points[i])));
  }
  return mean(terms);
}

Var pde_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
             const physics::KdvParams& params) {
  const auto u = net.forward_jets(g, set.collocation, Derivs::full);
  std::vector<Var> terms;
  terms.reserve(u.size());
  for (const auto& j : u) terms.push_back(square(physics::residual(j, params)));
  return mean(terms);
}

Var bc_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
            const physics::Domain& domain) {
  const std::size_t n = set.boundary_times.size();
  std::vector<Point> pts;
  pts.reserve(2 * n);
  for (double t : set.boundary_times) pts.push_back({t, domain.x_min});
  for (double t : set.boundary_times) pts.push_back({t, domain.x_max});

  std::vector<Var> terms;
  terms.reserve(n);
  if (domain.bc == physics::Boundary::dirichlet_zero) {
    const auto u = net.forward_jets(g, pts, Derivs::value);
    for (std::size_t i = 0; i < n; ++i) terms.push_back(square(u[i].v) + square(u[n + i].v));
  } else {
    const auto u = net.forward_jets(g, pts, Derivs::space2);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& lo = u[i];
      const auto& hi = u[n + i];
      terms.push_back(square(lo.v - hi.v) + square(lo.vx - hi.vx) + square(lo.vxx - hi.vxx));
    }
  }
  return mean(terms);
}

std::pair<Var, Var> invariant_losses(Graph& g, const nn::Mlp& net,
                                     const sampling::TrainSet& set,
                                     const physics::KdvParams& params) {
  const auto& grid = set.invariant_grid;
  grid.x.validate();
  const std::vector<double> xs = grid.x.nodes();
  const std::size_t nq = xs.size();
  std::vector<Point> pts;
  pts.reserve(grid.times.size() * nq);
  for (double t : grid.times) {
    for (double x : xs) pts.push_back({t, x});
  }
  const auto u = net.forward_jets(g, pts, Derivs::space1);

  const double h = grid.x.h();
  std::vector<Var> masses, energies;
  std::vector<Var> row_u(nq), row_e(nq);
  for (std::size_t j = 0; j < grid.times.size(); ++j) {
    for (std::size_t k = 0; k < nq; ++k) {
      const auto& jet = u[j * nq + k];
      row_u[k] = jet.v;
      row_e[k] = physics::energy_density(jet.v, jet.vx, params);
    }
    masses.push_back(physics::trapezoid(std::span<const Var>(row_u), h));
    energies.push_back(physics::trapezoid(std::span<const Var>(row_e), h));
  }

  std::vector<Var> dm, de;
  for (std::size_t j = 0; j < masses.size(); ++j) {
    dm.push_back(square(masses[j] - masses[0]));
    de.push_back(square(energies[j] - energies[0]));
  }
  return {mean(dm), mean(de)};
}

LossBreakdown total_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
                         const physics::CaseSpec& spec, const WeightState& state) {
  LossBreakdown b;
  b.ic = ic_loss(g, net, set, spec);
  b.pde = pde_loss(g, net, set, spec.params);
  b.bc = bc_loss(g, net, set, spec.domain);
  std::tie(b.mass, b.energy) = invariant_losses(g, net, set, spec.params);
  b.gamma = state.mode == Mode::vanilla ? 0.0 : state.gamma;
  b.omega = state.mode == Mode::vanilla ? 0.0 : state.omega;
  b.total = b.ic + b.pde + b.bc + b.gamma * b.mass + b.omega * b.energy;
  g.check_finite();
  return b;
}

WeightUpdate update_weights(const WeightState& state, const Eigen::VectorXd& grad_pde,
                            const Eigen::VectorXd& grad_mass,
                            const Eigen::VectorXd& grad_energy) {
  if (state.mode != Mode::structure_preserving) {
    throw InvalidArgument("weight updates only apply in structure_preserving mode");
  }
  if (grad_pde.size() != grad_mass.size() || grad_pde.size() != grad_energy.size()) {
    throw InvalidArgument("component gradients differ in length");
  }
  WeightUpdate up;
  up.state = state;
  const double n_pde = grad_pde.norm();
  const double n_mass = grad_mass.norm();
  const double n_energy = grad_energy.norm();
  up.raw_gamma = n_pde / (n_mass + state.epsilon);
  up.raw_omega = n_pde / (n_energy + state.epsilon);
  if (!std::isfinite(up.raw_gamma) || !std::isfinite(up.raw_omega)) {
    up.warning = "non-finite gradient norm (pde " + std::to_string(n_pde) + ", mass " +
                 std::to_string(n_mass) + ", energy " + std::to_string(n_energy) +
                 "); keeping previous weights";
    return up;
  }
  up.state.gamma = std::clamp(up.raw_gamma, state.clamp_lo, state.clamp_hi);
  up.state.omega = std::clamp(up.raw_omega, state.clamp_lo, state.clamp_hi);
  up.applied = true;
  return up;
}

LossValues values_of(const LossBreakdown& b) {
  return {b.ic.value(), b.pde.value(), b.bc.value(), b.mass.value(), b.energy.value(),
          b.gamma,      b.omega,       b.total.value()};
}

Objective::Objective(nn::Mlp net, sampling::TrainSet set, physics::CaseSpec spec,
                     WeightState state)
    : net_(std::move(net)), set_(std::move(set)), spec_(std::move(spec)), state_(state) {}

double Objective::operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  net_.unflatten(theta);
  Graph g(net_.parameter_count());
  const LossBreakdown b = total_loss(g, net_, set_, spec_, state_);
  last_ = values_of(b);
  grad = g.backward(b.total);
  return last_.total;
}

WeightUpdate Objective::update(const Eigen::VectorXd& theta) {
  net_.unflatten(theta);
  Graph g(net_.parameter_count());
  const LossBreakdown b = total_loss(g, net_, set_, spec_, state_);
  const WeightUpdate up =
      update_weights(state_, g.backward(b.pde), g.backward(b.mass), g.backward(b.energy));
  state_ = up.state;
  return up;
}

}  // namespace kdv::loss
