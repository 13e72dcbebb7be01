#pragma once

// Loss terms of the structure-preserving PINN and the gradient-normalization
// update of the invariant weights.

#include <string>
#include <utility>

#include <Eigen/Core>

#include "kdv/network.hpp"
#include "kdv/physics.hpp"
#include "kdv/sampling.hpp"
#include "kdv/tape.hpp"

namespace kdv::loss {

using autodiff::Graph;
using autodiff::Var;

enum class Mode { structure_preserving, vanilla };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view s);  // "sp" / "vanilla" or full names

struct WeightState {
  double gamma = 1.0;
  double omega = 1.0;
  double epsilon = 1e-8;
  int update_period = 10;
  double clamp_lo = 1e-2;
  double clamp_hi = 1e2;
  Mode mode = Mode::structure_preserving;

  /// Initial state: gamma = omega = 1 for structure_preserving, 0 for vanilla.
  static WeightState initial(Mode mode);
};

/// The five components on the graph and their weighted total.
struct LossBreakdown {
  Var ic, pde, bc, mass, energy;
  double gamma = 0.0;
  double omega = 0.0;
  Var total;
};

/// mean_i |u(0, x_i) - u0(x_i)|^2 over the IC nodes.
Var ic_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
            const physics::CaseSpec& spec);

/// mean squared KdV residual over the collocation points.
Var pde_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
             const physics::KdvParams& params);

/// Dirichlet: mean_i u(t_i,a)^2 + u(t_i,b)^2. Periodic: mean_i of squared
/// mismatches of u, u_x, u_xx between the two ends.
Var bc_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
            const physics::Domain& domain);

/// (mean_j |M(t_j) - M(0)|^2, mean_j |E(t_j) - E(0)|^2) over the invariant
/// grid times, t_0 = 0 included. M(0), E(0) are taken from the network.
std::pair<Var, Var> invariant_losses(Graph& g, const nn::Mlp& net,
                                     const sampling::TrainSet& set,
                                     const physics::KdvParams& params);

/// ic + pde + bc + gamma mass + omega energy with the state's frozen weights.
LossBreakdown total_loss(Graph& g, const nn::Mlp& net, const sampling::TrainSet& set,
                         const physics::CaseSpec& spec, const WeightState& state);

struct WeightUpdate {
  WeightState state;
  bool applied = false;
  double raw_gamma = 0.0;  // before clamping
  double raw_omega = 0.0;
  std::string warning;     // non-empty when the previous weights were kept
};

/// gamma = |grad pde| / (|grad mass| + eps), omega likewise with energy,
/// clamped to [clamp_lo, clamp_hi]. Non-finite norms keep the old weights.
WeightUpdate update_weights(const WeightState& state, const Eigen::VectorXd& grad_pde,
                            const Eigen::VectorXd& grad_mass,
                            const Eigen::VectorXd& grad_energy);

/// Plain-number snapshot of a breakdown.
struct LossValues {
  double ic = 0.0, pde = 0.0, bc = 0.0, mass = 0.0, energy = 0.0;
  double gamma = 0.0, omega = 0.0, total = 0.0;
};

LossValues values_of(const LossBreakdown& b);

/// Full-batch training objective over a fixed point set. Evaluating it builds
/// a fresh graph each call; the weights stay frozen until update() is called.
class Objective {
 public:
  Objective(nn::Mlp net, sampling::TrainSet set, physics::CaseSpec spec, WeightState state);

  std::size_t dimension() const noexcept { return net_.parameter_count(); }

  /// Total loss and its gradient at `theta`.
  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad);

  /// Recomputes gamma/omega from the component gradients at `theta`.
  WeightUpdate update(const Eigen::VectorXd& theta);

  const LossValues& last() const noexcept { return last_; }
  const WeightState& state() const noexcept { return state_; }
  const nn::Mlp& network() const noexcept { return net_; }
  const sampling::TrainSet& trainset() const noexcept { return set_; }
  const physics::CaseSpec& spec() const noexcept { return spec_; }

 private:
  nn::Mlp net_;
  sampling::TrainSet set_;
  physics::CaseSpec spec_;
  WeightState state_;
  LossValues last_;
};

}  // namespace kdv::loss
