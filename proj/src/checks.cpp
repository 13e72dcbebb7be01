#include "kdv/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "kdv/error.hpp"
#include "kdv/lbfgs.hpp"
#include "kdv/loss.hpp"
#include "kdv/network.hpp"
#include "kdv/physics.hpp"
#include "kdv/sampling.hpp"
#include "kdv/spectral.hpp"

namespace kdv::checks {

namespace {

using autodiff::Jet;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double fd(const std::function<double(double)>& f, double x, double h, int order) {
  const double p1 = f(x + h), m1 = f(x - h), p2 = f(x + 2.0 * h), m2 = f(x - 2.0 * h);
  switch (order) {
    case 1:
      return (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
    case 2:
      return (-p2 + 16.0 * p1 - 30.0 * f(x) + 16.0 * m1 - m2) / (12.0 * h * h);
    default: {
      const double p3 = f(x + 3.0 * h), m3 = f(x - 3.0 * h);
      return (-p3 + 8.0 * p2 - 13.0 * p1 + 13.0 * m1 - 8.0 * m2 + m3) / (8.0 * h * h * h);
    }
  }
}

double rel(double a, double ref) { return std::abs(a - ref) / std::max(1.0, std::abs(ref)); }

Outcome conservation_outcome(std::string name, const spectral::Solution& sol, double extra_err,
                             double err_tol, const std::string& err_label) {
  const std::size_t last = sol.snapshots().size() - 1;
  const double dm = std::abs(sol.mass(last) - sol.mass(0));
  const double de = std::abs(sol.energy(last) - sol.energy(0));
  Outcome o{std::move(name), extra_err < err_tol && dm < 1e-10 && de < 1e-8, {}};
  o.detail = err_label + " " + fmt("%.2e", extra_err) + ", mass drift " + fmt("%.2e", dm) +
             ", energy drift " + fmt("%.2e", de);
  return o;
}

}  // namespace

Outcome network_jets_vs_fd(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, 1.0), ux(-1.0, 1.0);
  double worst[4] = {0, 0, 0, 0};
  for (auto act : {nn::Activation::sine, nn::Activation::tanh}) {
    const nn::Mlp net = nn::Mlp::init(seed, 3, 16, act);
    for (int k = 0; k < 50; ++k) {
      const double t = ut(rng), x = ux(rng);
      const Jet j = net.forward_jet(t, x);
      auto ft = [&](double s) { return net.forward(s, x); };
      auto fx = [&](double s) { return net.forward(t, s); };
      worst[0] = std::max(worst[0], rel(j.vt, fd(ft, t, 1e-4, 1)));
      worst[1] = std::max(worst[1], rel(j.vx, fd(fx, x, 1e-4, 1)));
      worst[2] = std::max(worst[2], rel(j.vxx, fd(fx, x, 1e-3, 2)));
      worst[3] = std::max(worst[3], rel(j.vxxx, fd(fx, x, 1e-2, 3)));
    }
  }
  Outcome o{"network jets vs finite differences",
            worst[0] <= 1e-6 && worst[1] <= 1e-6 && worst[2] <= 1e-5 && worst[3] <= 1e-3, {}};
  o.detail = "worst relative error vt " + fmt("%.2e", worst[0]) + ", vx " + fmt("%.2e", worst[1]) +
             ", vxx " + fmt("%.2e", worst[2]) + ", vxxx " + fmt("%.2e", worst[3]);
  return o;
}

Outcome loss_gradient_vs_fd(std::uint64_t seed) {
  double worst = 0.0;
  for (auto name :
       {physics::CaseName::one_soliton, physics::CaseName::two_soliton, physics::CaseName::cosine}) {
    const auto spec = physics::preset(name);
    const auto set = sampling::build_trainset(spec.domain, seed, {6, 8, 6, 4, 16});
    loss::WeightState s;
    s.gamma = 0.7;
    s.omega = 1.9;
    loss::Objective obj(nn::Mlp::init(seed, 1, 8), set, spec, s);
    const Eigen::VectorXd theta = obj.network().flatten();
    Eigen::VectorXd grad(theta.size()), scratch(theta.size());
    obj(theta, grad);
    Eigen::VectorXd ref(theta.size());
    Eigen::VectorXd th = theta;
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < th.size(); ++i) {
      th[i] = theta[i] + h;
      const double fp = obj(th, scratch);
      th[i] = theta[i] - h;
      const double fm = obj(th, scratch);
      th[i] = theta[i];
      ref[i] = (fp - fm) / (2.0 * h);
    }
    worst = std::max(worst, (grad - ref).lpNorm<Eigen::Infinity>() /
                                ref.lpNorm<Eigen::Infinity>());
  }
  return {"loss gradient vs finite differences (2-8-1)", worst <= 1e-5,
          "worst relative error " + fmt("%.2e", worst)};
}

Outcome exact_residuals(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto one = physics::preset(physics::CaseName::one_soliton);
  const auto two = physics::preset(physics::CaseName::two_soliton);
  const auto& s1 = std::get<physics::SolitonIc>(one.ic);
  const auto& s2 = std::get<physics::TwoSolitonIc>(two.ic);
  double worst1 = 0.0, worst2 = 0.0;
  std::uniform_real_distribution<double> t1(0.0, one.domain.t_max),
      x1(one.domain.x_min, one.domain.x_max);
  std::uniform_real_distribution<double> t2(0.0, two.domain.t_max),
      x2(two.domain.x_min, two.domain.x_max);
  for (int k = 0; k < 1000; ++k) {
    const Jet a = physics::soliton_jet(t1(rng), x1(rng), s1.c, s1.x0);
    worst1 = std::max(worst1, std::abs(physics::residual(a, one.params)));
    const Jet b = physics::hirota_two_soliton_jet(t2(rng), x2(rng), s2.c1, s2.c2, s2.x1, s2.x2);
    worst2 = std::max(worst2, std::abs(physics::residual(b, two.params)));
  }
  return {"residual of the exact solutions", worst1 < 1e-6 && worst2 < 1e-6,
          "max |r| soliton " + fmt("%.2e", worst1) + ", Hirota " + fmt("%.2e", worst2)};
}

Outcome soliton_invariants() {
  const physics::UniformGrid grid{-20.0, 20.0, 256};
  const auto xs = grid.nodes();
  std::vector<double> u(xs.size()), ux(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Jet j = physics::soliton_jet(0.0, xs[i], 1.0, 0.0);
    u[i] = j.v;
    ux[i] = j.vx;
  }
  const double m = physics::mass(u, grid);
  const double e = physics::energy(u, ux, grid, {6.0, 1.0});
  return {"soliton invariants (256-node trapezoid)",
          std::abs(m - 2.0) <= 5e-4 && std::abs(e + 0.2) <= 5e-4,
          "mass " + fmt("%.6f", m) + ", energy " + fmt("%.6f", e)};
}

Outcome optimizer_quadratic() {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double w = static_cast<double>(i + 1);
      v += w * x[i] * x[i];
      g[i] = 2.0 * w * x[i];
    }
    return v;
  };
  optim::LbfgsConfig cfg;
  cfg.check_wolfe = true;
  const auto r = optim::minimize(f, Eigen::VectorXd::Ones(10), cfg);
  bool wolfe = true;
  for (const auto& it : r.trace) wolfe = wolfe && it.wolfe;
  return {"L-BFGS on a 10-D quadratic", r.x.norm() < 1e-10 && r.iterations <= 50 && wolfe,
          std::to_string(r.iterations) + " iterations, |x| " + fmt("%.2e", r.x.norm())};
}

Outcome optimizer_rosenbrock() {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  optim::LbfgsConfig cfg;
  cfg.check_wolfe = true;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto r = optim::minimize(f, x0, cfg);
  bool wolfe = true;
  for (const auto& it : r.trace) wolfe = wolfe && it.wolfe;
  const double dist = (r.x - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>();
  return {"L-BFGS on 2-D Rosenbrock", dist < 1e-8 && r.iterations <= 200 && wolfe,
          std::to_string(r.iterations) + " iterations, distance to (1,1) " + fmt("%.2e", dist)};
}

Outcome oracle_soliton() {
  const auto spec = physics::preset(physics::CaseName::one_soliton);
  spectral::SpectralConfig sc;
  sc.x_min = spec.domain.x_min;
  sc.x_max = spec.domain.x_max;
  const double times[] = {0.0, 1.0};
  const auto sol = spectral::solve([](double x) { return physics::soliton(0.0, x, 1.0, 0.0); },
                                   spec.params, sc, times);
  const auto xs = sol.grid();
  double err = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    err = std::max(err, std::abs(sol.snapshots()[1].u[j] - physics::soliton(1.0, xs[j], 1.0, 0.0)));
  }
  return conservation_outcome("spectral oracle on the one-soliton", sol, err, 1e-6,
                              "max error at t=1");
}

Outcome oracle_cosine() {
  const auto spec = physics::preset(physics::CaseName::cosine);
  spectral::SpectralConfig sc;
  sc.x_min = spec.domain.x_min;
  sc.x_max = spec.domain.x_max;
  const double times[] = {0.0, 1.0};
  auto ic = [&](double x) { return spec.initial(x); };
  const auto coarse = spectral::solve(ic, spec.params, sc, times);
  sc.dt *= 0.5;
  const auto fine = spectral::solve(ic, spec.params, sc, times);
  double change = 0.0;
  for (std::size_t j = 0; j < coarse.snapshots()[1].u.size(); ++j) {
    change = std::max(change, std::abs(coarse.snapshots()[1].u[j] - fine.snapshots()[1].u[j]));
  }
  return conservation_outcome("spectral oracle on the cosine case", coarse, change, 1e-8,
                              "dt-halving change");
}

std::vector<Outcome> property_suite(std::uint64_t seed) {
  std::vector<std::function<Outcome()>> all = {
      [&] { return network_jets_vs_fd(seed); },
      [&] { return loss_gradient_vs_fd(seed); },
      [&] { return exact_residuals(seed); },
      soliton_invariants,
      optimizer_quadratic,
      optimizer_rosenbrock,
      oracle_soliton,
      oracle_cosine,
  };
  std::vector<Outcome> out;
  for (const auto& check : all) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

std::string format_line(const Outcome& o) {
  return std::string(o.passed ? "PASS" : "FAIL") + "  " + o.name + ": " + o.detail;
}

}  // namespace kdv::checks
