#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kdv/error.hpp"
#include "kdv/lbfgs.hpp"
#include "kdv/loss.hpp"
#include "support/oracles.hpp"

using namespace kdv::loss;
using kdv::nn::Mlp;
using kdv::physics::CaseName;
using kdv::physics::preset;
using kdv::sampling::build_trainset;
using kdv::sampling::SampleCounts;
using kdv::sampling::TrainSet;

namespace {

/// One hidden neuron: u = w_out * sin(a t + b x + c).
Mlp neuron(double a, double b, double c, double w_out = 1.0) {
  Mlp net(1, 1);
  net.layers()[0].weight << a, b;
  net.layers()[0].bias << c;
  net.layers()[1].weight << w_out;
  net.layers()[1].bias << 0.0;
  return net;
}

constexpr std::size_t kNeuronParams = 5;
const SampleCounts kTiny{4, 4, 4, 3, 8};

}  // namespace

TEST_CASE("mode names") {
  CHECK(parse_mode("sp") == Mode::structure_preserving);
  CHECK(parse_mode("structure_preserving") == Mode::structure_preserving);
  CHECK(parse_mode("vanilla") == Mode::vanilla);
  CHECK_FALSE(parse_mode("other").has_value());
  CHECK(WeightState::initial(Mode::vanilla).gamma == 0.0);
  CHECK(WeightState::initial(Mode::structure_preserving).omega == 1.0);
}

TEST_CASE("initial-condition loss") {
  const auto spec = preset(CaseName::cosine);
  TrainSet set = build_trainset(spec.domain, 1, {9, 4, 4, 3, 8});
  {
    // cos(pi x) = sin(pi x + pi/2) reproduces the IC at every node.
    Graph g(kNeuronParams);
    CHECK(ic_loss(g, neuron(0.0, M_PI, M_PI / 2), set, spec).value() < 1e-30);
  }
  {
    // Predictions (1, 0) against targets cos(+-pi/2) = 0.
    set.ic_points = {0.5, -0.5};
    Graph g(kNeuronParams);
    const double v = ic_loss(g, neuron(0.0, M_PI / 2, M_PI / 4), set, spec).value();
    CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("zero network has zero residual, boundary and invariant losses") {
  const auto spec = preset(CaseName::one_soliton);
  const TrainSet set = build_trainset(spec.domain, 2, kTiny);
  const Mlp net(2, 5);
  Graph g(net.parameter_count());
  CHECK(pde_loss(g, net, set, spec.params).value() == 0.0);
  CHECK(bc_loss(g, net, set, spec.domain).value() == 0.0);
  const auto [m, e] = invariant_losses(g, net, set, spec.params);
  CHECK(m.value() == 0.0);
  CHECK(e.value() == 0.0);
}

TEST_CASE("residual loss equals a finite-difference recomputation") {
  const auto spec = preset(CaseName::cosine);
  const TrainSet set = build_trainset(spec.domain, 4, kTiny);
  const Mlp net = Mlp::init(9, 1, 8);
  Graph g(net.parameter_count());
  const double v = pde_loss(g, net, set, spec.params).value();
  double ref = 0.0;
  for (const auto& p : set.collocation) {
    auto fx = [&](double s) { return net.forward(p.t, s); };
    auto ft = [&](double s) { return net.forward(s, p.x); };
    const double u = net.forward(p.t, p.x);
    const double r = kdv::testing::fd(ft, p.t, 1e-4, 1) +
                     spec.params.eta * u * kdv::testing::fd(fx, p.x, 1e-4, 1) +
                     spec.params.mu * spec.params.mu * kdv::testing::fd(fx, p.x, 1e-2, 3);
    ref += r * r;
  }
  ref /= static_cast<double>(set.collocation.size());
  CHECK(v == doctest::Approx(ref).epsilon(1e-4));
}

TEST_CASE("boundary loss") {
  SUBCASE("constant one under Dirichlet") {
    const auto spec = preset(CaseName::one_soliton);
    const TrainSet set = build_trainset(spec.domain, 2, kTiny);
    Graph g(kNeuronParams);
    CHECK(bc_loss(g, neuron(0.0, 0.0, M_PI / 2), set, spec.domain).value() == 2.0);
  }
  SUBCASE("period-2 sine under periodic conditions") {
    const auto spec = preset(CaseName::cosine);
    const TrainSet set = build_trainset(spec.domain, 2, kTiny);
    Graph g(kNeuronParams);
    CHECK(bc_loss(g, neuron(0.3, M_PI, 0.0), set, spec.domain).value() < 1e-28);
    Graph h(kNeuronParams);
    CHECK(bc_loss(h, neuron(0.3, 2.0, 0.0), set, spec.domain).value() > 0.1);
  }
}

TEST_CASE("invariant losses") {
  const auto spec = preset(CaseName::cosine);
  SUBCASE("time-independent field") {
    const TrainSet set = build_trainset(spec.domain, 2, kTiny);
    Graph g(kNeuronParams);
    const auto [m, e] = invariant_losses(g, neuron(0.0, 1.3, 0.2), set, spec.params);
    CHECK(m.value() == 0.0);
    CHECK(e.value() == 0.0);
  }
  SUBCASE("two times, three nodes, hand quadrature") {
    TrainSet set = build_trainset(spec.domain, 2, kTiny);
    set.invariant_grid.times = {0.0, 0.5};
    set.invariant_grid.x = {-1.0, 1.0, 3};
    Graph g(kNeuronParams);
    const auto [m, e] = invariant_losses(g, neuron(1.0, 1.0, 0.0), set, spec.params);
    auto M = [](double t) {
      return 0.5 * std::sin(t - 1.0) + std::sin(t) + 0.5 * std::sin(t + 1.0);
    };
    auto density = [&](double t, double x) {
      const double u = std::sin(t + x), ux = std::cos(t + x);
      return 0.5 * 0.05 * 0.05 * ux * ux - u * u * u / 6.0;
    };
    auto E = [&](double t) {
      return 0.5 * density(t, -1.0) + density(t, 0.0) + 0.5 * density(t, 1.0);
    };
    const double dm = M(0.5) - M(0.0), de = E(0.5) - E(0.0);
    CHECK(m.value() == doctest::Approx(0.5 * dm * dm).epsilon(1e-13));
    CHECK(e.value() == doctest::Approx(0.5 * de * de).epsilon(1e-13));
  }
}

TEST_CASE("total loss assembly") {
  const auto spec = preset(CaseName::one_soliton);
  const TrainSet set = build_trainset(spec.domain, 3, kTiny);
  const Mlp net = Mlp::init(1, 2, 6);
  {
    Graph g(net.parameter_count());
    const LossBreakdown b = total_loss(g, net, set, spec, WeightState::initial(Mode::vanilla));
    CHECK(b.gamma == 0.0);
    CHECK(b.omega == 0.0);
    CHECK(b.total.value() == b.ic.value() + b.pde.value() + b.bc.value());
    CHECK(b.mass.value() > 0.0);
  }
  {
    WeightState s;
    s.gamma = 0.5;
    s.omega = 2.0;
    Graph g(net.parameter_count());
    const LossBreakdown b = total_loss(g, net, set, spec, s);
    const LossValues v = values_of(b);
    CHECK(v.total == doctest::Approx(v.ic + v.pde + v.bc + 0.5 * v.mass + 2.0 * v.energy)
                         .epsilon(1e-15));
    CHECK(v.ic >= 0.0);
    CHECK(v.pde >= 0.0);
    CHECK(v.bc >= 0.0);
    CHECK(v.mass >= 0.0);
    CHECK(v.energy >= 0.0);
  }
}

TEST_CASE("weight update") {
  const WeightState s;
  SUBCASE("equal norms") {
    const Eigen::VectorXd a = Eigen::VectorXd::Unit(3, 0);
    const WeightUpdate u = update_weights(s, a, a, a);
    CHECK(u.applied);
    CHECK(u.state.gamma == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(u.state.omega == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("vanishing invariant gradient is clamped") {
    const Eigen::VectorXd a = Eigen::VectorXd::Unit(3, 1);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    const WeightUpdate u = update_weights(s, a, z, 1e6 * a);
    CHECK(u.raw_gamma == doctest::Approx(1e8).epsilon(1e-12));
    CHECK(u.state.gamma == 1e2);
    CHECK(u.state.omega == 1e-2);
  }
  SUBCASE("random gradients") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    Eigen::VectorXd p(10), m(10), e(10);
    for (int i = 0; i < 10; ++i) {
      p[i] = n(rng);
      m[i] = 0.3 * n(rng);
      e[i] = 2.0 * n(rng);
    }
    double np = 0, nm = 0, ne = 0;
    for (int i = 0; i < 10; ++i) {
      np += p[i] * p[i];
      nm += m[i] * m[i];
      ne += e[i] * e[i];
    }
    const WeightUpdate u = update_weights(s, p, m, e);
    CHECK(u.state.gamma == doctest::Approx(std::sqrt(np) / (std::sqrt(nm) + 1e-8)).epsilon(1e-14));
    CHECK(u.state.omega == doctest::Approx(std::sqrt(np) / (std::sqrt(ne) + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("non-finite norms keep the previous weights") {
    WeightState prev;
    prev.gamma = 3.0;
    prev.omega = 4.0;
    Eigen::VectorXd bad = Eigen::VectorXd::Ones(2);
    bad[0] = NAN;
    const WeightUpdate u = update_weights(prev, bad, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2));
    CHECK_FALSE(u.applied);
    CHECK(u.state.gamma == 3.0);
    CHECK(u.state.omega == 4.0);
    CHECK_FALSE(u.warning.empty());
  }
  SUBCASE("misuse") {
    const Eigen::VectorXd a = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(update_weights(WeightState::initial(Mode::vanilla), a, a, a),
                    kdv::InvalidArgument);
    CHECK_THROWS_AS(update_weights(s, a, Eigen::VectorXd::Ones(3), a), kdv::InvalidArgument);
  }
}

TEST_CASE("full composite loss gradient matches finite differences on a 2-8-1 net") {
  for (CaseName name : {CaseName::one_soliton, CaseName::cosine}) {
    const auto spec = preset(name);
    const TrainSet set = build_trainset(spec.domain, 5, kTiny);
    WeightState s;
    s.gamma = 0.7;
    s.omega = 1.9;
    Objective obj(Mlp::init(13, 1, 8), set, spec, s);
    const Eigen::VectorXd theta = obj.network().flatten();
    REQUIRE(theta.size() == 33);
    Eigen::VectorXd grad(theta.size());
    obj(theta, grad);
    const Eigen::VectorXd ref = kdv::testing::fd_gradient(
        [&](const Eigen::VectorXd& th) {
          Eigen::VectorXd scratch(th.size());
          return obj(th, scratch);
        },
        theta, 1e-5);
    const double err = (grad - ref).lpNorm<Eigen::Infinity>() / ref.lpNorm<Eigen::Infinity>();
    MESSAGE(kdv::physics::to_string(name) << " relative gradient error " << err);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("total gradient is the weighted sum of component gradients") {
  const auto spec = preset(CaseName::one_soliton);
  const TrainSet set = build_trainset(spec.domain, 6, kTiny);
  const Mlp net = Mlp::init(2, 2, 6);
  WeightState s;
  s.gamma = 0.25;
  s.omega = 8.0;
  Graph g(net.parameter_count());
  const LossBreakdown b = total_loss(g, net, set, spec, s);
  const Eigen::VectorXd total = g.backward(b.total);
  const Eigen::VectorXd sum = g.backward(b.ic) + g.backward(b.pde) + g.backward(b.bc) +
                              0.25 * g.backward(b.mass) + 8.0 * g.backward(b.energy);
  CHECK((total - sum).norm() <= 1e-10 * total.norm());
}

TEST_CASE("objective is bitwise deterministic") {
  const auto spec = preset(CaseName::one_soliton);
  Objective a(Mlp::init(3, 2, 10), build_trainset(spec.domain, 7, {16, 64, 16, 4, 32}), spec,
              WeightState{});
  Objective b = a;
  const Eigen::VectorXd theta = a.network().flatten();
  Eigen::VectorXd ga(theta.size()), gb(theta.size());
  CHECK(a(theta, ga) == b(theta, gb));
  CHECK((ga.array() == gb.array()).all());
}

TEST_CASE("objective weight update uses the component gradient norms") {
  const auto spec = preset(CaseName::one_soliton);
  const TrainSet set = build_trainset(spec.domain, 7, kTiny);
  const Mlp net = Mlp::init(3, 1, 8);
  Objective obj(net, set, spec, WeightState{});
  const Eigen::VectorXd theta = net.flatten();
  const WeightUpdate u = obj.update(theta);
  Graph g(net.parameter_count());
  const LossBreakdown b = total_loss(g, net, set, spec, WeightState{});
  const double np = g.backward(b.pde).norm();
  CHECK(u.raw_gamma == doctest::Approx(np / (g.backward(b.mass).norm() + 1e-8)).epsilon(1e-14));
  CHECK(u.raw_omega == doctest::Approx(np / (g.backward(b.energy).norm() + 1e-8)).epsilon(1e-14));
  CHECK(obj.state().gamma == u.state.gamma);
}

TEST_CASE("vanilla trajectories do not depend on the invariant grid") {
  const auto spec = preset(CaseName::one_soliton);
  TrainSet coarse = build_trainset(spec.domain, 7, {16, 64, 16, 4, 16});
  TrainSet fine = build_trainset(spec.domain, 7, {16, 64, 16, 9, 64});
  const Mlp net = Mlp::init(3, 1, 8);
  Objective a(net, coarse, spec, WeightState::initial(Mode::vanilla));
  Objective b(net, fine, spec, WeightState::initial(Mode::vanilla));
  kdv::optim::LbfgsConfig cfg;
  cfg.max_iter = 5;
  const auto ra = kdv::optim::minimize(std::ref(a), net.flatten(), cfg);
  const auto rb = kdv::optim::minimize(std::ref(b), net.flatten(), cfg);
  CHECK(ra.iterations == rb.iterations);
  CHECK((ra.x.array() == rb.x.array()).all());
  CHECK(ra.f == rb.f);
}
