#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kdv/jet.hpp"
#include "kdv/tape.hpp"
#include "support/oracles.hpp"

using namespace kdv::autodiff;
using kdv::testing::Composite;
using kdv::testing::fd;
using kdv::testing::rel_err;

namespace {

void check_jet(const Jet& j, double v, double vt, double vx, double vxx, double vxxx,
               double tol = 1e-14) {
  CHECK(j.v == doctest::Approx(v).epsilon(tol));
  CHECK(j.vt == doctest::Approx(vt).epsilon(tol));
  CHECK(j.vx == doctest::Approx(vx).epsilon(tol));
  CHECK(j.vxx == doctest::Approx(vxx).epsilon(tol));
  CHECK(j.vxxx == doctest::Approx(vxxx).epsilon(tol));
}

}  // namespace

TEST_CASE("seed jets are identity charts") {
  check_jet(seed_x(2.0), 2, 0, 1, 0, 0);
  check_jet(seed_t(0.5), 0.5, 1, 0, 0, 0);
  CHECK(seed_x(0.0).vxxx == 0.0);
}

TEST_CASE("jet add and scale are slot-wise") {
  check_jet(Jet{1, 0, 1, 0, 0} + Jet{2, 0, 0, 1, 0}, 3, 0, 1, 1, 0);
  check_jet(scale(Jet{1, 2, 3, 4, 5}, 0.0), 0, 0, 0, 0, 0);
  check_jet(scale(Jet{1, 0, 1, 0, 0}, -1.0), -1, 0, -1, 0, 0);
  check_jet(shift(Jet{1, 2, 3, 4, 5}, 2.0), 3, 2, 3, 4, 5);
}

TEST_CASE("jet multiplication follows Leibniz") {
  check_jet(seed_x(2.0) * seed_x(2.0), 4, 0, 4, 2, 0);
  const Jet a{1.5, -0.25, 2.0, 0.75, -3.0};
  check_jet(a * constant_jet(1.0), a.v, a.vt, a.vx, a.vxx, a.vxxx);
  const Jet s = sin(seed_x(1.0));
  // d^3/dx^3 sin^2 x = -4 sin 2x.
  CHECK((s * s).vxxx == doctest::Approx(-3.6371897073027268).epsilon(1e-14));
}

TEST_CASE("jet sine follows Faa di Bruno") {
  check_jet(sin(seed_x(0.0)), 0, 0, 1, 0, -1);
  check_jet(sin(constant_jet(0.7)), std::sin(0.7), 0, 0, 0, 0);
  const Jet x = seed_x(1.0);
  const Jet j = sin(x * x);
  CHECK(j.v == doctest::Approx(0.84147098480789651).epsilon(1e-15));
  CHECK(j.vx == doctest::Approx(1.0806046117362794).epsilon(1e-14));
  CHECK(j.vxx == doctest::Approx(-2.2852793274953066).epsilon(1e-14));
  CHECK(j.vxxx == doctest::Approx(-14.420070264639876).epsilon(1e-14));
}

TEST_CASE("jets of random composites match finite differences") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  double worst[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 100; ++trial) {
    const Composite f = Composite::random(rng, 4);
    const double t = coord(rng);
    const double x = coord(rng);
    const Jet j = f.jet(t, x);
    auto fx = [&](double s) { return f(t, s); };
    auto ft = [&](double s) { return f(s, x); };
    REQUIRE(j.v == doctest::Approx(f(t, x)).epsilon(1e-13));
    worst[0] = std::max(worst[0], rel_err(j.vt, fd(ft, t, 1e-4, 1)));
    worst[1] = std::max(worst[1], rel_err(j.vx, fd(fx, x, 1e-4, 1)));
    worst[2] = std::max(worst[2], rel_err(j.vxx, fd(fx, x, 1e-3, 2)));
    worst[3] = std::max(worst[3], rel_err(j.vxxx, fd(fx, x, 1e-2, 3)));
  }
  MESSAGE("worst relative errors vt/vx/vxx/vxxx: " << worst[0] << " " << worst[1] << " "
                                                  << worst[2] << " " << worst[3]);
  CHECK(worst[0] <= 1e-6);
  CHECK(worst[1] <= 1e-6);
  CHECK(worst[2] <= 1e-5);
  CHECK(worst[3] <= 1e-3);
}

TEST_CASE("backward on elementary expressions") {
  {
    Graph g(2);
    const Var p1 = g.parameter(0, 3.0);
    const Var p2 = g.parameter(1, 5.0);
    const Eigen::VectorXd grad = g.backward(p1 * p2);
    CHECK(grad[0] == 5.0);
    CHECK(grad[1] == 3.0);
  }
  {
    Graph g(2);
    const Var p1 = g.parameter(0, 1.0);
    const Var p2 = g.parameter(1, -2.0);
    const std::vector<Var> terms{square(p1), square(p2)};
    const Eigen::VectorXd grad = g.backward(sum(terms));
    CHECK(grad[0] == 2.0);
    CHECK(grad[1] == -4.0);
  }
}

TEST_CASE("backward through every tape operator matches finite differences") {
  const Eigen::Vector3d p0(0.7, -0.4, 1.3);
  auto build = [](Graph& g, const Eigen::VectorXd& p) {
    const Var a = g.parameter(0, p[0]);
    const Var b = g.parameter(1, p[1]);
    const Var c = g.parameter(2, p[2]);
    Var r = sin(a * b) + cos(c) / (1.5 + a * a) - exp(b) * log(c) + sqrt(c + 2.0);
    r += -square(a - c) * 0.5;
    r *= 2.0 - b;
    return r;
  };
  Graph g(3);
  const Eigen::VectorXd grad = g.backward(build(g, p0));
  const Eigen::VectorXd ref = kdv::testing::fd_gradient(
      [&](const Eigen::VectorXd& p) {
        Graph h(3);
        return build(h, p).value();
      },
      p0, 1e-6);
  for (int i = 0; i < 3; ++i) CHECK(grad[i] == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("jet slots carried on the graph are differentiable") {
  // Squared third derivative of sin(a(x)^2) where a's jet comes from parameters.
  const Eigen::Vector4d p0(0.3, 1.1, -0.6, 0.9);
  auto build = [](Graph& g, const Eigen::VectorXd& p) {
    BasicJet<Var> a;
    a.v = g.parameter(0, p[0]);
    a.vx = g.parameter(1, p[1]);
    a.vxx = g.parameter(2, p[2]);
    a.vxxx = g.parameter(3, p[3]);
    a.vt = Var(0.0);
    const BasicJet<Var> r = sin(a * a);
    return square(r.vxxx);
  };
  Graph g(4);
  const Eigen::VectorXd grad = g.backward(build(g, p0));
  const Eigen::VectorXd ref = kdv::testing::fd_gradient(
      [&](const Eigen::VectorXd& p) {
        Graph h(4);
        return build(h, p).value();
      },
      p0, 1e-6);
  for (int i = 0; i < 4; ++i) CHECK(grad[i] == doctest::Approx(ref[i]).epsilon(1e-7));
}

TEST_CASE("block leaves route adjoints through the block rule") {
  Graph g(2);
  const Var p = g.parameter(0, 2.0);
  const std::vector<double> leaf_values{3.0, 4.0};
  // Leaves represent (q, q^2) for parameter q = index 1 at q = 2 (values ignored).
  const auto leaves = g.add_block(leaf_values, [](std::span<const double> adj,
                                                  Eigen::Ref<Eigen::VectorXd> grad) {
    grad[1] += adj[0] * 1.0 + adj[1] * 4.0;
  });
  const Var loss = p * leaves[0] + leaves[1];
  const Eigen::VectorXd grad = g.backward(loss);
  CHECK(grad[0] == 3.0);
  CHECK(grad[1] == 2.0 * 1.0 + 1.0 * 4.0);
}

TEST_CASE("non-finite values are reported with the first offending node") {
  Graph g(1);
  const Var p = g.parameter(0, -1.0);
  const Var bad = sqrt(p);
  const Var worse = bad * 2.0;
  try {
    g.backward(worse);
    FAIL("expected NonFiniteError");
  } catch (const kdv::NonFiniteError& e) {
    CHECK(e.node() == bad.id());
    CHECK(std::string(e.what()).find("sqrt") != std::string::npos);
  }
  const std::vector<Var> terms{p, bad};
  CHECK_THROWS_AS(sum(terms), kdv::NonFiniteError);
}

TEST_CASE("mean of an empty set is rejected") {
  CHECK_THROWS_AS(mean(std::span<const Var>{}), kdv::InvalidArgument);
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Graph g(3);
    std::vector<Var> terms;
    for (int i = 0; i < 50; ++i) {
      const Var a = g.parameter(static_cast<std::size_t>(i % 3), 0.1 * i);
      terms.push_back(sin(a) * (1.0 + 0.01 * i));
    }
    return g.backward(sum(terms));
  };
  const Eigen::VectorXd a = run();
  const Eigen::VectorXd b = run();
  CHECK((a.array() == b.array()).all());
}
