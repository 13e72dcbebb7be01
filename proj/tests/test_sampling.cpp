#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>

#include "kdv/csv.hpp"
#include "kdv/error.hpp"
#include "kdv/sampling.hpp"

using namespace kdv::sampling;
using kdv::physics::CaseName;
using kdv::physics::Domain;
using kdv::physics::preset;

TEST_CASE("default counts") {
  const SampleCounts c;
  CHECK(c.n_f == 8192);
  CHECK(c.n_b == 128);
  CHECK(c.n_ic == 128);
  CHECK(c.n_t == 24);
  CHECK(c.n_q == 256);
}

TEST_CASE("equispaced node sets include the endpoints") {
  const Domain d{-1.0, 1.0, 2.0};
  const TrainSet s = build_trainset(d, 1, {3, 16, 5, 4, 9});
  CHECK(s.ic_points == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(s.boundary_times == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK(s.invariant_grid.times == std::vector<double>{0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0});
  CHECK(s.invariant_grid.x.n == 9);
  CHECK(s.invariant_grid.x.node(0) == -1.0);
  CHECK(s.invariant_grid.x.node(8) == 1.0);
  CHECK(s.collocation.size() == 16);
}

TEST_CASE("collocation points are strictly interior and reproducible") {
  for (CaseName name : {CaseName::one_soliton, CaseName::two_soliton, CaseName::cosine}) {
    const Domain d = preset(name).domain;
    const TrainSet a = build_trainset(d, 7);
    const TrainSet b = build_trainset(d, 7);
    REQUIRE(a.collocation.size() == 8192);
    for (std::size_t i = 0; i < a.collocation.size(); ++i) {
      const auto& p = a.collocation[i];
      CHECK_MESSAGE((p.t > 0.0 && p.t < d.t_max && p.x > d.x_min && p.x < d.x_max), i);
      CHECK(p.t == b.collocation[i].t);
      CHECK(p.x == b.collocation[i].x);
    }
    const TrainSet c = build_trainset(d, 8);
    CHECK(c.collocation[0].x != a.collocation[0].x);
  }
}

TEST_CASE("collocation marginals pass a chi-square uniformity test") {
  // Critical value of chi^2 with 99 degrees of freedom at the 0.1% level.
  const double critical = 148.23035916510173;
  for (CaseName name : {CaseName::one_soliton, CaseName::two_soliton, CaseName::cosine}) {
    const Domain d = preset(name).domain;
    for (std::uint64_t seed : {7u, 0u, 1u, 2u, 3u}) {
      const TrainSet s = build_trainset(d, seed);
      std::array<int, 100> counts{};
      for (const auto& p : s.collocation) {
        const int it = std::min(9, static_cast<int>(10.0 * p.t / d.t_max));
        const int ix = std::min(9, static_cast<int>(10.0 * (p.x - d.x_min) / d.length()));
        ++counts[static_cast<std::size_t>(10 * it + ix)];
      }
      const double expected = 8192.0 / 100.0;
      double chi2 = 0.0;
      for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
      CHECK_MESSAGE(chi2 < critical, "seed " << seed << " chi2 " << chi2);
    }
  }
}

TEST_CASE("invalid requests are rejected") {
  const Domain d{-1.0, 1.0, 1.0};
  CHECK_THROWS_AS(build_trainset(d, 1, {1, 16, 5, 4, 9}), kdv::InvalidArgument);
  CHECK_THROWS_AS(build_trainset(d, 1, {4, 16, 5, 4, 1}), kdv::InvalidArgument);
  CHECK_THROWS_AS(build_trainset(Domain{1.0, -1.0, 1.0}, 1), kdv::InvalidArgument);
  CHECK_THROWS_AS(linspace(0.0, 1.0, 1), kdv::InvalidArgument);
}

TEST_CASE("point sets dump to CSV") {
  const Domain d{-1.0, 1.0, 1.0};
  const TrainSet s = build_trainset(d, 3, {4, 10, 3, 2, 5});
  const auto path = std::filesystem::temp_directory_path() / "kdv_points.csv";
  write_points_csv(s, d, path);
  const kdv::csv::Table t = kdv::csv::read(path);
  CHECK(t.header == std::vector<std::string>{"kind", "t", "x"});
  CHECK(t.rows.size() == 4 + 10 + 3 + 3 + 2 * 5);
  const std::size_t kind = t.column("kind");
  auto count = [&](std::string_view k) {
    return std::count_if(t.rows.begin(), t.rows.end(), [&](const auto& r) { return r[kind] == k; });
  };
  CHECK(count("collocation") == 10);
  CHECK(count("boundary_hi") == 3);
  CHECK(count("invariant") == 10);
  const auto xs = t.numbers("x");
  CHECK(xs[4] == s.collocation[0].x);
  std::filesystem::remove(path);
}
