#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "cflab/ball.hpp"
#include "cflab/dirichlet.hpp"
#include "cflab/errors.hpp"
#include "cflab/group.hpp"
#include "cflab/rng.hpp"

using namespace cflab;

namespace {

VertexIndex vertex_of(const Ball& ball, std::vector<std::int32_t> w) {
  auto v = ball.find(ball.group().normal_form(w));
  REQUIRE(v.has_value());
  return *v;
}

ScalarField random_field(const Ball& ball, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ScalarField f(ball.size());
  for (VertexIndex v = 0; v < ball.size(); ++v) f[v] = rng.uniform01();
  return f;
}

std::map<VertexIndex, double> random_boundary(const Ball& ball,
                                              std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::map<VertexIndex, double> out;
  for (VertexIndex v : ball.sphere(ball.radius())) out[v] = rng.uniform01();
  return out;
}

// Direct linear solve of the p = 2 Dirichlet problem: for every free vertex,
// deg(v) h(v) - sum of neighbour values = 0.
ScalarField linear_oracle(const Ball& ball,
                          const std::map<VertexIndex, double>& boundary) {
  VertexIndex free_count = ball.size() -
                           static_cast<VertexIndex>(
                               ball.sphere(ball.radius()).size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(free_count, free_count);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_count);
  for (VertexIndex v = 0; v < free_count; ++v) {
    A(v, v) = static_cast<double>(ball.degree());
    for (std::size_t s = 0; s < ball.degree(); ++s) {
      VertexIndex w = ball.neighbor(v, s);
      REQUIRE(w != Ball::kOutside);
      if (w < free_count) {
        A(v, w) -= 1.0;
      } else {
        rhs[v] += boundary.at(w);
      }
    }
  }
  Eigen::VectorXd h = A.colPivHouseholderQr().solve(rhs);
  ScalarField full(ball.size());
  for (VertexIndex v = 0; v < free_count; ++v) full[v] = h[v];
  for (const auto& [v, val] : boundary) full[v] = val;
  return full;
}

}  // namespace

TEST_CASE("signed power") {
  CHECK(signed_power(3.0, 2.0) == 3.0);
  CHECK(signed_power(-3.0, 2.0) == -3.0);
  CHECK(signed_power(-2.0, 3.0) == doctest::Approx(-4.0));
  CHECK(signed_power(-2.0, 4.0) == doctest::Approx(-8.0));
  CHECK(signed_power(4.0, 1.5) == doctest::Approx(2.0));
  CHECK(signed_power(-0.25, 1.5) == doctest::Approx(-0.5));
  // The continuous extension at 0, including the singular regime p < 2.
  CHECK(signed_power(0.0, 1.5) == 0.0);
  CHECK(signed_power(0.0, 3.0) == 0.0);
}

TEST_CASE("dirichlet energy: frozen line examples") {
  auto z = make_provider(GroupSpec::free_group(1));
  Ball ball = build_ball(z, 2);

  ScalarField spike = ScalarField::Zero(ball.size());
  spike[0] = 1.0;
  CHECK(dirichlet_energy(ball, spike, 2.0) == doctest::Approx(4.0));
  CHECK(dp_norm(ball, spike, 2.0) == doctest::Approx(std::sqrt(5.0)));

  // f(a^i) = (i + 2) / 4: eight ordered pairs, increment 1/4, p = 3.
  ScalarField ramp(ball.size());
  for (int i = -2; i <= 2; ++i) {
    std::vector<std::int32_t> w(static_cast<std::size_t>(std::abs(i)),
                                i >= 0 ? 0 : 1);
    ramp[vertex_of(ball, w)] = (i + 2) / 4.0;
  }
  CHECK(dirichlet_energy(ball, ramp, 3.0) == doctest::Approx(0.125));

  ScalarField flat = ScalarField::Constant(ball.size(), 2.5);
  CHECK(dirichlet_energy(ball, flat, 2.0) == 0.0);
  CHECK(dp_norm(ball, flat, 2.0) == doctest::Approx(2.5));
  CHECK(dp_norm(ball, ScalarField::Zero(ball.size()), 2.0) == 0.0);
}

TEST_CASE("dirichlet energy: invariances and validation") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 2);
  ScalarField f = random_field(ball, 11);
  for (double p : {1.5, 2.0, 3.0}) {
    double base = dirichlet_energy(ball, f, p);
    ScalarField shifted = f.array() + 3.75;
    CHECK(dirichlet_energy(ball, shifted, p) ==
          doctest::Approx(base).epsilon(1e-12));
    ScalarField scaled = -2.0 * f;
    CHECK(dirichlet_energy(ball, scaled, p) ==
          doctest::Approx(std::pow(2.0, p) * base).epsilon(1e-12));
  }
  ScalarField wrong(ball.size() + 1);
  wrong.setZero();
  CHECK_THROWS_AS(dirichlet_energy(ball, wrong, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(dirichlet_energy(ball, f, 0.5), std::invalid_argument);
}

TEST_CASE("p-laplacian: frozen values and the zero-difference convention") {
  auto z = make_provider(GroupSpec::free_group(1));
  Ball ball = build_ball(z, 2);

  // Linear words are p-harmonic on the line.
  ScalarField linear(ball.size());
  for (int i = -2; i <= 2; ++i) {
    std::vector<std::int32_t> w(static_cast<std::size_t>(std::abs(i)),
                                i >= 0 ? 0 : 1);
    linear[vertex_of(ball, w)] = static_cast<double>(i);
  }
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (VertexIndex v = 0; v < ball.size(); ++v) {
      if (!ball.interior(v)) continue;
      CHECK(p_laplacian(ball, linear, p, v) == doctest::Approx(0.0));
    }
  }

  ScalarField spike = ScalarField::Zero(ball.size());
  spike[0] = 1.0;
  VertexIndex a = vertex_of(ball, {0});
  CHECK(p_laplacian(ball, spike, 3.0, a) == doctest::Approx(1.0));
  CHECK(p_laplacian(ball, spike, 3.0, 0) == doctest::Approx(-2.0));

  // Equal neighbouring values contribute exactly zero, even for p < 2.
  ScalarField flat = ScalarField::Constant(ball.size(), 0.75);
  CHECK(p_laplacian(ball, flat, 1.5, 0) == 0.0);
  CHECK(std::isfinite(p_laplacian(ball, flat, 1.5, a)));

  VertexIndex rim = vertex_of(ball, {0, 0});
  CHECK_THROWS_AS(p_laplacian(ball, spike, 2.0, rim), std::out_of_range);
  CHECK_THROWS_AS(p_laplacian(ball, spike, 1.0, 0), std::invalid_argument);
}

TEST_CASE("harmonic residual") {
  auto z = make_provider(GroupSpec::free_group(1));
  Ball ball = build_ball(z, 2);
  ScalarField flat = ScalarField::Constant(ball.size(), 1.0);
  CHECK(harmonic_residual(ball, flat, 2.0) == 0.0);
  ScalarField spike = ScalarField::Zero(ball.size());
  spike[0] = 1.0;
  CHECK(harmonic_residual(ball, spike, 3.0) == doctest::Approx(2.0));

  Ball point = build_ball(z, 0);
  ScalarField one = ScalarField::Zero(point.size());
  CHECK_THROWS_AS(harmonic_residual(point, one, 2.0), std::out_of_range);
}

TEST_CASE("gradient identity against central differences") {
  std::vector<GroupSpec> specs = {GroupSpec::abelian(2),
                                  GroupSpec::free_group(2)};
  const double step = 1e-6;
  for (const auto& spec : specs) {
    auto g = make_provider(spec);
    CAPTURE(g->describe());
    Ball ball = build_ball(g, 2);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      ScalarField f = random_field(ball, static_cast<std::uint64_t>(p * 100));
      for (VertexIndex v = 0; v < ball.size(); ++v) {
        if (!ball.interior(v)) continue;
        ScalarField plus = f, minus = f;
        plus[v] += step;
        minus[v] -= step;
        double diff = (dirichlet_energy(ball, plus, p) -
                       dirichlet_energy(ball, minus, p)) /
                      (2.0 * step);
        double grad = -2.0 * p * p_laplacian(ball, f, p, v);
        CHECK(diff == doctest::Approx(grad).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("p = 2 solve matches the direct linear oracle") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 3);
  auto boundary = random_boundary(ball, 5);
  DirichletSolution sol = solve_dirichlet(ball, boundary, 2.0);
  REQUIRE(sol.report.converged);
  ScalarField oracle = linear_oracle(ball, boundary);
  CHECK((sol.field - oracle).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("closed-form solves on the smallest balls") {
  auto f2 = make_provider(GroupSpec::free_group(2));
  Ball b1 = build_ball(f2, 1);
  std::map<VertexIndex, double> boundary;
  for (VertexIndex v : b1.sphere(1)) boundary[v] = 0.0;
  boundary[vertex_of(b1, {0})] = 1.0;

  DirichletSolution mean = solve_dirichlet(b1, boundary, 2.0);
  REQUIRE(mean.report.converged);
  CHECK(mean.field[0] == doctest::Approx(0.25).epsilon(1e-10));

  DirichletSolution quartic = solve_dirichlet(b1, boundary, 4.0);
  REQUIRE(quartic.report.converged);
  CHECK(quartic.field[0] ==
        doctest::Approx(1.0 / (1.0 + std::cbrt(3.0))).epsilon(1e-10));

  // A two-sided line pins the linear interpolant for every p.
  auto z = make_provider(GroupSpec::free_group(1));
  Ball line = build_ball(z, 2);
  std::map<VertexIndex, double> ends;
  ends[vertex_of(line, {0, 0})] = 1.0;
  ends[vertex_of(line, {1, 1})] = 0.0;
  for (double p : {1.5, 3.0}) {
    DirichletSolution sol = solve_dirichlet(line, ends, p);
    REQUIRE(sol.report.converged);
    CHECK(sol.field[vertex_of(line, {1})] ==
          doctest::Approx(0.25).epsilon(1e-9));
    CHECK(sol.field[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sol.field[vertex_of(line, {0})] ==
          doctest::Approx(0.75).epsilon(1e-9));
  }
}

TEST_CASE("solver contracts: traces, maximum principle, uniqueness") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 3);
  auto boundary = random_boundary(ball, 17);
  double lo = 2.0, hi = -1.0;
  for (const auto& [v, val] : boundary) {
    lo = std::min(lo, val);
    hi = std::max(hi, val);
  }

  for (double p : {1.5, 2.0, 4.0}) {
    CAPTURE(p);
    DirichletSolution sol = solve_dirichlet(ball, boundary, p);
    REQUIRE(sol.report.converged);
    CHECK(sol.report.sweeps >= 1);
    CHECK(sol.report.final_residual <= SolverConfig{}.residual_tol);
    CHECK(sol.report.energy_trace.size() ==
          static_cast<std::size_t>(sol.report.sweeps));
    CHECK(sol.report.residual_trace.size() ==
          static_cast<std::size_t>(sol.report.sweeps));
    for (std::size_t i = 1; i < sol.report.energy_trace.size(); ++i) {
      CHECK(sol.report.energy_trace[i] <=
            sol.report.energy_trace[i - 1] + 1e-12);
    }
    CHECK(sol.report.final_energy ==
          doctest::Approx(dirichlet_energy(ball, sol.field, p)));
    CHECK(sol.report.final_residual ==
          doctest::Approx(harmonic_residual(ball, sol.field, p)));
    for (VertexIndex v = 0; v < ball.size(); ++v) {
      CHECK(sol.field[v] >= lo - 1e-12);
      CHECK(sol.field[v] <= hi + 1e-12);
    }

    // Strict convexity: wildly different warm starts land on the same field.
    ScalarField init = random_field(ball, 99);
    init *= 10.0;
    DirichletSolution warm = solve_dirichlet(ball, boundary, p, {}, &init);
    REQUIRE(warm.report.converged);
    CHECK((warm.field - sol.field).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("solver stops at max_sweeps without converging") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 4);
  auto boundary = random_boundary(ball, 23);
  SolverConfig cfg;
  cfg.max_sweeps = 1;
  DirichletSolution sol = solve_dirichlet(ball, boundary, 4.0, cfg);
  CHECK_FALSE(sol.report.converged);
  CHECK(sol.report.sweeps == 1);
  // The partial field still satisfies the boundary trace.
  for (const auto& [v, val] : boundary) CHECK(sol.field[v] == val);
}

TEST_CASE("boundary validation") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 2);
  auto good = random_boundary(ball, 3);

  auto missing = good;
  missing.erase(missing.begin());
  CHECK_THROWS_AS(solve_dirichlet(ball, missing, 2.0), std::invalid_argument);

  auto extra = good;
  extra[0] = 1.0;  // identity is not on the sphere
  CHECK_THROWS_AS(solve_dirichlet(ball, extra, 2.0), std::invalid_argument);

  auto poisoned = good;
  poisoned.begin()->second = std::nan("");
  CHECK_THROWS_AS(solve_dirichlet(ball, poisoned, 2.0), std::invalid_argument);

  CHECK_THROWS_AS(solve_dirichlet(ball, good, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_dirichlet(ball, good, 0.0), std::invalid_argument);

  // Radius-0 ball: the boundary is the whole problem.
  Ball point = build_ball(z2, 0);
  std::map<VertexIndex, double> pin{{0, 0.625}};
  DirichletSolution sol = solve_dirichlet(point, pin, 2.0);
  CHECK(sol.report.converged);
  CHECK(sol.field[0] == 0.625);
}

TEST_CASE("decomposition invariants") {
  auto z2 = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(z2, 3);
  ScalarField f = random_field(ball, 31);
  for (double p : {1.5, 2.0, 3.0}) {
    CAPTURE(p);
    Decomposition dec = decompose(ball, f, p);
    REQUIRE(dec.report.converged);
    // Exact splitting, boundary trace on h, zero trace on u.
    for (VertexIndex v = 0; v < ball.size(); ++v) {
      CHECK(dec.lp_part[v] + dec.harmonic_part[v] ==
            doctest::Approx(f[v]).epsilon(1e-14));
    }
    for (VertexIndex v : ball.sphere(3)) {
      CHECK(dec.harmonic_part[v] == f[v]);
      CHECK(dec.lp_part[v] == 0.0);
    }
    CHECK(harmonic_residual(ball, dec.harmonic_part, p) <=
          SolverConfig{}.residual_tol);
    CHECK(dirichlet_energy(ball, dec.harmonic_part, p) <=
          dirichlet_energy(ball, f, p) + 1e-12);
  }

  // p = 2: the parts are energy-orthogonal.
  Decomposition dec = decompose(ball, f, 2.0);
  double ef = dirichlet_energy(ball, f, 2.0);
  double eu = dirichlet_energy(ball, dec.lp_part, 2.0);
  double eh = dirichlet_energy(ball, dec.harmonic_part, 2.0);
  CHECK(ef == doctest::Approx(eu + eh).epsilon(1e-8));

  // A field that is already p-harmonic decomposes as h = f.
  auto z = make_provider(GroupSpec::free_group(1));
  Ball line = build_ball(z, 3);
  ScalarField linear(line.size());
  for (int i = -3; i <= 3; ++i) {
    std::vector<std::int32_t> w(static_cast<std::size_t>(std::abs(i)),
                                i >= 0 ? 0 : 1);
    linear[*line.find(z->normal_form(w))] = i / 3.0;
  }
  Decomposition harm = decompose(line, linear, 3.0);
  CHECK(harm.lp_part.cwiseAbs().maxCoeff() <= 1e-6);

  // Zero boundary trace sends everything to u.
  ScalarField spike = ScalarField::Zero(ball.size());
  spike[0] = 1.0;
  Decomposition zero = decompose(ball, spike, 2.0);
  CHECK(zero.harmonic_part.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((zero.lp_part - spike).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("p-harmonic fields do not form a linear space at p = 4") {
  auto f2 = make_provider(GroupSpec::free_group(2));
  Ball b1 = build_ball(f2, 1);
  std::map<VertexIndex, double> e1, e2;
  for (VertexIndex v : b1.sphere(1)) {
    e1[v] = 0.0;
    e2[v] = 0.0;
  }
  e1[vertex_of(b1, {0})] = 1.0;
  e2[vertex_of(b1, {2})] = 1.0;

  DirichletSolution h1 = solve_dirichlet(b1, e1, 4.0);
  DirichletSolution h2 = solve_dirichlet(b1, e2, 4.0);
  const double tol = SolverConfig{}.residual_tol;
  REQUIRE(harmonic_residual(b1, h1.field, 4.0) <= tol);
  REQUIRE(harmonic_residual(b1, h2.field, 4.0) <= tol);
  ScalarField sum = h1.field + h2.field;
  CHECK(harmonic_residual(b1, sum, 4.0) > 100.0 * tol);
}
