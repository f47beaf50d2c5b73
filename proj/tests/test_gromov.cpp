#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cflab/ball.hpp"
#include "cflab/errors.hpp"
#include "cflab/gromov.hpp"
#include "cflab/group.hpp"

using namespace cflab;

namespace {

GroupElement nf(const GroupProvider& g, std::vector<std::int32_t> w) {
  return g.normal_form(w);
}

// Reference delta computed straight from gromov_product calls, bypassing the
// table and scan machinery entirely.
double brute_delta(const GroupProvider& g, const Ball& ball, int cap) {
  auto prod = [&](VertexIndex i, VertexIndex j) {
    auto p = gromov_product(g, ball.element(i), ball.element(j), cap);
    REQUIRE(p.has_value());
    return p->twice();
  };
  int best = 0;
  for (VertexIndex x = 0; x < ball.size(); ++x) {
    for (VertexIndex y = 0; y < ball.size(); ++y) {
      int xy = prod(x, y);
      for (VertexIndex z = 0; z < ball.size(); ++z) {
        best = std::max(best, std::min(prod(x, z), prod(z, y)) - xy);
      }
    }
  }
  return 0.5 * best;
}

}  // namespace

TEST_CASE("gromov products: frozen values and cap handling") {
  auto f2 = make_provider(GroupSpec::free_group(2));
  GroupElement ab = nf(*f2, {0, 2});
  auto self = gromov_product(*f2, ab, ab, 10);
  REQUIRE(self.has_value());
  CHECK(self->value() == 2.0);  // (x|x) = |x|

  GroupElement a2 = nf(*f2, {0, 0}), b2 = nf(*f2, {2, 2});
  CHECK(gromov_product(*f2, a2, b2, 10)->value() == 0.0);

  GroupElement aab = nf(*f2, {0, 0, 2}), aabinv = nf(*f2, {0, 0, 3});
  auto deep = gromov_product(*f2, aab, aabinv, 10);
  CHECK(deep->value() == 2.0);  // x^-1 y = b^-2, so (3 + 3 - 2) / 2
  CHECK(deep->twice() == 4);

  // Caps cover lengths and the connecting distance.
  GroupElement a4 = nf(*f2, {0, 0, 0, 0});
  CHECK_FALSE(gromov_product(*f2, a4, b2, 3).has_value());
  GroupElement b3 = nf(*f2, {2, 2, 2});
  GroupElement a3 = nf(*f2, {0, 0, 0});
  CHECK_FALSE(gromov_product(*f2, a3, b3, 3).has_value());  // d = 6 > 3
  CHECK(gromov_product(*f2, a3, b3, 6).has_value());
}

TEST_CASE("gromov products: symmetry and bounds on radius-3 balls") {
  std::vector<GroupSpec> specs = {
      GroupSpec::free_group(2),
      GroupSpec::abelian(2),
      GroupSpec::free_product({GroupSpec::cyclic(2), GroupSpec::cyclic(3)}),
      GroupSpec::cyclic(6),
  };
  for (const auto& spec : specs) {
    auto g = make_provider(spec);
    CAPTURE(g->describe());
    Ball ball = build_ball(g, 3);
    for (VertexIndex i = 0; i < ball.size(); ++i) {
      for (VertexIndex j = 0; j < ball.size(); ++j) {
        auto p = gromov_product(*g, ball.element(i), ball.element(j), 6);
        auto q = gromov_product(*g, ball.element(j), ball.element(i), 6);
        REQUIRE(p.has_value());
        REQUIRE(q.has_value());
        CHECK(p->twice() == q->twice());
        CHECK(p->twice() >= 0);
        CHECK(p->twice() <= 2 * std::min(ball.length(i), ball.length(j)));
        if (i == j) CHECK(p->twice() == 2 * ball.length(i));
      }
    }
  }
}

TEST_CASE("product table matches per-pair products") {
  auto g = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(g, 2);
  GromovProductTable table(ball);
  REQUIRE(table.size() == ball.size());
  for (VertexIndex i = 0; i < ball.size(); ++i) {
    for (VertexIndex j = 0; j < ball.size(); ++j) {
      auto p = gromov_product(*g, ball.element(i), ball.element(j), 4);
      REQUIRE(p.has_value());
      CHECK(table.twice(i, j) == p->twice());
      CHECK(table.value(i, j) == p->value());
    }
  }
  // Explicit word-length table of exactly depth 2R works too.
  WordLengthTable words(ball.group_ptr(), 4);
  GromovProductTable explicit_table(ball, words);
  for (VertexIndex i = 0; i < ball.size(); ++i) {
    for (VertexIndex j = 0; j < ball.size(); ++j) {
      CHECK(explicit_table.twice(i, j) == table.twice(i, j));
    }
  }
  // A table too shallow for the ball is rejected.
  WordLengthTable shallow(ball.group_ptr(), 3);
  CHECK_THROWS_AS(GromovProductTable(ball, shallow), std::invalid_argument);
}

TEST_CASE("delta estimates: frozen values per group and radius") {
  // Trees are 0-hyperbolic at every radius.
  for (int radius : {1, 2, 3}) {
    Ball ball = build_ball(make_provider(GroupSpec::free_group(2)), radius);
    DeltaEstimate est = estimate_delta(ball);
    CHECK(est.delta_hat == 0.0);
    std::int64_t m = ball.size();
    CHECK(est.triples_examined == m * m * m);
  }
  // Z^2 accumulates delta with the radius.
  std::vector<double> expect = {0.0, 1.0, 1.0, 2.0};
  for (int radius = 1; radius <= 4; ++radius) {
    Ball ball = build_ball(make_provider(GroupSpec::abelian(2)), radius);
    DeltaEstimate est = estimate_delta(ball);
    CAPTURE(radius);
    CHECK(est.delta_hat == expect[radius - 1]);
  }
  // Z2*Z3 stays within the hyperbolicity budget on B_4.
  Ball z2z3 = build_ball(make_provider(GroupSpec::free_product(
                             {GroupSpec::cyclic(2), GroupSpec::cyclic(3)})),
                         4);
  DeltaEstimate est = estimate_delta(z2z3);
  CHECK(est.delta_hat <= 1.0);
  CHECK(est.delta_hat == 0.0);
}

TEST_CASE("delta estimate agrees with a direct triple scan") {
  auto g = make_provider(GroupSpec::abelian(2));
  Ball ball = build_ball(g, 2);
  DeltaEstimate est = estimate_delta(ball);
  CHECK(est.delta_hat == brute_delta(*g, ball, 8));

  // The recorded witness actually attains the maximum.
  GromovProductTable table(ball);
  auto [x, y, z] = est.witness;
  double attained =
      0.5 * (std::min(table.twice(x, z), table.twice(z, y)) - table.twice(x, y));
  CHECK(attained == est.delta_hat);
}

TEST_CASE("delta estimate is monotone in the radius (exhaustive)") {
  for (auto spec : {GroupSpec::abelian(2),
                    GroupSpec::free_product(
                        {GroupSpec::cyclic(2), GroupSpec::cyclic(3)})}) {
    auto g = make_provider(spec);
    CAPTURE(g->describe());
    double prev = -1.0;
    for (int radius = 1; radius <= 4; ++radius) {
      DeltaEstimate est = estimate_delta(build_ball(g, radius));
      CHECK(est.delta_hat >= prev);
      prev = est.delta_hat;
    }
  }
}

TEST_CASE("sampled scans are deterministic and bounded by exhaustive") {
  Ball ball = build_ball(make_provider(GroupSpec::abelian(2)), 3);
  DeltaEstimate full = estimate_delta(ball);

  DeltaScan scan;
  scan.mode = DeltaScan::Mode::Sampled;
  scan.samples = 5000;
  scan.seed = 7;
  DeltaEstimate s1 = estimate_delta(ball, scan);
  DeltaEstimate s2 = estimate_delta(ball, scan);
  CHECK(s1.delta_hat == s2.delta_hat);
  CHECK(s1.witness == s2.witness);
  CHECK(s1.triples_examined == 5000);
  CHECK(s1.delta_hat <= full.delta_hat);

  scan.seed = 8;
  DeltaEstimate s3 = estimate_delta(ball, scan);
  CHECK(s3.delta_hat <= full.delta_hat);

  // A generous sample on a small ball finds the exhaustive value.
  scan.samples = 200000;
  scan.seed = 0;
  CHECK(estimate_delta(ball, scan).delta_hat == full.delta_hat);
}

TEST_CASE("vertex_limit scans a sub-ball prefix") {
  auto g = make_provider(GroupSpec::abelian(2));
  Ball big = build_ball(g, 4);
  Ball small = restrict_ball(big, 2);
  GromovProductTable table(big);

  DeltaScan scan;
  scan.vertex_limit = small.size();
  DeltaEstimate limited = estimate_delta(big, table, scan);
  DeltaEstimate direct = estimate_delta(small);
  CHECK(limited.delta_hat == direct.delta_hat);
  CHECK(limited.triples_examined == direct.triples_examined);
}

TEST_CASE("exhaustive scans refuse oversized balls") {
  Ball ball = build_ball(make_provider(GroupSpec::free_group(2)), 4);  // 161
  DeltaScan scan;
  scan.exhaustive_cap = 100;
  CHECK_THROWS_AS(estimate_delta(ball, scan), ResourceLimitError);
}

TEST_CASE("scale parameter: condition and chooser") {
  // delta = 0: every a works and the default is ln 2.
  CHECK(scale_condition_holds(0.0, 100.0));
  CHECK(choose_scale_parameter(0.0) == doctest::Approx(std::log(2.0)));

  // e^{3a} - 1 < sqrt(2) - 1 at delta = 1 iff a < ln(sqrt 2)/3 ~ 0.115525.
  CHECK(scale_condition_holds(1.0, 0.11));
  CHECK_FALSE(scale_condition_holds(1.0, 0.116));
  CHECK_FALSE(scale_condition_holds(1.0, 0.2));  // e^0.6 - 1 ~ 0.822

  double a = choose_scale_parameter(1.0, 0.9);
  CHECK(a == doctest::Approx(0.103972).epsilon(1e-5));
  CHECK(a == doctest::Approx(0.9 * std::log(std::sqrt(2.0)) / 3.0));
  for (double dh : {0.0, 0.5, 1.0, 2.0, 7.25}) {
    CHECK(scale_condition_holds(dh, choose_scale_parameter(dh)));
    CHECK(scale_condition_holds(dh, choose_scale_parameter(dh, 0.99)));
  }
  CHECK(choose_scale_parameter(2.0, 0.9) == doctest::Approx(a / 2.0));

  CHECK_THROWS_AS(scale_condition_holds(-1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(scale_condition_holds(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_scale_parameter(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_scale_parameter(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_scale_parameter(1.0, 1.0), std::invalid_argument);
}
