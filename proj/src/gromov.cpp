#include "cflab/gromov.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cflab/errors.hpp"
#include "cflab/format.hpp"
#include "cflab/rng.hpp"

namespace cflab {

std::optional<GromovProduct> gromov_product(const GroupProvider& provider,
                                            const GroupElement& x,
                                            const GroupElement& y, int cap) {
  auto lx = distance(provider, provider.identity(), x, cap);
  auto ly = distance(provider, provider.identity(), y, cap);
  auto d = distance(provider, x, y, cap);
  if (!lx || !ly || !d) return std::nullopt;
  return GromovProduct::from_twice(*lx + *ly - *d);
}

GromovProductTable::GromovProductTable(const Ball& ball,
                                       const WordLengthTable& table) {
  if (table.depth() < 2 * ball.radius()) {
    throw std::invalid_argument(
        "word-length table depth must be at least twice the ball radius");
  }
  const GroupProvider& g = ball.group();
  const VertexIndex n = ball.size();
  twice_.resize(n, n);

  std::vector<GroupElement> inverses;
  inverses.reserve(static_cast<std::size_t>(n));
  for (VertexIndex i = 0; i < n; ++i) {
    inverses.push_back(g.invert(ball.element(i)));
  }
  for (VertexIndex i = 0; i < n; ++i) {
    for (VertexIndex j = i; j < n; ++j) {
      auto d = table.length(g.multiply(inverses[i], ball.element(j)));
      if (!d) {
        throw std::logic_error("pair distance missing from length table");
      }
      int t = ball.length(i) + ball.length(j) - *d;
      twice_(i, j) = static_cast<std::int16_t>(t);
      twice_(j, i) = static_cast<std::int16_t>(t);
    }
  }
}

GromovProductTable::GromovProductTable(const Ball& ball,
                                       std::int64_t max_table_elements)
    : GromovProductTable(ball,
                         WordLengthTable(ball.group_ptr(), 2 * ball.radius(),
                                         max_table_elements)) {}

DeltaEstimate estimate_delta(const Ball& ball, const GromovProductTable& table,
                             const DeltaScan& scan) {
  VertexIndex m = ball.size();
  if (scan.vertex_limit >= 0 && scan.vertex_limit < m) {
    m = static_cast<VertexIndex>(scan.vertex_limit);
  }
  if (table.size() < m) {
    throw std::invalid_argument("product table smaller than scan range");
  }

  DeltaEstimate out;
  int best = 0;
  auto consider = [&](VertexIndex x, VertexIndex y, VertexIndex z) {
    int v = std::min(table.twice(x, z), table.twice(z, y)) - table.twice(x, y);
    if (v > best) {
      best = v;
      out.witness = {x, y, z};
    }
  };

  if (scan.mode == DeltaScan::Mode::Exhaustive) {
    if (static_cast<std::int64_t>(m) > scan.exhaustive_cap) {
      throw ResourceLimitError(
          "exhaustive delta scan over " + format_int(m) +
          " vertices exceeds the cap of " + format_int(scan.exhaustive_cap) +
          " (use sampled mode)");
    }
    for (VertexIndex x = 0; x < m; ++x) {
      for (VertexIndex y = 0; y < m; ++y) {
        for (VertexIndex z = 0; z < m; ++z) consider(x, y, z);
      }
    }
    out.triples_examined =
        static_cast<std::int64_t>(m) * m * static_cast<std::int64_t>(m);
  } else {
    SplitMix64 rng(scan.seed);
    for (std::int64_t t = 0; t < scan.samples; ++t) {
      auto x = static_cast<VertexIndex>(rng.below(static_cast<std::uint64_t>(m)));
      auto y = static_cast<VertexIndex>(rng.below(static_cast<std::uint64_t>(m)));
      auto z = static_cast<VertexIndex>(rng.below(static_cast<std::uint64_t>(m)));
      consider(x, y, z);
    }
    out.triples_examined = scan.samples;
  }
  out.delta_hat = 0.5 * best;
  return out;
}

DeltaEstimate estimate_delta(const Ball& ball, const DeltaScan& scan) {
  return estimate_delta(ball, GromovProductTable(ball), scan);
}

bool scale_condition_holds(double delta_hat, double a) {
  if (delta_hat < 0 || a <= 0) {
    throw std::invalid_argument("need delta_hat >= 0 and a > 0");
  }
  // e^{3 delta a} - 1 < sqrt(2) - 1, as a linear condition on the exponent.
  return 3.0 * delta_hat * a < 0.5 * std::numbers::ln2;
}

double choose_scale_parameter(double delta_hat, double safety) {
  if (delta_hat < 0) throw std::invalid_argument("negative delta_hat");
  if (!(safety > 0.0 && safety < 1.0)) {
    throw std::invalid_argument("safety factor must lie in (0, 1)");
  }
  if (delta_hat == 0.0) return std::numbers::ln2;
  return safety * 0.5 * std::numbers::ln2 / (3.0 * delta_hat);
}

}  // namespace cflab
