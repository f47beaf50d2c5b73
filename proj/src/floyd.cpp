#include "cflab/floyd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "cflab/dirichlet.hpp"
#include "cflab/errors.hpp"
#include "cflab/format.hpp"
#include "cflab/rng.hpp"

namespace cflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_vertex(const Ball& ball, VertexIndex v) {
  if (v < 0 || v >= ball.size()) {
    throw std::out_of_range("vertex index " + format_int(v) +
                            " outside the ball");
  }
}

}  // namespace

AdmissibleFunction AdmissibleFunction::geometric(double base) {
  if (!(base > 0.0 && base < 1.0)) {
    throw std::invalid_argument("geometric base must lie in (0, 1)");
  }
  return {Kind::Geometric, base};
}

AdmissibleFunction AdmissibleFunction::exponential(double rate) {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("exponential rate must be positive");
  }
  return {Kind::Exponential, rate};
}

AdmissibleFunction AdmissibleFunction::power(double exponent) {
  if (!(exponent > 0.0)) {
    throw std::invalid_argument("power exponent must be positive");
  }
  return {Kind::Power, exponent};
}

double AdmissibleFunction::operator()(int n) const {
  if (n < 0) throw std::invalid_argument("negative argument");
  switch (kind) {
    case Kind::Geometric:
      return std::pow(parameter, n);
    case Kind::Exponential:
      return std::exp(-parameter * n);
    case Kind::Power:
      return std::pow(n + 1.0, -parameter);
  }
  return 0.0;
}

double AdmissibleFunction::quasi_geometric_constant() const {
  switch (kind) {
    case Kind::Geometric:
      return 1.0 / parameter;
    case Kind::Exponential:
      return std::exp(parameter);
    case Kind::Power:
      // F(n)/F(n+1) = ((n+2)/(n+1))^b is largest at n = 0.
      return std::pow(2.0, parameter);
  }
  return 1.0;
}

bool AdmissibleFunction::summable() const {
  return kind != Kind::Power || parameter > 1.0;
}

double AdmissibleFunction::tail_sum(int from) const {
  if (from < 0) throw std::invalid_argument("negative argument");
  switch (kind) {
    case Kind::Geometric:
      return std::pow(parameter, from) / (1.0 - parameter);
    case Kind::Exponential: {
      double q = std::exp(-parameter);
      return std::exp(-parameter * from) / (1.0 - q);
    }
    case Kind::Power: {
      if (parameter <= 1.0) return kInf;
      // sum_{m > from} m^-b <= (from+1)^-b + (from+1)^{1-b} / (b-1)
      double m = from + 1.0;
      return std::pow(m, -parameter) +
             std::pow(m, 1.0 - parameter) / (parameter - 1.0);
    }
  }
  return kInf;
}

std::string AdmissibleFunction::describe() const {
  switch (kind) {
    case Kind::Geometric:
      return "geometric(" + format_double(parameter) + ")";
    case Kind::Exponential:
      return "exponential(" + format_double(parameter) + ")";
    case Kind::Power:
      return "power(" + format_double(parameter) + ")";
  }
  return "?";
}

AdmissibilityVerdict check_admissible(const std::function<double(int)>& f,
                                      int prefix_length, double L) {
  AdmissibilityVerdict v;
  if (prefix_length < 1) {
    v.reason = "prefix too short";
    return v;
  }
  constexpr double kSlack = 1e-12;  // forgive rounding in pow/exp chains
  std::vector<double> vals(static_cast<std::size_t>(prefix_length) + 1);
  for (int n = 0; n <= prefix_length; ++n) {
    vals[n] = f(n);
    if (!(vals[n] > 0.0) || !std::isfinite(vals[n])) {
      v.reason = "not strictly positive at n = " + format_int(n);
      return v;
    }
  }
  double worst = 1.0;
  for (int n = 0; n < prefix_length; ++n) {
    if (vals[n + 1] > vals[n] * (1.0 + kSlack)) {
      v.reason = "increases at n = " + format_int(n);
      return v;
    }
    worst = std::max(worst, vals[n] / vals[n + 1]);
  }
  v.smallest_prefix_constant = worst;
  if (worst > L * (1.0 + kSlack)) {
    v.reason = "quasi-geometric bound fails: needs L >= " +
               format_double(worst) + ", got " + format_double(L);
    return v;
  }
  v.admissible = true;
  v.reason = "ok";
  return v;
}

AdmissibilityVerdict check_admissible(const AdmissibleFunction& f,
                                      int prefix_length) {
  AdmissibilityVerdict v = check_admissible([&](int n) { return f(n); },
                                            prefix_length,
                                            f.quasi_geometric_constant());
  if (v.admissible && !f.summable()) {
    v.admissible = false;
    v.reason = "not summable";
  }
  return v;
}

double floyd_edge_weight(const Ball& ball, VertexIndex g, VertexIndex h,
                         const AdmissibleFunction& f) {
  check_vertex(ball, g);
  check_vertex(ball, h);
  bool adjacent = false;
  for (std::size_t s = 0; s < ball.degree() && !adjacent; ++s) {
    adjacent = ball.neighbor(g, s) == h;
  }
  if (!adjacent) throw std::invalid_argument("vertices are not adjacent");
  return f(std::min(ball.length(g), ball.length(h)));
}

Eigen::VectorXd floyd_distances_from(const Ball& ball, VertexIndex source,
                                     const AdmissibleFunction& f) {
  check_vertex(ball, source);
  const VertexIndex n = ball.size();
  // Edge weights only depend on endpoint lengths, so precompute F by level.
  std::vector<double> level_weight(static_cast<std::size_t>(ball.radius()) + 1);
  for (int r = 0; r <= ball.radius(); ++r) level_weight[r] = f(r);

  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
  dist[source] = 0.0;
  using Entry = std::pair<double, VertexIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (std::size_t s = 0; s < ball.degree(); ++s) {
      VertexIndex v = ball.neighbor(u, s);
      if (v == Ball::kOutside) continue;
      double nd = d + level_weight[std::min(ball.length(u), ball.length(v))];
      if (nd < dist[v]) {
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return dist;
}

double floyd_distance(const Ball& ball, VertexIndex x, VertexIndex y,
                      const AdmissibleFunction& f) {
  check_vertex(ball, y);
  return floyd_distances_from(ball, x, f)[y];
}

Eigen::MatrixXd chain_weight_matrix(const GromovProductTable& products,
                                    double a) {
  if (!(a > 0.0)) throw std::invalid_argument("scale parameter must be > 0");
  const VertexIndex n = products.size();
  Eigen::MatrixXd w(n, n);
  for (VertexIndex i = 0; i < n; ++i) {
    for (VertexIndex j = 0; j < n; ++j) {
      w(i, j) = std::exp(-a * products.value(i, j));
    }
  }
  return w;
}

Eigen::MatrixXd chain_distance_matrix(const GromovProductTable& products,
                                      double a, std::int64_t max_vertices) {
  const VertexIndex n = products.size();
  if (static_cast<std::int64_t>(n) > max_vertices) {
    throw ResourceLimitError("all-pairs chain metric over " + format_int(n) +
                             " vertices exceeds the cap of " +
                             format_int(max_vertices));
  }
  Eigen::MatrixXd d = chain_weight_matrix(products, a);
  d.diagonal().setZero();
  for (VertexIndex k = 0; k < n; ++k) {
    for (VertexIndex i = 0; i < n; ++i) {
      if (i == k) continue;
      d.row(i) = d.row(i).cwiseMin((d.row(k).array() + d(i, k)).matrix());
    }
  }
  return d;
}

double chain_distance(const Ball& ball, VertexIndex x, VertexIndex y, double a,
                      std::int64_t max_table_elements) {
  check_vertex(ball, x);
  check_vertex(ball, y);
  if (!(a > 0.0)) throw std::invalid_argument("scale parameter must be > 0");
  const VertexIndex n = ball.size();
  if (n > 6000) {
    throw ResourceLimitError(
        "chain distance needs the dense product table; ball of " +
        format_int(n) + " vertices is over the 6000-vertex cap");
  }
  GromovProductTable products(ball, max_table_elements);

  // Dijkstra on the complete graph; dense linear scans beat a heap here.
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  dist[x] = 0.0;
  for (VertexIndex round = 0; round < n; ++round) {
    VertexIndex u = -1;
    double du = kInf;
    for (VertexIndex i = 0; i < n; ++i) {
      if (!done[i] && dist[i] < du) {
        du = dist[i];
        u = i;
      }
    }
    if (u < 0 || u == y) break;
    done[u] = true;
    for (VertexIndex v = 0; v < n; ++v) {
      if (done[v]) continue;
      double nd = du + std::exp(-a * products.value(u, v));
      if (nd < dist[v]) dist[v] = nd;
    }
  }
  return dist[y];
}

SphereDiameterStats sphere_floyd_diameter(const Ball& ball, int n,
                                          const AdmissibleFunction& f,
                                          const SamplingPolicy& policy) {
  if (n < 0 || n > ball.radius()) {
    throw std::invalid_argument("sphere radius outside the ball");
  }
  const auto& sphere = ball.sphere(n);
  const std::int64_t m = static_cast<std::int64_t>(sphere.size());
  if (m == 0) throw std::out_of_range("sphere is empty");
  SphereDiameterStats stats;
  stats.radius = n;
  if (m < 2) return stats;

  // Either every vertex is a source (exhaustive) or a seeded sample of
  // sources against all targets, staying within the pair budget.
  std::vector<std::int64_t> sources(static_cast<std::size_t>(m));
  std::iota(sources.begin(), sources.end(), 0);
  bool exhaustive = m * m <= policy.max_pairs;
  if (!exhaustive) {
    std::int64_t want = std::max<std::int64_t>(1, policy.max_pairs / m);
    SplitMix64 rng(policy.seed);
    for (std::int64_t i = 0; i < want; ++i) {
      std::int64_t j =
          i + static_cast<std::int64_t>(rng.below(
                  static_cast<std::uint64_t>(m - i)));
      std::swap(sources[i], sources[j]);
    }
    sources.resize(static_cast<std::size_t>(want));
  }
  std::vector<char> is_source(static_cast<std::size_t>(m), 0);
  std::vector<std::int64_t> source_rank(static_cast<std::size_t>(m), -1);
  for (std::size_t r = 0; r < sources.size(); ++r) {
    is_source[sources[r]] = 1;
    source_rank[sources[r]] = static_cast<std::int64_t>(r);
  }

  double sum = 0.0;
  double min_antipodal = kInf;
  for (std::size_t r = 0; r < sources.size(); ++r) {
    std::int64_t si = sources[r];
    VertexIndex sv = sphere[si];
    Eigen::VectorXd dist = floyd_distances_from(ball, sv, f);
    // Unweighted ball-graph distances detect antipodal pairs: for sphere
    // vertices the in-ball distance equals the word distance (a path through
    // the identity realises 2n, and geodesics never need to leave the ball).
    std::vector<int> hops(static_cast<std::size_t>(ball.size()), -1);
    {
      std::vector<VertexIndex> front{sv}, next;
      hops[sv] = 0;
      int depth = 0;
      while (!front.empty()) {
        ++depth;
        next.clear();
        for (VertexIndex u : front) {
          for (std::size_t s = 0; s < ball.degree(); ++s) {
            VertexIndex v = ball.neighbor(u, s);
            if (v == Ball::kOutside || hops[v] >= 0) continue;
            hops[v] = depth;
            next.push_back(v);
          }
        }
        std::swap(front, next);
      }
    }
    for (std::int64_t ti = 0; ti < m; ++ti) {
      if (ti == si) continue;
      if (is_source[ti] && source_rank[ti] < static_cast<std::int64_t>(r)) {
        continue;  // unordered pair already counted from the other side
      }
      VertexIndex tv = sphere[ti];
      double d = dist[tv];
      ++stats.pairs;
      sum += d;
      stats.max = std::max(stats.max, d);
      if (hops[tv] == 2 * n) min_antipodal = std::min(min_antipodal, d);
    }
  }
  stats.mean = stats.pairs > 0 ? sum / static_cast<double>(stats.pairs) : 0.0;
  stats.min_antipodal = std::isfinite(min_antipodal) ? min_antipodal : 0.0;
  return stats;
}

WitnessField witness_field(const Ball& ball, std::size_t ray_generator,
                           const AdmissibleFunction& f) {
  if (ray_generator >= ball.degree()) {
    throw std::invalid_argument("ray generator index out of range");
  }
  WitnessField out;
  out.ray_generator = ray_generator;
  out.weight = f;
  // Walk powers of the generator while they stay inside the ball; the tip is
  // the longest one (finite factors may wrap the walk onto itself).
  VertexIndex tip = 0;
  VertexIndex at = 0;
  std::vector<char> seen(static_cast<std::size_t>(ball.size()), 0);
  seen[0] = 1;
  for (;;) {
    VertexIndex next = ball.neighbor(at, ray_generator);
    if (next == Ball::kOutside || seen[next]) break;
    seen[next] = 1;
    at = next;
    if (ball.length(at) > ball.length(tip)) tip = at;
  }
  out.target = tip;
  out.values = floyd_distances_from(ball, tip, f);
  return out;
}

WitnessEnergyReport witness_energy_report(const Ball& ball,
                                          const WitnessField& witness,
                                          double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  WitnessEnergyReport out;
  out.energy = dirichlet_energy(ball, witness.values, p);
  const AdmissibleFunction& f = witness.weight;
  double l = f.quasi_geometric_constant();
  double sum = 0.0;
  for (VertexIndex v = 0; v < ball.size(); ++v) {
    sum += std::pow(f(ball.length(v)), p);
  }
  out.bound = static_cast<double>(ball.degree()) * std::pow(l, p) * sum;
  out.ratio = out.energy / out.bound;
  return out;
}

std::string to_string(SummabilityVerdict v) {
  switch (v) {
    case SummabilityVerdict::Converging:
      return "converging";
    case SummabilityVerdict::Diverging:
      return "diverging";
    case SummabilityVerdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

SummabilityReport summability(std::span<const std::int64_t> sphere_sizes,
                              const AdmissibleFunction& f, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  if (sphere_sizes.empty()) throw std::invalid_argument("no sphere counts");
  SummabilityReport out;
  out.p = p;
  double running = 0.0;
  for (std::size_t n = 0; n < sphere_sizes.size(); ++n) {
    if (sphere_sizes[n] < 0) throw std::invalid_argument("negative count");
    double term = static_cast<double>(sphere_sizes[n]) *
                  std::pow(f(static_cast<int>(n)), p);
    running += term;
    out.shell_terms.push_back(term);
    out.partial_sums.push_back(running);
  }
  const int r = static_cast<int>(sphere_sizes.size()) - 1;
  out.extrapolated_limit = std::numeric_limits<double>::quiet_NaN();
  if (r >= 1 && out.shell_terms[r - 1] > 0.0) {
    out.shell_ratio = out.shell_terms[r] / out.shell_terms[r - 1];
  }

  constexpr int kMinRadius = 6;  // verdict is forced inconclusive below this
  constexpr int kWindow = 5;
  if (r < kMinRadius) return out;
  if (out.shell_terms[r] == 0.0) {
    // Exhausted group: the series is a finite sum.
    out.verdict = SummabilityVerdict::Converging;
    out.extrapolated_limit = running;
    return out;
  }
  double lo = kInf, hi = 0.0;
  for (int n = r - kWindow + 1; n <= r; ++n) {
    if (out.shell_terms[n - 1] <= 0.0) return out;
    double q = out.shell_terms[n] / out.shell_terms[n - 1];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (hi < 1.0) {
    out.verdict = SummabilityVerdict::Converging;
    out.extrapolated_limit = running + out.shell_terms[r] * hi / (1.0 - hi);
  } else if (lo >= 1.0) {
    out.verdict = SummabilityVerdict::Diverging;
  }
  return out;
}

SummabilityReport summability(const GroupProvider& provider, int radius,
                              const AdmissibleFunction& f, double p) {
  auto sizes = provider.sphere_sizes(radius);
  return summability(std::span<const std::int64_t>(sizes), f, p);
}

}  // namespace cflab
