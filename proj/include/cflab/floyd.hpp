#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cflab/ball.hpp"
#include "cflab/gromov.hpp"

namespace cflab {

inline constexpr std::int64_t kDefaultAllPairsCap = 1500;
inline constexpr std::int64_t kDefaultPairBudget = 2'000'000;

// Scaling function F: N -> (0, inf), nonincreasing with F(n) <= L * F(n+1)
// for a fixed L >= 1 (quasi-geometric decay).  Three parametric families:
//   geometric(s):    F(n) = s^n,            0 < s < 1,  L = 1/s
//   exponential(a):  F(n) = e^{-a n},       a > 0,      L = e^a
//   power(b):        F(n) = (n+1)^{-b},     b > 0,      L = 2^b
struct AdmissibleFunction {
  enum class Kind { Geometric, Exponential, Power };

  Kind kind = Kind::Geometric;
  double parameter = 0.5;

  static AdmissibleFunction geometric(double base);
  static AdmissibleFunction exponential(double rate);
  static AdmissibleFunction power(double exponent);

  double operator()(int n) const;
  // Smallest L valid for the whole family (sup of F(n)/F(n+1)).
  double quasi_geometric_constant() const;
  // Whether sum_n F(n) converges.
  bool summable() const;
  // sum_{n >= from} F(n); exact for geometric/exponential, an integral upper
  // bound for power (infinity when not summable).
  double tail_sum(int from) const;
  std::string describe() const;
};

struct AdmissibilityVerdict {
  bool admissible = false;
  // Smallest constant making the two-sided bound hold on the checked prefix.
  double smallest_prefix_constant = 1.0;
  std::string reason;
};

// Checks positivity, monotone decay and the quasi-geometric bound with
// constant L on n = 0..prefix_length.  The summability claim cannot be
// decided from a prefix, so it is taken as a certificate and only echoed.
AdmissibilityVerdict check_admissible(const std::function<double(int)>& f,
                                      int prefix_length, double L);
AdmissibilityVerdict check_admissible(const AdmissibleFunction& f,
                                      int prefix_length);

// Weight F(min(|g|, |h|)) of an edge of the ball; g and h must be adjacent.
double floyd_edge_weight(const Ball& ball, VertexIndex g, VertexIndex h,
                         const AdmissibleFunction& f);

// Shortest weighted path distances within the ball graph (Dijkstra).
Eigen::VectorXd floyd_distances_from(const Ball& ball, VertexIndex source,
                                     const AdmissibleFunction& f);
double floyd_distance(const Ball& ball, VertexIndex x, VertexIndex y,
                      const AdmissibleFunction& f);

// Chain metric: shortest path in the complete graph on the ball's vertices
// with pair weight e^{-a (u|v)}.
Eigen::MatrixXd chain_weight_matrix(const GromovProductTable& products,
                                    double a);
Eigen::MatrixXd chain_distance_matrix(const GromovProductTable& products,
                                      double a,
                                      std::int64_t max_vertices =
                                          kDefaultAllPairsCap);
double chain_distance(const Ball& ball, VertexIndex x, VertexIndex y,
                      double a,
                      std::int64_t max_table_elements = kDefaultTableCap);

struct SamplingPolicy {
  std::int64_t max_pairs = kDefaultPairBudget;
  std::uint64_t seed = 0;
};

struct SphereDiameterStats {
  int radius = 0;
  double max = 0.0;            // largest pair distance seen
  double min_antipodal = 0.0;  // smallest distance among word-antipodal pairs
  double mean = 0.0;
  std::int64_t pairs = 0;  // distinct unordered pairs examined
};

// Floyd-metric extent of the sphere S_n inside the ambient ball (paths may
// cut through the whole ball, so a larger ambient radius gives a sharper
// value).  Exhaustive when |S_n|^2 <= max_pairs, otherwise a deterministic
// sample of source vertices.  Antipodal means d(x, y) = 2n exactly.
SphereDiameterStats sphere_floyd_diameter(const Ball& ball, int n,
                                          const AdmissibleFunction& f,
                                          const SamplingPolicy& policy = {});

// The distance-to-a-ray witness function g -> d_F(g, t) clipped to the ball,
// where t is the ball vertex furthest along the ray of powers of a chosen
// generator.  Nonconstant, 1-Lipschitz in d_F by construction.
struct WitnessField {
  Eigen::VectorXd values;
  VertexIndex target = 0;  // ray tip the distances point at
  std::size_t ray_generator = 0;
  AdmissibleFunction weight;
};

WitnessField witness_field(const Ball& ball, std::size_t ray_generator,
                           const AdmissibleFunction& f);

struct WitnessEnergyReport {
  double energy = 0.0;  // p-Dirichlet energy of the witness on the ball
  double bound = 0.0;   // #S * L^p * sum_{g in ball} F(|g|)^p
  double ratio = 0.0;   // energy / bound
};

WitnessEnergyReport witness_energy_report(const Ball& ball,
                                          const WitnessField& witness,
                                          double p);

enum class SummabilityVerdict { Converging, Diverging, Inconclusive };

std::string to_string(SummabilityVerdict v);

// Behaviour of sum_n |S_n| F(n)^p through radius R, driven by exact sphere
// counts.  shell_terms[n] = |S_n| F(n)^p.
struct SummabilityReport {
  double p = 0.0;
  std::vector<double> shell_terms;
  std::vector<double> partial_sums;
  double shell_ratio = 0.0;  // last ratio shell_terms[R] / shell_terms[R-1]
  SummabilityVerdict verdict = SummabilityVerdict::Inconclusive;
  // Geometric extrapolation of the limit; NaN unless converging.
  double extrapolated_limit = 0.0;
};

SummabilityReport summability(std::span<const std::int64_t> sphere_sizes,
                              const AdmissibleFunction& f, double p);
SummabilityReport summability(const GroupProvider& provider, int radius,
                              const AdmissibleFunction& f, double p);

}  // namespace cflab
