#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "cflab/ball.hpp"

namespace cflab {

inline constexpr std::int64_t kDefaultExhaustiveDeltaCap = 800;

// Gromov product (x|y) = (|x| + |y| - d(x,y)) / 2 with basepoint at the
// identity.  Word metrics make this an exact half-integer, stored as the
// doubled value.
class GromovProduct {
 public:
  static GromovProduct from_twice(int twice) { return GromovProduct(twice); }
  int twice() const { return twice_; }
  double value() const { return 0.5 * static_cast<double>(twice_); }
  friend bool operator==(const GromovProduct&, const GromovProduct&) = default;

 private:
  explicit GromovProduct(int twice) : twice_(twice) {}
  int twice_;
};

// nullopt when either length or the distance exceeds cap.
std::optional<GromovProduct> gromov_product(const GroupProvider& provider,
                                            const GroupElement& x,
                                            const GroupElement& y, int cap);

// All pairwise Gromov products of the vertices of a ball, with distances
// resolved exactly through a word-length table of depth >= 2R.
class GromovProductTable {
 public:
  GromovProductTable(const Ball& ball, const WordLengthTable& table);
  // Convenience constructor that builds the depth-2R table itself.
  GromovProductTable(const Ball& ball,
                     std::int64_t max_table_elements = kDefaultTableCap);

  int twice(VertexIndex i, VertexIndex j) const { return twice_(i, j); }
  double value(VertexIndex i, VertexIndex j) const {
    return 0.5 * static_cast<double>(twice_(i, j));
  }
  VertexIndex size() const { return static_cast<VertexIndex>(twice_.rows()); }

 private:
  Eigen::Matrix<std::int16_t, Eigen::Dynamic, Eigen::Dynamic> twice_;
};

struct DeltaScan {
  enum class Mode { Exhaustive, Sampled };
  Mode mode = Mode::Exhaustive;
  // Sampled mode only:
  std::int64_t samples = 200'000;
  std::uint64_t seed = 0;
  // Exhaustive mode refuses balls larger than this (the scan is cubic).
  std::int64_t exhaustive_cap = kDefaultExhaustiveDeltaCap;
  // Restrict the scan to the first vertex_limit vertices (a sub-ball, by the
  // BFS prefix property); negative means the whole ball.
  std::int64_t vertex_limit = -1;
};

struct DeltaEstimate {
  // max over scanned triples of min((x|z), (z|y)) - (x|y); a half-integer,
  // never negative (z = y gives 0).
  double delta_hat = 0.0;
  std::int64_t triples_examined = 0;
  std::array<VertexIndex, 3> witness = {0, 0, 0};  // x, y, z attaining the max
};

// Four-point hyperbolicity estimate over triples of ball vertices, products
// based at the identity.
DeltaEstimate estimate_delta(const Ball& ball, const GromovProductTable& table,
                             const DeltaScan& scan);
DeltaEstimate estimate_delta(const Ball& ball, const DeltaScan& scan = {});

// Largest usable visual parameter is bounded by e^{3 delta a} - 1 < sqrt(2)-1,
// i.e. a < ln(sqrt 2) / (3 delta).
bool scale_condition_holds(double delta_hat, double a);

// safety * ln(sqrt 2) / (3 delta_hat), and ln 2 when delta_hat == 0 (any a
// works in that case).  Requires delta_hat >= 0 and 0 < safety < 1.
double choose_scale_parameter(double delta_hat, double safety = 0.9);

}  // namespace cflab
