#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cflab/group.hpp"

namespace cflab {

using VertexIndex = std::int32_t;

inline constexpr std::int64_t kDefaultBallCap = 2'000'000;
inline constexpr std::int64_t kDefaultTableCap = 8'000'000;

// Finite ball {g : |g| <= R} of a Cayley graph, enumerated by breadth-first
// search from the identity.  Vertices are numbered in discovery order, so
// vertex 0 is the identity, lengths are nondecreasing in the index, and the
// ball of any smaller radius is a prefix of the vertex list.
class Ball {
 public:
  static constexpr VertexIndex kOutside = -1;

  int radius() const { return radius_; }
  VertexIndex size() const { return static_cast<VertexIndex>(lengths_.size()); }

  const GroupProvider& group() const { return *provider_; }
  const std::shared_ptr<const GroupProvider>& group_ptr() const {
    return provider_;
  }
  std::size_t degree() const { return provider_->generator_count(); }

  const GroupElement& element(VertexIndex v) const { return elements_[v]; }
  int length(VertexIndex v) const { return lengths_[v]; }
  std::optional<VertexIndex> find(const GroupElement& x) const;

  // Vertex of element(v) * S[s], or kOutside when that element has length
  // R + 1 (edges leaving the ball are kept as explicit markers).
  VertexIndex neighbor(VertexIndex v, std::size_t s) const {
    return adjacency_[static_cast<std::size_t>(v) * degree() + s];
  }
  // True when no incident edge leaves the ball.
  bool interior(VertexIndex v) const;
  // BFS tree parent (kOutside for the identity).
  VertexIndex parent(VertexIndex v) const { return parents_[v]; }

  // Vertices at word length exactly n, in index order.
  const std::vector<VertexIndex>& sphere(int n) const { return spheres_[n]; }

 private:
  friend Ball build_ball(std::shared_ptr<const GroupProvider> provider,
                         int radius, std::int64_t max_vertices);
  friend Ball restrict_ball(const Ball& ball, int radius);

  std::shared_ptr<const GroupProvider> provider_;
  int radius_ = 0;
  std::vector<GroupElement> elements_;
  std::vector<int> lengths_;
  std::vector<VertexIndex> parents_;
  std::vector<VertexIndex> adjacency_;  // size() * degree(), row-major
  std::vector<std::vector<VertexIndex>> spheres_;
  std::unordered_map<GroupElement, VertexIndex, GroupElementHash> index_;
};

// Throws ResourceLimitError when the ball would exceed max_vertices.
Ball build_ball(std::shared_ptr<const GroupProvider> provider, int radius,
                std::int64_t max_vertices = kDefaultBallCap);

// The sub-ball of a smaller radius, extracted from an existing ball without
// redoing group arithmetic (BFS order makes it a vertex prefix).
Ball restrict_ball(const Ball& ball, int radius);

// Word length of x, i.e. its BFS depth; throws std::out_of_range when x lies
// outside the ball.
int word_length(const Ball& ball, const GroupElement& x);

// Exact graph distance d(x, y) = |x^-1 y| by bidirectional BFS in the group
// (not restricted to any ball).  Returns nullopt when the distance exceeds
// cap.
std::optional<int> distance(const GroupProvider& provider,
                            const GroupElement& x, const GroupElement& y,
                            int cap);

struct GrowthHistogram {
  std::vector<std::int64_t> sphere_sizes;  // |S_0| .. |S_R|
  std::vector<std::int64_t> ball_sizes;    // |B_0| .. |B_R|
  // Crude growth-rate estimates from the outermost shells; absent when the
  // shells needed are empty or the radius is too small.
  std::optional<double> last_ratio;  // |S_R| / |S_{R-1}|
  std::optional<double> last_root;   // |S_R|^{1/R}
};

GrowthHistogram growth_histogram(const Ball& ball);

// Hash table of word lengths for every element with |g| <= depth.  Backs
// exact distance lookups for pairs drawn from a ball of radius depth / 2.
class WordLengthTable {
 public:
  WordLengthTable(std::shared_ptr<const GroupProvider> provider, int depth,
                  std::int64_t max_elements = kDefaultTableCap);

  int depth() const { return depth_; }
  std::int64_t size() const { return static_cast<std::int64_t>(lengths_.size()); }
  // nullopt when |x| > depth.
  std::optional<int> length(const GroupElement& x) const;

 private:
  int depth_;
  std::unordered_map<GroupElement, std::int32_t, GroupElementHash> lengths_;
};

}  // namespace cflab
