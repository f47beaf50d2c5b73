#include "cflab/ball.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "cflab/errors.hpp"
#include "cflab/format.hpp"

namespace cflab {

std::optional<VertexIndex> Ball::find(const GroupElement& x) const {
  auto it = index_.find(x);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Ball::interior(VertexIndex v) const {
  const std::size_t d = degree();
  for (std::size_t s = 0; s < d; ++s) {
    if (neighbor(v, s) == kOutside) return false;
  }
  return true;
}

Ball build_ball(std::shared_ptr<const GroupProvider> provider, int radius,
                std::int64_t max_vertices) {
  if (!provider) throw std::invalid_argument("null provider");
  if (radius < 0) throw std::invalid_argument("negative radius");

  Ball ball;
  ball.provider_ = std::move(provider);
  ball.radius_ = radius;
  const GroupProvider& g = *ball.provider_;
  const std::size_t degree = g.generator_count();

  ball.elements_.push_back(g.identity());
  ball.lengths_.push_back(0);
  ball.parents_.push_back(Ball::kOutside);
  ball.index_.emplace(g.identity(), 0);
  ball.spheres_.assign(static_cast<std::size_t>(radius) + 1, {});
  ball.spheres_[0].push_back(0);

  // Levels 0 .. R-1 are expanded (filling their adjacency rows as a side
  // effect); the last level's rows are completed afterwards.
  std::size_t expanded = 0;
  for (int depth = 0; depth < radius; ++depth) {
    const std::size_t level_end = ball.elements_.size();
    for (std::size_t v = expanded; v < level_end; ++v) {
      ball.adjacency_.resize((v + 1) * degree, Ball::kOutside);
      for (std::size_t s = 0; s < degree; ++s) {
        GroupElement next = g.multiply(ball.elements_[v], g.generator(s));
        auto it = ball.index_.find(next);
        if (it != ball.index_.end()) {
          ball.adjacency_[v * degree + s] = it->second;
          continue;
        }
        if (static_cast<std::int64_t>(ball.elements_.size()) >= max_vertices) {
          throw ResourceLimitError(
              "ball of radius " + format_int(radius) + " exceeds " +
              format_int(max_vertices) + " vertices (at depth " +
              format_int(depth + 1) + ")");
        }
        VertexIndex idx = static_cast<VertexIndex>(ball.elements_.size());
        ball.index_.emplace(next, idx);
        ball.elements_.push_back(std::move(next));
        ball.lengths_.push_back(depth + 1);
        ball.parents_.push_back(static_cast<VertexIndex>(v));
        ball.spheres_[static_cast<std::size_t>(depth) + 1].push_back(idx);
        ball.adjacency_[v * degree + s] = idx;
      }
    }
    expanded = level_end;
    if (expanded == ball.elements_.size()) break;  // group exhausted
  }

  ball.adjacency_.resize(ball.elements_.size() * degree, Ball::kOutside);
  for (std::size_t v = expanded; v < ball.elements_.size(); ++v) {
    for (std::size_t s = 0; s < degree; ++s) {
      GroupElement next = g.multiply(ball.elements_[v], g.generator(s));
      auto it = ball.index_.find(next);
      ball.adjacency_[v * degree + s] =
          it == ball.index_.end() ? Ball::kOutside : it->second;
    }
  }
  return ball;
}

Ball restrict_ball(const Ball& ball, int radius) {
  if (radius < 0 || radius > ball.radius()) {
    throw std::invalid_argument("restriction radius out of range");
  }
  std::size_t size = 0;
  for (int n = 0; n <= radius; ++n) size += ball.sphere(n).size();

  Ball out;
  out.provider_ = ball.group_ptr();
  out.radius_ = radius;
  const std::size_t degree = ball.degree();
  out.elements_.assign(ball.elements_.begin(),
                       ball.elements_.begin() + static_cast<std::ptrdiff_t>(size));
  out.lengths_.assign(ball.lengths_.begin(),
                      ball.lengths_.begin() + static_cast<std::ptrdiff_t>(size));
  out.parents_.assign(ball.parents_.begin(),
                      ball.parents_.begin() + static_cast<std::ptrdiff_t>(size));
  out.spheres_.assign(ball.spheres_.begin(),
                      ball.spheres_.begin() + radius + 1);
  out.adjacency_.assign(ball.adjacency_.begin(),
                        ball.adjacency_.begin() +
                            static_cast<std::ptrdiff_t>(size * degree));
  for (auto& a : out.adjacency_) {
    if (a >= static_cast<VertexIndex>(size)) a = Ball::kOutside;
  }
  for (VertexIndex v = 0; v < static_cast<VertexIndex>(size); ++v) {
    out.index_.emplace(out.elements_[v], v);
  }
  return out;
}

int word_length(const Ball& ball, const GroupElement& x) {
  auto v = ball.find(x);
  if (!v) throw std::out_of_range("element lies outside the ball");
  return ball.length(*v);
}

namespace {

using SeenMap =
    std::unordered_map<GroupElement, std::int32_t, GroupElementHash>;

constexpr std::int64_t kSearchGuard = 40'000'000;

// Expands `front` (all at the same depth) by one step; returns the smallest
// combined distance through a vertex also seen from the other side, or -1.
int expand_level(const GroupProvider& g, std::vector<GroupElement>& front,
                 SeenMap& seen, const SeenMap& other, int new_depth) {
  std::vector<GroupElement> next;
  int best = -1;
  for (const auto& u : front) {
    for (std::size_t s = 0; s < g.generator_count(); ++s) {
      GroupElement v = g.multiply(u, g.generator(s));
      if (!seen.emplace(v, new_depth).second) continue;
      auto it = other.find(v);
      if (it != other.end()) {
        int total = new_depth + it->second;
        if (best < 0 || total < best) best = total;
      }
      next.push_back(std::move(v));
    }
  }
  front = std::move(next);
  return best;
}

}  // namespace

std::optional<int> distance(const GroupProvider& provider,
                            const GroupElement& x, const GroupElement& y,
                            int cap) {
  if (cap < 0) throw std::invalid_argument("negative distance cap");
  if (x == y) return 0;
  GroupElement target = provider.multiply(provider.invert(x), y);

  SeenMap seen_a{{provider.identity(), 0}};
  SeenMap seen_b{{target, 0}};
  std::vector<GroupElement> front_a{provider.identity()};
  std::vector<GroupElement> front_b{std::move(target)};
  int depth_a = 0, depth_b = 0;

  while (depth_a + depth_b < cap && !front_a.empty() && !front_b.empty()) {
    int best;
    if (front_a.size() <= front_b.size()) {
      best = expand_level(provider, front_a, seen_a, seen_b, ++depth_a);
    } else {
      best = expand_level(provider, front_b, seen_b, seen_a, ++depth_b);
    }
    if (best >= 0) {
      if (best > cap) return std::nullopt;
      return best;
    }
    if (static_cast<std::int64_t>(seen_a.size() + seen_b.size()) >
        kSearchGuard) {
      throw ResourceLimitError("distance search visited more than " +
                               format_int(kSearchGuard) + " elements");
    }
  }
  return std::nullopt;
}

GrowthHistogram growth_histogram(const Ball& ball) {
  GrowthHistogram h;
  std::int64_t total = 0;
  for (int n = 0; n <= ball.radius(); ++n) {
    std::int64_t sn = static_cast<std::int64_t>(ball.sphere(n).size());
    total += sn;
    h.sphere_sizes.push_back(sn);
    h.ball_sizes.push_back(total);
  }
  int r = ball.radius();
  if (r >= 1 && h.sphere_sizes[r] > 0) {
    if (h.sphere_sizes[r - 1] > 0) {
      h.last_ratio = static_cast<double>(h.sphere_sizes[r]) /
                     static_cast<double>(h.sphere_sizes[r - 1]);
    }
    h.last_root = std::pow(static_cast<double>(h.sphere_sizes[r]), 1.0 / r);
  }
  return h;
}

WordLengthTable::WordLengthTable(std::shared_ptr<const GroupProvider> provider,
                                 int depth, std::int64_t max_elements)
    : depth_(depth) {
  if (!provider) throw std::invalid_argument("null provider");
  if (depth < 0) throw std::invalid_argument("negative depth");
  const GroupProvider& g = *provider;
  lengths_.emplace(g.identity(), 0);
  std::vector<GroupElement> front{g.identity()};
  for (int d = 1; d <= depth && !front.empty(); ++d) {
    std::vector<GroupElement> next;
    for (const auto& u : front) {
      for (std::size_t s = 0; s < g.generator_count(); ++s) {
        GroupElement v = g.multiply(u, g.generator(s));
        if (!lengths_.emplace(v, d).second) continue;
        if (static_cast<std::int64_t>(lengths_.size()) > max_elements) {
          throw ResourceLimitError(
              "word-length table to depth " + format_int(depth) +
              " exceeds " + format_int(max_elements) + " elements");
        }
        next.push_back(std::move(v));
      }
    }
    front = std::move(next);
  }
}

std::optional<int> WordLengthTable::length(const GroupElement& x) const {
  auto it = lengths_.find(x);
  if (it == lengths_.end()) return std::nullopt;
  return static_cast<int>(it->second);
}

}  // namespace cflab
