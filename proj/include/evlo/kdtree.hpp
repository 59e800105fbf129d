#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evlo/core_types.hpp"

namespace evlo {

struct Neighbor {
  std::size_t index;
  double squared_distance;
};

// Exact k-nearest-neighbour search over a fixed point set. Results are
// ordered by (distance, index), so equidistant points resolve to the lower
// index and queries are fully deterministic.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  // The k nearest points to `query`, excluding the point with index
  // `exclude` (pass npos to keep every point).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                            std::size_t exclude = npos) const;

  std::size_t size() const { return points_.size(); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, const Vec3& query, std::size_t k, std::size_t exclude,
              std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  static constexpr std::size_t kLeafSize = 8;
};

}  // namespace evlo
