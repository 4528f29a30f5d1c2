#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "headscan/geometry.h"

namespace headscan {

// Static 3-D k-d tree over a borrowed point array. The points must outlive the tree.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points);

    struct Hit {
        std::size_t index = 0;
        double distance_sq = std::numeric_limits<double>::infinity();
        bool found() const { return distance_sq < std::numeric_limits<double>::infinity(); }
    };

    // Nearest point within max_distance (inclusive); Hit::found() is false otherwise.
    Hit nearest(const Vec3& q,
                double max_distance = std::numeric_limits<double>::infinity()) const;

    // k nearest points sorted by (distance, index).
    std::vector<Hit> knn(const Vec3& q, std::size_t k) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // range in order_
        std::int32_t left = -1, right = -1;
        std::int32_t axis = -1;            // -1 for leaves
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search_nearest(std::int32_t node, const Vec3& q, Hit& best) const;
    void search_knn(std::int32_t node, const Vec3& q, std::size_t k, std::vector<Hit>& heap) const;

    std::span<const Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace headscan
