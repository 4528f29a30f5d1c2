#include "headscan/kdtree.h"

#include <algorithm>
#include <numeric>

namespace headscan {

namespace {
constexpr std::uint32_t kLeafSize = 12;

bool hit_less(const KdTree::Hit& a, const KdTree::Hit& b) {
    return a.distance_sq < b.distance_sq ||
           (a.distance_sq == b.distance_sq && a.index < b.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points.empty()) {
        nodes_.reserve(2 * points.size() / kLeafSize + 2);
        root_ = build(0, static_cast<std::uint32_t>(points.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, -1, 0.0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis] ||
                                (points_[a][axis] == points_[b][axis] && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    auto& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
}

KdTree::Hit KdTree::nearest(const Vec3& q, double max_distance) const {
    Hit best;
    if (root_ < 0) return best;
    // Seed the bound slightly above the limit so hits exactly at max_distance are kept.
    best.distance_sq = std::nextafter(max_distance * max_distance,
                                      std::numeric_limits<double>::infinity());
    best.index = std::numeric_limits<std::size_t>::max();
    search_nearest(root_, q, best);
    if (best.index == std::numeric_limits<std::size_t>::max()) return Hit{};
    return best;
}

void KdTree::search_nearest(std::int32_t id, const Vec3& q, Hit& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
        for (auto i = n.begin; i < n.end; ++i) {
            const auto idx = order_[i];
            const double d = (points_[idx] - q).squaredNorm();
            if (d < best.distance_sq || (d == best.distance_sq && idx < best.index)) {
                best.distance_sq = d;
                best.index = idx;
            }
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff < 0 ? n.left : n.right;
    const auto far = diff < 0 ? n.right : n.left;
    search_nearest(near, q, best);
    if (diff * diff <= best.distance_sq) search_nearest(far, q, best);
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& q, std::size_t k) const {
    std::vector<Hit> heap;
    if (root_ < 0 || k == 0) return heap;
    heap.reserve(k + 1);
    search_knn(root_, q, k, heap);
    std::sort_heap(heap.begin(), heap.end(), hit_less);
    return heap;
}

void KdTree::search_knn(std::int32_t id, const Vec3& q, std::size_t k,
                        std::vector<Hit>& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
        for (auto i = n.begin; i < n.end; ++i) {
            Hit h{order_[i], (points_[order_[i]] - q).squaredNorm()};
            if (heap.size() < k) {
                heap.push_back(h);
                std::push_heap(heap.begin(), heap.end(), hit_less);
            } else if (hit_less(h, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), hit_less);
                heap.back() = h;
                std::push_heap(heap.begin(), heap.end(), hit_less);
            }
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff < 0 ? n.left : n.right;
    const auto far = diff < 0 ? n.right : n.left;
    search_knn(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().distance_sq) search_knn(far, q, k, heap);
}

}  // namespace headscan
