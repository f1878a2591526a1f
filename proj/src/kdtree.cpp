#include "ostcal/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ostcal {

NearestNeighborIndex::NearestNeighborIndex(std::span<const Vec3d> cloud) : points_(cloud.begin(), cloud.end()) {
    if (points_.empty()) throw InputError("cannot index an empty point cloud");
    for (const auto& p : points_)
        if (!p.allFinite()) throw InputError("point cloud contains a non-finite point");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t NearestNeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3d lo = Vec3d::Constant(std::numeric_limits<double>::infinity());
    Vec3d hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all duplicates: keep as one leaf

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];

    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

void NearestNeighborIndex::search(std::int32_t id, const Vec3d& query, Match& best) const {
    const Node& node = nodes_[id];
    if (node.leaf()) {
        for (auto i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            const double d = (points_[idx] - query).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && idx < best.index))
                best = {idx, d};
        }
        return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = query[node.axis] - node.split;
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    search(near, query, best);
    if (diff * diff <= best.squared_distance) search(far, query, best);
}

NearestNeighborIndex::Match NearestNeighborIndex::nearest(const Vec3d& query) const {
    Match best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(0, query, best);
    return best;
}

}  // namespace ostcal
