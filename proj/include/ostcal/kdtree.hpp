#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ostcal/geometry.hpp"

namespace ostcal {

/// Exact nearest-neighbour index over a fixed 3D cloud (k-d tree with
/// bucketed leaves). Equidistant candidates resolve to the lowest point index.
class NearestNeighborIndex {
   public:
    struct Match {
        std::size_t index = 0;
        double squared_distance = 0;
    };

    explicit NearestNeighborIndex(std::span<const Vec3d> cloud);

    Match nearest(const Vec3d& query) const;

    const Vec3d& point(std::size_t i) const { return points_[i]; }
    std::size_t size() const { return points_.size(); }

   private:
    static constexpr std::uint32_t kLeafSize = 8;

    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = 0;
        double split = 0;
        bool leaf() const { return left < 0; }
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Vec3d& query, Match& best) const;

    std::vector<Vec3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace ostcal
