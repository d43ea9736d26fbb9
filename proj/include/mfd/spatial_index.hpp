#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mfd/geometry.hpp"

namespace mfd {

/// Uniform bucket grid over a fixed point set. Buckets store point indices in
/// ascending order, so every query is deterministic.
class BucketGrid {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    BucketGrid(std::span<const Point2> points, double cell_size);

    std::size_t size() const { return points_.size(); }
    const Point2& point(std::size_t i) const { return points_[i]; }
    double cell_size() const { return cell_; }

    /// Calls fn(index, squared_distance) for every point with |p - q| <= radius.
    template <class Fn>
    void visit_within(Point2 q, double radius, Fn&& fn) const {
        const double r2 = radius * radius;
        const auto [i0, j0] = cell_coords({q.x - radius, q.y - radius});
        const auto [i1, j1] = cell_coords({q.x + radius, q.y + radius});
        for (long j = j0; j <= j1; ++j) {
            for (long i = i0; i <= i1; ++i) {
                const std::size_t c = static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i);
                for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) {
                    const std::uint32_t idx = items_[k];
                    const double d2 = squared_distance(points_[idx], q);
                    if (d2 <= r2) fn(static_cast<std::size_t>(idx), d2);
                }
            }
        }
    }

    /// Indices within the closed ball, ascending; `exclude` is skipped.
    std::vector<std::size_t> within(Point2 q, double radius, std::size_t exclude = npos) const;

    /// Nearest point to q other than `exclude`; npos if none.
    std::size_t nearest(Point2 q, std::size_t exclude = npos) const;

    /// The k nearest points (ties by index), sorted by distance.
    std::vector<std::size_t> k_nearest(Point2 q, std::size_t k, std::size_t exclude = npos) const;

private:
    std::pair<long, long> cell_coords(Point2 p) const;

    std::vector<Point2> points_;
    Point2 origin_{};
    double cell_ = 1.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
};

}  // namespace mfd
