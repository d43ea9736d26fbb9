#include "mfd/spatial_index.hpp"

#include <algorithm>
#include <cmath>

#include "mfd/error.hpp"

namespace mfd {

BucketGrid::BucketGrid(std::span<const Point2> points, double cell_size)
    : points_(points.begin(), points.end()) {
    if (!(cell_size > 0.0)) throw Error("bucket grid cell size must be positive");
    if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw Error("too many points");

    Point2 lo{0.0, 0.0};
    Point2 hi{0.0, 0.0};
    if (!points_.empty()) {
        lo = hi = points_.front();
        for (const auto& p : points_) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
    }
    // Cap the bucket count so that tiny cells on a large extent stay affordable.
    const double max_cells = 4.0 * static_cast<double>(points_.size()) + 1024.0;
    cell_ = cell_size;
    while (((hi.x - lo.x) / cell_ + 1.0) * ((hi.y - lo.y) / cell_ + 1.0) > max_cells) cell_ *= 2.0;

    origin_ = lo;
    nx_ = static_cast<std::size_t>(std::floor((hi.x - lo.x) / cell_)) + 1;
    ny_ = static_cast<std::size_t>(std::floor((hi.y - lo.y) / cell_)) + 1;

    std::vector<std::uint32_t> cell_of(points_.size());
    start_.assign(nx_ * ny_ + 1, 0);
    for (std::size_t k = 0; k < points_.size(); ++k) {
        const auto [i, j] = cell_coords(points_[k]);
        cell_of[k] = static_cast<std::uint32_t>(static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i));
        ++start_[cell_of[k] + 1];
    }
    for (std::size_t c = 0; c < nx_ * ny_; ++c) start_[c + 1] += start_[c];
    items_.resize(points_.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t k = 0; k < points_.size(); ++k) items_[fill[cell_of[k]]++] = static_cast<std::uint32_t>(k);
}

std::pair<long, long> BucketGrid::cell_coords(Point2 p) const {
    const double fx = std::floor((p.x - origin_.x) / cell_);
    const double fy = std::floor((p.y - origin_.y) / cell_);
    const long i = static_cast<long>(std::clamp(fx, 0.0, static_cast<double>(nx_ - 1)));
    const long j = static_cast<long>(std::clamp(fy, 0.0, static_cast<double>(ny_ - 1)));
    return {i, j};
}

std::vector<std::size_t> BucketGrid::within(Point2 q, double radius, std::size_t exclude) const {
    std::vector<std::size_t> out;
    visit_within(q, radius, [&](std::size_t idx, double) {
        if (idx != exclude) out.push_back(idx);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t BucketGrid::nearest(Point2 q, std::size_t exclude) const {
    const auto found = k_nearest(q, 1, exclude);
    return found.empty() ? npos : found.front();
}

std::vector<std::size_t> BucketGrid::k_nearest(Point2 q, std::size_t k, std::size_t exclude) const {
    std::vector<std::pair<double, std::size_t>> best;
    const std::size_t available = points_.size() - (exclude < points_.size() ? 1 : 0);
    k = std::min(k, available);
    if (k == 0) return {};

    // Grow square rings of buckets until the k-th distance is certified.
    const auto [ci, cj] = cell_coords(q);
    const long max_ring = static_cast<long>(std::max(nx_, ny_));
    for (long ring = 0; ring <= max_ring; ++ring) {
        for (long j = cj - ring; j <= cj + ring; ++j) {
            if (j < 0 || j >= static_cast<long>(ny_)) continue;
            for (long i = ci - ring; i <= ci + ring; ++i) {
                if (i < 0 || i >= static_cast<long>(nx_)) continue;
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                const std::size_t c = static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i);
                for (std::uint32_t m = start_[c]; m < start_[c + 1]; ++m) {
                    const std::size_t idx = items_[m];
                    if (idx == exclude) continue;
                    best.emplace_back(squared_distance(points_[idx], q), idx);
                }
            }
        }
        if (best.size() >= k) {
            std::partial_sort(best.begin(), best.begin() + static_cast<long>(k), best.end());
            best.resize(k);
            // Anything outside the rings searched so far is at least this far away.
            const double lo_x = origin_.x + static_cast<double>(ci - ring) * cell_;
            const double hi_x = origin_.x + static_cast<double>(ci + ring + 1) * cell_;
            const double lo_y = origin_.y + static_cast<double>(cj - ring) * cell_;
            const double hi_y = origin_.y + static_cast<double>(cj + ring + 1) * cell_;
            const double margin = std::min({q.x - lo_x, hi_x - q.x, q.y - lo_y, hi_y - q.y});
            if (margin > 0.0 && best.back().first < margin * margin) break;
            if (ring == max_ring) break;
        }
    }
    std::sort(best.begin(), best.end());
    if (best.size() > k) best.resize(k);
    std::vector<std::size_t> out;
    out.reserve(best.size());
    for (const auto& [d2, idx] : best) out.push_back(idx);
    return out;
}

}  // namespace mfd
