#include "mfd/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfd/error.hpp"

namespace mfd {

namespace {

struct Candidate {
    double misalignment = std::numeric_limits<double>::infinity();
    double radius = std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();

    bool better_than(const Candidate& o) const {
        if (misalignment != o.misalignment) return misalignment < o.misalignment;
        if (radius != o.radius) return radius < o.radius;
        return index < o.index;
    }
};

// Quadrant (1..4) and angular distance to the +-e_theta axis for a frame angle in [0, 2pi).
std::pair<int, double> classify(double angle) {
    if (angle < kHalfPi) return {1, angle};
    if (angle < kPi) return {2, kPi - angle};
    if (angle < 1.5 * kPi) return {3, angle - kPi};
    return {4, kTwoPi - angle};
}

// Frame coordinates clamped to the sign pattern of their quadrant.
void frame_components(Point2 d, double theta, int quadrant, double& c, double& s) {
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    c = d.x * ct + d.y * st;
    s = -d.x * st + d.y * ct;
    switch (quadrant) {
        case 1: c = std::max(c, 0.0); s = std::max(s, 0.0); break;
        case 2: c = std::min(c, 0.0); s = std::max(s, 0.0); break;
        case 3: c = std::min(c, 0.0); s = std::min(s, 0.0); break;
        default: c = std::max(c, 0.0); s = std::min(s, 0.0); break;
    }
}

// Closed-form weights; returns false for a singular configuration.
bool solve_weights(const std::array<double, 4>& C, const std::array<double, 4>& S, std::array<double, 4>& a) {
    double scale = 0.0;
    for (int q = 0; q < 4; ++q) scale = std::max(scale, std::hypot(C[q], S[q]));
    if (!(scale > 0.0)) return false;

    const double P = C[2] * S[1] - C[1] * S[2];
    const double Q = C[0] * S[3] - C[3] * S[0];
    const double D = P * (C[0] * C[0] * S[3] - C[3] * C[3] * S[0]) - Q * (C[2] * C[2] * S[1] - C[1] * C[1] * S[2]);
    const double scale5 = scale * scale * scale * scale * scale;

    if (D > 1e-14 * scale5) {
        a = {2.0 * S[3] * P / D, 2.0 * S[2] * Q / D, -2.0 * S[1] * Q / D, -2.0 * S[0] * P / D};
    } else {
        // Exact alignment: non-uniform centred difference on the aligned pair.
        const double tol = 1e-7 * scale;
        const int p = std::abs(S[0]) <= std::abs(S[3]) ? 0 : 3;
        const int m = std::abs(S[2]) <= std::abs(S[1]) ? 2 : 1;
        if (std::abs(S[p]) > tol || std::abs(S[m]) > tol || !(C[p] > 0.0) || !(C[m] < 0.0)) return false;
        a = {0.0, 0.0, 0.0, 0.0};
        a[p] = 2.0 / (C[p] * (C[p] - C[m]));
        a[m] = -2.0 / (C[m] * (C[p] - C[m]));
    }
    for (double w : a) {
        if (!std::isfinite(w) || w < 0.0) return false;
    }
    return true;
}

}  // namespace

LocalFrameCoord local_frame_coords(Point2 x0, Point2 xj, double theta) {
    const Point2 d = xj - x0;
    const double r = norm(d);
    if (!(r > 0.0)) throw Error("duplicate node: local frame undefined for coincident points");
    const double angle = wrap_angle(std::atan2(d.y, d.x) - wrap_angle(theta));
    const auto [q, mis] = classify(angle);
    return {r, angle, mis, q};
}

Stencil stencil_weights(Stencil stencil) {
    std::array<double, 4> a{};
    if (!solve_weights(stencil.C, stencil.S, a)) {
        std::ostringstream msg;
        msg << "singular stencil at node " << stencil.center << " for direction " << stencil.direction;
        throw Error(msg.str());
    }
    stencil.weight = a;
    return stencil;
}

namespace detail {

StencilSearch::StencilSearch(const PointCloud& cloud, const SchemeConfig& cfg)
    : cloud_(cloud), cfg_(cfg), grid_(cloud.points(), cfg.radius) {}

void StencilSearch::gather(std::size_t i, Neighbourhood& out, const std::vector<std::uint8_t>* alive) const {
    out.index.clear();
    out.phi.clear();
    out.radius.clear();
    const Point2 x0 = cloud_.point(i);
    grid_.visit_within(x0, cfg_.radius, [&](std::size_t j, double d2) {
        if (j == i || (alive && !(*alive)[j])) return;
        const Point2 d = cloud_.point(j) - x0;
        out.index.push_back(static_cast<std::uint32_t>(j));
        out.phi.push_back(std::atan2(d.y, d.x));
        out.radius.push_back(std::sqrt(d2));
    });
}

StencilSelection StencilSearch::select(std::size_t i, const Neighbourhood& nb, double theta) const {
    const double frame = wrap_angle(theta);
    std::array<Candidate, 4> best{};
    for (std::size_t k = 0; k < nb.index.size(); ++k) {
        const auto [q, mis] = classify(wrap_angle(nb.phi[k] - frame));
        const Candidate cand{mis, nb.radius[k], nb.index[k]};
        if (cand.better_than(best[q - 1])) best[q - 1] = cand;
    }
    for (int q = 0; q < 4; ++q) {
        if (best[q].index == std::numeric_limits<std::size_t>::max()) return MissingQuadrant{q + 1};
    }
    Stencil st;
    st.center = i;
    st.direction = theta;
    const Point2 x0 = cloud_.point(i);
    for (int q = 0; q < 4; ++q) {
        st.neighbor[q] = best[q].index;
        st.misalignment[q] = best[q].misalignment;
        frame_components(cloud_.point(best[q].index) - x0, theta, q + 1, st.C[q], st.S[q]);
    }
    return st;
}

bool StencilSearch::build(std::size_t i, const Neighbourhood& nb, double theta, StencilRow& out) const {
    const StencilSelection sel = select(i, nb, theta);
    const Stencil* st = std::get_if<Stencil>(&sel);
    if (!st) return false;
    std::array<double, 4> a{};
    if (!solve_weights(st->C, st->S, a)) return false;
    for (int q = 0; q < 4; ++q) out.neighbor[q] = static_cast<std::uint32_t>(st->neighbor[q]);
    out.weight = a;
    return true;
}

}  // namespace detail

StencilSelection select_stencil(const PointCloud& cloud, std::size_t i, double theta, const SchemeConfig& cfg) {
    if (cloud.is_boundary(i)) throw Error("select_stencil requires an interior node");
    const detail::StencilSearch search(cloud, cfg);
    detail::Neighbourhood nb;
    search.gather(i, nb);
    return search.select(i, nb, theta);
}

StencilTable::StencilTable(const PointCloud& cloud, std::vector<double> thetas, const SchemeConfig& cfg)
    : thetas_(std::move(thetas)), nodes_(cloud.size()), boundary_(cloud.boundary_flags()) {
    rows_.resize(thetas_.size() * nodes_);
    const detail::StencilSearch search(cloud, cfg);
    detail::Neighbourhood nb;
    for (std::size_t i = 0; i < nodes_; ++i) {
        if (cloud.is_boundary(i)) continue;
        search.gather(i, nb);
        for (std::size_t k = 0; k < thetas_.size(); ++k) {
            if (!search.build(i, nb, thetas_[k], rows_[k * nodes_ + i])) {
                std::ostringstream msg;
                msg << "node " << i << " has no monotone stencil for direction " << thetas_[k]
                    << "; the cloud must be pruned first";
                throw Error(msg.str());
            }
        }
    }
}

std::vector<double> StencilTable::apply(std::size_t direction, std::span<const double> u) const {
    std::vector<double> out(nodes_, 0.0);
    for (std::size_t i = 0; i < nodes_; ++i) {
        if (!boundary_[i]) out[i] = row(direction, i).apply(u, i);
    }
    return out;
}

DiscreteOperator assemble_directional(const PointCloud& cloud, double theta, const SchemeConfig& cfg) {
    const StencilTable table(cloud, {theta}, cfg);
    const std::size_t n = cloud.size();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(5 * n);
    DiscreteOperator op;
    op.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    op.kinds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<int>(i);
        if (cloud.is_boundary(i)) {
            op.kinds[i] = DiscreteOperator::RowKind::boundary;
            triplets.emplace_back(row, row, 1.0);
            continue;
        }
        op.kinds[i] = DiscreteOperator::RowKind::interior;
        const StencilRow& st = table.row(0, i);
        double diag = 0.0;
        for (int q = 0; q < 4; ++q) {
            diag += st.weight[q];
            triplets.emplace_back(row, static_cast<int>(st.neighbor[q]), -st.weight[q]);
        }
        triplets.emplace_back(row, row, diag);
    }
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return op;
}

PointCloud prune_cloud(const PointCloud& cloud, std::span<const double> thetas, const SchemeConfig& cfg) {
    const std::size_t n = cloud.size();
    std::vector<std::uint8_t> alive(n, 1);
    const detail::StencilSearch search(cloud, cfg);
    const BucketGrid grid(cloud.points(), cfg.radius);
    detail::Neighbourhood nb;
    StencilRow scratch;

    auto node_ok = [&](std::size_t i) {
        search.gather(i, nb, &alive);
        for (double theta : thetas) {
            if (!search.build(i, nb, theta, scratch)) return false;
        }
        return true;
    };

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        if (!cloud.is_boundary(i)) candidates.push_back(i);
    }
    while (!candidates.empty()) {
        std::vector<std::size_t> removed;
        for (std::size_t i : candidates) {
            if (!node_ok(i)) removed.push_back(i);
        }
        if (removed.empty()) break;
        for (std::size_t i : removed) alive[i] = 0;

        // Only nodes that could have used a removed node need rechecking.
        std::vector<std::uint8_t> dirty(n, 0);
        for (std::size_t i : removed) {
            grid.visit_within(cloud.point(i), cfg.radius, [&](std::size_t j, double) {
                if (alive[j] && !cloud.is_boundary(j)) dirty[j] = 1;
            });
        }
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (dirty[j]) candidates.push_back(j);
        }
    }

    std::size_t interior_left = 0;
    for (std::size_t i = 0; i < n; ++i) interior_left += (alive[i] && !cloud.is_boundary(i)) ? 1 : 0;
    if (interior_left == 0) throw Error("cloud exhausted: no interior node has a monotone stencil");
    return cloud.subset(alive);
}

}  // namespace mfd
