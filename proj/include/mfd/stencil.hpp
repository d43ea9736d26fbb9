#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "mfd/cloud.hpp"
#include "mfd/spatial_index.hpp"

namespace mfd {

/// Polar coordinates of x_j about x_0 in the frame rotated to e_theta.
struct LocalFrameCoord {
    double radius = 0.0;        // h_j
    double angle = 0.0;         // theta_j in [0, 2pi)
    double misalignment = 0.0;  // dtheta_j: angle to the +-e_theta axis, in [0, pi/2]
    int quadrant = 1;           // (q-1) pi/2 <= theta_j < q pi/2
};

LocalFrameCoord local_frame_coords(Point2 x0, Point2 xj, double theta);

/// Four quadrant neighbours of a node with frame coordinates C_i = h_i cos theta_i,
/// S_i = h_i sin theta_i and weights a_i (index 0 holds quadrant 1).
struct Stencil {
    std::size_t center = 0;
    double direction = 0.0;
    std::array<std::size_t, 4> neighbor{};
    std::array<double, 4> C{};
    std::array<double, 4> S{};
    std::array<double, 4> misalignment{};
    std::array<double, 4> weight{};
};

struct MissingQuadrant {
    int quadrant = 1;
};

using StencilSelection = std::variant<Stencil, MissingQuadrant>;

/// Picks, per quadrant, the neighbour within cfg.radius best aligned with
/// +-e_theta (ties: smaller h_j, then smaller index). Weights are left unset.
StencilSelection select_stencil(const PointCloud& cloud, std::size_t i, double theta, const SchemeConfig& cfg);

/// Solves the monotone consistency system for a1..a4. Throws "singular stencil"
/// when the closed form degenerates and no aligned pair exists.
Stencil stencil_weights(Stencil stencil);

/// Sparse rows plus right-hand side; interior rows encode -D_thetatheta.
struct DiscreteOperator {
    enum class RowKind : std::uint8_t { interior, boundary };

    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
    Eigen::VectorXd rhs;
    std::vector<RowKind> kinds;
};

/// Row-form operator for -u_thetatheta: diagonal sum(a_i), entries -a_i, identity boundary rows, zero rhs.
DiscreteOperator assemble_directional(const PointCloud& cloud, double theta, const SchemeConfig& cfg);

/// Removes interior nodes lacking a monotone stencil for some direction,
/// repeating until every remaining interior node has all stencils.
PointCloud prune_cloud(const PointCloud& cloud, std::span<const double> thetas, const SchemeConfig& cfg);

/// Compact stencil: neighbour ids and weights, D u(x0) = sum w (u_j - u_0).
struct StencilRow {
    std::array<std::uint32_t, 4> neighbor{};
    std::array<double, 4> weight{};

    double apply(std::span<const double> u, std::size_t center) const {
        const double u0 = u[center];
        double sum = 0.0;
        for (int q = 0; q < 4; ++q) sum += weight[q] * (u[neighbor[q]] - u0);
        return sum;
    }
};

/// Stencils for every interior node and every direction of a list.
class StencilTable {
public:
    /// Throws if any interior node lacks a stencil (the cloud must be pruned).
    StencilTable(const PointCloud& cloud, std::vector<double> thetas, const SchemeConfig& cfg);

    std::size_t direction_count() const { return thetas_.size(); }
    std::size_t node_count() const { return nodes_; }
    const std::vector<double>& directions() const { return thetas_; }
    const StencilRow& row(std::size_t direction, std::size_t node) const { return rows_[direction * nodes_ + node]; }
    bool is_boundary(std::size_t node) const { return boundary_[node] != 0; }

    /// D_thetatheta u at every node for one direction (0 on boundary nodes).
    std::vector<double> apply(std::size_t direction, std::span<const double> u) const;

private:
    std::vector<double> thetas_;
    std::size_t nodes_ = 0;
    std::vector<std::uint8_t> boundary_;
    std::vector<StencilRow> rows_;
};

namespace detail {

/// Neighbourhood of one node within the search radius, with global polar angles.
struct Neighbourhood {
    std::vector<std::uint32_t> index;
    std::vector<double> phi;     // atan2 angle in the global frame
    std::vector<double> radius;  // |x_j - x_0|
};

/// Shared machinery for selection: a bucket grid and an optional alive mask.
class StencilSearch {
public:
    StencilSearch(const PointCloud& cloud, const SchemeConfig& cfg);

    void gather(std::size_t i, Neighbourhood& out, const std::vector<std::uint8_t>* alive = nullptr) const;
    StencilSelection select(std::size_t i, const Neighbourhood& nb, double theta) const;
    /// Selection plus weights; false when a quadrant is empty or the stencil is singular.
    bool build(std::size_t i, const Neighbourhood& nb, double theta, StencilRow& out) const;

private:
    const PointCloud& cloud_;
    SchemeConfig cfg_;
    BucketGrid grid_;
};

}  // namespace detail

}  // namespace mfd
