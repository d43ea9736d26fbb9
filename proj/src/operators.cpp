#include "mfd/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/QR>

#include "mfd/error.hpp"
#include "mfd/spatial_index.hpp"

namespace mfd {

namespace {

void check_dtheta(double dtheta) {
    if (!(dtheta > 0.0 && dtheta < kHalfPi)) throw Error("direction spacing must lie in (0, pi/2)");
}

Eigen::VectorXd sample_interior(const PointCloud& cloud, const ScalarField& field) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud.size()));
    if (!field) return out;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!cloud.is_boundary(i)) out[static_cast<Eigen::Index>(i)] = field(cloud.point(i));
    }
    return out;
}

std::span<const double> as_span(const Eigen::VectorXd& u) {
    return {u.data(), static_cast<std::size_t>(u.size())};
}

void check_size(const ResidualProgram& p, const Eigen::VectorXd& u) {
    if (static_cast<std::size_t>(u.size()) != p.size()) throw Error("node vector size does not match the cloud");
}

// Appends -c * D_dd row of node i.
void push_directional(std::vector<Eigen::Triplet<double>>& t, std::size_t i, const StencilRow& row, double c) {
    const auto r = static_cast<int>(i);
    double diag = 0.0;
    for (int q = 0; q < 4; ++q) {
        diag += row.weight[q];
        t.emplace_back(r, static_cast<int>(row.neighbor[q]), -c * row.weight[q]);
    }
    t.emplace_back(r, r, c * diag);
}

SparseRowMatrix from_triplets(std::size_t n, const std::vector<Eigen::Triplet<double>>& t) {
    SparseRowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace

DirectionSet direction_set(double dtheta, DirectionKind kind) {
    check_dtheta(dtheta);
    if (kind == DirectionKind::explicit_list) throw Error("explicit direction sets take a list of angles");
    const double end = kind == DirectionKind::eigen ? kTwoPi : kHalfPi;
    DirectionSet set{kind, dtheta, {}};
    for (std::size_t j = 0;; ++j) {
        const double theta = static_cast<double>(j) * dtheta;
        if (theta >= end - 1e-12) break;
        set.thetas.push_back(theta);
    }
    return set;
}

DirectionSet direction_set(std::vector<double> thetas) {
    if (thetas.empty()) throw Error("explicit direction set is empty");
    double spacing = 0.0;
    std::vector<double> sorted = thetas;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k) spacing = std::max(spacing, sorted[k] - sorted[k - 1]);
    return {DirectionKind::explicit_list, spacing, std::move(thetas)};
}

std::vector<EigenExtremes> eigen_extremes(std::span<const double> u, const StencilTable& table) {
    const std::size_t n = table.node_count();
    if (u.size() != n) throw Error("node vector size does not match the stencil table");
    if (table.direction_count() == 0) throw Error("stencil table has no directions");
    std::vector<EigenExtremes> out(n);
    const auto& thetas = table.directions();
    for (std::size_t i = 0; i < n; ++i) {
        if (table.is_boundary(i)) continue;
        EigenExtremes e;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            const double d = table.row(k, i).apply(u, i);
            if (k == 0 || d < e.lambda_minus) {
                e.lambda_minus = d;
                e.argmin_theta = thetas[k];
            }
            if (k == 0 || d > e.lambda_plus) {
                e.lambda_plus = d;
                e.argmax_theta = thetas[k];
            }
        }
        out[i] = e;
    }
    return out;
}

double filter_value(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return x;
    if (a >= 2.0) return 0.0;
    return x > 0.0 ? 2.0 - x : -x - 2.0;
}

double filter_slope(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    return -1.0;
}

const char* to_string(ProgramFamily family) {
    switch (family) {
        case ProgramFamily::linear: return "linear";
        case ProgramFamily::bellman_max: return "bellman-max";
        case ProgramFamily::bellman_min: return "bellman-min";
        case ProgramFamily::monge_ampere: return "monge-ampere";
        case ProgramFamily::accurate: return "accurate";
        case ProgramFamily::filtered: return "filtered";
    }
    return "unknown";
}

ResidualProgram::ResidualProgram(ProgramFamily family, std::shared_ptr<const PointCloud> cloud, const ScalarField& g)
    : family_(family), cloud_(std::move(cloud)) {
    if (!cloud_) throw Error("residual program needs a cloud");
    boundary_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud_->size()));
    for (std::size_t i = 0; i < cloud_->size(); ++i) {
        if (cloud_->is_boundary(i)) boundary_[static_cast<Eigen::Index>(i)] = g ? g(cloud_->point(i)) : 0.0;
    }
}

// ---------------------------------------------------------------------------------------------

BranchProgram::BranchProgram(ProgramFamily family, std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                             std::vector<double> thetas, std::vector<std::vector<std::size_t>> combos,
                             bool identity_branch, const ScalarField& obstacle, const ScalarField& g)
    : ResidualProgram(family, cloud, g),
      table_(*cloud, std::move(thetas), cfg),
      combos_(std::move(combos)),
      identity_(identity_branch),
      obstacle_(sample_interior(*cloud, obstacle)) {
    if (branch_count() == 0) throw Error("branch program has no branches");
    if (family == ProgramFamily::linear && branch_count() != 1) throw Error("linear program takes one branch");
    for (const auto& combo : combos_) {
        if (combo.empty()) throw Error("empty operator branch");
        for (std::size_t d : combo) {
            if (d >= table_.direction_count()) throw Error("branch direction out of range");
        }
    }
}

double BranchProgram::branch_value(std::size_t b, std::size_t i, std::span<const double> u) const {
    if (b == combos_.size()) return u[i] - obstacle_[static_cast<Eigen::Index>(i)];
    double sum = 0.0;
    for (std::size_t d : combos_[b]) sum += table_.row(d, i).apply(u, i);
    return -sum;
}

std::vector<int> BranchProgram::select_policy(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    const bool is_max = family_ != ProgramFamily::bellman_min;
    std::vector<int> policy(size(), 0);
    for (std::size_t i = 0; i < size(); ++i) {
        if (cloud_->is_boundary(i)) continue;
        double best = branch_value(0, i, span);
        int arg = 0;
        for (std::size_t b = 1; b < branch_count(); ++b) {
            const double v = branch_value(b, i, span);
            if (is_max ? v > best : v < best) {
                best = v;
                arg = static_cast<int>(b);
            }
        }
        policy[i] = arg;
    }
    return policy;
}

std::vector<int> BranchProgram::default_policy() const {
    std::vector<int> policy(size(), 0);
    for (std::size_t i = 0; i < size(); ++i) {
        if (!cloud_->is_boundary(i)) policy[i] = static_cast<int>(branch_count()) - 1;
    }
    return policy;
}

DiscreteOperator BranchProgram::policy_system(const std::vector<int>& policy) const {
    if (policy.size() != size()) throw Error("policy size does not match the cloud");
    const std::size_t n = size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(5 * n);
    DiscreteOperator op;
    op.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    op.kinds.assign(n, DiscreteOperator::RowKind::interior);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<int>(i);
        const auto ei = static_cast<Eigen::Index>(i);
        if (cloud_->is_boundary(i)) {
            op.kinds[i] = DiscreteOperator::RowKind::boundary;
            t.emplace_back(r, r, 1.0);
            op.rhs[ei] = boundary_[ei];
            continue;
        }
        const auto b = static_cast<std::size_t>(policy[i]);
        if (policy[i] < 0 || b >= branch_count()) throw Error("policy branch out of range");
        if (b == combos_.size()) {
            t.emplace_back(r, r, 1.0);
            op.rhs[ei] = obstacle_[ei];
        } else {
            for (std::size_t d : combos_[b]) push_directional(t, i, table_.row(d, i), 1.0);
        }
    }
    op.matrix = from_triplets(n, t);
    return op;
}

Eigen::VectorXd BranchProgram::evaluate(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    const bool is_max = family_ != ProgramFamily::bellman_min;
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        if (cloud_->is_boundary(i)) {
            r[ei] = u[ei] - boundary_[ei];
            continue;
        }
        double best = branch_value(0, i, span);
        for (std::size_t b = 1; b < branch_count(); ++b) {
            const double v = branch_value(b, i, span);
            best = is_max ? std::max(best, v) : std::min(best, v);
        }
        r[ei] = best;
    }
    return r;
}

Linearization BranchProgram::linearize(const Eigen::VectorXd& u) const {
    const DiscreteOperator op = policy_system(select_policy(u));
    return {evaluate(u), op.matrix};
}

// ---------------------------------------------------------------------------------------------

namespace {

std::vector<double> pair_directions(double dtheta) {
    const DirectionSet set = direction_set(dtheta, DirectionKind::ma_pairs);
    std::vector<double> thetas = set.thetas;
    for (double t : set.thetas) thetas.push_back(t + kHalfPi);
    return thetas;
}

double ma_combine(double d1, double d2) {
    return std::max(d1, 0.0) * std::max(d2, 0.0) + std::min(d1, 0.0) + std::min(d2, 0.0);
}

}  // namespace

MongeAmpereMonotoneProgram::MongeAmpereMonotoneProgram(std::shared_ptr<const PointCloud> cloud,
                                                       const SchemeConfig& cfg, const ScalarField& f,
                                                       const ScalarField& g)
    : ResidualProgram(ProgramFamily::monge_ampere, cloud, g),
      pairs_(direction_set(cfg.dtheta, DirectionKind::ma_pairs).thetas.size()),
      table_(*cloud, pair_directions(cfg.dtheta), cfg),
      f_(sample_interior(*cloud, f)) {}

double MongeAmpereMonotoneProgram::pair_value(std::size_t k, std::size_t i, std::span<const double> u) const {
    return ma_combine(table_.row(k, i).apply(u, i), table_.row(k + pairs_, i).apply(u, i));
}

Eigen::VectorXd MongeAmpereMonotoneProgram::evaluate(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        if (cloud_->is_boundary(i)) {
            r[ei] = u[ei] - boundary_[ei];
            continue;
        }
        double best = pair_value(0, i, span);
        for (std::size_t k = 1; k < pairs_; ++k) best = std::min(best, pair_value(k, i, span));
        r[ei] = -best + f_[ei];
    }
    return r;
}

Linearization MongeAmpereMonotoneProgram::linearize(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    const std::size_t n = size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(10 * n);
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        if (cloud_->is_boundary(i)) {
            r[ei] = u[ei] - boundary_[ei];
            t.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
            continue;
        }
        std::size_t arg = 0;
        double best = pair_value(0, i, span);
        for (std::size_t k = 1; k < pairs_; ++k) {
            const double v = pair_value(k, i, span);
            if (v < best) {
                best = v;
                arg = k;
            }
        }
        r[ei] = -best + f_[ei];
        const StencilRow& row1 = table_.row(arg, i);
        const StencilRow& row2 = table_.row(arg + pairs_, i);
        const double d1 = row1.apply(span, i);
        const double d2 = row2.apply(span, i);
        double c1 = 1.0;
        double c2 = 1.0;
        if (d1 > 0.0 && d2 > 0.0) {
            c1 = d2;
            c2 = d1;
        } else if (d1 > 0.0) {
            c1 = 0.0;
        } else if (d2 > 0.0) {
            c2 = 0.0;
        }
        if (c1 != 0.0) push_directional(t, i, row1, c1);
        if (c2 != 0.0) push_directional(t, i, row2, c2);
    }
    return {r, from_triplets(n, t)};
}

// ---------------------------------------------------------------------------------------------

MongeAmpereAccurateProgram::MongeAmpereAccurateProgram(std::shared_ptr<const PointCloud> cloud, const ScalarField& f,
                                                       const ScalarField& g, const FilterConfig& cfg)
    : ResidualProgram(ProgramFamily::accurate, cloud, g),
      stride_(std::max<std::size_t>(cfg.accurate_neighbors, 8) + 1),
      f_(sample_interior(*cloud, f)) {
    if (cfg.accurate_neighbors < 6) throw Error("the quadratic fit needs at least 6 neighbours");
    if (cloud->size() < cfg.accurate_neighbors + 1) throw Error("cloud has fewer nodes than the quadratic fit needs");
    const std::size_t n = cloud->size();
    nodes_.assign(n * stride_, 0);
    wxx_.assign(n * stride_, 0.0);
    wxy_.assign(n * stride_, 0.0);
    wyy_.assign(n * stride_, 0.0);
    offset_.assign(n, Hessian{});
    lattice_mask_.assign(n, false);

    const BucketGrid grid(cloud->points(), cloud->h());
    const std::size_t k_fit = cfg.accurate_neighbors;
    const auto m = static_cast<Eigen::Index>(k_fit + 1);
    Eigen::MatrixXd V(m, 6);
    for (std::size_t i = 0; i < n; ++i) {
        if (cloud->is_boundary(i)) continue;
        const Point2 x0 = cloud->point(i);
        const std::vector<std::size_t> nearest = grid.k_nearest(x0, std::max<std::size_t>(3 * k_fit, 24), i);
        for (std::size_t k = 0; k < stride_; ++k) nodes_[i * stride_ + k] = static_cast<std::uint32_t>(i);
        if (g && lattice_weights(i, nearest, g)) {
            lattice_mask_[i] = true;
            ++lattice_;
            continue;
        }
        // Clustered boundary nodes make the fit nearly one-dimensional; keep candidates at least
        // half a spacing apart and top up with the nearest leftovers.
        const double sep = 0.5 * cloud->h();
        std::vector<std::size_t> chosen;
        std::vector<bool> taken(nearest.size(), false);
        for (std::size_t c = 0; c < nearest.size() && chosen.size() < k_fit; ++c) {
            const Point2 q = cloud->point(nearest[c]);
            bool spaced = distance(q, x0) >= sep;
            for (std::size_t j : chosen) spaced = spaced && distance(q, cloud->point(j)) >= sep;
            if (spaced) {
                chosen.push_back(nearest[c]);
                taken[c] = true;
            }
        }
        for (std::size_t c = 0; c < nearest.size() && chosen.size() < k_fit; ++c) {
            if (!taken[c]) chosen.push_back(nearest[c]);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < k_fit; ++k) {
            nodes_[i * stride_ + k + 1] = static_cast<std::uint32_t>(chosen[k]);
            s = std::max(s, distance(cloud->point(chosen[k]), x0));
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            const Point2 d = (1.0 / s) * (cloud->point(nodes_[i * stride_ + static_cast<std::size_t>(k)]) - x0);
            V.row(k) << 1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y;
        }
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
        if (qr.rank() < 6) {
            std::ostringstream msg;
            msg << "rank-deficient quadratic fit at node " << i;
            throw Error(msg.str());
        }
        const Eigen::MatrixXd pinv = qr.solve(Eigen::MatrixXd::Identity(m, m));
        const double s2 = s * s;
        for (Eigen::Index k = 0; k < m; ++k) {
            const std::size_t slot = i * stride_ + static_cast<std::size_t>(k);
            wxx_[slot] = 2.0 * pinv(3, k) / s2;
            wxy_[slot] = pinv(4, k) / s2;
            wyy_[slot] = 2.0 * pinv(5, k) / s2;
        }
    }
}

// Second differences along the axes and both diagonals of a Cartesian lattice. A side whose
// lattice neighbour is missing because the line leaves the domain uses the crossing point with
// the Dirichlet value there (Shortley-Weller). u_xy = (D_d1 - D_d2) / 2.
bool MongeAmpereAccurateProgram::lattice_weights(std::size_t i, const std::vector<std::size_t>& nearest,
                                                 const ScalarField& g) {
    const PointCloud& c = *cloud_;
    const Domain& domain = c.domain();
    if (!domain.analytic()) return false;
    const Point2 x0 = c.point(i);
    double s = 0.0;
    for (std::size_t j : nearest) {
        if (!c.is_boundary(j)) {
            s = distance(c.point(j), x0);
            break;
        }
    }
    if (!(s > 0.0)) return false;
    const double tol = 1e-9 * s;
    const auto find_node = [&](Point2 target) -> std::optional<std::size_t> {
        for (std::size_t j : nearest) {
            if (distance(c.point(j), target) <= tol) return j;
        }
        return std::nullopt;
    };

    struct Side {
        std::optional<std::size_t> node;
        double length = 0.0;
        double ghost = 0.0;
    };
    // Step along +-dir until the next lattice node or the boundary crossing.
    const auto walk = [&](Point2 step) -> std::optional<Side> {
        const double len = std::hypot(step.x, step.y);
        if (auto j = find_node(x0 + step)) return Side{*j, len, 0.0};
        double lo = 0.0;
        double hi = 1.0;
        if (domain.inside(x0 + step)) {
            // A lattice node dropped next to the boundary leaves a gap of at most one more step.
            if (domain.inside(x0 + 2.0 * step)) return std::nullopt;
            lo = 1.0;
            hi = 2.0;
        }
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (domain.inside(x0 + mid * step) ? lo : hi) = mid;
        }
        const double t = 0.5 * (lo + hi);
        if (t < 1e-3) return std::nullopt;
        return Side{std::nullopt, t * len, g(x0 + t * step)};
    };

    struct Line {
        std::array<Side, 2> side;
    };
    const std::array<Point2, 4> dirs = {Point2{s, 0.0}, Point2{0.0, s}, Point2{s, s}, Point2{s, -s}};
    std::array<Line, 4> lines;
    for (std::size_t d = 0; d < 4; ++d) {
        for (int sign = 0; sign < 2; ++sign) {
            const auto side = walk((sign == 0 ? 1.0 : -1.0) * dirs[d]);
            if (!side) return false;
            lines[d].side[static_cast<std::size_t>(sign)] = *side;
        }
    }

    const std::size_t base = i * stride_;
    std::size_t used = 1;
    const auto slot_of = [&](std::size_t j) {
        for (std::size_t k = 1; k < used; ++k) {
            if (nodes_[base + k] == j) return base + k;
        }
        nodes_[base + used] = static_cast<std::uint32_t>(j);
        return base + used++;
    };
    // Adds coef * D_dd u to the Hessian component given by the weight and offset arrays.
    const auto add_line = [&](const Line& line, double coef, std::vector<double>& w, double& offset) {
        const double a = line.side[0].length;
        const double b = line.side[1].length;
        const std::array<double, 2> wt = {2.0 / (a * (a + b)), 2.0 / (b * (a + b))};
        w[base] -= coef * (wt[0] + wt[1]);
        for (std::size_t q = 0; q < 2; ++q) {
            const Side& side = line.side[q];
            if (side.node) {
                w[slot_of(*side.node)] += coef * wt[q];
            } else {
                offset += coef * wt[q] * side.ghost;
            }
        }
    };
    Hessian& off = offset_[i];
    add_line(lines[0], 1.0, wxx_, off.xx);
    add_line(lines[1], 1.0, wyy_, off.yy);
    add_line(lines[2], 0.5, wxy_, off.xy);
    add_line(lines[3], -0.5, wxy_, off.xy);
    return true;
}

namespace {

struct AccurateValue {
    double residual;
    double d_xx, d_yy, d_xy;  // partial derivatives in u_xx, u_yy, u_xy
};

// -(u_xx u_yy - u_xy^2) + f on convex Hessians, continued to -l1^+ l2^+ - l1^- - l2^- + f in the
// eigenvalues l1 <= l2 so that concave modes are penalised linearly, as in the monotone scheme.
AccurateValue accurate_value(const MongeAmpereAccurateProgram::Hessian& h, double f) {
    const double m = 0.5 * (h.xx + h.yy);
    const double half_gap = 0.5 * (h.xx - h.yy);
    const double rad = std::hypot(half_gap, h.xy);
    const double l1 = m - rad;
    const double l2 = m + rad;
    if (l1 > 0.0) return {-(h.xx * h.yy - h.xy * h.xy) + f, -h.yy, -h.xx, 2.0 * h.xy};
    if (l2 <= 0.0) return {-(h.xx + h.yy) + f, -1.0, -1.0, 0.0};
    // l1 <= 0 < l2, so rad > 0.
    return {-l1 + f, -(0.5 - 0.5 * half_gap / rad), -(0.5 + 0.5 * half_gap / rad), h.xy / rad};
}

}  // namespace

MongeAmpereAccurateProgram::Hessian MongeAmpereAccurateProgram::hessian(std::size_t i,
                                                                        std::span<const double> u) const {
    Hessian h = offset_[i];
    for (std::size_t k = 0; k < stride_; ++k) {
        const std::size_t slot = i * stride_ + k;
        const double v = u[nodes_[slot]];
        h.xx += wxx_[slot] * v;
        h.xy += wxy_[slot] * v;
        h.yy += wyy_[slot] * v;
    }
    return h;
}

Eigen::VectorXd MongeAmpereAccurateProgram::evaluate(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        if (cloud_->is_boundary(i)) {
            r[ei] = u[ei] - boundary_[ei];
            continue;
        }
        r[ei] = accurate_value(hessian(i, span), f_[ei]).residual;
    }
    return r;
}

Linearization MongeAmpereAccurateProgram::linearize(const Eigen::VectorXd& u) const {
    check_size(*this, u);
    const auto span = as_span(u);
    const std::size_t n = size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(stride_ * n);
    Eigen::VectorXd r(u.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        const auto row = static_cast<int>(i);
        if (cloud_->is_boundary(i)) {
            r[ei] = u[ei] - boundary_[ei];
            t.emplace_back(row, row, 1.0);
            continue;
        }
        const Hessian h = hessian(i, span);
        const AccurateValue v = accurate_value(h, f_[ei]);
        r[ei] = v.residual;
        for (std::size_t k = 0; k < stride_; ++k) {
            const std::size_t slot = i * stride_ + k;
            const double d = v.d_xx * wxx_[slot] + v.d_yy * wyy_[slot] + v.d_xy * wxy_[slot];
            t.emplace_back(row, static_cast<int>(nodes_[slot]), d);
        }
    }
    return {r, from_triplets(n, t)};
}

// ---------------------------------------------------------------------------------------------

FilteredProgram::FilteredProgram(std::shared_ptr<const ResidualProgram> monotone,
                                 std::shared_ptr<const ResidualProgram> accurate, const FilterConfig& cfg, double h)
    : ResidualProgram(ProgramFamily::filtered, monotone ? monotone->cloud_ptr() : nullptr, ScalarField{}),
      monotone_(std::move(monotone)),
      accurate_(std::move(accurate)),
      epsilon_(cfg.epsilon_scale * std::sqrt(h)) {
    if (!accurate_) throw Error("filtered scheme needs an accurate program");
    if (!(cfg.epsilon_scale > 0.0)) throw Error("filter scale must be positive");
    if (!(h > 0.0)) throw Error("filter resolution must be positive");
    const PointCloud& a = accurate_->cloud();
    const PointCloud& m = monotone_->cloud();
    if (&a != &m && (a.points() != m.points() || a.boundary_flags() != m.boundary_flags())) {
        throw Error("filtered scheme: monotone and accurate programs use different clouds");
    }
    boundary_ = monotone_->boundary_values();
}

Eigen::VectorXd FilteredProgram::evaluate(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd fm = monotone_->evaluate(u);
    const Eigen::VectorXd fa = accurate_->evaluate(u);
    Eigen::VectorXd r = fm;
    for (std::size_t i = 0; i < size(); ++i) {
        if (cloud_->is_boundary(i)) continue;
        const auto ei = static_cast<Eigen::Index>(i);
        if (!accurate_->high_order_at(i)) continue;
        r[ei] = fm[ei] + epsilon_ * filter_value((fa[ei] - fm[ei]) / epsilon_);
    }
    return r;
}

Linearization FilteredProgram::linearize(const Eigen::VectorXd& u) const {
    const Linearization lm = monotone_->linearize(u);
    const Linearization la = accurate_->linearize(u);
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd r = lm.residual;
    Eigen::VectorXd sm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd sa = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cloud_->is_boundary(static_cast<std::size_t>(i))) continue;
        if (!accurate_->high_order_at(static_cast<std::size_t>(i))) continue;
        const double x = (la.residual[i] - lm.residual[i]) / epsilon_;
        r[i] = lm.residual[i] + epsilon_ * filter_value(x);
        const double slope = std::max(filter_slope(x), 0.0);
        sm[i] = 1.0 - slope;
        sa[i] = slope;
    }
    SparseRowMatrix j = sm.asDiagonal() * lm.jacobian;
    j += SparseRowMatrix(sa.asDiagonal() * la.jacobian);
    j.prune(0.0);
    return {r, j};
}

// ---------------------------------------------------------------------------------------------

BranchProgram residual_linear_degenerate(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                         double nu_angle, const ScalarField& g) {
    return BranchProgram(ProgramFamily::linear, std::move(cloud), cfg, {nu_angle}, {{0}}, false, {}, g);
}

BranchProgram residual_convex_envelope(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                       const ScalarField& obstacle, const ScalarField& g) {
    const DirectionSet set = direction_set(cfg.dtheta, DirectionKind::eigen);
    std::vector<std::vector<std::size_t>> combos;
    for (std::size_t k = 0; k < set.thetas.size(); ++k) combos.push_back({k});
    return BranchProgram(ProgramFamily::bellman_max, std::move(cloud), cfg, set.thetas, std::move(combos), true,
                         obstacle, g);
}

BranchProgram residual_obstacle(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                const ScalarField& obstacle, const ScalarField& g) {
    return BranchProgram(ProgramFamily::bellman_min, std::move(cloud), cfg, {0.0, kHalfPi}, {{0, 1}}, true, obstacle,
                         g);
}

MongeAmpereMonotoneProgram residual_monge_ampere_monotone(std::shared_ptr<const PointCloud> cloud,
                                                          const SchemeConfig& cfg, const ScalarField& f,
                                                          const ScalarField& g) {
    return MongeAmpereMonotoneProgram(std::move(cloud), cfg, f, g);
}

MongeAmpereAccurateProgram residual_monge_ampere_accurate(std::shared_ptr<const PointCloud> cloud,
                                                          const ScalarField& f, const ScalarField& g,
                                                          const FilterConfig& cfg) {
    return MongeAmpereAccurateProgram(std::move(cloud), f, g, cfg);
}

FilteredProgram residual_filtered(std::shared_ptr<const ResidualProgram> monotone,
                                  std::shared_ptr<const ResidualProgram> accurate, const FilterConfig& cfg, double h) {
    return FilteredProgram(std::move(monotone), std::move(accurate), cfg, h);
}

}  // namespace mfd
