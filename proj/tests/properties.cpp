#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <variant>

#include <Eigen/Dense>

#include "mfd/solvers.hpp"
#include "mfd/study.hpp"

namespace mfd::props {

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

std::shared_ptr<const Domain> unit_disk() {
    return std::make_shared<const Domain>(Domain::disk({0.0, 0.0}, 1.0));
}

Stencil stencil_from_polar(const std::array<double, 4>& radius, const std::array<double, 4>& angle) {
    Stencil st;
    for (int q = 0; q < 4; ++q) {
        st.C[q] = radius[q] * std::cos(angle[q]);
        st.S[q] = radius[q] * std::sin(angle[q]);
    }
    return st;
}

}  // namespace

Check random_stencils(std::size_t count, std::uint64_t seed, double max_misalignment) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mis(0.0, max_misalignment);
    std::uniform_real_distribution<double> rad(0.5, 1.0);
    std::uniform_real_distribution<double> scale_exp(-3.0, 0.0);
    double worst_condition = 0.0;
    double worst_oracle = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
        const double h = std::pow(10.0, scale_exp(rng));
        // Quadrant q arm: angle measured from the +-e_theta axis towards the quadrant's side.
        const std::array<double, 4> angle = {mis(rng), kPi - mis(rng), kPi + mis(rng), kTwoPi - mis(rng)};
        const std::array<double, 4> radius = {h * rad(rng), h * rad(rng), h * rad(rng), h * rad(rng)};
        const Stencil st = stencil_weights(stencil_from_polar(radius, angle));
        const auto& a = st.weight;
        const auto& C = st.C;
        const auto& S = st.S;
        double sum_c = 0.0, sum_s = 0.0, second = 0.0, scale_c = 0.0, scale_s = 0.0;
        for (int q = 0; q < 4; ++q) {
            if (!(a[q] >= 0.0)) return {false, "negative weight in stencil " + std::to_string(n)};
            sum_c += a[q] * C[q];
            sum_s += a[q] * S[q];
            second += 0.5 * a[q] * C[q] * C[q];
            scale_c += a[q] * std::abs(C[q]);
            scale_s += a[q] * std::abs(S[q]);
        }
        const double sym = a[0] * S[0] + a[3] * S[3];
        const double sym_scale = a[0] * std::abs(S[0]) + a[3] * std::abs(S[3]);
        const double cond = std::max({std::abs(sum_c) / scale_c, std::abs(sum_s) / std::max(scale_s, scale_c),
                                      std::abs(second - 1.0), std::abs(sym) / std::max(sym_scale, scale_c)});
        worst_condition = std::max(worst_condition, cond);

        Eigen::Matrix4d M;
        Eigen::Vector4d rhs(0.0, 0.0, 1.0, 0.0);
        for (int q = 0; q < 4; ++q) {
            M(0, q) = C[q];
            M(1, q) = S[q];
            M(2, q) = 0.5 * C[q] * C[q];
        }
        M.row(3) << S[0], 0.0, 0.0, S[3];
        const Eigen::Vector4d dense = M.fullPivLu().solve(rhs);
        const double amax = std::max({a[0], a[1], a[2], a[3]});
        for (int q = 0; q < 4; ++q) worst_oracle = std::max(worst_oracle, std::abs(dense[q] - a[q]) / amax);
    }
    const bool ok = worst_condition <= 1e-10 && worst_oracle <= 1e-10;
    return {ok, std::to_string(count) + " stencils, conditions " + fmt(worst_condition) + ", dense solve " +
                    fmt(worst_oracle)};
}

Check directional_exactness(double h) {
    const PointCloud cloud = generate_uniform_cloud(unit_disk(), h);
    const SchemeConfig cfg = SchemeConfig::from_resolution(h, DThetaRule{});
    const std::vector<double> thetas = {0.0, 0.3, 1.1, kHalfPi, 2.5};
    const PointCloud pruned = prune_cloud(cloud, thetas, cfg);
    const StencilTable table(pruned, thetas, cfg);
    double worst_linear = 0.0, worst_square = 0.0, worst_perp = 0.0;
    std::vector<double> u(pruned.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const Point2 e = unit_vector(thetas[k]);
        const Point2 e_perp = unit_vector(thetas[k] + kHalfPi);
        for (std::size_t i = 0; i < pruned.size(); ++i) {
            if (pruned.is_boundary(i)) continue;
            const StencilRow& row = table.row(k, i);
            double weight_sum = 0.0;
            for (double w : row.weight) weight_sum += w;
            const Point2 xi = pruned.point(i);
            for (std::size_t j = 0; j < pruned.size(); ++j) u[j] = 3.0 * pruned.point(j).x - 2.0 * pruned.point(j).y + 1.0;
            worst_linear = std::max(worst_linear, std::abs(row.apply(u, i)) / (weight_sum * cfg.radius));
            // Only the stencil's own nodes matter, so evaluate the quadratics there.
            std::vector<double> local(pruned.size(), 0.0);
            for (std::uint32_t j : row.neighbor) local[j] = std::pow(dot(e, pruned.point(j) - xi), 2);
            worst_square = std::max(worst_square, std::abs(row.apply(local, i) - 2.0));
            for (std::uint32_t j : row.neighbor) local[j] = std::pow(dot(e_perp, pruned.point(j) - xi), 2);
            const double bound = 2.0 * std::pow(std::tan(cfg.dtheta), 2);
            worst_perp = std::max(worst_perp, row.apply(local, i) - bound);
        }
    }
    const bool ok = worst_linear <= 1e-9 && worst_square <= 1e-9 && worst_perp <= 1e-12;
    return {ok, "linear " + fmt(worst_linear) + ", aligned square " + fmt(worst_square) +
                    ", perpendicular excess " + fmt(std::max(worst_perp, 0.0))};
}

Check axis_aligned() {
    const double h = 0.1;
    Stencil st;
    st.C = {h, -h, -h, h};
    st.S = {0.0, h, 0.0, -h};
    const Stencil w = stencil_weights(st);
    const std::array<double, 4> expect = {1.0 / (h * h), 0.0, 1.0 / (h * h), 0.0};
    double err = 0.0;
    for (int q = 0; q < 4; ++q) err = std::max(err, std::abs(w.weight[q] - expect[q]) / expect[0]);

    // Symmetric cross at +-alpha about the axis.
    const double alpha = kPi / 6.0;
    const Stencil cross = stencil_weights(stencil_from_polar({h, h, h, h}, {alpha, kPi - alpha, kPi + alpha, kTwoPi - alpha}));
    for (int q = 0; q < 4; ++q) err = std::max(err, std::abs(cross.weight[q] - 200.0 / 3.0) / (200.0 / 3.0));
    return {err <= 1e-12, "relative deviation " + fmt(err)};
}

Check existence_sweep(double h) {
    const PointCloud raw = generate_uniform_cloud(unit_disk(), h);
    const SchemeConfig cfg = SchemeConfig::from_resolution(h, DThetaRule{});
    const double delta = raw.h_boundary() / (2.0 * std::tan(0.5 * cfg.dtheta));
    const PointCloud cloud = remove_near_boundary(raw, delta);
    const std::vector<double> thetas = direction_set(cfg.dtheta, DirectionKind::eigen).thetas;
    std::size_t missing = 0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.is_boundary(i)) continue;
        for (double theta : thetas) {
            ++checked;
            if (std::holds_alternative<MissingQuadrant>(select_stencil(cloud, i, theta, cfg))) ++missing;
        }
    }
    return {missing == 0, std::to_string(missing) + " missing of " + std::to_string(checked) + " selections"};
}

Check monotonicity(ProgramFamily family, std::size_t pairs, std::uint64_t seed) {
    const char* name = nullptr;
    switch (family) {
        case ProgramFamily::linear: name = "deg_linear"; break;
        case ProgramFamily::bellman_max: name = "convex_envelope"; break;
        case ProgramFamily::bellman_min: name = "obstacle_file"; break;
        case ProgramFamily::monge_ampere: name = "ma_c2"; break;
        default: return {false, "family has no monotonicity guarantee"};
    }
    const Problem& p = find_problem(name);
    const RunResult run = solve_problem(p, 2.0 / 32.0, RunConfig{});
    std::unique_ptr<ResidualProgram> program;
    switch (family) {
        case ProgramFamily::linear:
            program = std::make_unique<BranchProgram>(residual_linear_degenerate(run.cloud, run.scheme, p.direction, p.g));
            break;
        case ProgramFamily::bellman_max:
            program = std::make_unique<BranchProgram>(residual_convex_envelope(run.cloud, run.scheme, p.obstacle, p.g));
            break;
        case ProgramFamily::bellman_min:
            program = std::make_unique<BranchProgram>(residual_obstacle(run.cloud, run.scheme, p.obstacle, p.g));
            break;
        default:
            program = std::make_unique<MongeAmpereMonotoneProgram>(
                residual_monge_ampere_monotone(run.cloud, run.scheme, p.f, p.g));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_real_distribution<double> bump(0.0, 1.0);
    std::bernoulli_distribution moved(0.5);
    const auto n = static_cast<Eigen::Index>(program->size());
    std::size_t checks = 0;
    std::size_t violations = 0;
    for (std::size_t pair = 0; pair < pairs; ++pair) {
        Eigen::VectorXd u(n), v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            u[i] = value(rng);
            v[i] = u[i] + (moved(rng) ? bump(rng) : 0.0);
        }
        const Eigen::VectorXd fu = program->evaluate(u);
        const Eigen::VectorXd fv = program->evaluate(v);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (v[i] != u[i]) continue;
            ++checks;
            if (fu[i] < fv[i]) ++violations;
        }
    }
    return {violations == 0 && checks > 0,
            std::string(to_string(family)) + ": " + std::to_string(violations) + " violations in " +
                std::to_string(checks) + " node checks"};
}

Check filter_values() {
    const std::array<std::pair<double, double>, 6> table = {
        {{0.5, 0.5}, {1.0, 1.0}, {1.5, 0.5}, {2.0, 0.0}, {-1.5, -0.5}, {-3.0, 0.0}}};
    for (const auto& [x, s] : table) {
        if (filter_value(x) != s) return {false, "S(" + fmt(x) + ") = " + fmt(filter_value(x))};
    }
    return {true, "S at 0.5, 1, 1.5, 2, -1.5, -3"};
}

Check neighbour_oracle(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {coord(rng), coord(rng)};
    std::size_t mismatches = 0;
    for (double cell : {0.05, 0.3}) {
        const BucketGrid grid(pts, cell);
        for (double radius : {0.0, 0.07, 0.3}) {
            for (std::size_t i = 0; i < n; i += 7) {
                std::vector<std::size_t> brute;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i && squared_distance(pts[i], pts[j]) <= radius * radius) brute.push_back(j);
                }
                if (grid.within(pts[i], radius, i) != brute) ++mismatches;
            }
        }
        for (std::size_t i = 0; i < n; i += 11) {
            std::vector<std::size_t> order;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) order.push_back(j);
            }
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return squared_distance(pts[i], pts[a]) < squared_distance(pts[i], pts[b]);
            });
            order.resize(9);
            if (grid.k_nearest(pts[i], 9, i) != order) ++mismatches;
            if (grid.nearest(pts[i], i) != order.front()) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(n) + " points"};
}

Check obstacle_oracle(double tol) {
    const auto domain = unit_disk();
    const PointCloud raw = generate_uniform_cloud(domain, 1.0 / 3.0, 0.35);
    const SchemeConfig cfg = SchemeConfig::fixed(kPi / 4.0, 1.2);
    const std::vector<double> thetas = {0.0, kHalfPi};
    const auto cloud = std::make_shared<const PointCloud>(prune_cloud(raw, thetas, cfg));
    const ScalarField obstacle = [](Point2 x) { return 0.3 - x.x * x.x - 1.5 * x.y * x.y + 0.2 * x.x; };
    const ScalarField g = [](Point2) { return 0.0; };
    const BranchProgram program = residual_obstacle(cloud, cfg, obstacle, g);
    const Solution sol = policy_iteration(program, PolicyConfig{});

    // Projected Gauss-Seidel on the operator rows: u_i = max(psi_i, GS update).
    const DiscreteOperator op = program.policy_system(std::vector<int>(cloud->size(), 0));
    const auto n = static_cast<Eigen::Index>(cloud->size());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double diag = 0.0;
            double off = 0.0;
            for (SparseRowMatrix::InnerIterator it(op.matrix, i); it; ++it) {
                if (it.col() == i) {
                    diag = it.value();
                } else {
                    off += it.value() * u[it.col()];
                }
            }
            double next = (op.rhs[i] - off) / diag;
            if (!cloud->is_boundary(static_cast<std::size_t>(i))) next = std::max(next, obstacle(cloud->point(static_cast<std::size_t>(i))));
            change = std::max(change, std::abs(next - u[i]));
            u[i] = next;
        }
        if (change < 1e-15) break;
    }
    const double diff = (sol.u - u).cwiseAbs().maxCoeff();
    return {sol.report.converged && diff <= tol && cloud->size() <= 50,
            std::to_string(cloud->size()) + " nodes, max difference " + fmt(diff)};
}

}  // namespace mfd::props
