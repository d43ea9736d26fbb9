#include "mfd/problems.hpp"

#include <cmath>

#include "mfd/error.hpp"

namespace mfd {

namespace {

Problem make_deg_linear() {
    Problem p;
    p.name = "deg_linear";
    p.description = "-u_nunu = 0 on the unit disk, nu = (sqrt 8, 1)";
    p.kind = ProblemKind::linear_degenerate;
    p.domain = std::make_shared<const Domain>(Domain::disk({0.0, 0.0}, 1.0));
    p.exact = [](Point2 x) { return std::sin(2.0 * kPi * (x.x - std::sqrt(8.0) * x.y)); };
    p.g = p.exact;
    p.direction = std::atan2(1.0, std::sqrt(8.0));
    return p;
}

Problem make_convex_envelope() {
    const double phi = kPi / 6.0;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double a = 1.0;
    const double b = 0.5;
    // Coordinates along and across the ellipse's major axis.
    auto frame = [c, s](Point2 x) { return Point2{x.x * c + x.y * s, -x.x * s + x.y * c}; };
    auto cones = [frame](Point2 x) {
        const Point2 q = frame(x);
        return std::min(std::hypot(q.x + 0.5, q.y), std::hypot(q.x - 0.5, q.y));
    };

    Problem p;
    p.name = "convex_envelope";
    p.description = "max{-lambda_min(D^2 u), u - g} = 0 on a rotated ellipse, u = 0.5 on the boundary";
    p.kind = ProblemKind::convex_envelope;
    p.domain = std::make_shared<const Domain>(Domain::ellipse({0.0, 0.0}, a, b, phi));
    p.obstacle = [cones](Point2 x) { return std::min(cones(x), 0.5); };
    p.g = [](Point2) { return 0.5; };
    // The envelope jumps to the Dirichlet value on the boundary curve itself.
    p.exact = [frame, cones, a, b](Point2 x) {
        const Point2 q = frame(x);
        const double level = (q.x / a) * (q.x / a) + (q.y / b) * (q.y / b);
        if (level >= 1.0 - 1e-12) return 0.5;
        return std::abs(q.x) >= 0.5 ? cones(x) : std::abs(q.y);
    };
    return p;
}

Problem make_obstacle() {
    const Point2 c1{0.45, 0.1};
    const Point2 c2{-0.2, -0.55};
    Problem p;
    p.name = "obstacle_file";
    p.description = "min{-Laplacian u, u - g} = 0, u = 0 on the boundary (perforated disk or a cloud file)";
    p.kind = ProblemKind::obstacle;
    p.domain = std::make_shared<const Domain>(Domain::perforated_disk({0.0, 0.0}, 1.0, {-0.25, 0.15}, 0.22, 0.35, 5));
    p.obstacle = [c1, c2](Point2 x) {
        return std::max({0.15 - 2.0 * squared_distance(x, c1), 0.1 - 3.0 * squared_distance(x, c2), -0.1});
    };
    p.g = [](Point2) { return 0.0; };
    return p;
}

std::shared_ptr<const Domain> ma_domain() {
    return std::make_shared<const Domain>(Domain::ellipse({0.0, 0.0}, 1.0, 1.0 / std::sqrt(2.0), 0.0));
}

Problem make_ma_c2() {
    Problem p;
    p.name = "ma_c2";
    p.description = "det D^2 u = f on an ellipse, u = exp((x^2+y^2)/2)";
    p.kind = ProblemKind::monge_ampere;
    p.domain = ma_domain();
    p.exact = [](Point2 x) { return std::exp(0.5 * dot(x, x)); };
    p.g = p.exact;
    p.f = [](Point2 x) {
        const double r2 = dot(x, x);
        return (1.0 + r2) * std::exp(r2);
    };
    return p;
}

Problem make_ma_c1() {
    Problem p;
    p.name = "ma_c1";
    p.description = "det D^2 u = f on an ellipse, u = max(|x| - 0.2, 0)^2 / 2";
    p.kind = ProblemKind::monge_ampere;
    p.domain = ma_domain();
    p.exact = [](Point2 x) {
        const double t = std::max(norm(x) - 0.2, 0.0);
        return 0.5 * t * t;
    };
    p.g = p.exact;
    p.f = [](Point2 x) {
        const double r = norm(x);
        return r > 0.0 ? std::max(1.0 - 0.2 / r, 0.0) : 0.0;
    };
    return p;
}

std::vector<Problem> build_registry() {
    std::vector<Problem> problems{make_deg_linear(), make_convex_envelope(), make_obstacle(), make_ma_c2(),
                                  make_ma_c1()};
    for (const Problem& p : problems) {
        if (p.has_exact() && oracle::boundary_mismatch(p) > 1e-12) {
            throw Error("problem " + p.name + ": boundary data disagrees with the exact solution");
        }
        if (p.kind == ProblemKind::monge_ampere && oracle::determinant_mismatch(p) > 1e-3) {
            throw Error("problem " + p.name + ": exact solution does not satisfy det D^2 u = f");
        }
    }
    return problems;
}

}  // namespace

const std::vector<Problem>& registry() {
    static const std::vector<Problem> problems = build_registry();
    return problems;
}

std::string problem_names() {
    std::string out;
    for (const Problem& p : registry()) {
        if (!out.empty()) out += ", ";
        out += p.name;
    }
    return out;
}

const Problem& find_problem(const std::string& name) {
    for (const Problem& p : registry()) {
        if (p.name == name) return p;
    }
    throw Error("unknown problem '" + name + "' (available: " + problem_names() + ")");
}

double max_error(const Eigen::VectorXd& u, const ScalarField& exact, const PointCloud& cloud) {
    if (!exact) throw Error("max_error needs an exact solution");
    if (static_cast<std::size_t>(u.size()) != cloud.size()) throw Error("node vector size does not match the cloud");
    double err = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        err = std::max(err, std::abs(u[static_cast<Eigen::Index>(i)] - exact(cloud.point(i))));
    }
    return err;
}

namespace oracle {

double determinant_mismatch(const Problem& problem, double step) {
    if (!problem.has_exact() || !problem.f) throw Error("determinant oracle needs f and an exact solution");
    const auto [lo, hi] = problem.domain->bounding_box();
    const auto& u = problem.exact;
    const double e = step;
    double worst = 0.0;
    constexpr int n = 101;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Point2 x{lo.x + (hi.x - lo.x) * i / (n - 1.0), lo.y + (hi.y - lo.y) * j / (n - 1.0)};
            if (!problem.domain->inside(x) || problem.domain->distance_to_boundary(x) < 2.0 * e) continue;
            const double u0 = u(x);
            const double uxx = (u({x.x + e, x.y}) - 2.0 * u0 + u({x.x - e, x.y})) / (e * e);
            const double uyy = (u({x.x, x.y + e}) - 2.0 * u0 + u({x.x, x.y - e})) / (e * e);
            const double uxy = (u({x.x + e, x.y + e}) - u({x.x + e, x.y - e}) - u({x.x - e, x.y + e}) +
                                u({x.x - e, x.y - e})) /
                               (4.0 * e * e);
            worst = std::max(worst, std::abs(uxx * uyy - uxy * uxy - problem.f(x)));
        }
    }
    return worst;
}

double boundary_mismatch(const Problem& problem, std::size_t samples) {
    if (!problem.has_exact() || !problem.g) throw Error("boundary oracle needs g and an exact solution");
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const Point2 x = problem.domain->boundary_param(static_cast<double>(k) / static_cast<double>(samples));
        worst = std::max(worst, std::abs(problem.exact(x) - problem.g(x)));
    }
    return worst;
}

}  // namespace oracle

}  // namespace mfd
