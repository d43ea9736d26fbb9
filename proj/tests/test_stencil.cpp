#include <doctest.h>

#include <cmath>
#include <variant>

#include "mfd/error.hpp"
#include "mfd/operators.hpp"
#include "mfd/stencil.hpp"
#include "properties.hpp"

using namespace mfd;

namespace {

std::shared_ptr<const Domain> disk(double radius) {
    return std::make_shared<const Domain>(Domain::disk({0.0, 0.0}, radius));
}

// Node 0 at the origin, the given interior nodes, and a ring of boundary nodes far away.
PointCloud hand_cloud(const std::vector<Point2>& around) {
    std::vector<Point2> pts = {{0.0, 0.0}};
    pts.insert(pts.end(), around.begin(), around.end());
    std::vector<std::uint8_t> flags(pts.size(), 0);
    for (int k = 0; k < 8; ++k) {
        pts.push_back(10.0 * unit_vector(k * kPi / 4.0));
        flags.push_back(1);
    }
    return PointCloud(disk(10.0), pts, flags, {}, ResolutionMethod::nearest_gap);
}

Stencil as_stencil(const StencilSelection& s) {
    REQUIRE(std::holds_alternative<Stencil>(s));
    return std::get<Stencil>(s);
}

}  // namespace

TEST_CASE("local frame coordinates") {
    const LocalFrameCoord a = local_frame_coords({0, 0}, {1, 1}, 0.0);
    CHECK(a.radius == doctest::Approx(std::sqrt(2.0)));
    CHECK(a.angle == doctest::Approx(kPi / 4));
    CHECK(a.misalignment == doctest::Approx(kPi / 4));
    CHECK(a.quadrant == 1);

    const LocalFrameCoord b = local_frame_coords({0, 0}, {-1, 0}, 0.0);
    CHECK(b.angle == doctest::Approx(kPi));
    CHECK(b.misalignment == doctest::Approx(0.0));
    CHECK(b.quadrant == 3);

    const LocalFrameCoord c = local_frame_coords({0, 0}, {0, 1}, kHalfPi);
    CHECK(c.angle == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(c.quadrant == 1);
    CHECK(c.misalignment == doctest::Approx(0.0));

    CHECK_THROWS_WITH_AS(local_frame_coords({0.5, 0.5}, {0.5, 0.5}, 0.0), doctest::Contains("duplicate node"), Error);
}

TEST_CASE("quadrant selection") {
    const PointCloud cloud = hand_cloud({{1, 0.1}, {1, -0.05}, {-1, 0.1}, {-1, -0.2}});
    const Stencil st = as_stencil(select_stencil(cloud, 0, 0.0, SchemeConfig::fixed(0.3, 2.0)));
    CHECK(st.neighbor[0] == 1);
    CHECK(st.neighbor[1] == 3);
    CHECK(st.neighbor[2] == 4);
    CHECK(st.neighbor[3] == 2);
    CHECK(st.C[1] == doctest::Approx(-1.0));
    CHECK(st.S[1] == doctest::Approx(0.1));
}

TEST_CASE("equally aligned candidates prefer the shorter arm") {
    const PointCloud cloud = hand_cloud({{1.0, 0.1}, {0.5, 0.05}, {-1, 0.1}, {-1, -0.1}, {1, -0.1}});
    const Stencil st = as_stencil(select_stencil(cloud, 0, 0.0, SchemeConfig::fixed(0.3, 2.0)));
    CHECK(st.neighbor[0] == 2);
}

TEST_CASE("missing quadrant") {
    const PointCloud cloud = hand_cloud({{1, -0.1}, {-1, -0.1}, {0.3, -1}});
    const StencilSelection s = select_stencil(cloud, 0, 0.0, SchemeConfig::fixed(0.3, 2.0));
    REQUIRE(std::holds_alternative<MissingQuadrant>(s));
    CHECK(std::get<MissingQuadrant>(s).quadrant == 1);
}

TEST_CASE("stencil weights") {
    const auto axis = props::axis_aligned();
    INFO(axis.detail);
    CHECK(axis.ok);

    const auto random = props::random_stencils(10000, 7);
    INFO(random.detail);
    CHECK(random.ok);

    // Opposite arms on common lines through the centre, none aligned with the axis.
    Stencil bad;
    bad.C = {1.0, -1.0, -1.0, 1.0};
    bad.S = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_WITH_AS(stencil_weights(bad), doctest::Contains("singular stencil"), Error);
}

TEST_CASE("directional operator rows") {
    const auto cloud = std::make_shared<const PointCloud>(generate_uniform_cloud(disk(1.0), 2.0 / 32));
    const SchemeConfig cfg = SchemeConfig::from_resolution(2.0 / 32, DThetaRule{});
    const double theta = 0.7;
    const double thetas[] = {theta};
    const PointCloud pruned = prune_cloud(*cloud, thetas, cfg);
    const DiscreteOperator op = assemble_directional(pruned, theta, cfg);
    const auto n = static_cast<Eigen::Index>(pruned.size());
    REQUIRE(op.matrix.rows() == n);
    CHECK(op.rhs.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd lin(n);
    for (Eigen::Index j = 0; j < n; ++j) lin[j] = 3.0 * pruned.point(j).x - 2.0 * pruned.point(j).y + 1.0;
    const Eigen::VectorXd lin_rows = op.matrix * lin;
    const Point2 e = unit_vector(theta);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (pruned.is_boundary(static_cast<std::size_t>(i))) {
            CHECK(op.kinds[i] == DiscreteOperator::RowKind::boundary);
            CHECK(op.matrix.coeff(i, i) == 1.0);
            continue;
        }
        const double diag = op.matrix.coeff(i, i);
        CHECK(diag > 0.0);
        CHECK(std::abs(lin_rows[i]) <= 1e-9 * diag * cfg.radius);
        Eigen::VectorXd sq(n);
        const Point2 xi = pruned.point(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < n; ++j) sq[j] = std::pow(dot(e, pruned.point(j) - xi), 2);
        CHECK(op.matrix.row(i).dot(sq) == doctest::Approx(-2.0).epsilon(1e-9));
    }

    const auto exact = props::directional_exactness(2.0 / 32);
    INFO(exact.detail);
    CHECK(exact.ok);
}

TEST_CASE("pruning") {
    const auto domain = disk(1.0);
    const PointCloud cloud = generate_uniform_cloud(domain, 2.0 / 32);
    const SchemeConfig cfg = SchemeConfig::from_resolution(2.0 / 32, DThetaRule{});
    const std::vector<double> thetas = direction_set(cfg.dtheta, DirectionKind::eigen).thetas;
    const PointCloud pruned = prune_cloud(cloud, thetas, cfg);
    CHECK(pruned.boundary_count() == cloud.boundary_count());
    CHECK(pruned.interior_count() <= cloud.interior_count());

    // Every removed node lies within the search radius of the boundary.
    std::size_t k = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (k < pruned.size() && pruned.point(k) == cloud.point(i)) {
            ++k;
            continue;
        }
        CHECK(domain->distance_to_boundary(cloud.point(i)) <= cfg.radius);
    }
    CHECK(k == pruned.size());

    const PointCloud again = prune_cloud(pruned, thetas, cfg);
    CHECK(again.points() == pruned.points());
    CHECK_NOTHROW(StencilTable(pruned, thetas, cfg));

    // One interior node surrounded by four boundary nodes on the axes.
    const PointCloud star(disk(1.0), {{0, 0}, {0.5, 0}, {0, 0.5}, {-0.5, 0}, {0, -0.5}}, {0, 1, 1, 1, 1}, {},
                          ResolutionMethod::nearest_gap);
    const double axes[] = {0.0, kHalfPi};
    CHECK(prune_cloud(star, axes, SchemeConfig::fixed(0.3, 0.6)).size() == 5);
}

TEST_CASE("existence of stencils away from the boundary") {
    for (double h : {2.0 / 32, 2.0 / 64}) {
        const auto check = props::existence_sweep(h);
        INFO(check.detail);
        CHECK(check.ok);
    }
}

TEST_CASE("consistency under refinement") {
    // max |D u - u_thetatheta| for u = sin x cos y with dtheta = 2 sqrt(h).
    auto max_error = [](double h) {
        const PointCloud cloud = generate_uniform_cloud(disk(1.0), h);
        const SchemeConfig cfg = SchemeConfig::from_resolution(h, DThetaRule{});
        const std::vector<double> thetas = {0.0, 0.4, 1.3, 2.2};
        const PointCloud pruned = prune_cloud(cloud, thetas, cfg);
        const StencilTable table(pruned, thetas, cfg);
        std::vector<double> u(pruned.size());
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::sin(pruned.point(j).x) * std::cos(pruned.point(j).y);
        double worst = 0.0;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            const double c = std::cos(thetas[k]);
            const double s = std::sin(thetas[k]);
            const std::vector<double> d = table.apply(k, u);
            for (std::size_t i = 0; i < pruned.size(); ++i) {
                if (pruned.is_boundary(i)) continue;
                const double x = pruned.point(i).x;
                const double y = pruned.point(i).y;
                const double uxx = -std::sin(x) * std::cos(y);
                const double uyy = -std::sin(x) * std::cos(y);
                const double uxy = -std::cos(x) * std::sin(y);
                worst = std::max(worst, std::abs(d[i] - (c * c * uxx + 2 * c * s * uxy + s * s * uyy)));
            }
        }
        return worst;
    };
    const double coarse = max_error(2.0 / 16);
    const double fine = max_error(2.0 / 128);
    const double rate = std::log(coarse / fine) / std::log(8.0);
    INFO("errors " << coarse << " " << fine << ", rate " << rate);
    CHECK(rate >= 0.4);
}
