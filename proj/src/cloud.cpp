#include "mfd/cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mfd/error.hpp"
#include "mfd/spatial_index.hpp"

namespace mfd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double default_boundary_spacing(double spacing) {
    const double h = spacing / std::sqrt(2.0);
    return h * std::sqrt(h);
}

std::vector<Point2> lattice_points(const Domain& domain, double spacing) {
    const auto [lo, hi] = domain.bounding_box();
    const long i0 = static_cast<long>(std::ceil(lo.x / spacing));
    const long i1 = static_cast<long>(std::floor(hi.x / spacing));
    const long j0 = static_cast<long>(std::ceil(lo.y / spacing));
    const long j1 = static_cast<long>(std::floor(hi.y / spacing));
    std::vector<Point2> out;
    for (long j = j0; j <= j1; ++j) {
        for (long i = i0; i <= i1; ++i) {
            const Point2 p{static_cast<double>(i) * spacing, static_cast<double>(j) * spacing};
            if (domain.inside(p)) out.push_back(p);
        }
    }
    return out;
}

std::vector<std::size_t> boundary_counts(const Domain& domain, double boundary_spacing) {
    std::vector<std::size_t> counts;
    for (std::size_t k = 0; k < domain.component_count(); ++k) {
        counts.push_back(static_cast<std::size_t>(std::ceil(domain.component_length(k) / boundary_spacing)));
    }
    return counts;
}

}  // namespace

PointCloud::PointCloud(std::shared_ptr<const Domain> domain, std::vector<Point2> points,
                       std::vector<std::uint8_t> is_boundary, std::vector<double> boundary_param,
                       ResolutionMethod method, double lattice_spacing)
    : domain_(std::move(domain)),
      points_(std::move(points)),
      is_boundary_(std::move(is_boundary)),
      boundary_param_(std::move(boundary_param)),
      method_(method),
      lattice_spacing_(lattice_spacing) {
    if (!domain_) throw Error("point cloud requires a domain");
    if (is_boundary_.size() != points_.size()) throw Error("boundary flag count does not match point count");
    if (boundary_param_.empty()) boundary_param_.assign(points_.size(), kNaN);
    if (boundary_param_.size() != points_.size()) throw Error("boundary parameter count does not match");
    compute_metrics();
}

std::size_t PointCloud::interior_count() const {
    return static_cast<std::size_t>(std::count(is_boundary_.begin(), is_boundary_.end(), std::uint8_t{0}));
}

PointCloud PointCloud::subset(const std::vector<std::uint8_t>& keep) const {
    if (keep.size() != size()) throw Error("subset mask size mismatch");
    std::vector<Point2> pts;
    std::vector<std::uint8_t> flags;
    std::vector<double> params;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!keep[i]) continue;
        pts.push_back(points_[i]);
        flags.push_back(is_boundary_[i]);
        params.push_back(boundary_param_[i]);
    }
    return PointCloud(domain_, std::move(pts), std::move(flags), std::move(params), method_, lattice_spacing_);
}

void PointCloud::compute_metrics() {
    const std::size_t n_interior = interior_count();
    const std::size_t n_boundary = size() - n_interior;
    if (n_interior == 0 || n_boundary == 0) throw Error("degenerate cloud");

    // Reference length for duplicate detection and bucket sizing.
    Point2 lo = points_.front();
    Point2 hi = points_.front();
    for (const auto& p : points_) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double extent = std::max(hi.x - lo.x, hi.y - lo.y);
    const double scale = std::max(extent, 1e-300) / std::sqrt(static_cast<double>(size()));

    const BucketGrid grid(points_, scale);
    std::vector<double> nearest_gap(size(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
        const std::size_t j = grid.nearest(points_[i], i);
        nearest_gap[i] = j == BucketGrid::npos ? 0.0 : distance(points_[i], points_[j]);
        if (nearest_gap[i] < 1e-12 * scale) {
            throw Error("duplicate node " + std::to_string(i) + " (coincides with node " + std::to_string(j) + ")");
        }
    }

    std::vector<Point2> boundary_pts;
    std::vector<double> boundary_t;
    std::vector<Point2> interior_pts;
    for (std::size_t i = 0; i < size(); ++i) {
        if (is_boundary_[i]) {
            boundary_pts.push_back(points_[i]);
            boundary_t.push_back(boundary_param_[i]);
        } else {
            interior_pts.push_back(points_[i]);
        }
    }
    const BucketGrid boundary_grid(boundary_pts, extent / std::sqrt(static_cast<double>(n_boundary)) + 1e-300);

    // Boundary resolution: largest gap between consecutive samples along each
    // analytic component, or the largest nearest-boundary-neighbour gap otherwise.
    const bool params_known = domain_->analytic() &&
                              std::all_of(boundary_t.begin(), boundary_t.end(), [](double t) { return std::isfinite(t); });
    double h_b = 0.0;
    if (params_known) {
        const std::size_t nc = domain_->component_count();
        std::vector<std::vector<std::pair<double, std::size_t>>> per_component(nc);
        for (std::size_t k = 0; k < boundary_pts.size(); ++k) {
            per_component[domain_->component_of(boundary_t[k])].emplace_back(boundary_t[k], k);
        }
        for (std::size_t c = 0; c < nc; ++c) {
            auto& list = per_component[c];
            if (list.size() < 2) {
                h_b = std::max(h_b, domain_->component_length(c));
                continue;
            }
            std::sort(list.begin(), list.end());
            for (std::size_t k = 0; k < list.size(); ++k) {
                const auto& a = boundary_pts[list[k].second];
                const auto& b = boundary_pts[list[(k + 1) % list.size()].second];
                h_b = std::max(h_b, distance(a, b));
            }
        }
    } else {
        for (std::size_t k = 0; k < boundary_pts.size(); ++k) {
            const std::size_t j = boundary_grid.nearest(boundary_pts[k], k);
            if (j != BucketGrid::npos) h_b = std::max(h_b, distance(boundary_pts[k], boundary_pts[j]));
        }
    }

    // Separation delta: distance from interior nodes to the boundary.
    std::vector<std::pair<double, std::size_t>> to_samples;
    to_samples.reserve(interior_pts.size());
    for (std::size_t k = 0; k < interior_pts.size(); ++k) {
        const std::size_t j = boundary_grid.nearest(interior_pts[k]);
        to_samples.emplace_back(distance(interior_pts[k], boundary_pts[j]), k);
    }
    double delta = std::numeric_limits<double>::infinity();
    if (domain_->analytic()) {
        // The continuum distance is at least the sample distance minus h_B.
        std::sort(to_samples.begin(), to_samples.end());
        for (const auto& [d_sample, k] : to_samples) {
            if (d_sample - h_b >= delta) break;
            delta = std::min(delta, domain_->distance_to_boundary(interior_pts[k]));
        }
    } else {
        for (const auto& entry : to_samples) delta = std::min(delta, entry.first);
    }

    double h = 0.0;
    switch (method_) {
        case ResolutionMethod::lattice:
            h = lattice_spacing_ / std::sqrt(2.0);
            break;
        case ResolutionMethod::nearest_gap:
            for (std::size_t i = 0; i < size(); ++i) {
                if (!is_boundary_[i]) h = std::max(h, nearest_gap[i]);
            }
            break;
        case ResolutionMethod::probe: {
            const auto [blo, bhi] = domain_->bounding_box();
            const double probe = std::sqrt(domain_->area() / static_cast<double>(size())) / 4.0;
            double worst = 0.0;
            for (double y = blo.y; y <= bhi.y; y += probe) {
                for (double x = blo.x; x <= bhi.x; x += probe) {
                    const Point2 p{x, y};
                    if (!domain_->inside(p)) continue;
                    worst = std::max(worst, distance(p, points_[grid.nearest(p)]));
                }
            }
            // Every point of the domain lies within probe/sqrt(2) of a probe.
            h = worst + probe / std::sqrt(2.0);
            break;
        }
    }

    if (!(h > 0.0) || !(h_b > 0.0) || !(delta > 0.0)) throw Error("degenerate cloud");
    metrics_ = {h, h_b, delta};
}

double DThetaRule::operator()(double h) const {
    switch (kind) {
        case Kind::sqrt:
            return 2.0 * std::sqrt(h);
        case Kind::cbrt:
            return 2.0 * std::cbrt(h);
        case Kind::fixed:
            return value;
    }
    return value;
}

std::string DThetaRule::to_string() const {
    switch (kind) {
        case Kind::sqrt:
            return "sqrt";
        case Kind::cbrt:
            return "cbrt";
        case Kind::fixed: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "fixed:%.17g", value);
            return buf;
        }
    }
    return "sqrt";
}

DThetaRule DThetaRule::parse(const std::string& text) {
    if (text == "sqrt") return {Kind::sqrt, 0.0};
    if (text == "cbrt") return {Kind::cbrt, 0.0};
    if (text.rfind("fixed:", 0) == 0) {
        const std::string number = text.substr(6);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
        if (ec != std::errc{} || ptr != number.data() + number.size() || !(v > 0.0)) {
            throw Error("invalid fixed dtheta value '" + number + "'");
        }
        return {Kind::fixed, v};
    }
    throw Error("unknown dtheta rule '" + text + "' (expected sqrt, cbrt or fixed:VALUE)");
}

double search_radius(double h, double dtheta) {
    if (!(dtheta > 0.0 && dtheta <= kPi)) throw Error("search_radius requires 0 < dtheta <= pi");
    const double half = 0.5 * dtheta;
    return h * (1.0 + std::sin(half) + std::cos(half) * std::cos(half) / std::sin(half));
}

SchemeConfig SchemeConfig::from_resolution(double h, DThetaRule rule) {
    if (!(h > 0.0)) throw Error("resolution must be positive");
    const double dtheta = rule(h);
    if (!(dtheta > 0.0 && dtheta < kHalfPi)) {
        throw Error("angular resolution " + std::to_string(dtheta) + " outside (0, pi/2)");
    }
    return {dtheta, search_radius(h, dtheta), rule};
}

SchemeConfig SchemeConfig::fixed(double dtheta, double radius) {
    if (!(dtheta > 0.0 && dtheta < kHalfPi)) throw Error("angular resolution outside (0, pi/2)");
    if (!(radius > 0.0)) throw Error("search radius must be positive");
    return {dtheta, radius, DThetaRule{DThetaRule::Kind::fixed, dtheta}};
}

std::pair<std::size_t, std::size_t> uniform_cloud_counts(std::shared_ptr<const Domain> domain, double spacing,
                                                         std::optional<double> boundary_spacing) {
    if (!domain || !domain->analytic()) throw Error("uniform clouds need an analytic domain");
    if (!(spacing > 0.0)) throw Error("lattice spacing must be positive");
    const auto counts = boundary_counts(*domain, boundary_spacing.value_or(default_boundary_spacing(spacing)));
    return {lattice_points(*domain, spacing).size(), std::accumulate(counts.begin(), counts.end(), std::size_t{0})};
}

PointCloud generate_uniform_cloud(std::shared_ptr<const Domain> domain, double spacing,
                                  std::optional<double> boundary_spacing) {
    if (!domain || !domain->analytic()) throw Error("uniform clouds need an analytic domain");
    if (!(spacing > 0.0)) throw Error("lattice spacing must be positive");
    const double h_b = boundary_spacing.value_or(default_boundary_spacing(spacing));
    if (!(h_b > 0.0)) throw Error("boundary spacing must be positive");

    // A lattice coarser than the domain's narrowest extent does not resolve it.
    const auto [lo, hi] = domain->bounding_box();
    if (spacing >= std::min(hi.x - lo.x, hi.y - lo.y)) throw Error("degenerate cloud");
    std::vector<Point2> pts = lattice_points(*domain, spacing);
    if (pts.empty()) throw Error("degenerate cloud");
    std::vector<std::uint8_t> flags(pts.size(), 0);
    std::vector<double> params(pts.size(), kNaN);

    const auto counts = boundary_counts(*domain, h_b);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double offset = domain->component_offset(k);
        const double share = domain->component_length(k) / domain->boundary_length();
        for (std::size_t m = 0; m < counts[k]; ++m) {
            const double u = static_cast<double>(m) / static_cast<double>(counts[k]);
            pts.push_back(domain->component_point(k, u));
            flags.push_back(1);
            params.push_back(offset + u * share);
        }
    }
    return PointCloud(std::move(domain), std::move(pts), std::move(flags), std::move(params),
                      ResolutionMethod::lattice, spacing);
}

PointCloud generate_random_cloud(std::shared_ptr<const Domain> domain, std::size_t n_interior,
                                 std::size_t n_boundary, std::uint64_t seed) {
    if (!domain || !domain->analytic()) throw Error("random clouds need an analytic domain");
    if (n_interior < 1 || n_boundary < 1) throw Error("degenerate cloud: counts must be at least 1");

    std::mt19937_64 interior_rng(splitmix(seed));
    std::mt19937_64 boundary_rng(splitmix(seed ^ 0x5bd1e9955bd1e995ULL));
    const auto [lo, hi] = domain->bounding_box();

    std::vector<Point2> pts;
    std::vector<std::uint8_t> flags;
    std::vector<double> params;
    pts.reserve(n_interior + n_boundary);
    while (pts.size() < n_interior) {
        const Point2 p{lo.x + (hi.x - lo.x) * uniform01(interior_rng), lo.y + (hi.y - lo.y) * uniform01(interior_rng)};
        if (!domain->inside(p)) continue;
        pts.push_back(p);
        flags.push_back(0);
        params.push_back(kNaN);
    }
    for (std::size_t k = 0; k < n_boundary; ++k) {
        const double t = uniform01(boundary_rng);
        pts.push_back(domain->boundary_param(t));
        flags.push_back(1);
        params.push_back(t);
    }
    return PointCloud(std::move(domain), std::move(pts), std::move(flags), std::move(params),
                      ResolutionMethod::probe);
}

PointCloud remove_near_boundary(const PointCloud& cloud, double min_delta) {
    std::vector<std::uint8_t> keep(cloud.size(), 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!cloud.is_boundary(i) && cloud.domain().distance_to_boundary(cloud.point(i)) < min_delta) keep[i] = 0;
    }
    return cloud.subset(keep);
}

CloudRecords parse_cloud_csv(std::istream& in) {
    CloudRecords records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();

        auto fail = [&] {
            return Error("malformed point cloud line " + std::to_string(line_no) + ": '" + line + "'");
        };
        if (fields.size() != 3) throw fail();
        double values[3];
        for (std::size_t k = 0; k < 3; ++k) {
            const auto b = fields[k].find_first_not_of(" \t");
            const auto e = fields[k].find_last_not_of(" \t");
            if (b == std::string::npos) throw fail();
            const char* lo = fields[k].data() + b;
            const char* hi = fields[k].data() + e + 1;
            const auto [ptr, ec] = std::from_chars(lo, hi, values[k]);
            if (ec != std::errc{} || ptr != hi || !std::isfinite(values[k])) throw fail();
        }
        if (values[2] != 0.0 && values[2] != 1.0) throw fail();
        records.points.push_back({values[0], values[1]});
        records.is_boundary.push_back(values[2] == 1.0 ? 1 : 0);
    }
    return records;
}

PointCloud read_cloud(std::istream& in) {
    CloudRecords records = parse_cloud_csv(in);
    const auto n_boundary = static_cast<std::size_t>(
        std::count(records.is_boundary.begin(), records.is_boundary.end(), std::uint8_t{1}));
    if (n_boundary < 3) {
        throw Error("point cloud needs at least 3 boundary points, found " + std::to_string(n_boundary));
    }
    std::vector<Point2> interior;
    for (std::size_t i = 0; i < records.points.size(); ++i) {
        if (!records.is_boundary[i]) interior.push_back(records.points[i]);
    }
    auto domain = std::make_shared<const Domain>(Domain::point_set(interior));
    return PointCloud(std::move(domain), std::move(records.points), std::move(records.is_boundary), {},
                      ResolutionMethod::nearest_gap);
}

PointCloud load_cloud(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open point cloud file " + path.string());
    return read_cloud(in);
}

void write_cloud(const PointCloud& cloud, std::ostream& out) {
    char buf[96];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", cloud.point(i).x, cloud.point(i).y,
                      cloud.is_boundary(i) ? 1 : 0);
        out << buf;
    }
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write point cloud file " + path.string());
    write_cloud(cloud, out);
}

std::vector<std::size_t> neighbors_within(const PointCloud& cloud, std::size_t i, double radius) {
    if (!(radius > 0.0)) throw Error("neighbour radius must be positive");
    const BucketGrid grid(cloud.points(), radius);
    return grid.within(cloud.point(i), radius, i);
}

}  // namespace mfd
