#include "mfd/domain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mfd/error.hpp"

namespace mfd {

namespace {

constexpr std::size_t kPanels = 1024;
constexpr std::size_t kDistanceSamples = 512;

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {
    -0.9061798459386639927976, -0.5384693101056830910363, 0.0,
    0.5384693101056830910363, 0.9061798459386639927976};
constexpr std::array<double, 5> kGaussWeights = {
    0.2369268850561890875143, 0.4786286704993664680413, 0.5688888888888888888889,
    0.4786286704993664680413, 0.2369268850561890875143};

Point2 rotate(Point2 v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

ClosedCurve::ClosedCurve(Map point, Map tangent)
    : point_(std::move(point)), tangent_(std::move(tangent)) {
    cumulative_.resize(kPanels + 1, 0.0);
    const double ds = kTwoPi / static_cast<double>(kPanels);
    for (std::size_t k = 0; k < kPanels; ++k) {
        const double s0 = ds * static_cast<double>(k);
        cumulative_[k + 1] = cumulative_[k] + arclength_between(s0, s0 + ds);
    }
    length_ = cumulative_.back();

    samples_.resize(kDistanceSamples);
    for (std::size_t k = 0; k < kDistanceSamples; ++k) {
        samples_[k] = point_(kTwoPi * static_cast<double>(k) / static_cast<double>(kDistanceSamples));
    }
}

double ClosedCurve::arclength_between(double s0, double s1) const {
    const double mid = 0.5 * (s0 + s1);
    const double half = 0.5 * (s1 - s0);
    double sum = 0.0;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
        sum += kGaussWeights[q] * norm(tangent_(mid + half * kGaussNodes[q]));
    }
    return half * sum;
}

double ClosedCurve::parameter_at_fraction(double t) const {
    const double target = t * length_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t k = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    k = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, kPanels - 1);

    const double ds = kTwoPi / static_cast<double>(kPanels);
    double lo = ds * static_cast<double>(k);
    double hi = lo + ds;
    const double base = cumulative_[k];
    const double panel = cumulative_[k + 1] - base;
    double s = lo + ds * (panel > 0.0 ? (target - base) / panel : 0.0);
    const double s_start = lo;

    for (int iter = 0; iter < 50; ++iter) {
        const double residual = base + arclength_between(s_start, s) - target;
        if (std::abs(residual) <= 1e-15 * length_) break;
        if (residual > 0.0) hi = s; else lo = s;
        const double speed = norm(tangent_(s));
        double next = s - residual / speed;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        s = next;
    }
    return s;
}

Point2 ClosedCurve::at_fraction(double t) const { return point_(parameter_at_fraction(t)); }

double ClosedCurve::distance(Point2 p) const {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const double d2 = squared_distance(samples_[k], p);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = k;
        }
    }
    const double ds = kTwoPi / static_cast<double>(samples_.size());
    double a = ds * (static_cast<double>(best) - 1.0);
    double b = ds * (static_cast<double>(best) + 1.0);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double s) { return squared_distance(point_(s), p); };
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int iter = 0; iter < 90; ++iter) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    return std::sqrt(std::min({best_d2, fc, fd}));
}

Domain Domain::disk(Point2 center, double radius) {
    if (!(radius > 0.0)) throw Error("disk radius must be positive");
    Domain d;
    d.kind_ = Kind::disk;
    d.center_ = center;
    d.radius_ = radius;
    d.curves_.emplace_back(
        [center, radius](double s) { return center + Point2{radius * std::cos(s), radius * std::sin(s)}; },
        [radius](double s) { return Point2{-radius * std::sin(s), radius * std::cos(s)}; });
    return d;
}

Domain Domain::ellipse(Point2 center, double semi_major, double semi_minor, double rotation) {
    if (!(semi_major > 0.0 && semi_minor > 0.0)) throw Error("ellipse semi-axes must be positive");
    Domain d;
    d.kind_ = Kind::ellipse;
    d.center_ = center;
    d.semi_major_ = semi_major;
    d.semi_minor_ = semi_minor;
    d.rotation_ = rotation;
    d.curves_.emplace_back(
        [=](double s) {
            return center + rotate({semi_major * std::cos(s), semi_minor * std::sin(s)}, rotation);
        },
        [=](double s) { return rotate({-semi_major * std::sin(s), semi_minor * std::cos(s)}, rotation); });
    return d;
}

Domain Domain::perforated_disk(Point2 center, double radius, Point2 hole_center, double hole_radius,
                               double amplitude, int lobes) {
    if (!(radius > 0.0 && hole_radius > 0.0) || amplitude < 0.0 || amplitude >= 1.0 || lobes < 1) {
        throw Error("invalid perforated disk parameters");
    }
    Domain d = disk(center, radius);
    d.kind_ = Kind::perforated_disk;
    d.hole_center_ = hole_center;
    d.hole_radius_ = hole_radius;
    d.hole_amplitude_ = amplitude;
    d.hole_lobes_ = lobes;
    const double k = static_cast<double>(lobes);
    auto rho = [=](double s) { return hole_radius * (1.0 + amplitude * std::cos(k * s)); };
    auto drho = [=](double s) { return -hole_radius * amplitude * k * std::sin(k * s); };
    d.curves_.emplace_back(
        [=](double s) { return hole_center + rho(s) * Point2{std::cos(s), std::sin(s)}; },
        [=](double s) {
            return drho(s) * Point2{std::cos(s), std::sin(s)} + rho(s) * Point2{-std::sin(s), std::cos(s)};
        });
    return d;
}

Domain Domain::point_set(const std::vector<Point2>& interior_nodes) {
    Domain d;
    d.kind_ = Kind::point_set;
    auto members = std::make_shared<std::set<std::pair<double, double>>>();
    for (const auto& p : interior_nodes) members->emplace(p.x, p.y);
    d.members_ = std::move(members);
    return d;
}

bool Domain::inside(Point2 p) const {
    switch (kind_) {
        case Kind::disk:
            return squared_distance(p, center_) < radius_ * radius_;
        case Kind::ellipse: {
            const Point2 q = rotate(p - center_, -rotation_);
            const double u = q.x / semi_major_;
            const double v = q.y / semi_minor_;
            return u * u + v * v < 1.0;
        }
        case Kind::perforated_disk: {
            if (!(squared_distance(p, center_) < radius_ * radius_)) return false;
            const Point2 v = p - hole_center_;
            const double t = std::atan2(v.y, v.x);
            const double rho = hole_radius_ * (1.0 + hole_amplitude_ * std::cos(hole_lobes_ * t));
            return norm(v) > rho;
        }
        case Kind::point_set:
            return members_->count({p.x, p.y}) > 0;
    }
    return false;
}

double Domain::boundary_length() const {
    double total = 0.0;
    for (const auto& c : curves_) total += c.length();
    return total;
}

double Domain::component_offset(std::size_t k) const {
    const double total = boundary_length();
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += curves_.at(j).length();
    return acc / total;
}

std::size_t Domain::component_of(double t) const {
    if (curves_.empty()) throw Error("domain has no analytic boundary");
    for (std::size_t k = curves_.size(); k-- > 1;) {
        if (t >= component_offset(k)) return k;
    }
    return 0;
}

Point2 Domain::component_point(std::size_t k, double u) const { return curves_.at(k).at_fraction(u); }

Point2 Domain::boundary_param(double t) const {
    if (!analytic()) throw Error("boundary_param requires an analytic domain");
    const std::size_t k = component_of(t);
    const double start = component_offset(k);
    const double stop = k + 1 < curves_.size() ? component_offset(k + 1) : 1.0;
    return curves_[k].at_fraction((t - start) / (stop - start));
}

double Domain::distance_to_boundary(Point2 p) const {
    switch (kind_) {
        case Kind::disk:
            return std::abs(radius_ - distance(p, center_));
        case Kind::ellipse:
            return curves_[0].distance(p);
        case Kind::perforated_disk:
            return std::min(std::abs(radius_ - distance(p, center_)), curves_[1].distance(p));
        case Kind::point_set:
            break;
    }
    throw Error("distance_to_boundary requires an analytic domain");
}

std::pair<Point2, Point2> Domain::bounding_box() const {
    switch (kind_) {
        case Kind::disk:
        case Kind::perforated_disk:
            return {center_ - Point2{radius_, radius_}, center_ + Point2{radius_, radius_}};
        case Kind::ellipse: {
            const double c = std::cos(rotation_);
            const double s = std::sin(rotation_);
            const double wx = std::sqrt(semi_major_ * semi_major_ * c * c + semi_minor_ * semi_minor_ * s * s);
            const double wy = std::sqrt(semi_major_ * semi_major_ * s * s + semi_minor_ * semi_minor_ * c * c);
            return {center_ - Point2{wx, wy}, center_ + Point2{wx, wy}};
        }
        case Kind::point_set:
            break;
    }
    throw Error("bounding_box requires an analytic domain");
}

double Domain::area() const {
    switch (kind_) {
        case Kind::disk:
            return kPi * radius_ * radius_;
        case Kind::ellipse:
            return kPi * semi_major_ * semi_minor_;
        case Kind::perforated_disk:
            return kPi * radius_ * radius_ -
                   kPi * hole_radius_ * hole_radius_ * (1.0 + 0.5 * hole_amplitude_ * hole_amplitude_);
        case Kind::point_set:
            break;
    }
    throw Error("area requires an analytic domain");
}

}  // namespace mfd
