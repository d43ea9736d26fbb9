#pragma once

#include <functional>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "mfd/geometry.hpp"

namespace mfd {

/// Smooth closed curve c(s), s in [0, 2pi), with an arclength table so that
/// points can be placed at arclength-proportional parameters.
class ClosedCurve {
public:
    using Map = std::function<Point2(double)>;

    ClosedCurve(Map point, Map tangent);

    double length() const { return length_; }

    /// Point at arclength fraction t in [0, 1).
    Point2 at_fraction(double t) const;

    /// Curve parameter s whose arclength from s = 0 equals t * length().
    double parameter_at_fraction(double t) const;

    /// Euclidean distance from p to the curve.
    double distance(Point2 p) const;

    Point2 point(double s) const { return point_(s); }

private:
    double arclength_between(double s0, double s1) const;

    Map point_;
    Map tangent_;
    std::vector<double> cumulative_;  // arclength at panel nodes 2*pi*k/M
    std::vector<Point2> samples_;     // coarse samples for distance queries
    double length_ = 0.0;
};

/// Computational domain Omega. Analytic kinds carry their boundary as one or
/// more closed curves; a point-set domain only knows its interior nodes.
class Domain {
public:
    enum class Kind { disk, ellipse, perforated_disk, point_set };

    static Domain disk(Point2 center, double radius);
    /// Ellipse with semi-axes a >= b, rotated counter-clockwise by phi radians.
    static Domain ellipse(Point2 center, double semi_major, double semi_minor, double rotation);
    /// Disk minus a star-shaped hole rho(t) = r0 (1 + amp cos(lobes t)) about hole_center.
    static Domain perforated_disk(Point2 center, double radius, Point2 hole_center,
                                  double hole_radius, double amplitude, int lobes);
    /// Domain backing a loaded point cloud; inside() means "is an interior node".
    static Domain point_set(const std::vector<Point2>& interior_nodes);

    Kind kind() const { return kind_; }
    bool analytic() const { return kind_ != Kind::point_set; }

    /// Open-set membership.
    bool inside(Point2 p) const;

    /// Arclength-proportional boundary map [0, 1) -> dOmega over all components.
    Point2 boundary_param(double t) const;
    double boundary_length() const;

    std::size_t component_count() const { return curves_.size(); }
    double component_length(std::size_t k) const { return curves_.at(k).length(); }
    /// Global parameter of component k's start; components are laid out in order.
    double component_offset(std::size_t k) const;
    std::size_t component_of(double t) const;
    /// Point at fraction u in [0,1) of component k.
    Point2 component_point(std::size_t k, double u) const;

    double distance_to_boundary(Point2 p) const;

    /// Axis-aligned bounding box of the closure (analytic kinds only).
    std::pair<Point2, Point2> bounding_box() const;

    double area() const;

private:
    Domain() = default;

    Kind kind_ = Kind::disk;
    Point2 center_{};
    double radius_ = 1.0;
    double semi_major_ = 1.0;
    double semi_minor_ = 1.0;
    double rotation_ = 0.0;
    Point2 hole_center_{};
    double hole_radius_ = 0.0;
    double hole_amplitude_ = 0.0;
    int hole_lobes_ = 0;
    std::vector<ClosedCurve> curves_;
    std::shared_ptr<const std::set<std::pair<double, double>>> members_;
};

}  // namespace mfd
