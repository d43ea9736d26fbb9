#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfd/domain.hpp"
#include "mfd/geometry.hpp"

namespace mfd {

/// How the spatial resolution h of a cloud is obtained.
enum class ResolutionMethod {
    lattice,      // Cartesian lattice: covering radius spacing/sqrt(2)
    probe,        // fine probe lattice over the domain
    nearest_gap,  // max nearest-neighbour gap among interior nodes (file clouds)
};

struct CloudMetrics {
    double h = 0.0;           // spatial resolution
    double h_boundary = 0.0;  // boundary resolution h_B
    double delta = 0.0;       // interior-to-boundary separation
};

/// Discretisation nodes with boundary flags. Immutable once built.
class PointCloud {
public:
    PointCloud(std::shared_ptr<const Domain> domain, std::vector<Point2> points,
               std::vector<std::uint8_t> is_boundary, std::vector<double> boundary_param,
               ResolutionMethod method, double lattice_spacing = 0.0);

    std::size_t size() const { return points_.size(); }
    const std::vector<Point2>& points() const { return points_; }
    const Point2& point(std::size_t i) const { return points_[i]; }
    bool is_boundary(std::size_t i) const { return is_boundary_[i] != 0; }
    const std::vector<std::uint8_t>& boundary_flags() const { return is_boundary_; }
    /// Global boundary parameter of each boundary node (NaN when unknown).
    const std::vector<double>& boundary_params() const { return boundary_param_; }
    std::size_t interior_count() const;
    std::size_t boundary_count() const { return size() - interior_count(); }

    const Domain& domain() const { return *domain_; }
    std::shared_ptr<const Domain> domain_ptr() const { return domain_; }
    ResolutionMethod resolution_method() const { return method_; }
    double lattice_spacing() const { return lattice_spacing_; }

    const CloudMetrics& metrics() const { return metrics_; }
    double h() const { return metrics_.h; }
    double h_boundary() const { return metrics_.h_boundary; }
    double delta() const { return metrics_.delta; }

    /// Cloud restricted to nodes with keep[i] != 0, metrics recomputed.
    PointCloud subset(const std::vector<std::uint8_t>& keep) const;

private:
    void compute_metrics();

    std::shared_ptr<const Domain> domain_;
    std::vector<Point2> points_;
    std::vector<std::uint8_t> is_boundary_;
    std::vector<double> boundary_param_;
    ResolutionMethod method_;
    double lattice_spacing_;
    CloudMetrics metrics_;
};

/// Angular resolution rule dtheta(h).
struct DThetaRule {
    enum class Kind { sqrt, cbrt, fixed };
    Kind kind = Kind::sqrt;
    double value = 0.0;  // only for fixed

    double operator()(double h) const;
    std::string to_string() const;
    /// Parses "sqrt", "cbrt" or "fixed:VALUE".
    static DThetaRule parse(const std::string& text);

    friend bool operator==(const DThetaRule&, const DThetaRule&) = default;
};

/// Search radius r = h (1 + sin(dtheta/2) + cos(dtheta/2) cot(dtheta/2)).
double search_radius(double h, double dtheta);

struct SchemeConfig {
    double dtheta = 0.0;
    double radius = 0.0;
    DThetaRule rule;

    /// dtheta from the rule, r from search_radius; requires 0 < dtheta < pi/2.
    static SchemeConfig from_resolution(double h, DThetaRule rule);
    static SchemeConfig fixed(double dtheta, double radius);
};

/// Interior: lattice of the given spacing (through the origin) inside the open
/// domain. Boundary: ceil(L / spacing_B) equispaced points per component, with
/// spacing_B defaulting to h^{3/2} for h = spacing/sqrt(2).
PointCloud generate_uniform_cloud(std::shared_ptr<const Domain> domain, double spacing,
                                  std::optional<double> boundary_spacing = std::nullopt);

/// Interior and boundary counts generate_uniform_cloud would produce.
std::pair<std::size_t, std::size_t> uniform_cloud_counts(std::shared_ptr<const Domain> domain, double spacing,
                                                         std::optional<double> boundary_spacing = std::nullopt);

/// Rejection-sampled interior nodes plus uniformly sampled boundary parameters.
/// Interior and boundary samples use independent streams, so a larger count
/// with the same seed extends the smaller cloud.
PointCloud generate_random_cloud(std::shared_ptr<const Domain> domain, std::size_t n_interior,
                                 std::size_t n_boundary, std::uint64_t seed);

/// Drops interior nodes closer than min_delta to the boundary.
PointCloud remove_near_boundary(const PointCloud& cloud, double min_delta);

/// Raw rows of a point-cloud CSV.
struct CloudRecords {
    std::vector<Point2> points;
    std::vector<std::uint8_t> is_boundary;
};

/// Parses CSV `x,y,flag` (flag 1 = boundary); '#' lines are comments.
/// Malformed rows raise an error naming the line.
CloudRecords parse_cloud_csv(std::istream& in);

/// parse_cloud_csv plus validation (at least 3 boundary nodes, no duplicates).
PointCloud read_cloud(std::istream& in);
PointCloud load_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloud& cloud, std::ostream& out);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Indices j != i with |x_j - x_i| <= radius, ascending.
std::vector<std::size_t> neighbors_within(const PointCloud& cloud, std::size_t i, double radius);

}  // namespace mfd
