#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "mfd/cloud.hpp"
#include "mfd/stencil.hpp"

namespace mfd {

using ScalarField = std::function<double(Point2)>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class DirectionKind { eigen, ma_pairs, explicit_list };

struct DirectionSet {
    DirectionKind kind = DirectionKind::eigen;
    double dtheta = 0.0;
    std::vector<double> thetas;
};

/// eigen: j dtheta in [0, 2pi); ma_pairs: j dtheta in [0, pi/2), each standing for (theta, theta + pi/2).
DirectionSet direction_set(double dtheta, DirectionKind kind);
DirectionSet direction_set(std::vector<double> thetas);

struct EigenExtremes {
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
    double argmin_theta = 0.0;
    double argmax_theta = 0.0;
};

/// Min and max of D_thetatheta u over the table's directions (ties go to the first direction).
/// Boundary entries are left zeroed.
std::vector<EigenExtremes> eigen_extremes(std::span<const double> u, const StencilTable& table);

/// The filter S of the filtered scheme.
double filter_value(double x);
/// dS/dx, taken as 0 at the kinks |x| = 2 and as the inner branch at |x| = 1.
double filter_slope(double x);

struct FilterConfig {
    double epsilon_scale = 2.0;
    std::size_t accurate_neighbors = 12;
};

enum class ProgramFamily { linear, bellman_max, bellman_min, monge_ampere, accurate, filtered };

const char* to_string(ProgramFamily family);

struct Linearization {
    Eigen::VectorXd residual;
    SparseRowMatrix jacobian;
};

/// Nodewise residual F(u) of a discretised PDE; boundary rows are u_i - g_i.
class ResidualProgram {
public:
    virtual ~ResidualProgram() = default;

    ProgramFamily family() const { return family_; }
    const PointCloud& cloud() const { return *cloud_; }
    std::shared_ptr<const PointCloud> cloud_ptr() const { return cloud_; }
    std::size_t size() const { return cloud_->size(); }
    /// Dirichlet data at boundary nodes (0 at interior nodes).
    const Eigen::VectorXd& boundary_values() const { return boundary_; }

    virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const = 0;
    virtual Linearization linearize(const Eigen::VectorXd& u) const = 0;

    /// False where the residual is only a low-order fallback; filtering then keeps the monotone row.
    virtual bool high_order_at(std::size_t) const { return true; }

protected:
    ResidualProgram(ProgramFamily family, std::shared_ptr<const PointCloud> cloud, const ScalarField& g);

    ProgramFamily family_;
    std::shared_ptr<const PointCloud> cloud_;
    Eigen::VectorXd boundary_;
};

/// Affine branches combined by max (bellman_max), min (bellman_min) or a single branch (linear).
/// A branch is either -sum_{d in combo} D_dd u or the identity u - obstacle.
class BranchProgram : public ResidualProgram {
public:
    BranchProgram(ProgramFamily family, std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                  std::vector<double> thetas, std::vector<std::vector<std::size_t>> combos, bool identity_branch,
                  const ScalarField& obstacle, const ScalarField& g);

    std::size_t branch_count() const { return combos_.size() + (identity_ ? 1 : 0); }
    bool has_identity_branch() const { return identity_; }
    const StencilTable& table() const { return table_; }

    /// Value of branch b at interior node i.
    double branch_value(std::size_t b, std::size_t i, std::span<const double> u) const;

    /// Active branch per node (argmax or argmin, ties to the lowest index; boundary nodes get 0).
    std::vector<int> select_policy(const Eigen::VectorXd& u) const;
    /// Policy where every interior node uses the last branch.
    std::vector<int> default_policy() const;
    /// Linear system A u = b of a fixed policy.
    DiscreteOperator policy_system(const std::vector<int>& policy) const;

    Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
    Linearization linearize(const Eigen::VectorXd& u) const override;

private:
    StencilTable table_;
    std::vector<std::vector<std::size_t>> combos_;
    bool identity_;
    Eigen::VectorXd obstacle_;
};

/// Monotone Monge-Ampere residual over direction pairs (theta, theta + pi/2).
class MongeAmpereMonotoneProgram : public ResidualProgram {
public:
    MongeAmpereMonotoneProgram(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                               const ScalarField& f, const ScalarField& g);

    std::size_t pair_count() const { return pairs_; }
    const StencilTable& table() const { return table_; }

    /// b(theta_k) at interior node i.
    double pair_value(std::size_t k, std::size_t i, std::span<const double> u) const;

    Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
    Linearization linearize(const Eigen::VectorXd& u) const override;

private:
    std::size_t pairs_;
    StencilTable table_;
    Eigen::VectorXd f_;
};

/// -(u_xx u_yy - u_xy^2) + f. On Cartesian lattice clouds the Hessian comes from second differences
/// along the axes and diagonals, closed at the boundary with Dirichlet data at the line crossings.
/// Elsewhere it is a least-squares quadratic fit over the nearest neighbours.
class MongeAmpereAccurateProgram : public ResidualProgram {
public:
    MongeAmpereAccurateProgram(std::shared_ptr<const PointCloud> cloud, const ScalarField& f, const ScalarField& g,
                               const FilterConfig& cfg);

    struct Hessian {
        double xx = 0.0;
        double xy = 0.0;
        double yy = 0.0;
    };

    /// Hessian estimate at interior node i.
    Hessian hessian(std::size_t i, std::span<const double> u) const;
    /// Interior nodes using lattice differences rather than the quadratic fit.
    std::size_t lattice_count() const { return lattice_; }
    /// The quadratic fit is only first-order consistent for the Hessian.
    bool high_order_at(std::size_t i) const override { return lattice_mask_[i]; }

    Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
    Linearization linearize(const Eigen::VectorXd& u) const override;

private:
    bool lattice_weights(std::size_t i, const std::vector<std::size_t>& nearest, const ScalarField& g);

    std::size_t stride_;
    std::size_t lattice_ = 0;
    std::vector<bool> lattice_mask_;
    std::vector<std::uint32_t> nodes_;  // stride_ nodes per cloud node, centre first
    std::vector<double> wxx_, wxy_, wyy_;
    std::vector<Hessian> offset_;  // boundary-data contributions
    Eigen::VectorXd f_;
};

/// F_M + eps S((F_A - F_M) / eps), eps = K sqrt(h), at nodes where the accurate program is high order;
/// F_M elsewhere.
class FilteredProgram : public ResidualProgram {
public:
    FilteredProgram(std::shared_ptr<const ResidualProgram> monotone, std::shared_ptr<const ResidualProgram> accurate,
                    const FilterConfig& cfg, double h);

    double epsilon() const { return epsilon_; }

    Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
    Linearization linearize(const Eigen::VectorXd& u) const override;

private:
    std::shared_ptr<const ResidualProgram> monotone_;
    std::shared_ptr<const ResidualProgram> accurate_;
    double epsilon_;
};

/// -D_nunu u = 0 with nu at angle nu_angle.
BranchProgram residual_linear_degenerate(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                         double nu_angle, const ScalarField& g);

/// max{-D_thetatheta u (theta in the eigen set), u - obstacle} = 0.
BranchProgram residual_convex_envelope(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                       const ScalarField& obstacle, const ScalarField& g);

/// min{-(D_00 + D_{pi/2,pi/2}) u, u - obstacle} = 0.
BranchProgram residual_obstacle(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                const ScalarField& obstacle, const ScalarField& g);

MongeAmpereMonotoneProgram residual_monge_ampere_monotone(std::shared_ptr<const PointCloud> cloud,
                                                          const SchemeConfig& cfg, const ScalarField& f,
                                                          const ScalarField& g);

MongeAmpereAccurateProgram residual_monge_ampere_accurate(std::shared_ptr<const PointCloud> cloud,
                                                          const ScalarField& f, const ScalarField& g,
                                                          const FilterConfig& cfg);

FilteredProgram residual_filtered(std::shared_ptr<const ResidualProgram> monotone,
                                  std::shared_ptr<const ResidualProgram> accurate, const FilterConfig& cfg, double h);

}  // namespace mfd
