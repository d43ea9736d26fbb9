#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mfd/operators.hpp"
#include "mfd/stencil.hpp"

namespace mfd {

struct SolverReport {
    std::size_t iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    double wall_time = 0.0;  // seconds
    std::vector<double> residual_history;
    /// Policy iteration only: residual never increased between iterations.
    bool residual_monotone = true;
    /// Policy iteration only: stopped because a policy repeated without reaching tol.
    bool cycled = false;
};

struct Solution {
    Eigen::VectorXd u;
    SolverReport report;
};

/// Sparse LU on the diagonally scaled system with iterative refinement.
/// Converged when max_i |(Au - b)_i| / |A_ii| <= tol * max(1, max_i |b_i / A_ii|).
Solution solve_linear(const DiscreteOperator& op, double tol = 1e-10);
Solution solve_linear(const SparseRowMatrix& matrix, const Eigen::VectorXd& rhs, double tol = 1e-10);

struct PolicyConfig {
    double tol = 1e-8;
    std::size_t max_iter = 200;
    double linear_tol = 1e-10;
};

/// Howard's algorithm. The first policy is the last branch everywhere unless u0 is given,
/// in which case it is the policy selected at u0.
Solution policy_iteration(const BranchProgram& program, const PolicyConfig& cfg = {},
                          const std::optional<Eigen::VectorXd>& u0 = std::nullopt);

struct NewtonConfig {
    double tol = 1e-8;
    std::size_t max_iter = 50;
    double damping = 0.5;
    double min_step = 0x1p-20;
};

/// Damped Newton on the program's active-branch Jacobian.
Solution damped_newton(const ResidualProgram& program, const NewtonConfig& cfg, const Eigen::VectorXd& u0);

/// Warm start for Monge-Ampere: -(D_00 + D_{pi/2,pi/2}) u = -sqrt(2 f) with boundary data g.
Eigen::VectorXd monge_ampere_initial_guess(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                           const ScalarField& f, const ScalarField& g);

}  // namespace mfd
