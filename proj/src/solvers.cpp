#include "mfd/solvers.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <unordered_set>

#include <Eigen/SparseLU>

#include "mfd/error.hpp"

namespace mfd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

std::size_t hash_policy(const std::vector<int>& policy) {
    std::size_t h = 1469598103934665603ULL;
    for (int p : policy) {
        h ^= static_cast<std::size_t>(p) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

// Newton step J x = r with rows scaled by their largest entry; empty optional when singular.
std::optional<Eigen::VectorXd> solve_jacobian(const SparseRowMatrix& jac, const Eigen::VectorXd& r) {
    Eigen::VectorXd inv_scale(jac.rows());
    for (Eigen::Index i = 0; i < jac.rows(); ++i) {
        double m = 0.0;
        for (SparseRowMatrix::InnerIterator it(jac, i); it; ++it) m = std::max(m, std::abs(it.value()));
        if (!(m > 0.0)) return std::nullopt;
        inv_scale[i] = 1.0 / m;
    }
    const Eigen::SparseMatrix<double> scaled = inv_scale.asDiagonal() * jac;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(scaled);
    if (lu.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd x = lu.solve(inv_scale.cwiseProduct(r));
    if (lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
    return x;
}

}  // namespace

Solution solve_linear(const SparseRowMatrix& matrix, const Eigen::VectorXd& rhs, double tol) {
    const auto start = Clock::now();
    const Eigen::Index n = matrix.rows();
    if (matrix.cols() != n || rhs.size() != n) throw Error("linear system dimensions do not match");

    Eigen::VectorXd inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = matrix.coeff(i, i);
        if (!(d > 0.0)) throw Error("linear system has a non-positive diagonal entry");
        inv_diag[i] = 1.0 / d;
    }
    const Eigen::SparseMatrix<double> scaled = inv_diag.asDiagonal() * matrix;
    const Eigen::VectorXd b = inv_diag.cwiseProduct(rhs);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(scaled);
    if (lu.info() != Eigen::Success) throw Error("sparse factorisation failed: " + lu.lastErrorMessage());

    Solution sol;
    sol.u = lu.solve(b);
    const double bound = tol * std::max(1.0, max_norm(b));
    Eigen::VectorXd r = scaled * sol.u - b;
    double res = max_norm(r);
    sol.report.residual_history.push_back(res);
    for (int refine = 0; refine < 5 && res > bound; ++refine) {
        sol.u -= lu.solve(r);
        r = scaled * sol.u - b;
        res = max_norm(r);
        sol.report.residual_history.push_back(res);
    }
    sol.report.iterations = sol.report.residual_history.size();
    sol.report.final_residual = res;
    sol.report.converged = std::isfinite(res) && res <= bound;
    sol.report.wall_time = seconds_since(start);
    return sol;
}

Solution solve_linear(const DiscreteOperator& op, double tol) {
    return solve_linear(op.matrix, op.rhs, tol);
}

Solution policy_iteration(const BranchProgram& program, const PolicyConfig& cfg,
                          const std::optional<Eigen::VectorXd>& u0) {
    const auto start = Clock::now();
    std::vector<int> policy = u0 ? program.select_policy(*u0) : program.default_policy();
    std::unordered_set<std::size_t> seen{hash_policy(policy)};

    Solution sol;
    SolverReport& rep = sol.report;
    while (rep.iterations < cfg.max_iter) {
        Solution step = solve_linear(program.policy_system(policy), cfg.linear_tol);
        sol.u = std::move(step.u);
        ++rep.iterations;
        const double res = max_norm(program.evaluate(sol.u));
        if (!rep.residual_history.empty() && res > rep.residual_history.back()) rep.residual_monotone = false;
        rep.residual_history.push_back(res);
        rep.final_residual = res;
        if (res <= cfg.tol) {
            rep.converged = true;
            break;
        }
        std::vector<int> next = program.select_policy(sol.u);
        if (next == policy || !seen.insert(hash_policy(next)).second) {
            rep.cycled = true;
            break;
        }
        policy = std::move(next);
    }
    rep.wall_time = seconds_since(start);
    return sol;
}

Solution damped_newton(const ResidualProgram& program, const NewtonConfig& cfg, const Eigen::VectorXd& u0) {
    if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw Error("Newton damping must lie in (0, 1)");
    if (static_cast<std::size_t>(u0.size()) != program.size()) throw Error("initial iterate size does not match");
    const auto start = Clock::now();

    Solution sol;
    SolverReport& rep = sol.report;
    sol.u = u0;
    Linearization lin = program.linearize(sol.u);
    double res = max_norm(lin.residual);
    rep.residual_history.push_back(res);

    while (res > cfg.tol && rep.iterations < cfg.max_iter) {
        std::optional<Eigen::VectorXd> step = solve_jacobian(lin.jacobian, lin.residual);
        if (!step) {
            // One diagonal perturbation before giving up.
            SparseRowMatrix perturbed = lin.jacobian;
            double scale = 0.0;
            for (Eigen::Index i = 0; i < perturbed.rows(); ++i) scale = std::max(scale, std::abs(perturbed.coeff(i, i)));
            for (Eigen::Index i = 0; i < perturbed.rows(); ++i) perturbed.coeffRef(i, i) += 1e-10 * std::max(scale, 1.0);
            step = solve_jacobian(perturbed, lin.residual);
            if (!step) break;
        }

        double s = 1.0;
        Eigen::VectorXd trial;
        double trial_res = 0.0;
        for (;;) {
            trial = sol.u - s * *step;
            trial_res = max_norm(program.evaluate(trial));
            if (trial_res < res) break;
            s *= cfg.damping;
            if (s < cfg.min_step) {
                trial = sol.u - *step;
                break;
            }
        }
        sol.u = std::move(trial);
        ++rep.iterations;
        lin = program.linearize(sol.u);
        res = max_norm(lin.residual);
        rep.residual_history.push_back(res);
    }
    rep.final_residual = res;
    rep.converged = std::isfinite(res) && res <= cfg.tol;
    rep.wall_time = seconds_since(start);
    return sol;
}

Eigen::VectorXd monge_ampere_initial_guess(std::shared_ptr<const PointCloud> cloud, const SchemeConfig& cfg,
                                           const ScalarField& f, const ScalarField& g) {
    const BranchProgram poisson(ProgramFamily::linear, cloud, cfg, {0.0, kHalfPi}, {{0, 1}}, false, {}, g);
    DiscreteOperator op = poisson.policy_system(poisson.default_policy());
    for (std::size_t i = 0; i < cloud->size(); ++i) {
        if (!cloud->is_boundary(i)) op.rhs[static_cast<Eigen::Index>(i)] = -std::sqrt(2.0 * std::max(f(cloud->point(i)), 0.0));
    }
    const Solution sol = solve_linear(op);
    if (!sol.report.converged) throw Error("Monge-Ampere warm start did not converge");
    return sol.u;
}

}  // namespace mfd
