#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfd/cloud.hpp"
#include "mfd/domain.hpp"
#include "mfd/operators.hpp"

namespace mfd {

enum class ProblemKind { linear_degenerate, convex_envelope, obstacle, monge_ampere };

struct Problem {
    std::string name;
    std::string description;
    ProblemKind kind = ProblemKind::linear_degenerate;
    std::shared_ptr<const Domain> domain;
    ScalarField f;         // Monge-Ampere right-hand side
    ScalarField g;         // Dirichlet data
    ScalarField obstacle;  // convex envelope / obstacle problems
    ScalarField exact;     // empty when no closed form is known
    double direction = 0.0;  // angle of nu for the linear degenerate equation
    DThetaRule default_rule;

    bool has_exact() const { return static_cast<bool>(exact); }
};

/// The five benchmark problems. Built once; the Monge-Ampere pairs and boundary
/// data are checked numerically before the list is handed out.
const std::vector<Problem>& registry();

/// Throws an Error listing the known names when `name` is not registered.
const Problem& find_problem(const std::string& name);

std::string problem_names();

/// max_i |u_i - exact(x_i)| over every node.
double max_error(const Eigen::VectorXd& u, const ScalarField& exact, const PointCloud& cloud);

namespace oracle {

/// Max over a 101x101 probe grid of |det D^2 exact - f| with centred differences of step `step`.
double determinant_mismatch(const Problem& problem, double step = 1e-4);

/// Max over boundary samples of |exact - g|.
double boundary_mismatch(const Problem& problem, std::size_t samples = 512);

}  // namespace oracle

}  // namespace mfd
