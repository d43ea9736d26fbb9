#pragma once

#include <cstdint>
#include <string>

#include "mfd/operators.hpp"

// Property checks shared by the unit tests and the acceptance report.
namespace mfd::props {

struct Check {
    bool ok = true;
    std::string detail;
};

/// Positivity, eq. conditions, symmetry and a dense 4x4 solve on random admissible stencils.
Check random_stencils(std::size_t count, std::uint64_t seed, double max_misalignment = 0.3);

/// Directional differences on a uniform disk cloud: zero on linear fields, 2 on (e_theta . x)^2,
/// at most 2 tan^2(dtheta) on (e_theta_perp . x)^2.
Check directional_exactness(double h);

/// Axis-aligned stencils reduce to centred differences.
Check axis_aligned();

/// No missing quadrant on uniform clouds whose near-boundary band satisfies h_B <= 2 delta tan(dtheta/2).
Check existence_sweep(double h);

/// residual_i(u) >= residual_i(v) for u <= v with u_i = v_i, no tolerance.
Check monotonicity(ProgramFamily family, std::size_t pairs, std::uint64_t seed);

/// Filter values at the listed sample points.
Check filter_values();

/// Bucket-grid queries against all-pairs scans.
Check neighbour_oracle(std::size_t n, std::uint64_t seed);

/// Policy iteration on a small obstacle problem against projected Gauss-Seidel.
Check obstacle_oracle(double tol);

}  // namespace mfd::props
