#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfd/problems.hpp"
#include "mfd/solvers.hpp"

namespace mfd {

enum class Scheme { monotone, filtered };

const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

struct CloudSpec {
    enum class Kind { uniform, random, file };
    Kind kind = Kind::uniform;
    std::filesystem::path path;
    std::uint64_t seed = 0;

    /// "uniform", "random" or "file:PATH".
    static CloudSpec parse(const std::string& text, std::uint64_t seed = 0);
    std::string to_string() const;
};

struct RunConfig {
    Scheme scheme = Scheme::monotone;
    std::optional<DThetaRule> rule;  // problem default when empty
    CloudSpec cloud;
    FilterConfig filter;
    PolicyConfig policy;
    NewtonConfig newton;
    double linear_tol = 1e-10;
};

/// Angular rule used for a run: explicit override, else cbrt for filtered, else the problem default.
DThetaRule effective_rule(const Problem& problem, const RunConfig& cfg);

struct RunResult {
    double h_label = 0.0;   // requested lattice spacing
    double scheme_h = 0.0;  // resolution fed to the angular rule and search radius
    std::shared_ptr<const PointCloud> cloud;
    SchemeConfig scheme;
    Eigen::VectorXd u;
    SolverReport report;
    std::optional<double> max_error;
    std::size_t removed_nodes = 0;  // interior nodes dropped for lacking a monotone stencil
    double wall_time = 0.0;
};

/// Unpruned cloud for a problem at nominal spacing h.
PointCloud build_cloud(const Problem& problem, double h, const RunConfig& cfg);

/// Cloud, prune, assemble, solve, measure.
RunResult solve_problem(const Problem& problem, double h, const RunConfig& cfg);

struct ConvergenceTable {
    struct Row {
        double h = 0.0;
        std::size_t N = 0;
        std::optional<double> max_error;
        std::optional<double> rate_h;
        std::optional<double> rate_N;

        friend bool operator==(const Row&, const Row&) = default;
    };

    std::vector<Row> rows;
    /// key=value metadata written as '#' lines.
    std::vector<std::pair<std::string, std::string>> metadata;

    /// Recomputes rate_h and rate_N from consecutive rows.
    void compute_rates();

    friend bool operator==(const ConvergenceTable&, const ConvergenceTable&) = default;
};

void write_table(const ConvergenceTable& table, std::ostream& out);
ConvergenceTable parse_table(std::istream& in);

struct StudyResult {
    ConvergenceTable table;
    std::vector<RunResult> runs;
    std::vector<std::string> failures;  // one message per failed level
};

/// One run per h; a failing level is recorded and the study moves on.
StudyResult convergence_study(const Problem& problem, const std::vector<double>& h_list, const RunConfig& cfg,
                              bool keep_solutions = false);

/// Per-node CSV: x,y,is_boundary,u[,exact,abs_error].
void write_solution(std::ostream& out, const PointCloud& cloud, const Eigen::VectorXd& u, const ScalarField& exact);

/// Formats a double as %.17e.
std::string format_number(double v);

}  // namespace mfd
