#include "mfd/study.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfd/error.hpp"

namespace mfd {

namespace {

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::optional<double> parse_optional(const std::string& field) {
    if (field.empty()) return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        throw Error("malformed number '" + field + "' in table");
    }
    if (used != field.size()) throw Error("malformed number '" + field + "' in table");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<double> program_directions(const Problem& problem, const SchemeConfig& cfg) {
    switch (problem.kind) {
        case ProblemKind::linear_degenerate:
            return {problem.direction};
        case ProblemKind::convex_envelope:
            return direction_set(cfg.dtheta, DirectionKind::eigen).thetas;
        case ProblemKind::obstacle:
            return {0.0, kHalfPi};
        case ProblemKind::monge_ampere: {
            std::vector<double> thetas = direction_set(cfg.dtheta, DirectionKind::ma_pairs).thetas;
            const std::size_t pairs = thetas.size();
            for (std::size_t k = 0; k < pairs; ++k) thetas.push_back(thetas[k] + kHalfPi);
            return thetas;
        }
    }
    return {};
}

}  // namespace

const char* to_string(Scheme scheme) {
    return scheme == Scheme::monotone ? "monotone" : "filtered";
}

Scheme parse_scheme(const std::string& text) {
    if (text == "monotone") return Scheme::monotone;
    if (text == "filtered") return Scheme::filtered;
    throw Error("unknown scheme '" + text + "' (expected monotone or filtered)");
}

CloudSpec CloudSpec::parse(const std::string& text, std::uint64_t seed) {
    CloudSpec spec;
    spec.seed = seed;
    if (text == "uniform") {
        spec.kind = Kind::uniform;
    } else if (text == "random") {
        spec.kind = Kind::random;
    } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
        spec.kind = Kind::file;
        spec.path = text.substr(5);
    } else {
        throw Error("unknown cloud '" + text + "' (expected uniform, random or file:PATH)");
    }
    return spec;
}

std::string CloudSpec::to_string() const {
    switch (kind) {
        case Kind::uniform: return "uniform";
        case Kind::random: return "random";
        case Kind::file: return "file:" + path.string();
    }
    return "uniform";
}

DThetaRule effective_rule(const Problem& problem, const RunConfig& cfg) {
    if (cfg.rule) return *cfg.rule;
    if (cfg.scheme == Scheme::filtered) return {DThetaRule::Kind::cbrt, 0.0};
    return problem.default_rule;
}

PointCloud build_cloud(const Problem& problem, double h, const RunConfig& cfg) {
    if (cfg.cloud.kind == CloudSpec::Kind::file) return load_cloud(cfg.cloud.path);
    if (!(h > 0.0)) throw Error("resolution h must be positive");
    // Boundary spacing h_B = h * dtheta / 2 at the lattice's resolution h = spacing / sqrt 2.
    const double resolution = h / std::sqrt(2.0);
    const double boundary_spacing = 0.5 * resolution * effective_rule(problem, cfg)(resolution);
    if (cfg.cloud.kind == CloudSpec::Kind::uniform) {
        return generate_uniform_cloud(problem.domain, h, boundary_spacing);
    }
    const auto [n_int, n_bdy] = uniform_cloud_counts(problem.domain, h, boundary_spacing);
    return generate_random_cloud(problem.domain, n_int, n_bdy, cfg.cloud.seed);
}

RunResult solve_problem(const Problem& problem, double h, const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.scheme == Scheme::filtered && problem.kind != ProblemKind::monge_ampere) {
        throw Error("the filtered scheme is only available for Monge-Ampere problems");
    }
    RunResult run;
    run.h_label = h;
    const PointCloud raw = build_cloud(problem, h, cfg);
    const DThetaRule rule = effective_rule(problem, cfg);
    // Generated clouds use the nominal spacing for dtheta and r; nodes left without a stencil are pruned.
    run.scheme_h = cfg.cloud.kind == CloudSpec::Kind::file ? raw.h() : h;
    run.scheme = SchemeConfig::from_resolution(run.scheme_h, rule);
    const std::vector<double> thetas = program_directions(problem, run.scheme);
    auto cloud = std::make_shared<const PointCloud>(prune_cloud(raw, thetas, run.scheme));
    run.removed_nodes = raw.size() - cloud->size();
    run.cloud = cloud;
    if (cfg.cloud.kind == CloudSpec::Kind::file) run.h_label = raw.h();

    Solution sol;
    switch (problem.kind) {
        case ProblemKind::linear_degenerate: {
            const BranchProgram program = residual_linear_degenerate(cloud, run.scheme, problem.direction, problem.g);
            sol = solve_linear(program.policy_system(program.default_policy()), cfg.linear_tol);
            sol.report.final_residual = program.evaluate(sol.u).cwiseAbs().maxCoeff();
            break;
        }
        case ProblemKind::convex_envelope: {
            const BranchProgram program = residual_convex_envelope(cloud, run.scheme, problem.obstacle, problem.g);
            sol = policy_iteration(program, cfg.policy);
            break;
        }
        case ProblemKind::obstacle: {
            const BranchProgram program = residual_obstacle(cloud, run.scheme, problem.obstacle, problem.g);
            sol = policy_iteration(program, cfg.policy);
            break;
        }
        case ProblemKind::monge_ampere: {
            auto monotone = std::make_shared<const MongeAmpereMonotoneProgram>(
                residual_monge_ampere_monotone(cloud, run.scheme, problem.f, problem.g));
            const Eigen::VectorXd u0 = monge_ampere_initial_guess(cloud, run.scheme, problem.f, problem.g);
            if (cfg.scheme == Scheme::monotone) {
                sol = damped_newton(*monotone, cfg.newton, u0);
            } else {
                auto accurate = std::make_shared<const MongeAmpereAccurateProgram>(
                    residual_monge_ampere_accurate(cloud, problem.f, problem.g, cfg.filter));
                const FilteredProgram program = residual_filtered(monotone, accurate, cfg.filter, run.scheme_h);
                sol = damped_newton(program, cfg.newton, u0);
            }
            break;
        }
    }
    run.u = std::move(sol.u);
    run.report = std::move(sol.report);
    if (problem.has_exact()) run.max_error = max_error(run.u, problem.exact, *cloud);
    run.wall_time = elapsed(start);
    return run;
}

void ConvergenceTable::compute_rates() {
    for (std::size_t k = 0; k < rows.size(); ++k) {
        Row& r = rows[k];
        r.rate_h.reset();
        r.rate_N.reset();
        if (k == 0) continue;
        const Row& p = rows[k - 1];
        if (!r.max_error || !p.max_error || !(*r.max_error > 0.0) || !(*p.max_error > 0.0)) continue;
        const double de = std::log(*p.max_error / *r.max_error);
        if (p.h > 0.0 && r.h > 0.0 && p.h != r.h) r.rate_h = de / std::log(p.h / r.h);
        if (p.N > 0 && r.N > 0 && p.N != r.N) {
            r.rate_N = de / std::log(static_cast<double>(r.N) / static_cast<double>(p.N));
        }
    }
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

void write_table(const ConvergenceTable& table, std::ostream& out) {
    for (const auto& [key, value] : table.metadata) out << "# " << key << '=' << value << '\n';
    out << "h,N,max_error,rate_h,rate_N\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& r : table.rows) {
        out << format_number(r.h) << ',' << r.N << ',' << opt(r.max_error) << ',' << opt(r.rate_h) << ','
            << opt(r.rate_N) << '\n';
    }
}

ConvergenceTable parse_table(std::istream& in) {
    ConvergenceTable table;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body.front() == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                table.metadata.emplace_back(body, "");
            } else {
                table.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            }
            continue;
        }
        if (!header) {
            if (line != "h,N,max_error,rate_h,rate_N") throw Error("table header missing");
            header = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 5) throw Error("malformed table line " + std::to_string(line_no));
        ConvergenceTable::Row r;
        const auto h = parse_optional(fields[0]);
        if (!h) throw Error("malformed table line " + std::to_string(line_no));
        r.h = *h;
        try {
            std::size_t used = 0;
            r.N = static_cast<std::size_t>(std::stoull(fields[1], &used));
            if (used != fields[1].size()) throw Error("bad N");
        } catch (const std::exception&) {
            throw Error("malformed table line " + std::to_string(line_no));
        }
        r.max_error = parse_optional(fields[2]);
        r.rate_h = parse_optional(fields[3]);
        r.rate_N = parse_optional(fields[4]);
        table.rows.push_back(r);
    }
    if (!header) throw Error("table header missing");
    return table;
}

StudyResult convergence_study(const Problem& problem, const std::vector<double>& h_list, const RunConfig& cfg,
                              bool keep_solutions) {
    StudyResult out;
    out.table.metadata = {{"problem", problem.name},
                          {"scheme", to_string(cfg.scheme)},
                          {"dtheta_rule", effective_rule(problem, cfg).to_string()},
                          {"cloud", cfg.cloud.to_string()},
                          {"seed", std::to_string(cfg.cloud.seed)}};
    for (double h : h_list) {
        ConvergenceTable::Row row;
        row.h = h;
        try {
            RunResult run = solve_problem(problem, h, cfg);
            row.h = run.h_label;
            row.N = run.cloud->size();
            if (!run.report.converged) {
                out.failures.push_back("h=" + format_number(h) + ": solver did not converge (residual " +
                                       format_number(run.report.final_residual) + ")");
            }
            row.max_error = run.max_error;
            if (!keep_solutions) run.u.resize(0);
            out.runs.push_back(std::move(run));
        } catch (const Error& e) {
            out.failures.push_back("h=" + format_number(h) + ": " + e.what());
        }
        out.table.rows.push_back(row);
    }
    out.table.compute_rates();
    return out;
}

void write_solution(std::ostream& out, const PointCloud& cloud, const Eigen::VectorXd& u, const ScalarField& exact) {
    if (static_cast<std::size_t>(u.size()) != cloud.size()) throw Error("node vector size does not match the cloud");
    out << (exact ? "x,y,is_boundary,u,exact,abs_error\n" : "x,y,is_boundary,u\n");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point2 p = cloud.point(i);
        const double ui = u[static_cast<Eigen::Index>(i)];
        out << format_number(p.x) << ',' << format_number(p.y) << ',' << (cloud.is_boundary(i) ? 1 : 0) << ','
            << format_number(ui);
        if (exact) {
            const double e = exact(p);
            out << ',' << format_number(e) << ',' << format_number(std::abs(ui - e));
        }
        out << '\n';
    }
}

}  // namespace mfd
