#include "mfd/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mfd/error.hpp"
#include "mfd/study.hpp"

namespace mfd {

namespace {

double parse_number(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw Error("invalid number '" + text + "'");
    }
    if (used != text.size()) throw Error("invalid number '" + text + "'");
    return v;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream file(path);
    if (!file) throw Error("cannot write " + path);
    return file;
}

void print_run(std::ostream& out, const Problem& problem, const RunResult& run) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s: h=%.6g N=%zu (removed %zu) dtheta=%.6g r=%.6g iterations=%zu residual=%.3e converged=%s "
                  "time=%.2fs",
                  problem.name.c_str(), run.h_label, run.cloud->size(), run.removed_nodes, run.scheme.dtheta,
                  run.scheme.radius, run.report.iterations, run.report.final_residual,
                  run.report.converged ? "yes" : "no", run.wall_time);
    out << buf;
    if (run.max_error) out << " max_error=" << format_number(*run.max_error);
    out << '\n';
}

}  // namespace

std::vector<double> parse_h_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto trim_begin = item.find_first_not_of(" \t");
        if (trim_begin == std::string::npos) throw Error("empty entry in h list '" + text + "'");
        item = item.substr(trim_begin, item.find_last_not_of(" \t") - trim_begin + 1);
        double h = 0.0;
        const auto slash = item.find('/');
        if (slash == std::string::npos) {
            h = parse_number(item);
        } else {
            const double num = parse_number(item.substr(0, slash));
            const double den = parse_number(item.substr(slash + 1));
            if (den == 0.0) throw Error("zero denominator in h list '" + text + "'");
            h = num / den;
        }
        if (!(h > 0.0) || !std::isfinite(h)) throw Error("h values must be positive, got '" + item + "'");
        out.push_back(h);
    }
    if (out.empty()) throw Error("empty h list");
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Meshfree monotone finite differences for degenerate elliptic equations in 2D", "mfd"};
    std::string mode;
    std::string problem_name;
    std::string scheme = "monotone";
    std::string h_text;
    std::string rule_text;
    std::string cloud_text = "uniform";
    std::uint64_t seed = 0;
    std::string out_path;
    double epsilon_scale = 2.0;
    std::size_t neighbors = 12;
    bool list = false;

    app.set_help_flag("--help", "print this help");
    app.add_option("mode", mode, "solve or study")->check(CLI::IsMember({"solve", "study"}));
    app.add_option("--problem", problem_name, "problem name");
    app.add_option("--scheme", scheme, "monotone or filtered")->check(CLI::IsMember({"monotone", "filtered"}));
    app.add_option("--h", h_text, "lattice spacings, e.g. 2/64,2/128");
    app.add_option("--dtheta-rule", rule_text, "sqrt, cbrt or fixed:VALUE");
    app.add_option("--cloud", cloud_text, "uniform, random or file:PATH");
    app.add_option("--seed", seed, "random cloud seed");
    app.add_option("--out", out_path, "output CSV path");
    app.add_option("--epsilon-scale", epsilon_scale, "filter width constant K in eps = K sqrt(h)");
    app.add_option("--neighbors", neighbors, "neighbours in the quadratic Hessian fit");
    app.add_flag("--list", list, "list the available problems");
    app.set_config("--config", "", "flat key=value file with the same keys as the flags");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return 2;
    }

    try {
        if (list) {
            for (const Problem& p : registry()) out << p.name << ": " << p.description << '\n';
            return 0;
        }
        if (mode.empty()) {
            err << "error: expected a mode (solve or study)\n";
            return 2;
        }
        if (problem_name.empty()) {
            err << "error: --problem is required (available: " << problem_names() << ")\n";
            return 2;
        }
        const Problem* problem = nullptr;
        for (const Problem& p : registry()) {
            if (p.name == problem_name) problem = &p;
        }
        if (!problem) {
            err << "error: unknown problem '" << problem_name << "'\navailable problems:\n";
            for (const Problem& p : registry()) err << "  " << p.name << '\n';
            return 2;
        }

        RunConfig cfg;
        cfg.scheme = parse_scheme(scheme);
        if (!rule_text.empty()) cfg.rule = DThetaRule::parse(rule_text);
        cfg.cloud = CloudSpec::parse(cloud_text, seed);
        cfg.filter.epsilon_scale = epsilon_scale;
        cfg.filter.accurate_neighbors = neighbors;
        if (cfg.scheme == Scheme::filtered && problem->kind != ProblemKind::monge_ampere) {
            err << "error: the filtered scheme applies to Monge-Ampere problems only\n";
            return 2;
        }

        std::vector<double> hs;
        if (!h_text.empty()) {
            hs = parse_h_list(h_text);
        } else if (cfg.cloud.kind == CloudSpec::Kind::file) {
            hs = {0.0};
        } else {
            err << "error: --h is required\n";
            return 2;
        }

        if (mode == "solve") {
            if (hs.size() != 1) {
                err << "error: solve takes exactly one h\n";
                return 2;
            }
            RunResult run;
            try {
                run = solve_problem(*problem, hs.front(), cfg);
            } catch (const Error& e) {
                err << "error: " << e.what() << '\n';
                return 1;
            }
            print_run(out, *problem, run);
            if (!out_path.empty()) {
                std::ofstream file = open_output(out_path);
                write_solution(file, *run.cloud, run.u, problem->exact);
            }
            return run.report.converged ? 0 : 1;
        }

        const StudyResult study = convergence_study(*problem, hs, cfg);
        for (const RunResult& run : study.runs) print_run(err, *problem, run);
        for (const std::string& msg : study.failures) err << "failed: " << msg << '\n';
        if (out_path.empty()) {
            write_table(study.table, out);
        } else {
            std::ofstream file = open_output(out_path);
            write_table(study.table, file);
        }
        return study.failures.empty() ? 0 : 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace mfd
