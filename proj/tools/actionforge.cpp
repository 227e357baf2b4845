#include "actionforge/cases.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace actionforge;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_check_failure = 1;
constexpr int exit_usage = 2;

/// Config problems and unknown cases both map to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Case load_case(const std::string& name) {
    try {
        return find_case(name);
    } catch (const std::out_of_range& e) {
        throw UsageError(e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_check_line(const std::string& case_name, const CheckReport& r) {
    std::printf("%-18s %-44s %-20s metric %-12.4e tol %-9.2e %s\n", case_name.c_str(), r.name.c_str(),
                to_string(r.kind).c_str(), r.metric, r.tolerance, r.pass ? "PASS" : "FAIL");
}

int count_passed(const CaseResult& r) {
    int n = 0;
    for (const auto& rep : r.reports) n += rep.pass ? 1 : 0;
    return n;
}

int cmd_list() {
    for (const auto& c : builtin_cases()) std::printf("%-18s %s\n", c.name.c_str(), c.op.c_str());
    return exit_pass;
}

int cmd_describe(const std::string& name) {
    Case c = load_case(name);
    std::cout << c.description << "\n" << case_to_json(c) << "\n";
    return exit_pass;
}

struct RunOverrides {
    std::string config;
    std::optional<int> grid;
    std::optional<double> t_max;
    std::optional<int> samples;
    std::optional<int> quad_nodes;
};

int cmd_run(const std::string& name, const RunOverrides& o, const std::string& out_dir) {
    Case c = load_case(name);
    try {
        if (!o.config.empty()) c = merge_config(c, read_file(o.config));
        if (o.grid) c.grid = Grid(c.grid.dim, *o.grid, c.grid.length);
        if (o.t_max) c.t_max = *o.t_max;
        if (o.samples) c.samples = *o.samples;
        if (o.quad_nodes) c.quad_nodes = *o.quad_nodes;
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    CaseResult r = run_checks(c);
    write_case_outputs(r, out_dir);
    for (const auto& rep : r.reports) print_check_line(r.name, rep);
    for (const auto& [key, value] : r.notes) std::printf("note %s=%s\n", key.c_str(), value.c_str());
    std::printf("wrote %s/%s (%.2f s)\n", out_dir.c_str(), r.name.c_str(), r.wall_seconds);
    return exit_pass;
}

int cmd_verify(const std::string& name) {
    CaseResult r = run_checks(load_case(name));
    for (const auto& rep : r.reports) print_check_line(r.name, rep);
    std::printf("%s: %d/%zu checks passed (%.2f s)\n", r.name.c_str(), count_passed(r), r.reports.size(),
                r.wall_seconds);
    return r.pass() ? exit_pass : exit_check_failure;
}

int cmd_verify_all(int jobs) {
    const auto cases = builtin_cases();
    std::vector<std::optional<CaseResult>> results(cases.size());
    std::vector<std::string> errors(cases.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cases.size(); i = next++) {
            try {
                results[i] = run_checks(cases[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::jthread> pool;
    for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    pool.clear();
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    int passed = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (results[i]) {
            for (const auto& rep : results[i]->reports) print_check_line(cases[i].name, rep);
        }
    }
    std::printf("\n%-18s %-8s %-10s %s\n", "case", "checks", "wall [s]", "status");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (!results[i]) {
            std::printf("%-18s %-8s %-10s ERROR %s\n", cases[i].name.c_str(), "-", "-", errors[i].c_str());
            continue;
        }
        const CaseResult& r = *results[i];
        std::string checks = std::to_string(count_passed(r)) + "/" + std::to_string(r.reports.size());
        std::printf("%-18s %-8s %-10.2f %s\n", r.name.c_str(), checks.c_str(), r.wall_seconds,
                    r.pass() ? "PASS" : "FAIL");
        passed += r.pass() ? 1 : 0;
    }
    std::printf("%d/%zu cases passed in %.2f s\n", passed, cases.size(), total);
    return passed == static_cast<int>(cases.size()) ? exit_pass : exit_check_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact causal solutions and action diagnostics for linear PDE cases"};
    app.require_subcommand(1);

    app.add_subcommand("list", "List the builtin cases");

    std::string case_name;
    auto* describe = app.add_subcommand("describe", "Print a case and its config");
    describe->add_option("case", case_name, "Case name")->required();

    RunOverrides overrides;
    std::string out_dir = "actionforge_out";
    auto* run = app.add_subcommand("run", "Solve a case and write traces, the final field and a JSON report");
    run->add_option("case", case_name, "Case name")->required();
    run->add_option("--config", overrides.config, "JSON file merged into the case");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--grid", overrides.grid, "Grid points per axis")->check(CLI::PositiveNumber);
    run->add_option("--tmax", overrides.t_max, "Horizon")->check(CLI::PositiveNumber);
    run->add_option("--samples", overrides.samples, "Number of sample times")->check(CLI::PositiveNumber);
    run->add_option("--quad-nodes", overrides.quad_nodes, "Gauss-Legendre nodes for memory terms")
        ->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Run the declared checks of one case");
    verify->add_option("case", case_name, "Case name")->required();

    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* verify_all = app.add_subcommand("verify-all", "Verify every builtin case");
    verify_all->add_option("--jobs,-j", jobs, "Cases run in parallel")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_pass : exit_usage;
    }

    try {
        if (app.got_subcommand("list")) return cmd_list();
        if (describe->parsed()) return cmd_describe(case_name);
        if (run->parsed()) return cmd_run(case_name, overrides, out_dir);
        if (verify->parsed()) return cmd_verify(case_name);
        if (verify_all->parsed()) return cmd_verify_all(jobs);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check_failure;
    }
    return exit_usage;
}
