// Command-line driver: run | sweep | compare | verify-galerkin | check-invariants.
//
// Exit codes: 0 success, 1 verdict failure, 2 configuration or usage error,
// 3 runtime or solver failure.

#include <CLI11.hpp>

#include <bve/bve.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verdict = 1;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

bve::SimConfig config_from(const std::string& path) {
    return path.empty() ? bve::parse_config("") : bve::load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

int do_run(const std::string& config, const std::string& out) {
    const bve::SimConfig cfg = config_from(config);
    const bve::RunResult r = bve::run(cfg, bve::coefficients_for(cfg));
    bve::write_run(r, out);
    if (!r.ok) {
        std::cerr << "run failed: " << r.error << '\n';
        return exit_runtime;
    }
    std::cout << "run: " << r.report.steps() << " steps, " << r.snapshots.size() << " snapshots written to " << out
              << '\n';
    return exit_ok;
}

int do_sweep(const std::string& config, const std::string& out, const std::string& list) {
    const bve::SimConfig cfg = config_from(config);
    std::vector<double> betas;
    try {
        betas = bve::parse_list(list, "--beta2");
    } catch (const bve::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return exit_config;
    }
    if (betas.empty()) {
        std::cerr << "--beta2: empty list\n";
        return exit_config;
    }
    const bve::SweepReport rep = bve::run_sweep(cfg, betas);
    bve::write_sweep(rep, out);
    bool failed = false;
    for (const bve::SweepEntry& e : rep.entries) {
        std::cout << "beta2=" << e.beta2 << " width=";
        if (e.front_width) std::cout << *e.front_width;
        else std::cout << "n/a";
        std::cout << " front=" << e.front_position << (e.result.ok ? "" : " error: " + e.result.error) << '\n';
        failed = failed || !e.result.ok;
    }
    std::cout << verdict(rep.monotone) << " sweep: front width strictly decreasing with beta2\n";
    if (failed) return exit_runtime;
    return rep.monotone ? exit_ok : exit_verdict;
}

int do_compare(const std::string& config, const std::string& out, const std::string& list) {
    const bve::SimConfig cfg = config_from(config);
    double b2 = 1e-6;
    if (!list.empty()) {
        const std::vector<double> v = bve::parse_list(list, "--beta2");
        if (v.size() != 1) {
            std::cerr << "--beta2: compare takes a single value\n";
            return exit_config;
        }
        b2 = v.front();
    }
    const bve::CompareReport rep = bve::run_compare(cfg, b2);
    bve::write_compare(rep, out);
    if (!rep.bve.ok || !rep.dve.ok) {
        std::cerr << "compare failed: " << rep.bve.error << ' ' << rep.dve.error << '\n';
        return exit_runtime;
    }
    if (rep.degenerate) std::cout << "degenerate: both trajectories are identically zero\n";
    std::cout << verdict(rep.bve_overshoots) << " overshoot (beta2=" << b2 << ") " << rep.bve_overshoot << " >= 0.01\n";
    std::cout << verdict(rep.dve_monotone) << " transport overshoot " << rep.dve_overshoot << " <= 1e-10\n";
    std::cout << verdict(rep.bve_slower) << " front " << rep.bve_front << " <= " << rep.dve_front << '\n';
    return rep.pass() ? exit_ok : exit_verdict;
}

int report_suite(const std::vector<bve::PropertyResult>& results, const std::string& text, const std::string& out,
                 const std::string& file) {
    std::cout << text;
    if (!out.empty()) write_text(fs::path(out) / file, text);
    for (const auto& r : results)
        if (!r.pass) return exit_verdict;
    return exit_ok;
}

int do_verify_galerkin(const std::string& out) {
    std::string details;
    const auto results = bve::run_galerkin_verification(&details);
    return report_suite(results, bve::to_text(results, 0) + details, out, "galerkin_report.txt");
}

int do_check_invariants(const std::string& out, std::uint64_t seed) {
    const auto results = bve::run_property_suite(seed);
    return report_suite(results, bve::to_text(results, seed), out, "invariants.txt");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-parabolic vertical-equilibrium two-phase flow simulator"};
    app.require_subcommand(1, 1);

    std::string config, run_out, sweep_out, compare_out, galerkin_out, invariants_out;
    std::string sweep_list, compare_list;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "single simulation");
    run->add_option("--config", config, "config file")->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "output directory")->default_val("out");

    auto* sweep = app.add_subcommand("sweep", "beta2 sweep with front-width verdict");
    sweep->add_option("--config", config, "config file")->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out, "output directory")->default_val("out/sweep");
    sweep->add_option("--beta2", sweep_list, "comma-separated beta2 values")->default_val("1e-2,1e-3,1e-4,1e-5");

    auto* compare = app.add_subcommand("compare", "pseudo-parabolic versus transport limit");
    compare->add_option("--config", config, "config file")->check(CLI::ExistingFile);
    compare->add_option("--out", compare_out, "output directory")->default_val("out/compare");
    compare->add_option("--beta2", compare_list, "beta2 of the pseudo-parabolic run (default 1e-6)");

    auto* galerkin = app.add_subcommand("verify-galerkin", "Galerkin slab solver and energy checks");
    galerkin->add_option("--out", galerkin_out, "directory for the text report");

    auto* invariants = app.add_subcommand("check-invariants", "seeded randomized property suite");
    invariants->add_option("--out", invariants_out, "directory for the text report");
    invariants->add_option("--seed", seed, "random seed")->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*run) return do_run(config, run_out);
        if (*sweep) return do_sweep(config, sweep_out, sweep_list);
        if (*compare) return do_compare(config, compare_out, compare_list);
        if (*galerkin) return do_verify_galerkin(galerkin_out);
        if (*invariants) return do_check_invariants(invariants_out, seed);
    } catch (const bve::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_config;
}
