#pragma once

/// \file
/// Config files, CSV output, and the sweep / comparison drivers.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "fv_solver.hpp"
#include "galerkin.hpp"

namespace bve {

/// Parse or range error in a config file. `line` is 1-based, 0 when the
/// error concerns a missing combination rather than one line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string key, const std::string& what)
        : std::runtime_error(format(line, key, what)), line_(line), key_(std::move(key)) {}
    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    static std::string format(int line, const std::string& key, const std::string& what) {
        std::string s = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
        if (!key.empty()) s += key + ": ";
        return s + what;
    }
    int line_;
    std::string key_;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || v.empty()) throw ConfigError(line, key, "not a number: '" + v + "'");
    return out;
}

inline int parse_int(const std::string& v, int line, const std::string& key) {
    int out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || v.empty()) throw ConfigError(line, key, "not an integer: '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(line, key, "not a boolean: '" + v + "'");
}

}  // namespace detail

/// Comma-separated list of reals, e.g. "1e-2,1e-3".
inline std::vector<double> parse_list(const std::string& text, const std::string& key = "list") {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::parse_double(detail::trim(item), 0, key));
    return out;
}

/// Parses `key = value` lines (`#` starts a comment) into a validated
/// SimConfig. Unknown keys, malformed values and range violations raise
/// ConfigError naming the line and key.
inline SimConfig parse_config(const std::string& text) {
    SimConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "", "expected 'key = value'");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "", "missing key");
        if (seen.count(key)) throw ConfigError(line_no, key, "duplicate key");
        seen[key] = line_no;

        auto num = [&] { return detail::parse_double(value, line_no, key); };
        if (key == "nx") cfg.nx = detail::parse_int(value, line_no, key);
        else if (key == "nz") cfg.nz = detail::parse_int(value, line_no, key);
        else if (key == "beta2") cfg.beta2 = num();
        else if (key == "viscosity_ratio") cfg.viscosity_ratio = num();
        else if (key == "end_time") cfg.end_time = num();
        else if (key == "cfl") cfg.cfl = num();
        else if (key == "dt_max") cfg.dt_max = num();
        else if (key == "solver_tol") cfg.solver_tol = num();
        else if (key == "clamp") cfg.clamp = detail::parse_bool(value, line_no, key);
        else if (key == "bc_mode") {
            if (value == "experiment") cfg.bc_mode = BoundaryMode::experiment;
            else if (value == "analysis") cfg.bc_mode = BoundaryMode::analysis;
            else if (value == "closed") cfg.bc_mode = BoundaryMode::closed;
            else throw ConfigError(line_no, key, "expected experiment, analysis or closed");
        } else if (key == "diffusion") {
            if (value == "nonlinear") cfg.diffusion = DiffusionModel::nonlinear;
            else if (value == "unit") cfg.diffusion = DiffusionModel::unit;
            else throw ConfigError(line_no, key, "expected nonlinear or unit");
        } else if (key == "snapshot_times") {
            try {
                cfg.snapshot_times = parse_list(value, key);
            } catch (const ConfigError& e) {
                throw ConfigError(line_no, key, e.what());
            }
        } else if (key == "initial") {
            if (value == "injection") cfg.initial.kind = InitialCondition::Kind::injection;
            else if (value == "constant") cfg.initial.kind = InitialCondition::Kind::constant;
            else if (value == "custom") cfg.initial.kind = InitialCondition::Kind::custom;
            else if (value == "bump") cfg.initial.kind = InitialCondition::Kind::bump;
            else throw ConfigError(line_no, key, "expected injection, constant, custom or bump");
        } else if (key == "plateau") cfg.initial.plateau = num();
        else if (key == "steepness") cfg.initial.steepness = num();
        else if (key == "initial_value") cfg.initial.value = num();
        else if (key == "amplitude") cfg.initial.amplitude = num();
        else throw ConfigError(line_no, key, "unknown key");
    }

    auto line_of = [&](const std::string& key) {
        const auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second;
    };
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        const std::string key = msg.substr(0, colon);
        throw ConfigError(line_of(key), key, detail::trim(std::string_view(msg).substr(colon + 1)));
    }
    const InitialCondition& ic = cfg.initial;
    if (!(ic.plateau >= 0.0 && ic.plateau <= 1.0)) throw ConfigError(line_of("plateau"), "plateau", "must be in [0, 1]");
    if (!(ic.steepness > 0.0)) throw ConfigError(line_of("steepness"), "steepness", "must be > 0");
    if (!(ic.value >= 0.0 && ic.value <= 1.0))
        throw ConfigError(line_of("initial_value"), "initial_value", "must be in [0, 1]");
    if (!(ic.amplitude >= 0.0 && ic.amplitude <= 1.0))
        throw ConfigError(line_of("amplitude"), "amplitude", "must be in [0, 1]");
    return cfg;
}

inline SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Shortest-exact scientific formatting (17 significant digits).
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// Snapshot CSV: header `x,z,S`, then one row per cell with z outer and x
/// inner.
inline void write_snapshot(const ScalarField& S, const std::filesystem::path& path) {
    std::ofstream out = detail::open_for_write(path);
    const Grid& g = S.grid();
    out << "x,z,S\n";
    for (int j = 0; j < g.nz(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            out << format_real(g.x(i)) << ',' << format_real(g.z(j)) << ',' << format_real(S(i, j)) << '\n';
    detail::finish(out, path);
}

struct SnapshotRow {
    double x, z, S;
};

inline std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (detail::trim(line) != "x,z,S") throw std::runtime_error(path.string() + ": bad snapshot header");
    std::vector<SnapshotRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v = parse_list(line, path.string());
        if (v.size() != 3) throw std::runtime_error(path.string() + ": bad snapshot row");
        rows.push_back({v[0], v[1], v[2]});
    }
    return rows;
}

inline constexpr const char* report_header =
    "step,time,dt,total_mass,energy,gradient_energy,increment,overshoot_max,front_position,front_width,"
    "incompressibility_residual,cg_iterations";

/// Report CSV: one row per step; a missing front width is an empty field.
inline void write_report(const DiagnosticsReport& r, const std::filesystem::path& path) {
    std::ofstream out = detail::open_for_write(path);
    out << report_header << '\n';
    for (std::size_t n = 0; n < r.steps(); ++n) {
        out << n + 1 << ',' << format_real(r.time[n]) << ',' << format_real(r.dt[n]) << ','
            << format_real(r.total_mass[n]) << ',' << format_real(r.energy[n]) << ','
            << format_real(r.gradient_energy[n]) << ',' << format_real(r.increment[n]) << ','
            << format_real(r.overshoot_max[n]) << ',' << format_real(r.front_position[n]) << ',';
        if (r.front_width[n]) out << format_real(*r.front_width[n]);
        out << ',' << format_real(r.incompressibility_residual[n]) << ',' << r.cg_iterations[n] << '\n';
    }
    detail::finish(out, path);
}

inline std::string snapshot_name(double t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "snapshot_t%.6f.csv", t);
    return buf;
}

/// Writes every snapshot and the report of a run into `dir`.
inline void write_run(const RunResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const Snapshot& s : r.snapshots) write_snapshot(s.S, dir / snapshot_name(s.t));
    write_report(r.report, dir / "report.csv");
}

inline CoefficientSet coefficients_for(const SimConfig& cfg) { return CoefficientSet(cfg.viscosity_ratio); }

/// Largest overshoot over the initial state and every step.
inline double trajectory_overshoot(const RunResult& r, double plateau) {
    double worst = r.snapshots.empty() ? -plateau : overshoot_max(r.snapshots.front().S, plateau);
    for (double v : r.report.overshoot_max) worst = std::max(worst, v);
    return worst;
}

inline std::string beta2_label(double beta2) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "beta2_%g", beta2);
    return buf;
}

struct SweepEntry {
    double beta2 = 0.0;
    RunResult result;
    std::optional<double> front_width;
    double front_position = 0.0;
    double overshoot = 0.0;
};

struct SweepReport {
    std::vector<SweepEntry> entries;
    /// Widths strictly decrease as beta^2 decreases, every run succeeded and
    /// every width exists.
    bool monotone = false;
};

/// Runs one simulation per beta^2 in parallel. A failing run is recorded
/// and does not stop the others.
inline SweepReport run_sweep(const SimConfig& base, const std::vector<double>& beta2_list,
                             const FrontLevels& levels = {}) {
    if (beta2_list.empty()) throw std::invalid_argument("run_sweep: empty beta2 list");
    std::vector<std::future<SweepEntry>> jobs;
    for (double b : beta2_list) {
        SimConfig cfg = base;
        cfg.beta2 = b;
        cfg.validate();
        jobs.push_back(std::async(std::launch::async, [cfg, levels] {
            SweepEntry e;
            e.beta2 = cfg.beta2;
            e.result = run(cfg, coefficients_for(cfg), cfg.initial, {}, levels);
            if (e.result.final_state) {
                const ScalarField& S = e.result.final_state->S;
                e.front_width = front_width(S, levels.width_lo, levels.width_hi, levels.z_line);
                e.front_position = front_position(S, levels.position_level, levels.z_line);
            }
            e.overshoot = trajectory_overshoot(e.result, cfg.initial.reference_plateau());
            return e;
        }));
    }
    SweepReport rep;
    for (auto& j : jobs) rep.entries.push_back(j.get());

    std::vector<const SweepEntry*> order;
    for (const SweepEntry& e : rep.entries) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->beta2 > b->beta2; });
    rep.monotone = true;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (!order[k]->result.ok || !order[k]->front_width) rep.monotone = false;
        else if (k > 0 && order[k - 1]->front_width && !(*order[k]->front_width < *order[k - 1]->front_width))
            rep.monotone = false;
        if (k > 0 && order[k]->beta2 == order[k - 1]->beta2) rep.monotone = false;
    }
    return rep;
}

inline void write_sweep(const SweepReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out = detail::open_for_write(dir / "sweep.csv");
    out << "beta2,ok,front_position,front_width,overshoot_max,error\n";
    for (const SweepEntry& e : rep.entries) {
        out << format_real(e.beta2) << ',' << (e.result.ok ? 1 : 0) << ',' << format_real(e.front_position) << ',';
        if (e.front_width) out << format_real(*e.front_width);
        out << ',' << format_real(e.overshoot) << ',' << e.result.error << '\n';
    }
    detail::finish(out, dir / "sweep.csv");
    for (const SweepEntry& e : rep.entries) write_run(e.result, dir / beta2_label(e.beta2));
}

struct CompareReport {
    double bve_beta2 = 1e-6;
    RunResult bve;
    RunResult dve;
    double bve_overshoot = 0.0;
    double dve_overshoot = 0.0;
    double bve_front = 0.0;
    double dve_front = 0.0;
    bool bve_overshoots = false;
    bool dve_monotone = false;
    bool bve_slower = false;
    /// Both trajectories are identically zero; every verdict is then
    /// reported as failed.
    bool degenerate = false;

    bool pass() const { return !degenerate && bve.ok && dve.ok && bve_overshoots && dve_monotone && bve_slower; }
};

/// Runs the pseudo-parabolic model at `bve_beta2` and the transport limit
/// (beta^2 = 0) on identical grids and data. Overshoot is the maximum over
/// the whole trajectory; front positions are taken at the final time.
inline CompareReport run_compare(const SimConfig& base, double bve_beta2 = 1e-6, const FrontLevels& levels = {}) {
    CompareReport rep;
    rep.bve_beta2 = bve_beta2;
    SimConfig bcfg = base, dcfg = base;
    bcfg.beta2 = bve_beta2;
    dcfg.beta2 = 0.0;
    bcfg.validate();
    dcfg.validate();
    auto launch = [&levels](SimConfig cfg) {
        return std::async(std::launch::async,
                          [cfg, levels] { return run(cfg, coefficients_for(cfg), cfg.initial, {}, levels); });
    };
    auto fb = launch(bcfg);
    auto fd = launch(dcfg);
    rep.bve = fb.get();
    rep.dve = fd.get();

    const double plateau = base.initial.reference_plateau();
    rep.bve_overshoot = trajectory_overshoot(rep.bve, plateau);
    rep.dve_overshoot = trajectory_overshoot(rep.dve, plateau);
    auto front = [&](const RunResult& r) {
        return r.final_state ? front_position(r.final_state->S, levels.position_level, levels.z_line) : 0.0;
    };
    rep.bve_front = front(rep.bve);
    rep.dve_front = front(rep.dve);

    auto all_zero = [](const RunResult& r) {
        for (const Snapshot& s : r.snapshots)
            for (double v : s.S.values())
                if (v != 0.0) return false;
        return !r.final_state || std::all_of(r.final_state->S.values().begin(), r.final_state->S.values().end(),
                                             [](double v) { return v == 0.0; });
    };
    rep.degenerate = all_zero(rep.bve) && all_zero(rep.dve);
    if (!rep.degenerate) {
        rep.bve_overshoots = rep.bve_overshoot >= 0.01;
        rep.dve_monotone = rep.dve_overshoot <= 1e-10;
        rep.bve_slower = rep.bve_front <= rep.dve_front;
    }
    return rep;
}

inline void write_compare(const CompareReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out = detail::open_for_write(dir / "compare.csv");
    out << "model,beta2,ok,overshoot_max,front_position,error\n";
    out << "bve," << format_real(rep.bve_beta2) << ',' << (rep.bve.ok ? 1 : 0) << ',' << format_real(rep.bve_overshoot)
        << ',' << format_real(rep.bve_front) << ',' << rep.bve.error << '\n';
    out << "dve," << format_real(0.0) << ',' << (rep.dve.ok ? 1 : 0) << ',' << format_real(rep.dve_overshoot) << ','
        << format_real(rep.dve_front) << ',' << rep.dve.error << '\n';
    detail::finish(out, dir / "compare.csv");
    write_run(rep.bve, dir / "bve");
    write_run(rep.dve, dir / "dve");
}

struct CrossCheck {
    double relative_l2 = 0.0;
    bool fv_ok = true;
    std::string error;
};

/// Galerkin solution versus the finite-volume solution of the analysis
/// problem (homogeneous Dirichlet, unit diffusion) at time T, compared on
/// the finite-volume cell centres in relative discrete L2.
inline CrossCheck galerkin_fv_crosscheck(const InitialCondition& ic, double beta2, double T, int nx, int nz,
                                         const SineBasis& basis, int slabs, const CoefficientSet& coeffs) {
    SimConfig cfg;
    cfg.nx = nx;
    cfg.nz = nz;
    cfg.beta2 = beta2;
    cfg.end_time = T;
    cfg.bc_mode = BoundaryMode::analysis;
    cfg.diffusion = DiffusionModel::unit;
    cfg.dt_max = T / slabs;
    cfg.snapshot_times = {T};
    cfg.viscosity_ratio = coeffs.viscosity_ratio();
    cfg.initial = ic;
    const RunResult fv = run(cfg, coeffs, ic);
    CrossCheck out;
    out.fv_ok = fv.ok;
    out.error = fv.error;
    if (!fv.ok || !fv.final_state) return out;

    const CoefVector c0 = project_initial([&](double x, double z) { return ic.eval(x, z); }, basis);
    const GalerkinTrajectory traj = run_galerkin(c0, T / slabs, slabs, beta2, coeffs, basis);
    const ScalarField gal = reconstruct(traj.coefficients.back(), basis, Grid(nx, nz));
    const ScalarField diff = gal - fv.final_state->S;
    out.relative_l2 = std::sqrt(norm_l2_squared(diff) / norm_l2_squared(fv.final_state->S));
    return out;
}

}  // namespace bve
