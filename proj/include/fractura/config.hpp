#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fractura/adapt.hpp"
#include "fractura/io.hpp"
#include "fractura/scenario.hpp"

namespace fractura {

/// Full run configuration. Every key has a default; an empty config runs the
/// desk-scale branching preset. Values of 0 mean "derive from the scenario"
/// where noted.
struct RunConfig {
    std::string scenario = "branching-desk"; // branching-desk|branching-paper|cubic|elastic
    std::string mesh_file;                   // overrides the built-in initial mesh
    std::string notch_mode = "slit";         // slit|phiband
    std::string out_dir = "out";
    int cadence = 10; // VTK snapshot every N accepted steps; 0 disables

    double rho_inf = 0.5;
    double tol_max = 0.0; // 0 -> scenario recommendation
    double tol_min = 0.0; // 0 -> tol_max / 100
    double tol_stg = 1e-5;
    double tol_mesh = 1e-3; // relative to |phi|_Q
    double chi = 0.2;
    double rho_abs = 1e-4, rho_rel = 1e-4, rho_tol = 0.9;
    double h_min = 0.0; // 0 -> ell / 5
    double dt0 = 0.0;   // 0 -> scenario default
    double t_final = 0.0;
    double dt_max = 0.0;

    bool baseline_iteration_count = false;
    bool spatial_adaptivity = true;
    bool temporal_adaptivity = true;
    unsigned seed = 20220913; // randomized test utilities only; solver is deterministic

    // material overrides; NaN means "keep the scenario value"
    double E = nan(""), nu = nan(""), rho0 = nan(""), Gc = nan(""), ell = nan(""), eta = nan("");
    double S = nan(""), traction = nan(""), k_res = nan("");
    std::string degradation; // quadratic|cubic|empty
    std::string stress_split; // full|tension_only|empty

    void validate() const {
        if (scenario != "branching-desk" && scenario != "branching-paper" &&
            scenario != "cubic" && scenario != "elastic")
            throw InvalidParameter("config: unknown scenario '" + scenario + "'");
        if (notch_mode != "slit" && notch_mode != "phiband")
            throw InvalidParameter("config: notch_mode must be slit or phiband");
        if (cadence < 0) throw InvalidParameter("config: cadence must be >= 0");
        if (!(tol_stg > 0.0) || !(tol_mesh > 0.0))
            throw InvalidParameter("config: tolerances must be positive");
        if (!(chi >= 0.0 && chi <= 1.0)) throw InvalidParameter("config: chi must be in [0,1]");
        if (!(rho_inf >= 0.0 && rho_inf <= 1.0))
            throw InvalidParameter("config: rho_inf must be in [0,1]");
        if (!degradation.empty() && degradation != "quadratic" && degradation != "cubic")
            throw InvalidParameter("config: degradation must be quadratic or cubic");
        if (!stress_split.empty() && stress_split != "full" && stress_split != "tension_only")
            throw InvalidParameter("config: stress_split must be full or tension_only");
    }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InvalidParameter("config: expected a boolean, got '" + v + "'");
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

/// Apply one key = value assignment (the config file grammar and the CLI
/// overrides share this path).
inline void config_set(RunConfig& c, const std::string& key, const std::string& value) {
    const auto d = [&] { return std::stod(value); };
    if (key == "scenario") c.scenario = value;
    else if (key == "mesh_file") c.mesh_file = value;
    else if (key == "notch_mode") c.notch_mode = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "cadence") c.cadence = std::stoi(value);
    else if (key == "rho_inf") c.rho_inf = d();
    else if (key == "tol_max") c.tol_max = d();
    else if (key == "tol_min") c.tol_min = d();
    else if (key == "tol_stg") c.tol_stg = d();
    else if (key == "tol_mesh") c.tol_mesh = d();
    else if (key == "chi") c.chi = d();
    else if (key == "rho_abs") c.rho_abs = d();
    else if (key == "rho_rel") c.rho_rel = d();
    else if (key == "rho_tol") c.rho_tol = d();
    else if (key == "h_min") c.h_min = d();
    else if (key == "dt0") c.dt0 = d();
    else if (key == "t_final") c.t_final = d();
    else if (key == "dt_max") c.dt_max = d();
    else if (key == "baseline_iteration_count") c.baseline_iteration_count = detail::parse_bool(value);
    else if (key == "spatial_adaptivity") c.spatial_adaptivity = detail::parse_bool(value);
    else if (key == "temporal_adaptivity") c.temporal_adaptivity = detail::parse_bool(value);
    else if (key == "seed") c.seed = static_cast<unsigned>(std::stoul(value));
    else if (key == "E") c.E = d();
    else if (key == "nu") c.nu = d();
    else if (key == "rho0") c.rho0 = d();
    else if (key == "Gc") c.Gc = d();
    else if (key == "ell") c.ell = d();
    else if (key == "eta") c.eta = d();
    else if (key == "S") c.S = d();
    else if (key == "traction") c.traction = d();
    else if (key == "k_res") c.k_res = d();
    else if (key == "degradation") c.degradation = value;
    else if (key == "stress_split") c.stress_split = value;
    else throw InvalidParameter("config: unknown key '" + key + "'");
}

/// Parse the plain-text configuration: one `key = value` per line, '#'
/// starts a comment.
inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidParameter("config line " + std::to_string(lineno) + ": expected key = value");
        config_set(c, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return c;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FileNotFound("config file not found: " + path);
    return parse_config(f);
}

/// Materialize the scenario with config overrides applied.
inline Scenario scenario_from_config(const RunConfig& c) {
    Scenario s;
    if (c.scenario == "branching-desk") s = branching_preset(ScenarioScale::Desk);
    else if (c.scenario == "branching-paper") s = branching_preset(ScenarioScale::Paper);
    else if (c.scenario == "cubic") s = cubic_preset(c.mesh_file);
    else if (c.scenario == "elastic") s = elastic_preset();
    else throw InvalidParameter("config: unknown scenario '" + c.scenario + "'");

    if (!c.mesh_file.empty()) s.mesh_file = c.mesh_file;
    s.notch = (c.notch_mode == "phiband") ? NotchMode::PhiBand : NotchMode::Slit;

    MaterialParams& m = s.material;
    double E = std::isnan(c.E) ? m.youngs() : c.E;
    double nu = std::isnan(c.nu) ? m.poisson() : c.nu;
    if (!std::isnan(c.E) || !std::isnan(c.nu)) {
        const MaterialParams base = m;
        m = MaterialParams::from_youngs(E, nu, base.rho0, base.Gc, base.ell, base.eta);
        m.degradation = base.degradation;
        m.S = base.S;
        m.k_res = base.k_res;
        m.stress_split = base.stress_split;
    }
    if (!std::isnan(c.rho0)) m.rho0 = c.rho0;
    if (!std::isnan(c.Gc)) m.Gc = c.Gc;
    if (!std::isnan(c.ell)) m.ell = c.ell;
    if (!std::isnan(c.eta)) m.eta = c.eta;
    if (!std::isnan(c.S)) m.S = c.S;
    if (!std::isnan(c.k_res)) m.k_res = c.k_res;
    if (!std::isnan(c.traction)) s.traction = c.traction;
    if (!c.degradation.empty())
        m.degradation = (c.degradation == "cubic") ? Degradation::Cubic : Degradation::Quadratic;
    if (!c.stress_split.empty())
        m.stress_split =
            (c.stress_split == "tension_only") ? StressSplit::TensionOnly : StressSplit::Full;
    m.validate();

    if (c.t_final > 0.0) s.t_final = c.t_final;
    if (c.dt0 > 0.0) s.dt0 = c.dt0;
    if (c.tol_max > 0.0) s.tol_max = c.tol_max;
    s.validate();
    return s;
}

inline DriverConfig driver_config_from(const RunConfig& c, const Scenario& s) {
    DriverConfig d;
    d.t_final = s.t_final;
    d.dt0 = s.dt0;
    d.tol_max = (c.tol_max > 0.0) ? c.tol_max : s.tol_max;
    d.tol_min = (c.tol_min > 0.0) ? c.tol_min : d.tol_max / 100.0;
    d.tol_stg = c.tol_stg;
    d.tol_mesh_rel = c.tol_mesh;
    d.chi = c.chi;
    d.rho_inf = c.rho_inf;
    d.rho_abs = c.rho_abs;
    d.rho_rel = c.rho_rel;
    d.rho_tol = c.rho_tol;
    d.h_min = (c.h_min > 0.0) ? c.h_min : s.material.ell / 5.0;
    d.dt_max = c.dt_max;
    d.baseline_iteration_count = c.baseline_iteration_count;
    d.spatial_adaptivity = c.spatial_adaptivity;
    d.temporal_adaptivity = c.temporal_adaptivity;
    d.validate();
    return d;
}

/// Execute a configured run: drive the adaptive loop, write VTK snapshots at
/// the configured cadence, the run-log CSV, and a JSON summary. Returns the
/// process exit status (nonzero on abort, with the last accepted snapshot
/// flushed).
inline int run(const RunConfig& config, std::ostream& log = std::cout) {
    config.validate();
    configure_threads();
    const Scenario s = scenario_from_config(config);
    const DriverConfig dcfg = driver_config_from(config, s);

    std::filesystem::create_directories(config.out_dir);

    auto mesh = std::make_shared<const TriMesh>(make_scenario_mesh(s));
    FieldState state = initial_state(s, mesh);
    ProblemSetup prob = problem_setup(s);
    initialize_acceleration(prob, state);

    const Vec2 notch_tip{s.notch_len, 0.5 * s.height};
    DriverHooks hooks;
    hooks.tip_locator = [notch_tip](const TriMesh& m, const std::vector<double>& phi) {
        return crack_tip(m, phi, notch_tip);
    };
    long snapshot_index = 0;
    if (config.cadence > 0) {
        hooks.on_accept = [&](const FieldState& st, const StepRecord& rec) {
            if (rec.step % config.cadence != 0) return;
            std::ostringstream name;
            name << config.out_dir << "/snapshot_" << std::setw(6) << std::setfill('0')
                 << snapshot_index++ << ".vtk";
            write_vtk_file(name.str(), *st.mesh, st.u, st.phi, st.H,
                           "t=" + std::to_string(st.t));
        };
    }

    const auto t0 = std::chrono::steady_clock::now();
    RunResult res = adaptive_driver(prob, std::move(state), dcfg, hooks);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_runlog_file(config.out_dir + "/runlog.csv", res.records);
    write_vtk_file(config.out_dir + "/final.vtk", *res.final_state.mesh, res.final_state.u,
                   res.final_state.phi, res.final_state.H, "final state");

    nlohmann::json summary;
    summary["scenario"] = s.name;
    summary["accepted_steps"] = res.n_accepted;
    summary["rejections"] = res.n_rejections;
    summary["refinements"] = res.n_refinements;
    summary["final_elements"] = res.final_state.mesh->n_triangles();
    summary["final_time"] = res.final_state.t;
    summary["final_dissipation"] =
        res.records.empty() ? 0.0 : res.records.back().dissipation;
    summary["phi_min"] = res.phi_min;
    summary["phi_max"] = res.phi_max;
    summary["wall_seconds"] = wall;
    summary["aborted"] = res.aborted;
    if (res.aborted) summary["abort_reason"] = res.abort_reason;
    {
        std::ofstream f(config.out_dir + "/summary.json");
        f << summary.dump(2) << "\n";
    }

    log << "[fractura] " << s.name << ": " << res.n_accepted << " steps, " << res.n_rejections
        << " rejections, " << res.n_refinements << " refinements, "
        << res.final_state.mesh->n_triangles() << " elements, wall " << wall << " s\n";
    if (res.aborted) {
        log << "[fractura] run aborted: " << res.abort_reason << "\n";
        return 1;
    }
    return 0;
}

} // namespace fractura
