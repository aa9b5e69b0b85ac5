// Command-line driver: run simulations, validate configurations, and run the
// built-in verification studies.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

#include "fractura/fractura.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> sets;
};

void add_config_flags(CLI::App* cmd, CliOverrides& ov) {
    cmd->add_option("-c,--config", ov.config_path, "configuration file (key = value lines)");
    auto remember = [&ov](const std::string& key) {
        return [&ov, key](const std::string& v) { ov.sets.emplace_back(key, v); };
    };
    cmd->add_option_function<std::string>("--scenario", remember("scenario"),
                                          "branching-desk|branching-paper|cubic|elastic");
    cmd->add_option_function<std::string>("--mesh-file", remember("mesh_file"),
                                          "initial mesh file");
    cmd->add_option_function<std::string>("--notch-mode", remember("notch_mode"),
                                          "slit|phiband");
    cmd->add_option_function<std::string>("--out", remember("out_dir"), "output directory");
    cmd->add_option_function<std::string>("--cadence", remember("cadence"),
                                          "snapshot cadence (accepted steps)");
    cmd->add_option_function<std::string>("--rho-inf", remember("rho_inf"), "spectral radius");
    cmd->add_option_function<std::string>("--tol-max", remember("tol_max"), "temporal tolerance");
    cmd->add_option_function<std::string>("--tol-min", remember("tol_min"), "growth tolerance");
    cmd->add_option_function<std::string>("--tol-stg", remember("tol_stg"), "staggered tolerance");
    cmd->add_option_function<std::string>("--tol-mesh", remember("tol_mesh"),
                                          "relative mesh tolerance");
    cmd->add_option_function<std::string>("--chi", remember("chi"), "marking fraction");
    cmd->add_option_function<std::string>("--h-min", remember("h_min"), "refinement size floor");
    cmd->add_option_function<std::string>("--dt0", remember("dt0"), "initial time step");
    cmd->add_option_function<std::string>("--t-final", remember("t_final"), "end time");
    cmd->add_option_function<std::string>("--traction", remember("traction"), "load, Pa");
    cmd->add_option_function<std::string>("--ell", remember("ell"), "localization length");
    cmd->add_option_function<std::string>("--eta", remember("eta"), "phase-field viscosity");
    cmd->add_option_function<std::string>("--degradation", remember("degradation"),
                                          "quadratic|cubic");
    cmd->add_option_function<std::string>("--stress-split", remember("stress_split"),
                                          "full|tension_only");
    cmd->add_flag_function("--baseline-iteration-count",
                           [&ov](std::int64_t) {
                               ov.sets.emplace_back("baseline_iteration_count", "1");
                           },
                           "use the iteration-count time controller (comparison baseline)");
    cmd->add_flag_function("--no-spatial-adaptivity",
                           [&ov](std::int64_t) { ov.sets.emplace_back("spatial_adaptivity", "0"); },
                           "freeze the mesh");
}

fractura::RunConfig build_config(const CliOverrides& ov) {
    fractura::RunConfig cfg;
    if (!ov.config_path.empty()) cfg = fractura::parse_config_file(ov.config_path);
    for (const auto& [k, v] : ov.sets) fractura::config_set(cfg, k, v);
    return cfg;
}

int cmd_convergence() {
    using namespace fractura;
    // Observed order of the momentum integrator on u'' = -u, u(0)=1, u'(0)=0.
    std::cout << "generalized-alpha order study (u'' = -u, T = 2*pi)\n";
    const double T = 2.0 * M_PI;
    for (double rho : {0.0, 0.5, 1.0}) {
        const AlphaParams a = alpha_params(rho);
        std::cout << "  rho_inf = " << rho << ":";
        double prev_err = 0.0;
        for (int n : {100, 200, 400, 800}) {
            const double dt = T / n;
            ScalarState s;
            s.u = 1.0;
            for (int i = 0; i < n; ++i) s = scalar_genalpha_step(1.0, 1.0, nullptr, s, a, dt);
            const double err = std::abs(s.u - 1.0);
            if (prev_err > 0.0) std::cout << "  order " << std::log2(prev_err / err);
            prev_err = err;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_profile_1d(double ell, double Gc) {
    const auto r = fractura::profile_1d(ell, Gc);
    std::cout << "steady 1D profile, " << r.n_elements << " elements\n"
              << "  Linf error vs 1-exp(-|x|/ell): " << r.linf_error << "\n"
              << "  dissipation per unit length:   " << r.dissipation << " (target " << Gc
              << ", rel err " << r.dissipation_rel_err << ")\n";
    return (r.linf_error <= 2e-2 && r.dissipation_rel_err <= 0.02) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractura: adaptive phase-field dynamic fracture simulator"};
    app.require_subcommand(1);

    CliOverrides run_ov, val_ov;
    auto* run_cmd = app.add_subcommand("run", "run a simulation");
    add_config_flags(run_cmd, run_ov);
    auto* val_cmd = app.add_subcommand("validate-config", "parse and validate a configuration");
    add_config_flags(val_cmd, val_ov);
    auto* conv_cmd = app.add_subcommand("convergence", "time-integrator order study");
    auto* prof_cmd = app.add_subcommand("profile-1d", "steady 1D profile vs the analytic solution");
    double prof_ell = 0.01, prof_gc = 0.5;
    prof_cmd->add_option("--ell", prof_ell, "localization length");
    prof_cmd->add_option("--gc", prof_gc, "Griffith energy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return fractura::run(build_config(run_ov));
        if (val_cmd->parsed()) {
            const auto cfg = build_config(val_ov);
            cfg.validate();
            const auto s = fractura::scenario_from_config(cfg);
            fractura::driver_config_from(cfg, s);
            std::cout << "configuration OK (scenario " << s.name << ")\n";
            return 0;
        }
        if (conv_cmd->parsed()) return cmd_convergence();
        if (prof_cmd->parsed()) return cmd_profile_1d(prof_ell, prof_gc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
