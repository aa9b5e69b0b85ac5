#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fractura/fem.hpp"
#include "fractura/mesh.hpp"
#include "fractura/tintegrate.hpp"

namespace fractura {

// ---------------------------------------------------------------------------
// Temporal error estimation
// ---------------------------------------------------------------------------

/// Time-step history and displacement snapshots feeding the truncation-error
/// estimator. All snapshots live on the same (current) mesh; the driver
/// projects them forward whenever the mesh refines.
struct TimeControl {
    double dt_np1 = 0.0, dt_n = 0.0, dt_nm1 = 0.0;
    std::vector<double> u_np1, u_n, u_nm1, u_nm2;
    double tol_max = 1e-3;
    double tol_min = 1e-5;
    double rho_abs = 1e-4, rho_rel = 1e-4;
    double rho_tol = 0.9;

    bool has_history() const {
        return dt_np1 > 0.0 && dt_n > 0.0 && dt_nm1 > 0.0 && !u_np1.empty() &&
               u_np1.size() == u_n.size() && u_n.size() == u_nm1.size() &&
               u_nm1.size() == u_nm2.size();
    }
};

namespace detail {

inline void require_history(const TimeControl& tc, const char* who) {
    if (!tc.has_history()) throw NotEnoughHistory(std::string(who) + ": need four snapshots and three positive time steps");
}

} // namespace detail

/// Backward-difference estimate of the third time derivative from the last
/// four solutions on (possibly) nonuniform steps:
///   u''' ~ 1/dt1^2 [ (u1-u0)/dt1 - (1 + dt1/dt2)(u0-um1)/dt2
///                    + dt1/(dt2 dt3) (um1-um2) ],
/// with dt1 = dt_{n+1}, dt2 = dt_n, dt3 = dt_{n-1}. Exact for cubic
/// trajectories on uniform (and geometrically graded) step sequences.
inline std::vector<double> bdf3_third_derivative(const TimeControl& tc) {
    detail::require_history(tc, "bdf3_third_derivative");
    const double a = tc.dt_np1, b = tc.dt_n, c = tc.dt_nm1;
    const std::size_t n = tc.u_np1.size();
    std::vector<double> out(n);
    const double inv_a2 = 1.0 / (a * a);
    const double c1 = 1.0 / a;
    const double c2 = (1.0 + a / b) / b;
    const double c3 = a / (b * c);
    for (std::size_t i = 0; i < n; ++i) {
        const double d1 = tc.u_np1[i] - tc.u_n[i];
        const double d2 = tc.u_n[i] - tc.u_nm1[i];
        const double d3 = tc.u_nm1[i] - tc.u_nm2[i];
        out[i] = inv_a2 * (c1 * d1 - c2 * d2 + c3 * d3);
    }
    return out;
}

/// Local truncation error of the second-order generalized-alpha update,
///   tau = dt_{n+1}^2 (dt_n + dt_{n-1})/6 * u''',
/// written directly in divided differences (the dt_{n+1}^2 factor cancels).
inline std::vector<double> local_truncation_error(const TimeControl& tc) {
    detail::require_history(tc, "local_truncation_error");
    const double a = tc.dt_np1, b = tc.dt_n, c = tc.dt_nm1;
    const std::size_t n = tc.u_np1.size();
    std::vector<double> out(n);
    const double lead = (b + c) / 6.0;
    const double c1 = 1.0 / a;
    const double c2 = (1.0 + a / b) / b;
    const double c3 = a / (b * c);
    for (std::size_t i = 0; i < n; ++i) {
        const double d1 = tc.u_np1[i] - tc.u_n[i];
        const double d2 = tc.u_n[i] - tc.u_nm1[i];
        const double d3 = tc.u_nm1[i] - tc.u_nm2[i];
        out[i] = lead * (c1 * d1 - c2 * d2 + c3 * d3);
    }
    return out;
}

/// Weighted RMS of the componentwise truncation error,
///   E = sqrt( 1/N sum_i ( tau_i / (rho_abs + rho_rel max(|u_i|, |u_i|+|tau_i|)) )^2 ).
inline double weighted_error(const std::vector<double>& tau, const std::vector<double>& u_np1,
                             double rho_abs, double rho_rel) {
    if (tau.empty() || tau.size() != u_np1.size())
        throw InvalidParameter("weighted_error: empty or mismatched vectors");
    if (rho_abs < 0.0 || rho_rel < 0.0 || rho_abs + rho_rel <= 0.0)
        throw InvalidParameter("weighted_error: tolerances must be nonnegative, not both zero");
    double acc = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] == 0.0) continue;
        const double au = std::abs(u_np1[i]);
        const double den = rho_abs + rho_rel * std::max(au, au + std::abs(tau[i]));
        if (!(den > 0.0)) throw InvalidParameter("weighted_error: vanishing weight denominator");
        const double r = tau[i] / den;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(tau.size()));
}

/// Step-size controller dt <- rho_tol sqrt(tol/E) dt; used for both the
/// rejection shrink and the growth after small errors. A vanishing E grows
/// by the configured cap instead.
inline double next_dt(double E, double dt, double tol, double rho_tol, double growth_cap = 2.0) {
    if (!(dt > 0.0)) throw InvalidParameter("next_dt: dt must be positive");
    if (!(tol > 0.0) || !(rho_tol > 0.0)) throw InvalidParameter("next_dt: tol and rho_tol must be positive");
    if (E < 0.0) throw InvalidParameter("next_dt: E must be nonnegative");
    if (E == 0.0) return dt * growth_cap;
    return rho_tol * std::sqrt(tol / E) * dt;
}

// ---------------------------------------------------------------------------
// Spatial error estimation (residual minimization in the bubble space)
// ---------------------------------------------------------------------------

struct SpatialEstimate {
    std::vector<double> eps;             // enriched coefficients (nodes, then bubbles)
    std::vector<double> element_contrib; // squared element-local Q-norms
    double norm = 0.0;                   // global Q-norm of eps
    double phi_norm = 0.0;               // Q-norm of phi_{n+1}, for relative tolerances
    double constraint_residual = 0.0;    // max |B^T eps| over P1 test functions
};

/// Residual representation of the phase-field update in the bubble-enriched
/// space: find (eps, phi) with (w; eps)_Q + b(w; phi) = g(w) for enriched w
/// and b(q; eps) = 0 for P1 q. The operator and right-hand side are exactly
/// the ones assembled for the update; element restrictions of eps drive the
/// marking.
inline SpatialEstimate spatial_estimate(const ProblemSetup& prob, const FieldState& state,
                                        const FieldState& candidate, const AlphaParams& a,
                                        double dt, double rtol = 1e-12) {
    const TriMesh& mesh = *state.mesh;
    const auto bc = detail::zero_valued(prob.phi_bc);
    const DofMap dm_p1(mesh, Space::P1Scalar, bc);
    const DofMap dm_enr(mesh, Space::EnrichedScalar, bc);

    const AssembledSystem sys = assemble_phasefield(dm_enr, candidate.H, prob.material, a, dt,
                                                    state.view());
    const QNorm qn(prob.material, a, dt);
    const AssembledSystem gram = qnorm_gram(dm_enr, qn);

    // Hierarchical basis: the first n_p1 free columns of the enriched
    // operator are exactly the P1 trial functions.
    const SpMat full_op = sys.A.full();
    const SpMat B = full_op.leftCols(static_cast<Eigen::Index>(dm_p1.n_free()));

    const SaddleSolution sol = solve_saddle(gram.A, B, sys.rhs, rtol);

    SpatialEstimate est;
    est.eps = dm_enr.expand(sol.eps);
    est.norm = std::sqrt(std::max(0.0, sol.eps.dot(gram.A.multiply(sol.eps))));
    est.constraint_residual = (B.transpose() * sol.eps).cwiseAbs().maxCoeff();

    est.element_contrib.resize(mesh.n_triangles());
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tv = mesh.tri(t);
        const std::array<double, 4> coeff = {est.eps[tv[0]], est.eps[tv[1]], est.eps[tv[2]],
                                             est.eps[mesh.n_vertices() + t]};
        est.element_contrib[t] = element_qnorm_sq(mesh, t, coeff, qn, true);
    }

    double phi_sq = 0.0;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tv = mesh.tri(t);
        const std::array<double, 4> coeff = {candidate.phi[tv[0]], candidate.phi[tv[1]],
                                             candidate.phi[tv[2]], 0.0};
        phi_sq += element_qnorm_sq(mesh, t, coeff, qn, false);
    }
    est.phi_norm = std::sqrt(phi_sq);
    return est;
}

// ---------------------------------------------------------------------------
// Adaptive driver
// ---------------------------------------------------------------------------

struct DriverConfig {
    double t_final = 0.0;
    double dt0 = 0.0;
    double tol_max = 1e-3;
    double tol_min = 1e-5;
    double tol_stg = 1e-5;
    double tol_mesh_rel = 1e-3; // mesh loop target, relative to |phi|_Q
    double chi = 0.2;
    double rho_inf = 0.5;
    double rho_abs = 1e-4, rho_rel = 1e-4, rho_tol = 0.9;
    double h_min = 0.0;   // refinement size floor; 0 disables
    double dt_min = 1e-12;
    double dt_max = 0.0;  // 0 -> 100 * dt0
    double growth_cap = 2.0;
    double solver_rtol = 1e-10;
    int max_stagger = 50;
    int max_mesh_iters = 25;
    int startup_steps = 3; // adaptivity disabled while the estimator has no history
    long max_steps = 1000000;
    bool spatial_adaptivity = true;
    bool temporal_adaptivity = true;
    bool baseline_iteration_count = false; // comparison controller, not the supported path
    int baseline_shrink_iters = 10;
    int baseline_grow_iters = 4;

    void validate() const {
        if (!(t_final > 0.0)) throw InvalidParameter("DriverConfig: t_final must be positive");
        if (!(dt0 > 0.0)) throw InvalidParameter("DriverConfig: dt0 must be positive");
        if (!(tol_min < tol_max)) throw InvalidParameter("DriverConfig: need tol_min < tol_max");
        if (!(rho_tol > 0.0) || rho_tol > 1.0) throw InvalidParameter("DriverConfig: rho_tol in (0,1]");
        if (!(chi >= 0.0) || chi > 1.0) throw InvalidParameter("DriverConfig: chi in [0,1]");
    }
};

struct StepRecord {
    long step = 0;
    double t = 0.0, dt = 0.0, E = 0.0;
    std::size_t n_elements = 0;
    double h_min = 0.0;
    int n_stagger = 0;
    double dissipation = 0.0;
    double crack_tip_x = 0.0;
    double crack_tip_speed = 0.0;
};

struct RunResult {
    std::vector<StepRecord> records;
    FieldState final_state;
    long n_accepted = 0;
    long n_rejections = 0;
    long n_refinements = 0;
    double phi_min = 1.0, phi_max = 1.0; // overshoot monitor (phi is not clamped)
    bool aborted = false;
    std::string abort_reason;
};

/// Hooks into the run: an acceptance callback (snapshot writing) and a crack
/// tip locator returning (tip x, found).
struct DriverHooks {
    std::function<void(const FieldState&, const StepRecord&)> on_accept;
    std::function<std::pair<double, bool>(const TriMesh&, const std::vector<double>&)> tip_locator;
};

/// Error-driven space-and-time adaptive loop. Within one step: the mesh loop
/// projects the previous state onto the current mesh and redoes the staggered
/// solve until the spatial estimate passes (or marking is empty, the floor is
/// hit, or an iteration cap trips); the temporal test accepts or shrinks the
/// step; acceptance commits kinematics, logs a record, and may grow the step.
/// The first startup_steps steps run at dt0 with both controls disabled.
inline RunResult adaptive_driver(const ProblemSetup& prob, FieldState initial,
                                 const DriverConfig& cfg, const DriverHooks& hooks = {}) {
    cfg.validate();
    const AlphaParams alpha = alpha_params(cfg.rho_inf);
    const double dt_max = cfg.dt_max > 0.0 ? cfg.dt_max : 100.0 * cfg.dt0;

    RunResult run;
    FieldState state = std::move(initial);

    // Accepted-step history for the estimator, newest first.
    std::deque<std::vector<double>> u_hist; // u_n, u_{n-1}, u_{n-2}
    std::deque<double> dt_hist;             // dt_n, dt_{n-1}
    u_hist.push_front(state.u);

    std::deque<std::pair<double, double>> tip_track; // (t, tip x) for speed smoothing
    double dt = cfg.dt0;

    auto project_all = [&](const TriMesh& old_mesh, std::shared_ptr<const TriMesh> new_mesh) {
        FieldState s;
        s.mesh = new_mesh;
        s.t = state.t;
        s.u = project_nodal(old_mesh, *new_mesh, state.u, 2);
        s.udot = project_nodal(old_mesh, *new_mesh, state.udot, 2);
        s.uddot = project_nodal(old_mesh, *new_mesh, state.uddot, 2);
        s.phi = project_nodal(old_mesh, *new_mesh, state.phi, 1);
        s.phidot = project_nodal(old_mesh, *new_mesh, state.phidot, 1);
        s.H.n_qp = state.H.n_qp;
        s.H.values = project_history(old_mesh, *new_mesh, state.H.values, state.H.n_qp);
        for (auto& u : u_hist) u = project_nodal(old_mesh, *new_mesh, u, 2);
        state = std::move(s);
    };

    try {
        long steps_done = 0;
        while (state.t < cfg.t_final * (1.0 - 1e-12) && steps_done < cfg.max_steps) {
            ++steps_done;
            bool accepted = false;
            int mesh_iters = 0;

            while (!accepted) {
                const double dt_eff = std::min(dt, cfg.t_final - state.t);
                const StaggerResult stag =
                    staggered_step(prob, state, dt_eff, alpha, cfg.tol_stg, cfg.max_stagger,
                                   cfg.solver_rtol);

                const bool startup = run.n_accepted < cfg.startup_steps;
                const bool estimable = !startup && u_hist.size() >= 3 && dt_hist.size() >= 2;

                double E = 0.0;
                if (estimable) {
                    TimeControl tc;
                    tc.dt_np1 = dt_eff;
                    tc.dt_n = dt_hist[0];
                    tc.dt_nm1 = dt_hist[1];
                    tc.u_np1 = stag.next.u;
                    tc.u_n = u_hist[0];
                    tc.u_nm1 = u_hist[1];
                    tc.u_nm2 = u_hist[2];
                    E = weighted_error(local_truncation_error(tc), stag.next.u, cfg.rho_abs,
                                       cfg.rho_rel);
                }

                // Rejection paths: staggered stall, baseline iteration budget,
                // or the temporal error test.
                bool reject = false;
                double dt_new = dt_eff;
                if (!stag.converged) {
                    reject = true;
                    dt_new = 0.5 * dt_eff;
                    if (E > 0.0)
                        dt_new = std::min(dt_new, next_dt(E, dt_eff, cfg.tol_max, cfg.rho_tol));
                } else if (cfg.baseline_iteration_count) {
                    if (stag.iterations > cfg.baseline_shrink_iters) {
                        reject = true;
                        dt_new = 0.5 * dt_eff;
                    }
                } else if (cfg.temporal_adaptivity && estimable && E > cfg.tol_max) {
                    reject = true;
                    dt_new = next_dt(E, dt_eff, cfg.tol_max, cfg.rho_tol, cfg.growth_cap);
                }
                if (reject) {
                    ++run.n_rejections;
                    dt = dt_new;
                    if (dt < cfg.dt_min) {
                        run.aborted = true;
                        run.abort_reason = "time step shrank below dt_min";
                        run.final_state = std::move(state);
                        return run;
                    }
                    continue; // same mesh, same state
                }

                // Temporal accept: spatial control on this step's solution.
                if (cfg.spatial_adaptivity && !startup && mesh_iters < cfg.max_mesh_iters) {
                    const SpatialEstimate est =
                        spatial_estimate(prob, state, stag.next, alpha, dt_eff);
                    const double tol_mesh = cfg.tol_mesh_rel * est.phi_norm;
                    if (est.norm >= tol_mesh) {
                        std::vector<double> indicator(est.element_contrib.size());
                        for (std::size_t i = 0; i < indicator.size(); ++i)
                            indicator[i] = std::sqrt(est.element_contrib[i]);
                        const Marking marking = mark_by_fraction(indicator, cfg.chi);
                        if (!marking.empty()) {
                            try {
                                auto refined = std::make_shared<TriMesh>(
                                    refine(*state.mesh, marking, cfg.h_min));
                                const TriMesh& old_mesh = *state.mesh;
                                project_all(old_mesh, refined);
                                ++run.n_refinements;
                                ++mesh_iters;
                                continue; // redo this step on the refined mesh
                            } catch (const RefinementFloorReached&) {
                                // floor reached: stop the mesh loop and accept
                            }
                        }
                    }
                }

                // Accept: commit kinematics and history, log, maybe grow dt.
                state = stag.next;
                ++run.n_accepted;
                accepted = true;

                u_hist.push_front(state.u);
                if (u_hist.size() > 3) u_hist.pop_back();
                dt_hist.push_front(dt_eff);
                if (dt_hist.size() > 2) dt_hist.pop_back();

                for (double p : state.phi) {
                    run.phi_min = std::min(run.phi_min, p);
                    run.phi_max = std::max(run.phi_max, p);
                }

                StepRecord rec;
                rec.step = run.n_accepted;
                rec.t = state.t;
                rec.dt = dt_eff;
                rec.E = E;
                rec.n_elements = state.mesh->n_triangles();
                rec.h_min = state.mesh->min_element_size();
                rec.n_stagger = stag.iterations;
                rec.dissipation = dissipation(*state.mesh, state.phi, prob.material);
                if (hooks.tip_locator) {
                    const auto [x, known] = hooks.tip_locator(*state.mesh, state.phi);
                    if (known) {
                        tip_track.emplace_back(state.t, x);
                        if (tip_track.size() > 6) tip_track.pop_front();
                        rec.crack_tip_x = x;
                        if (tip_track.size() >= 2) {
                            const auto& [t0, x0] = tip_track.front();
                            rec.crack_tip_speed = (x - x0) / (state.t - t0);
                        }
                    } else if (!tip_track.empty()) {
                        rec.crack_tip_x = tip_track.back().second;
                    }
                }
                run.records.push_back(rec);
                if (hooks.on_accept) hooks.on_accept(state, rec);

                if (cfg.baseline_iteration_count) {
                    if (stag.iterations <= cfg.baseline_grow_iters)
                        dt = std::min({1.25 * dt_eff, dt_max});
                    else
                        dt = dt_eff;
                } else if (cfg.temporal_adaptivity && estimable && E < cfg.tol_min) {
                    dt = std::min({next_dt(E, dt_eff, cfg.tol_max, cfg.rho_tol, cfg.growth_cap),
                                   cfg.growth_cap * dt_eff, dt_max});
                } else {
                    dt = dt_eff;
                }
            }
        }
    } catch (const std::exception& e) {
        run.aborted = true;
        run.abort_reason = e.what();
    }
    run.final_state = std::move(state);
    return run;
}

} // namespace fractura
