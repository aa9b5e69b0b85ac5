#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fractura/alpha.hpp"
#include "fractura/fem.hpp"

namespace fractura {

/// Nodal kinematics and history at a time level, tied to the mesh they were
/// computed on. Snapshots are value types: committed states are never
/// mutated, a step produces a fresh one.
struct FieldState {
    std::shared_ptr<const TriMesh> mesh;
    std::vector<double> u, udot, uddot; // interleaved, 2 * n_vertices
    std::vector<double> phi, phidot;    // n_vertices
    HistoryField H;
    double t = 0.0;

    static FieldState zero(std::shared_ptr<const TriMesh> mesh, int nqp) {
        FieldState s;
        const std::size_t nv = mesh->n_vertices();
        const std::size_t ne = mesh->n_triangles();
        s.u.assign(2 * nv, 0.0);
        s.udot.assign(2 * nv, 0.0);
        s.uddot.assign(2 * nv, 0.0);
        s.phi.assign(nv, 1.0);
        s.phidot.assign(nv, 0.0);
        s.H = HistoryField(ne, nqp);
        s.mesh = std::move(mesh);
        return s;
    }

    StateView view() const { return {&u, &udot, &uddot, &phi, &phidot}; }
};

/// Advance the kinematic quantities from the solved increments:
///   inc_uddot = (inc_u - dt udot_n - dt^2/2 uddot_n) / (beta_c dt^2)
///   udot_{n+1} = udot_n + dt (uddot_n + gamma_c inc_uddot)
///   inc_phidot = (inc_phi / dt - phidot_n) / gamma_j
/// The history field is carried over unchanged; the caller commits it.
inline FieldState kinematic_update(const FieldState& s, const std::vector<double>& inc_u,
                                   const std::vector<double>& inc_phi, const AlphaParams& a,
                                   double dt) {
    if (!(dt > 0.0)) throw InvalidParameter("kinematic_update: dt must be positive");
    if (inc_u.size() != s.u.size() || inc_phi.size() != s.phi.size())
        throw InvalidParameter("kinematic_update: increment size mismatch");

    FieldState n = s;
    n.t = s.t + dt;
    const double inv_bdt2 = 1.0 / (a.beta_c * dt * dt);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const double inc_a = (inc_u[i] - dt * s.udot[i] - 0.5 * dt * dt * s.uddot[i]) * inv_bdt2;
        n.u[i] = s.u[i] + inc_u[i];
        n.udot[i] = s.udot[i] + dt * (s.uddot[i] + a.gamma_c * inc_a);
        n.uddot[i] = s.uddot[i] + inc_a;
    }
    for (std::size_t i = 0; i < s.phi.size(); ++i) {
        const double inc_pd = (inc_phi[i] / dt - s.phidot[i]) / a.gamma_j;
        n.phi[i] = s.phi[i] + inc_phi[i];
        n.phidot[i] = s.phidot[i] + inc_pd;
    }
    return n;
}

/// Boundary conditions and loading of a discrete problem. Constraint values
/// describe the fields themselves; increment solves force them to zero, so
/// only constraints constant in time are supported.
struct ProblemSetup {
    MaterialParams material;
    std::vector<NodeConstraint> u_bc;
    std::vector<NodeConstraint> phi_bc;
    std::vector<NeumannLoad> loads;
    std::function<double(double)> load_scale; // multiplies tractions; default 1

    double load_scale_at(double t) const { return load_scale ? load_scale(t) : 1.0; }
};

struct StaggerResult {
    FieldState next; // candidate state at t + dt, history committed
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline std::vector<NodeConstraint> zero_valued(std::vector<NodeConstraint> bc) {
    for (auto& c : bc) c.value = 0.0;
    return bc;
}

inline double rel_change(const TriMesh& mesh, const std::vector<double>& now,
                         const std::vector<double>& before, int stride) {
    std::vector<double> diff(now.size());
    for (std::size_t i = 0; i < now.size(); ++i) diff[i] = now[i] - before[i];
    return l2_norm(mesh, diff, stride) / (l2_norm(mesh, now, stride) + 1e-12);
}

} // namespace detail

/// One Picard pass over the staggered system: momentum with the frozen
/// phase-field iterate, history refresh from the new displacement, then the
/// phase-field update. Converged when the iterate-to-iterate change of each
/// field drops below tol_stg; on the first iterate only the phase-field
/// change is testable and a vanishing one certifies the fixed point (the
/// next momentum solve could not change). Returns the last iterate either
/// way, flagged.
inline StaggerResult staggered_step(const ProblemSetup& prob, const FieldState& state, double dt,
                                    const AlphaParams& a, double tol_stg, int max_iter,
                                    double solver_rtol = 1e-10) {
    if (!(tol_stg > 0.0)) throw InvalidParameter("staggered_step: tol_stg must be positive");
    if (max_iter < 1) throw InvalidParameter("staggered_step: max_iter must be >= 1");
    const TriMesh& mesh = *state.mesh;

    const DofMap dm_u(mesh, Space::P1Vector, detail::zero_valued(prob.u_bc));
    const DofMap dm_phi(mesh, Space::P1Scalar, detail::zero_valued(prob.phi_bc));

    const double t_alpha = state.t + a.af_c * dt;
    const std::vector<double> f_ext =
        external_force(mesh, prob.material, prob.loads, prob.load_scale_at(t_alpha));

    const bool split = prob.material.stress_split == StressSplit::TensionOnly;
    std::vector<double> u_ref = state.u; // lagged strain state for the split moduli

    std::vector<double> phi_k = state.phi;
    std::vector<double> u_prev;
    std::vector<double> inc_u_full, inc_phi_full, u_next, phi_next;
    HistoryField H_work = state.H;

    StaggerResult res;
    for (int k = 1; k <= max_iter; ++k) {
        const AssembledSystem sys_u = assemble_momentum(dm_u, phi_k, prob.material, a, dt,
                                                        state.view(), f_ext,
                                                        split ? &u_ref : nullptr);
        inc_u_full = dm_u.expand(solve_spd(sys_u.A, sys_u.rhs, solver_rtol));
        u_next = state.u;
        for (std::size_t i = 0; i < u_next.size(); ++i) u_next[i] += inc_u_full[i];

        update_history_from(mesh, u_next, prob.material, state.H, H_work);

        StateView sv = state.view();
        const AssembledSystem sys_p = assemble_phasefield(dm_phi, H_work, prob.material, a, dt, sv);
        inc_phi_full = dm_phi.expand(solve_spd(sys_p.A, sys_p.rhs, solver_rtol));
        phi_next = state.phi;
        for (std::size_t i = 0; i < phi_next.size(); ++i) phi_next[i] += inc_phi_full[i];

        const double dphi = detail::rel_change(mesh, phi_next, phi_k, 1);
        const double du = (k >= 2) ? detail::rel_change(mesh, u_next, u_prev, 2) : 0.0;

        res.iterations = k;
        phi_k = phi_next;
        u_prev = u_next;
        if (split) u_ref = u_next;

        if (std::max(du, dphi) < tol_stg) {
            res.converged = true;
            break;
        }
    }

    res.next = kinematic_update(state, inc_u_full, inc_phi_full, a, dt);
    res.next.H = std::move(H_work);
    return res;
}

/// Scalar specialization of the momentum update for m u'' + k u = f(t):
/// the same algebra as the assembled system, on one degree of freedom.
struct ScalarState {
    double u = 0.0, v = 0.0, a = 0.0, t = 0.0;
};

inline ScalarState scalar_genalpha_step(double m, double k,
                                        const std::function<double(double)>& f,
                                        const ScalarState& s, const AlphaParams& al, double dt) {
    const double c = al.beta_c * dt * dt * al.af_c / al.am_c;
    const double c1 = al.am_c / (2.0 * al.beta_c) - 1.0;
    const double c2 = al.am_c / (al.beta_c * dt);
    const double fa = f ? f(s.t + al.af_c * dt) : 0.0;
    const double rhs = (al.beta_c * dt * dt / al.am_c) * (fa - k * s.u + m * (c1 * s.a + c2 * s.v));
    const double du = rhs / (m + c * k);
    const double da = (du - dt * s.v - 0.5 * dt * dt * s.a) / (al.beta_c * dt * dt);
    ScalarState n;
    n.u = s.u + du;
    n.a = s.a + da;
    n.v = s.v + dt * (s.a + al.gamma_c * da);
    n.t = s.t + dt;
    return n;
}

/// Consistent initial acceleration: M uddot_0 = f_ext(0) - K(phi_0) u_0.
inline void initialize_acceleration(const ProblemSetup& prob, FieldState& state,
                                    double solver_rtol = 1e-10) {
    const TriMesh& mesh = *state.mesh;
    const DofMap dm_u(mesh, Space::P1Vector, detail::zero_valued(prob.u_bc));
    const std::vector<double> f =
        external_force(mesh, prob.material, prob.loads, prob.load_scale_at(state.t));
    const std::vector<double> Ku = stiffness_apply(mesh, state.phi, state.u, prob.material);

    std::vector<Triplet> trips;
    trips.reserve(12 * mesh.n_triangles());
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const double mA = prob.material.rho0 * mesh.area(t) / 12.0;
        const auto& tv = mesh.tri(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j)
                for (int c = 0; c < 2; ++c) {
                    const std::size_t di = 2 * tv[i] + c, dj = 2 * tv[j] + c;
                    if (!dm_u.is_free(di) || !dm_u.is_free(dj)) continue;
                    const auto a = dm_u.free_index(di), b = dm_u.free_index(dj);
                    trips.emplace_back(std::max(a, b), std::min(a, b), mA * (i == j ? 2.0 : 1.0));
                }
    }
    const SparseSym M(static_cast<Eigen::Index>(dm_u.n_free()), trips);
    Vector rhs(dm_u.n_free());
    for (std::size_t d = 0; d < dm_u.n_dofs(); ++d)
        if (dm_u.is_free(d)) rhs[dm_u.free_index(d)] = f[d] - Ku[d];
    state.uddot = dm_u.expand(solve_spd(M, rhs, solver_rtol));
}

} // namespace fractura
