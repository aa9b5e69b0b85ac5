#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fractura/adapt.hpp"
#include "fractura/scenario.hpp"

using namespace fractura;

namespace {

TimeControl sampled(const std::function<double(double)>& u, double t, double a, double b,
                    double c, std::size_t n = 3) {
    TimeControl tc;
    tc.dt_np1 = a;
    tc.dt_n = b;
    tc.dt_nm1 = c;
    tc.u_np1.assign(n, u(t));
    tc.u_n.assign(n, u(t - a));
    tc.u_nm1.assign(n, u(t - a - b));
    tc.u_nm2.assign(n, u(t - a - b - c));
    return tc;
}

} // namespace

TEST_CASE("bdf3 recovers the third derivative") {
    SECTION("cubic trajectories on uniform steps are exact") {
        const auto tc = sampled([](double t) { return t * t * t; }, 1.3, 0.1, 0.1, 0.1);
        for (double v : bdf3_third_derivative(tc))
            REQUIRE(v == Catch::Approx(6.0).epsilon(1e-9));
    }
    SECTION("quadratics are annihilated on uniform and geometric steps") {
        const auto uq = [](double t) { return t * t; };
        for (double v : bdf3_third_derivative(sampled(uq, 0.9, 0.05, 0.05, 0.05)))
            REQUIRE(v == Catch::Approx(0.0).margin(1e-10));
        // geometric progression: dt_{n+1}/dt_n = dt_n/dt_{n-1}
        for (double v : bdf3_third_derivative(sampled(uq, 0.9, 0.08, 0.04, 0.02)))
            REQUIRE(v == Catch::Approx(0.0).margin(1e-10));
    }
    SECTION("smooth trajectory: first-order derivative estimate") {
        // the backward stencil is centered at t - 3 dt / 2, so the leading
        // error is (3 dt / 2) u''''(t); halving dt halves it
        const auto u = [](double t) { return std::sin(t); };
        const double e1 =
            std::abs(bdf3_third_derivative(sampled(u, 1.0, 1e-3, 1e-3, 1e-3))[0] + std::cos(1.0));
        const double e2 =
            std::abs(bdf3_third_derivative(sampled(u, 1.0, 5e-4, 5e-4, 5e-4))[0] + std::cos(1.0));
        REQUIRE(e1 <= 2e-3);
        REQUIRE(e1 / e2 == Catch::Approx(2.0).margin(0.3));
    }
    SECTION("missing history") {
        TimeControl tc;
        REQUIRE_THROWS_AS(bdf3_third_derivative(tc), NotEnoughHistory);
        REQUIRE_THROWS_AS(local_truncation_error(tc), NotEnoughHistory);
    }
}

TEST_CASE("truncation error from divided differences") {
    SECTION("linear trajectories cancel for any steps") {
        const auto tc = sampled([](double t) { return 3.0 - 2.0 * t; }, 0.7, 0.11, 0.05, 0.021);
        for (double v : local_truncation_error(tc)) REQUIRE(v == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("two evaluation paths agree to rounding") {
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> unif(0.1, 2.0);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 500; ++trial) {
            TimeControl tc;
            tc.dt_np1 = unif(rng);
            tc.dt_n = unif(rng);
            tc.dt_nm1 = unif(rng);
            const std::size_t n = 5;
            for (auto* v : {&tc.u_np1, &tc.u_n, &tc.u_nm1, &tc.u_nm2}) {
                v->resize(n);
                for (auto& x : *v) x = gauss(rng);
            }
            const auto tau = local_truncation_error(tc);
            const auto d3 = bdf3_third_derivative(tc);
            const double lead = tc.dt_np1 * tc.dt_np1 * (tc.dt_n + tc.dt_nm1) / 6.0;
            for (std::size_t i = 0; i < n; ++i)
                REQUIRE(tau[i] == Catch::Approx(lead * d3[i]).epsilon(1e-12).margin(1e-15));
        }
    }
    SECTION("linearity in the snapshots") {
        auto tc = sampled([](double t) { return std::sin(3 * t); }, 0.5, 0.04, 0.05, 0.06);
        const auto tau = local_truncation_error(tc);
        for (auto* v : {&tc.u_np1, &tc.u_n, &tc.u_nm1, &tc.u_nm2})
            for (auto& x : *v) x *= 2.0;
        const auto tau2 = local_truncation_error(tc);
        for (std::size_t i = 0; i < tau.size(); ++i)
            REQUIRE(tau2[i] == Catch::Approx(2.0 * tau[i]).epsilon(1e-13));
    }
}

TEST_CASE("weighted error statistic") {
    SECTION("zero truncation error") {
        REQUIRE(weighted_error({0.0, 0.0}, {1.0, 2.0}, 1e-4, 1e-4) == 0.0);
    }
    SECTION("single-component arithmetic") {
        const double E = weighted_error({1e-4}, {0.0}, 1e-4, 1e-4);
        REQUIRE(E == Catch::Approx(1e-4 / (1e-4 + 1e-4 * 1e-4)).epsilon(1e-12)); // ~0.99999
    }
    SECTION("relative-error homogeneity with rho_abs = 0") {
        std::vector<double> tau = {1e-6, -2e-6, 5e-7}, u = {0.3, -0.2, 0.9};
        const double E1 = weighted_error(tau, u, 0.0, 1e-4);
        for (auto& x : tau) x *= 1e6;
        for (auto& x : u) x *= 1e6;
        REQUIRE(weighted_error(tau, u, 0.0, 1e-4) == Catch::Approx(E1).epsilon(1e-12));
    }
    REQUIRE_THROWS_AS(weighted_error({}, {}, 1e-4, 1e-4), InvalidParameter);
}

TEST_CASE("time-step controller law") {
    REQUIRE(next_dt(1e-3, 0.5, 1e-3, 0.9) == Catch::Approx(0.45));
    REQUIRE(next_dt(0.1, 2.0, 1e-3, 0.9) == Catch::Approx(0.9 * std::sqrt(1e-2) * 2.0));
    REQUIRE(next_dt(0.25e-3, 1.0, 1e-3, 0.9) == Catch::Approx(1.8)); // below the growth cap

    SECTION("bit-for-bit against the scalar reference") {
        std::mt19937 rng(123);
        std::uniform_real_distribution<double> unif(1e-8, 1.0);
        for (int i = 0; i < 100; ++i) {
            const double E = unif(rng), tol = unif(rng), dt = unif(rng);
            const double expect = 0.9 * std::sqrt(tol / E) * dt;
            REQUIRE(next_dt(E, dt, tol, 0.9) == expect);
        }
    }
    SECTION("monotone in tol and E; exact at E = tol") {
        REQUIRE(next_dt(1e-3, 1.0, 1e-3, 0.9) == 0.9);
        REQUIRE(next_dt(1e-3, 1.0, 2e-3, 0.9) > next_dt(1e-3, 1.0, 1e-3, 0.9));
        REQUIRE(next_dt(2e-3, 1.0, 1e-3, 0.9) < next_dt(1e-3, 1.0, 1e-3, 0.9));
    }
    SECTION("vanishing error grows by the cap") {
        REQUIRE(next_dt(0.0, 1.0, 1e-3, 0.9, 2.0) == 2.0);
    }
}

namespace {

// Phase-field relaxation rigs on a strip; no momentum coupling.
struct EstimatorRig {
    std::shared_ptr<TriMesh> mesh;
    ProblemSetup prob;
    AlphaParams alpha = alpha_params(0.5);
    double dt = 1e-2;
    FieldState state, candidate;

    // history drive H(x), undamaged previous field
    static EstimatorRig driven(TriMesh m, const std::function<double(double)>& Hdrive, double ell) {
        EstimatorRig rig;
        rig.init(std::move(m), ell);
        for (TriId t = 0; t < rig.mesh->n_triangles(); ++t) {
            const auto& tv = rig.mesh->tri(t);
            for (int q = 0; q < tri_rule().n; ++q) {
                const auto& qp = tri_rule().pts[q];
                const double x = qp.l0 * rig.mesh->vertex(tv[0]).x +
                                 qp.l1 * rig.mesh->vertex(tv[1]).x +
                                 qp.l2 * rig.mesh->vertex(tv[2]).x;
                rig.state.H.at(t, q) = Hdrive(x);
            }
        }
        rig.solve_candidate();
        return rig;
    }

    // Dirichlet phi = 0 down the x = x0 column; previous field is the
    // analytic profile, so the data is mesh independent
    static EstimatorRig profile(TriMesh m, double ell, double x0 = 0.5) {
        EstimatorRig rig;
        rig.init(std::move(m), ell);
        for (VertexId i = 0; i < rig.mesh->n_vertices(); ++i) {
            const double x = rig.mesh->vertex(i).x;
            if (std::abs(x - x0) < 1e-12) rig.prob.phi_bc.push_back({i, 0, 0.0});
            rig.state.phi[i] = 1.0 - std::exp(-std::abs(x - x0) / ell);
        }
        rig.solve_candidate();
        return rig;
    }

    void init(TriMesh m, double ell) {
        mesh = std::make_shared<TriMesh>(std::move(m));
        prob.material = MaterialParams::from_lame(1.0, 1.0, 1.0, 1.0, ell);
        state = FieldState::zero(mesh, tri_rule().n);
    }

    void solve_candidate() {
        const DofMap dm(*mesh, Space::P1Scalar, prob.phi_bc);
        auto sys = assemble_phasefield(dm, state.H, prob.material, alpha, dt, state.view());
        const auto inc = dm.expand(solve_spd(sys.A, sys.rhs, 1e-13));
        candidate = state;
        candidate.t += dt;
        for (std::size_t i = 0; i < candidate.phi.size(); ++i) candidate.phi[i] += inc[i];
    }

    SpatialEstimate estimate() const {
        return spatial_estimate(prob, state, candidate, alpha, dt);
    }
};

} // namespace

TEST_CASE("estimator vanishes on a P1-representable solution") {
    // undamaged steady state: phi = 1 solves the update exactly
    const auto rig =
        EstimatorRig::driven(structured_rectangle(1.0, 0.2, 10, 2), [](double) { return 0.0; }, 0.05);
    REQUIRE(rig.estimate().norm <= 1e-9);
}

TEST_CASE("estimator orthogonality and localization on the profile") {
    const auto rig = EstimatorRig::profile(structured_rectangle(1.0, 0.1, 20, 2), 0.05);
    const auto est = rig.estimate();
    REQUIRE(est.norm > 0.0);
    REQUIRE(est.constraint_residual <= 1e-9 * est.norm);

    double sum = 0.0;
    for (double c : est.element_contrib) sum += c;
    REQUIRE(sum == Catch::Approx(est.norm * est.norm).epsilon(1e-10));

    // contributions concentrate in the transition band: at h = ell the top
    // decile of elements carries most of the total
    auto sorted = est.element_contrib;
    std::sort(sorted.rbegin(), sorted.rend());
    double top = 0.0;
    for (std::size_t i = 0; i < sorted.size() / 10 + 1; ++i) top += sorted[i];
    REQUIRE(top >= 0.8 * sum);
}

TEST_CASE("estimator decreases under uniform refinement") {
    TriMesh mesh = structured_rectangle(1.0, 0.1, 20, 2); // h = ell at the start
    std::vector<double> norms;
    for (int level = 0; level < 5; ++level) {
        norms.push_back(EstimatorRig::profile(mesh, 0.05).estimate().norm);
        std::vector<TriId> all(mesh.n_triangles());
        for (TriId t = 0; t < all.size(); ++t) all[t] = t;
        mesh = refine(mesh, Marking(all));
    }
    for (std::size_t i = 1; i < norms.size(); ++i) REQUIRE(norms[i] < norms[i - 1]);
    // the profile's kink at the constrained column limits the rate to about
    // O(sqrt(h)) in this norm; require a clear cumulative decrease
    REQUIRE(norms[4] <= 0.35 * norms[0]);
}

TEST_CASE("estimator orthogonality over random damage states") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int nx = 4 + static_cast<int>(unif(rng) * 6);
        const int ny = 2 + static_cast<int>(unif(rng) * 4);
        auto rig = EstimatorRig::driven(structured_rectangle(1.0, 0.5, nx, ny),
                                        [&](double x) { return 20.0 * x * x; },
                                        0.05 + 0.1 * unif(rng));
        // randomize the previous phase field a little and re-solve
        for (auto& p : rig.state.phi) p = 0.7 + 0.3 * unif(rng);
        rig.solve_candidate();
        const auto est = rig.estimate();
        if (est.norm > 1e-12) REQUIRE(est.constraint_residual <= 1e-9 * est.norm);
    }
}

TEST_CASE("elastic run: no refinement, growing steps, undamaged field") {
    Scenario sc = elastic_preset();
    sc.nx = 8;
    sc.ny = 16;
    sc.t_final = 2e-3;
    sc.dt0 = 2e-5;
    auto mesh = std::make_shared<const TriMesh>(make_scenario_mesh(sc));
    ProblemSetup prob = problem_setup(sc);
    FieldState s0 = initial_state(sc, mesh);
    initialize_acceleration(prob, s0);

    DriverConfig cfg;
    cfg.t_final = sc.t_final;
    cfg.dt0 = sc.dt0;
    cfg.tol_max = 5e-3;
    cfg.tol_min = 5e-5;
    cfg.h_min = sc.material.ell / 5.0;

    const RunResult run = adaptive_driver(prob, s0, cfg);
    REQUIRE_FALSE(run.aborted);
    REQUIRE(run.n_refinements == 0);
    REQUIRE(run.records.size() > 5);
    for (const auto& r : run.records) {
        REQUIRE(r.n_elements == mesh->n_triangles());
        REQUIRE(r.E <= cfg.tol_max);
    }
    for (double p : run.final_state.phi) REQUIRE(p == Catch::Approx(1.0).margin(1e-6));
    // the step size grew from its initial value
    REQUIRE(run.records.back().dt > 2.0 * cfg.dt0);
    // element counts never decrease
    for (std::size_t i = 1; i < run.records.size(); ++i)
        REQUIRE(run.records[i].n_elements >= run.records[i - 1].n_elements);
}

TEST_CASE("driver reruns are deterministic") {
    Scenario sc = branching_preset(ScenarioScale::Desk);
    sc.nx = 8;
    sc.ny = 16;
    sc.traction = 3e4;
    sc.t_final = 1.2e-3;
    sc.dt0 = 2e-5;
    auto mesh = std::make_shared<const TriMesh>(make_scenario_mesh(sc));
    ProblemSetup prob = problem_setup(sc);

    auto once = [&]() {
        FieldState s0 = initial_state(sc, mesh);
        initialize_acceleration(prob, s0);
        DriverConfig cfg;
        cfg.t_final = sc.t_final;
        cfg.dt0 = sc.dt0;
        cfg.tol_max = 5e-3;
        cfg.tol_min = 5e-5;
        cfg.h_min = sc.material.ell / 5.0;
        return adaptive_driver(prob, s0, cfg);
    };
    const RunResult a = once();
    const RunResult b = once();
    REQUIRE_FALSE(a.aborted);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        REQUIRE(a.records[i].t == b.records[i].t);
        REQUIRE(a.records[i].dt == b.records[i].dt);
        REQUIRE(a.records[i].E == b.records[i].E);
        REQUIRE(a.records[i].dissipation == b.records[i].dissipation);
        REQUIRE(a.records[i].n_elements == b.records[i].n_elements);
    }
    // bitwise identical final fields
    REQUIRE(a.final_state.u == b.final_state.u);
    REQUIRE(a.final_state.phi == b.final_state.phi);
}

TEST_CASE("staggered restart from an identical state is bitwise identical") {
    Scenario sc = branching_preset(ScenarioScale::Desk);
    sc.nx = 8;
    sc.ny = 16;
    auto mesh = std::make_shared<const TriMesh>(make_scenario_mesh(sc));
    ProblemSetup prob = problem_setup(sc);
    FieldState s0 = initial_state(sc, mesh);
    initialize_acceleration(prob, s0);
    const AlphaParams a = alpha_params(0.5);

    const StaggerResult r1 = staggered_step(prob, s0, 1e-4, a, 1e-5, 50);
    const StaggerResult r2 = staggered_step(prob, s0, 1e-4, a, 1e-5, 50);
    REQUIRE(r1.next.u == r2.next.u);
    REQUIRE(r1.next.phi == r2.next.phi);
    REQUIRE(r1.iterations == r2.iterations);
}
