#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fractura/fem.hpp"
#include "fractura/tintegrate.hpp"

using namespace fractura;

namespace {

MaterialParams test_material() {
    auto p = MaterialParams::from_youngs(1e2, 0.3, 1.0, 1.0, 0.1);
    p.k_res = 0.0; // keep the operator un-regularized for exactness checks
    return p;
}

// Quadrature of a bivariate monomial over the reference triangle.
double quad_monomial(int px, int py) {
    const TriMesh ref = [] {
        TriMesh m;
        m.vertices = {{0, 0}, {1, 0}, {0, 1}};
        m.triangles = {{0, 1, 2}};
        assign_refinement_edges(m);
        return m;
    }();
    const ElemGeom g = elem_geom(ref, 0);
    double acc = 0.0;
    for (const auto& q : tri_rule().pts) {
        const double x = q.l1, y = q.l2; // vertex order (0,0),(1,0),(0,1)
        acc += q.w * g.area * std::pow(x, px) * std::pow(y, py);
    }
    return acc;
}

// exact integral of x^p y^q over the reference triangle: p! q! / (p+q+2)!
double exact_monomial(int p, int q) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(p) * fact(q) / fact(p + q + 2);
}

} // namespace

TEST_CASE("bubble function") {
    REQUIRE(bubble_value(1.0 / 3, 1.0 / 3, 1.0 / 3) == Catch::Approx(1.0));
    REQUIRE(bubble_value(1, 0, 0) == 0.0);
    REQUIRE(bubble_value(0.5, 0.5, 0.0) == 0.0);
    REQUIRE(bubble_value(0.0, 0.5, 0.5) == 0.0);
}

TEST_CASE("triangle rule integrates monomials through degree 4") {
    for (int p = 0; p <= 4; ++p)
        for (int q = 0; p + q <= 4; ++q)
            REQUIRE(quad_monomial(p, q) == Catch::Approx(exact_monomial(p, q)).epsilon(1e-13));
}

TEST_CASE("mass matrix row sums are the lumped areas") {
    const TriMesh mesh = structured_rectangle(1.0, 2.0, 5, 7);
    auto p = test_material();
    p.rho0 = 3.25;

    std::vector<double> ones(2 * mesh.n_vertices(), 0.0);
    for (std::size_t i = 0; i < mesh.n_vertices(); ++i) ones[2 * i] = 1.0; // x-translation
    const auto Mx = mass_apply(mesh, ones, p);

    // row sums: rho0 * (support area / 3) at each node
    std::vector<double> lumped(mesh.n_vertices(), 0.0);
    for (TriId t = 0; t < mesh.n_triangles(); ++t)
        for (const auto v : mesh.tri(t)) lumped[v] += p.rho0 * mesh.area(t) / 3.0;
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.n_vertices(); ++i) {
        REQUIRE(Mx[2 * i] == Catch::Approx(lumped[i]).epsilon(1e-12));
        REQUIRE(Mx[2 * i + 1] == Catch::Approx(0.0).margin(1e-15));
        total += Mx[2 * i];
    }
    REQUIRE(total == Catch::Approx(p.rho0 * 2.0).epsilon(1e-10));
}

TEST_CASE("stiffness annihilates rigid-body modes") {
    const TriMesh mesh = structured_rectangle(1.0, 1.0, 6, 6);
    const auto p = test_material();
    const std::vector<double> phi(mesh.n_vertices(), 1.0);

    std::vector<double> tx(2 * mesh.n_vertices(), 0.0), rot(2 * mesh.n_vertices(), 0.0);
    for (std::size_t i = 0; i < mesh.n_vertices(); ++i) {
        tx[2 * i] = 1.0;
        rot[2 * i] = -mesh.vertex(static_cast<VertexId>(i)).y;
        rot[2 * i + 1] = mesh.vertex(static_cast<VertexId>(i)).x;
    }
    const double scale = p.lambda + 2 * p.mu;
    for (const auto* mode : {&tx, &rot}) {
        const auto Ku = stiffness_apply(mesh, phi, *mode, p);
        for (double v : Ku) REQUIRE(std::abs(v) <= 1e-9 * scale);
    }
}

TEST_CASE("assembled operators are symmetric and order independent") {
    TriMesh mesh = structured_rectangle(1.0, 1.0, 4, 4);
    const DofMap dm(mesh, Space::P1Scalar);
    const std::vector<double> w(mesh.n_triangles() * tri_rule().n, 2.0);
    const auto sys = assemble_scalar_operator(dm, w, 0.7);

    const Eigen::MatrixXd A = Eigen::MatrixXd(sys.A.full());
    REQUIRE((A - A.transpose()).norm() <= 1e-12 * A.norm());

    // permute the element visitation order; entries agree up to reassociation
    TriMesh shuffled = mesh;
    std::mt19937 rng(3);
    std::shuffle(shuffled.triangles.begin(), shuffled.triangles.end(), rng);
    assign_refinement_edges(shuffled);
    const DofMap dm2(shuffled, Space::P1Scalar);
    const auto sys2 = assemble_scalar_operator(dm2, w, 0.7);
    const Eigen::MatrixXd A2 = Eigen::MatrixXd(sys2.A.full());
    REQUIRE((A - A2).norm() <= 1e-12 * A.norm());
}

TEST_CASE("bubble enrichment is hierarchical") {
    const TriMesh mesh = structured_rectangle(1.0, 1.0, 3, 3);
    const auto p = test_material();
    const AlphaParams a = alpha_params(0.5);
    const QNorm qn(p, a, 1e-2);

    const DofMap dm_p1(mesh, Space::P1Scalar);
    const DofMap dm_b(mesh, Space::EnrichedScalar);
    const auto g1 = qnorm_gram(dm_p1, qn);
    const auto gb = qnorm_gram(dm_b, qn);

    // the nodal block of the enriched Gram is exactly the P1 Gram
    const Eigen::MatrixXd G1 = Eigen::MatrixXd(g1.A.full());
    const Eigen::MatrixXd GB = Eigen::MatrixXd(gb.A.full());
    REQUIRE((GB.topLeftCorner(G1.rows(), G1.cols()) - G1).norm() <= 1e-13 * G1.norm());

    // SPD audit
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(GB);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("q-norm values on closed-form fields") {
    // unit square, eta = 1, ell = 1, Gc = 1; time factor c
    auto p = MaterialParams::from_lame(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    const AlphaParams a = alpha_params(0.5);
    const double dt = 0.37;
    const QNorm qn(p, a, dt);
    const double c = a.af_j * dt * a.gamma_j / a.am_j;
    REQUIRE(qn.time_factor() == Catch::Approx(c));

    const TriMesh mesh = structured_rectangle(1.0, 1.0, 4, 4);
    const DofMap dm(mesh, Space::P1Scalar);
    const auto gram = qnorm_gram(dm, qn);

    SECTION("constant field") {
        const Vector one = Vector::Ones(dm.n_free());
        const double sq = one.dot(gram.A.multiply(one));
        REQUIRE(sq == Catch::Approx(1.0 + 2.0 * c).epsilon(1e-12));
    }
    SECTION("linear field x - 1/2") {
        Vector f(dm.n_free());
        for (VertexId i = 0; i < mesh.n_vertices(); ++i) f[i] = mesh.vertex(i).x - 0.5;
        const double sq = f.dot(gram.A.multiply(f));
        // eta |f|^2 + c[(1+1)|f|^2 + |grad f|^2] with |f|^2 = 1/12, |grad f|^2 = 1
        const double expect = 1.0 / 12.0 + c * (2.0 / 12.0 + 1.0);
        REQUIRE(sq == Catch::Approx(expect).epsilon(1e-12));
    }
    SECTION("element contributions sum to the global square") {
        std::mt19937 rng(31);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        Vector f(dm.n_free());
        for (auto i = 0; i < f.size(); ++i) f[i] = unif(rng);
        const double sq = f.dot(gram.A.multiply(f));
        double acc = 0.0;
        for (TriId t = 0; t < mesh.n_triangles(); ++t) {
            const auto& tv = mesh.tri(t);
            acc += element_qnorm_sq(mesh, t, {f[tv[0]], f[tv[1]], f[tv[2]], 0.0}, qn, false);
        }
        REQUIRE(acc == Catch::Approx(sq).epsilon(1e-10));
    }
}

TEST_CASE("momentum system stays at rest without loads") {
    const TriMesh mesh = structured_rectangle(1.0, 1.0, 4, 4);
    const auto p = test_material();
    const AlphaParams a = alpha_params(0.5);
    const DofMap dm(mesh, Space::P1Vector);
    FieldState s = FieldState::zero(std::make_shared<TriMesh>(mesh), tri_rule().n);
    const std::vector<double> f(2 * mesh.n_vertices(), 0.0);

    const auto sys = assemble_momentum(dm, s.phi, p, a, 1e-2, s.view(), f);
    const Vector inc = solve_spd(sys.A, sys.rhs);
    REQUIRE(inc.norm() == 0.0);
}

TEST_CASE("single-dof momentum system reproduces the scalar update") {
    // one triangle with every dof constrained except u_y at vertex 2; the
    // oracle is an independently hand-stepped scalar recurrence
    TriMesh mesh;
    mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
    mesh.triangles = {{0, 1, 2}};
    mesh.boundary_edges.emplace(Edge(0, 1), 1);
    mesh.boundary_edges.emplace(Edge(1, 2), 1);
    mesh.boundary_edges.emplace(Edge(2, 0), 1);
    assign_refinement_edges(mesh);

    const auto p = test_material();
    const double rho_inf = 0.37;
    const AlphaParams al = alpha_params(rho_inf);
    const std::vector<NodeConstraint> bc = {{0, 0, 0.0}, {0, 1, 0.0}, {1, 0, 0.0},
                                            {1, 1, 0.0}, {2, 0, 0.0}};
    const DofMap dm(mesh, Space::P1Vector, bc);
    REQUIRE(dm.n_free() == 1);

    // modal mass and stiffness of the free dof
    const std::size_t d = 2 * 2 + 1;
    std::vector<double> e(6, 0.0);
    e[d] = 1.0;
    const std::vector<double> phi(3, 1.0);
    const double m = mass_apply(mesh, e, p)[d];
    const double k = stiffness_apply(mesh, phi, e, p)[d];

    auto mesh_ptr = std::make_shared<TriMesh>(mesh);
    FieldState s = FieldState::zero(mesh_ptr, tri_rule().n);
    s.u[d] = 1e-3;
    s.udot[d] = -2e-4;
    s.uddot[d] = -k / m * s.u[d];

    // independent scalar oracle, transcribed directly from the update
    double ou = s.u[d], ov = s.udot[d], oa = s.uddot[d];
    const double dt = 0.05;
    const double af = 1.0 / (1.0 + rho_inf);
    const double am = (2.0 - rho_inf) / (1.0 + rho_inf);
    const double gamma = 0.5 + am - af;
    const double beta = 0.25 * (1.0 + am - af) * (1.0 + am - af);

    const std::vector<double> fext(6, 0.0);
    for (int step = 0; step < 10; ++step) {
        const auto sys = assemble_momentum(dm, s.phi, p, al, dt, s.view(), fext);
        const Vector inc = solve_spd(sys.A, sys.rhs, 1e-14);
        const auto inc_full = dm.expand(inc);
        std::vector<double> inc_phi(3, 0.0);
        s = kinematic_update(s, inc_full, inc_phi, al, dt);

        const double rhs =
            (beta * dt * dt / am) * (-k * ou + m * ((am / (2 * beta) - 1.0) * oa + am / (beta * dt) * ov));
        const double du = rhs / (m + beta * dt * dt * af / am * k);
        const double da = (du - dt * ov - 0.5 * dt * dt * oa) / (beta * dt * dt);
        ou += du;
        ov += dt * (oa + gamma * da);
        oa += da;

        REQUIRE(s.u[d] == Catch::Approx(ou).epsilon(1e-12).margin(1e-16));
        REQUIRE(s.udot[d] == Catch::Approx(ov).epsilon(1e-12).margin(1e-16));
        REQUIRE(s.uddot[d] == Catch::Approx(oa).epsilon(1e-12).margin(1e-16));
    }
}

TEST_CASE("static limit reproduces plane-strain uniaxial stretch") {
    // rollers on the bottom and left, uniform traction on top: homogeneous
    // strain, reproduced exactly by P1 elements
    const TriMesh mesh = structured_rectangle(1.0, 1.0, 6, 6);
    auto p = MaterialParams::from_youngs(100.0, 0.3, 1e-9, 1.0, 0.1);
    p.k_res = 0.0;
    const double sigma = 1.0;
    const double E = 100.0, nu = 0.3;

    std::vector<NodeConstraint> bc;
    for (VertexId i = 0; i < mesh.n_vertices(); ++i) {
        if (std::abs(mesh.vertex(i).y) < 1e-12) bc.push_back({i, 1, 0.0});
        if (std::abs(mesh.vertex(i).x) < 1e-12) bc.push_back({i, 0, 0.0});
    }
    const DofMap dm(mesh, Space::P1Vector, bc);
    const AlphaParams a = alpha_params(0.0); // af = 1: the static limit is exact
    FieldState s = FieldState::zero(std::make_shared<TriMesh>(mesh), tri_rule().n);
    const auto fext = external_force(mesh, p, {{kTagTop, {0.0, sigma}}});

    const double dt = 1e6;
    const auto sys = assemble_momentum(dm, s.phi, p, a, dt, s.view(), fext);
    const auto u = dm.expand(solve_spd(sys.A, sys.rhs, 1e-13));

    const double eyy = sigma * (1.0 - nu * nu) / E;
    const double exx = -sigma * nu * (1.0 + nu) / E;
    for (VertexId i = 0; i < mesh.n_vertices(); ++i) {
        REQUIRE(u[2 * i] == Catch::Approx(exx * mesh.vertex(i).x).margin(1e-8 * std::abs(eyy)));
        REQUIRE(u[2 * i + 1] == Catch::Approx(eyy * mesh.vertex(i).y).margin(1e-8 * std::abs(eyy)));
    }
}

TEST_CASE("undamaged phase-field step stays at one") {
    const TriMesh mesh = structured_rectangle(1.0, 1.0, 4, 4);
    auto p = test_material();
    p.eta = 0.3;
    const AlphaParams a = alpha_params(0.5);
    FieldState s = FieldState::zero(std::make_shared<TriMesh>(mesh), tri_rule().n);

    const DofMap dm(mesh, Space::P1Scalar);
    const auto sys = assemble_phasefield(dm, s.H, p, a, 1e-2, s.view());
    const Vector inc = solve_spd(sys.A, sys.rhs, 1e-13);
    REQUIRE(inc.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("phase field dips monotonically with the history drive") {
    // static solve of the linearized equation on a strip, against a dense
    // oracle, sweeping H in a middle column of elements
    const double ell = 0.05;
    auto p = MaterialParams::from_lame(1.0, 1.0, 1.0, 1.0, ell);
    const TriMesh mesh = structured_rectangle(1.0, 0.1, 40, 4);
    const DofMap dm(mesh, Space::P1Scalar);
    const auto& rule = tri_rule();

    double prev_min = 1.0;
    for (const double Hval : {0.5, 2.0, 8.0, 32.0}) {
        // mass weight 2 ell H / Gc + 1 (quadratic linearization), source (q,1)
        std::vector<double> w(mesh.n_triangles() * rule.n, 1.0);
        for (TriId t = 0; t < mesh.n_triangles(); ++t) {
            const Vec2 c = mesh.centroid(t);
            if (std::abs(c.x - 0.5) < 0.025) {
                for (int q = 0; q < rule.n; ++q)
                    w[t * rule.n + q] = 2.0 * ell * Hval / p.Gc + 1.0;
            }
        }
        auto sys = assemble_scalar_operator(dm, w, ell * ell);
        const std::vector<double> one(mesh.n_triangles() * rule.n, 1.0);
        sys.rhs += assemble_scalar_load(dm, one);

        const Vector phi = solve_spd(sys.A, sys.rhs, 1e-13);
        const Vector phi_dense =
            Eigen::FullPivLU<Eigen::MatrixXd>(Eigen::MatrixXd(sys.A.full())).solve(sys.rhs);
        REQUIRE((phi - phi_dense).norm() <= 1e-9 * phi_dense.norm());

        const double mn = phi.minCoeff();
        REQUIRE(mn < prev_min);
        prev_min = mn;
    }
    REQUIRE(prev_min > 0.0);
    REQUIRE(prev_min < 0.6);
}
