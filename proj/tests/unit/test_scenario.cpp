#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <set>

#include "fractura/scenario.hpp"

using namespace fractura;

TEST_CASE("branching presets carry the reference values") {
    const Scenario paper = branching_preset(ScenarioScale::Paper);
    REQUIRE(paper.material.Gc == Catch::Approx(0.5));
    REQUIRE(paper.material.youngs() == Catch::Approx(208e6));
    REQUIRE(paper.material.poisson() == Catch::Approx(0.3));
    REQUIRE(paper.material.rho0 == Catch::Approx(2400.0));
    REQUIRE(paper.material.ell == Catch::Approx(5e-3));
    REQUIRE(paper.notch_len == Catch::Approx(0.5));
    REQUIRE(paper.width == Catch::Approx(1.0));
    REQUIRE(paper.height == Catch::Approx(2.0));
    REQUIRE(paper.traction == Catch::Approx(1e4));
    REQUIRE(2 * paper.nx * paper.ny == 262144);

    const Scenario desk = branching_preset(ScenarioScale::Desk);
    REQUIRE(2 * desk.nx * desk.ny == 4096);
    REQUIRE(desk.material.ell == Catch::Approx(10e-3));
    REQUIRE(desk.tol_max == Catch::Approx(5e-3));
    const TriMesh m = make_scenario_mesh(desk);
    REQUIRE(m.n_triangles() == 4096);
    // initial structured mesh size ~ 45 mm (cell diagonal)
    REQUIRE(m.min_element_size() == Catch::Approx(0.0442).margin(0.002));
}

TEST_CASE("cubic preset and the unstructured variant") {
    const Scenario c = cubic_preset();
    REQUIRE(c.traction == Catch::Approx(8e3));
    REQUIRE(c.material.degradation == Degradation::Cubic);
    REQUIRE(c.material.S == Catch::Approx(1e-4));

    SECTION("missing mesh file raises FileNotFound") {
        const Scenario bad = cubic_preset("/nonexistent/mesh.txt");
        REQUIRE_THROWS_AS(make_scenario_mesh(bad), FileNotFound);
    }
    SECTION("generated 2,464-element unstructured mesh round-trips") {
        const TriMesh um = make_unstructured_notched(1.0, 2.0, 28, 44, 0.5);
        REQUIRE(um.n_triangles() == 2464);
        REQUIRE(um.is_conforming());
        const std::string path = "unstructured_2464_test.msh";
        write_mesh_file(path, um);
        const Scenario sc = cubic_preset(path);
        const TriMesh loaded = make_scenario_mesh(sc);
        REQUIRE(loaded.n_triangles() == 2464);
        REQUIRE(loaded.is_conforming());
        std::remove(path.c_str());
    }
}

TEST_CASE("unstructured mesh is genuinely irregular but valid") {
    const TriMesh um = make_unstructured_notched(1.0, 2.0, 28, 44, 0.5);
    REQUIRE(um.total_area() == Catch::Approx(2.0).epsilon(1e-9));
    double min_q = 1.0;
    for (TriId t = 0; t < um.n_triangles(); ++t) {
        REQUIRE(um.signed_area(t) > 0.0);
        min_q = std::min(min_q, um.shortest_edge(t) / um.diameter(t));
    }
    REQUIRE(min_q < 0.35); // contains strongly distorted elements
}

TEST_CASE("structured branching mesh is mirror symmetric about the midline") {
    const TriMesh m = notched_rectangle(1.0, 2.0, 16, 32, 0.5);
    std::multiset<std::pair<long, long>> centroids;
    const double s = 1e7;
    for (TriId t = 0; t < m.n_triangles(); ++t) {
        const Vec2 c = m.centroid(t);
        centroids.insert({std::lround(c.x * s), std::lround(std::abs(c.y - 1.0) * s)});
    }
    for (TriId t = 0; t < m.n_triangles(); ++t) {
        const Vec2 c = m.centroid(t);
        REQUIRE(centroids.count({std::lround(c.x * s), std::lround(std::abs(c.y - 1.0) * s)}) == 2);
    }
}

TEST_CASE("crack tip location") {
    const TriMesh m = structured_rectangle(1.0, 2.0, 16, 32);
    const Vec2 tip{0.5, 1.0};

    SECTION("undamaged field has no tip") {
        const std::vector<double> phi(m.n_vertices(), 1.0);
        REQUIRE_FALSE(crack_tip(m, phi, tip).second);
    }
    SECTION("damage along the notch line puts the tip at the notch length") {
        std::vector<double> phi(m.n_vertices(), 1.0);
        for (VertexId i = 0; i < m.n_vertices(); ++i)
            if (std::abs(m.vertex(i).y - 1.0) < 1e-12 && m.vertex(i).x <= 0.5 + 1e-12)
                phi[i] = 0.0;
        const auto [x, known] = crack_tip(m, phi, tip);
        REQUIRE(known);
        REQUIRE(x == Catch::Approx(0.5));
    }
    SECTION("disconnected damage elsewhere is ignored") {
        std::vector<double> phi(m.n_vertices(), 1.0);
        for (VertexId i = 0; i < m.n_vertices(); ++i) {
            const Vec2 v = m.vertex(i);
            if (std::abs(v.y - 1.0) < 1e-12 && v.x <= 0.5 + 1e-12) phi[i] = 0.0;
            if (std::abs(v.y - 0.25) < 1e-12 && v.x >= 0.9) phi[i] = 0.0; // spurious blob
        }
        const auto [x, known] = crack_tip(m, phi, tip);
        REQUIRE(known);
        REQUIRE(x == Catch::Approx(0.5));
    }
}

TEST_CASE("rayleigh speed approximation") {
    const auto m = MaterialParams::from_youngs(208e6, 0.3, 2400.0, 0.5, 5e-3);
    const double cs = shear_speed(m);
    REQUIRE(cs == Catch::Approx(std::sqrt(80e6 / 2400.0)).epsilon(1e-12));
    REQUIRE(rayleigh_speed(m) / cs == Catch::Approx((0.862 + 1.14 * 0.3) / 1.3).epsilon(1e-12));
}

TEST_CASE("asymmetry metric") {
    const TriMesh m = structured_rectangle(1.0, 2.0, 12, 24);

    SECTION("symmetric damage band scores near zero") {
        std::vector<double> phi(m.n_vertices());
        for (VertexId i = 0; i < m.n_vertices(); ++i)
            phi[i] = 1.0 - std::exp(-std::abs(m.vertex(i).y - 1.0) / 0.1);
        REQUIRE(asymmetry_metric(m, phi, 1.0) <= 1e-10);
    }
    SECTION("one-sided damage scores high") {
        std::vector<double> phi(m.n_vertices(), 1.0);
        for (VertexId i = 0; i < m.n_vertices(); ++i)
            if (m.vertex(i).y > 1.2 && m.vertex(i).y < 1.4) phi[i] = 0.0;
        const double A = asymmetry_metric(m, phi, 1.0);
        REQUIRE(A > 0.5);
        REQUIRE(A <= 2.0);
    }
    SECTION("undamaged plate scores zero") {
        const std::vector<double> phi(m.n_vertices(), 1.0);
        REQUIRE(asymmetry_metric(m, phi, 1.0) == 0.0);
    }
}

TEST_CASE("steady 1D profile oracle") {
    const auto r = profile_1d(0.01, 0.5);
    REQUIRE(r.linf_error <= 2e-2);
    REQUIRE(r.dissipation_rel_err <= 0.02);
    REQUIRE(r.dissipation == Catch::Approx(0.5).epsilon(0.02));
}

TEST_CASE("phi-band initial state imprints the notch profile") {
    Scenario sc = branching_preset(ScenarioScale::Desk);
    sc.notch = NotchMode::PhiBand;
    auto mesh = std::make_shared<const TriMesh>(make_scenario_mesh(sc));
    const FieldState s = initial_state(sc, mesh);
    double mn = 1.0;
    for (double p : s.phi) {
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        mn = std::min(mn, p);
    }
    REQUIRE(mn <= 1e-9); // zero on the notch line
    // far from the notch the material is intact
    for (VertexId i = 0; i < mesh->n_vertices(); ++i)
        if (notch_distance(sc, mesh->vertex(i)) > 0.3) REQUIRE(s.phi[i] > 0.99);
}
