#pragma once

#include <cmath>
#include <deque>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fractura/mesh.hpp"
#include "fractura/model.hpp"
#include "fractura/tintegrate.hpp"

namespace fractura {

enum class NotchMode { Slit, PhiBand };

/// A ready-to-run problem definition: geometry, load, material, mesh
/// resolution and the time window.
struct Scenario {
    std::string name = "branching-desk";
    double width = 1.0;
    double height = 2.0;
    double notch_len = 0.5;
    NotchMode notch = NotchMode::Slit;
    int nx = 32, ny = 64;
    std::string mesh_file; // nonempty: initial mesh read from file
    double traction = 1e4; // Pa, +y on the top face, -y on the bottom face
    MaterialParams material;
    double t_final = 0.012;
    double dt0 = 5e-5;
    double tol_max = 5e-3; // recommended controller tolerance

    void validate() const {
        if (!(notch_len < width)) throw InvalidParameter("Scenario: notch must be shorter than the plate");
        if (!(t_final > 0.0)) throw InvalidParameter("Scenario: t_final must be positive");
        material.validate();
    }
};

enum class ScenarioScale { Paper, Desk };

/// Notched-plate branching problem: 1 m x 2 m plate, 50 cm mid-height notch,
/// constant 10 kN/m traction pulling the top and bottom faces apart.
/// Paper scale uses the 262,144-element uniform grid with ell = 5 mm;
/// desk scale starts from 4,096 elements with ell = 10 mm.
inline Scenario branching_preset(ScenarioScale scale) {
    Scenario s;
    s.material = MaterialParams::from_youngs(208e6, 0.3, 2400.0, 0.5,
                                             scale == ScenarioScale::Paper ? 5e-3 : 10e-3);
    s.traction = 1e4;
    if (scale == ScenarioScale::Paper) {
        s.name = "branching-paper";
        s.nx = 256;
        s.ny = 512;
        s.t_final = 0.025;
        s.dt0 = 1e-5;
        s.tol_max = 1e-3;
    } else {
        s.name = "branching-desk";
        s.nx = 32;
        s.ny = 64;
        s.t_final = 0.012;
        s.dt0 = 5e-5;
        s.tol_max = 5e-3;
    }
    return s;
}

/// Branching geometry with a cubic degradation function and an 8 kN/m
/// traction. The unstructured variant reads its 2,464-element initial mesh
/// from a file.
inline Scenario cubic_preset(const std::string& unstructured_mesh_file = "") {
    Scenario s = branching_preset(ScenarioScale::Desk);
    s.name = "cubic";
    s.traction = 8e3;
    s.material.degradation = Degradation::Cubic;
    s.material.S = 1e-4;
    s.mesh_file = unstructured_mesh_file;
    return s;
}

/// Loads far too small to nucleate damage: the plate stays elastic.
inline Scenario elastic_preset() {
    Scenario s = branching_preset(ScenarioScale::Desk);
    s.name = "elastic";
    s.traction = 1e1;
    s.t_final = 4e-3;
    return s;
}

inline TriMesh make_scenario_mesh(const Scenario& s) {
    if (!s.mesh_file.empty()) return read_mesh_file(s.mesh_file);
    if (s.notch == NotchMode::Slit)
        return notched_rectangle(s.width, s.height, s.nx, s.ny, s.notch_len);
    return structured_rectangle(s.width, s.height, s.nx, s.ny);
}

/// Distance to the mid-height notch segment [0, notch_len] x {H/2}.
inline double notch_distance(const Scenario& s, const Vec2& p) {
    const double y0 = 0.5 * s.height;
    const double x = std::min(std::max(p.x, 0.0), s.notch_len);
    return std::hypot(p.x - x, p.y - y0);
}

/// Initial fields: at rest and undamaged, except that the PhiBand notch mode
/// imprints the optimal 1 - exp(-d/ell) profile around the notch segment.
inline FieldState initial_state(const Scenario& s, std::shared_ptr<const TriMesh> mesh) {
    FieldState st = FieldState::zero(mesh, tri_rule().n);
    if (s.notch == NotchMode::PhiBand) {
        for (std::size_t i = 0; i < mesh->n_vertices(); ++i)
            st.phi[i] = 1.0 - std::exp(-notch_distance(s, mesh->vertex(i)) / s.material.ell);
    }
    return st;
}

inline ProblemSetup problem_setup(const Scenario& s) {
    ProblemSetup p;
    p.material = s.material;
    p.loads = {{kTagTop, {0.0, s.traction}}, {kTagBottom, {0.0, -s.traction}}};
    return p;
}

/// Shear and Rayleigh wave speeds; c_R uses the standard approximation
/// c_R = c_s (0.862 + 1.14 nu) / (1 + nu).
inline double shear_speed(const MaterialParams& m) { return std::sqrt(m.mu / m.rho0); }

inline double rayleigh_speed(const MaterialParams& m) {
    const double nu = m.poisson();
    return shear_speed(m) * (0.862 + 1.14 * nu) / (1.0 + nu);
}

/// Crack tip abscissa: the maximum x over damaged nodes (phi <= 0.5) in the
/// connected damage region seeded nearest the notch tip. Returns found=false
/// before nucleation.
inline std::pair<double, bool> crack_tip(const TriMesh& mesh, const std::vector<double>& phi,
                                         const Vec2& notch_tip) {
    std::vector<VertexId> damaged;
    for (VertexId i = 0; i < mesh.n_vertices(); ++i)
        if (phi[i] <= 0.5) damaged.push_back(i);
    if (damaged.empty()) return {0.0, false};

    VertexId seed = damaged.front();
    double best = std::numeric_limits<double>::max();
    for (VertexId v : damaged) {
        const double d = (mesh.vertex(v) - notch_tip).norm2();
        if (d < best) {
            best = d;
            seed = v;
        }
    }
    const auto adj = mesh.vertex_adjacency();
    std::vector<char> in_region(mesh.n_vertices(), 0);
    std::deque<VertexId> queue{seed};
    in_region[seed] = 1;
    double tip = mesh.vertex(seed).x;
    while (!queue.empty()) {
        const VertexId v = queue.front();
        queue.pop_front();
        tip = std::max(tip, mesh.vertex(v).x);
        for (VertexId w : adj[v]) {
            if (!in_region[w] && phi[w] <= 0.5) {
                in_region[w] = 1;
                queue.push_back(w);
            }
        }
    }
    return {tip, true};
}

// ---------------------------------------------------------------------------
// Point location and the midline symmetry metric
// ---------------------------------------------------------------------------

/// Uniform-grid point locator over a triangulation.
class PointLocator {
public:
    explicit PointLocator(const TriMesh& mesh, int bins_per_axis = 64) : mesh_(&mesh) {
        lo_ = hi_ = mesh.vertex(0);
        for (const auto& v : mesh.vertices) {
            lo_.x = std::min(lo_.x, v.x);
            lo_.y = std::min(lo_.y, v.y);
            hi_.x = std::max(hi_.x, v.x);
            hi_.y = std::max(hi_.y, v.y);
        }
        nb_ = bins_per_axis;
        bins_.resize(static_cast<std::size_t>(nb_) * nb_);
        for (TriId t = 0; t < mesh.n_triangles(); ++t) {
            const auto& tv = mesh.tri(t);
            Vec2 tlo = mesh.vertex(tv[0]), thi = tlo;
            for (int k = 1; k < 3; ++k) {
                const auto& v = mesh.vertex(tv[k]);
                tlo.x = std::min(tlo.x, v.x);
                tlo.y = std::min(tlo.y, v.y);
                thi.x = std::max(thi.x, v.x);
                thi.y = std::max(thi.y, v.y);
            }
            for (int by = bin(tlo.y, lo_.y, hi_.y); by <= bin(thi.y, lo_.y, hi_.y); ++by)
                for (int bx = bin(tlo.x, lo_.x, hi_.x); bx <= bin(thi.x, lo_.x, hi_.x); ++bx)
                    bins_[by * nb_ + bx].push_back(t);
        }
    }

    /// Containing triangle and barycentric coordinates; kNoTri if outside.
    TriId locate(const Vec2& p, std::array<double, 3>& bary, double tol = 1e-10) const {
        const int bx = bin(p.x, lo_.x, hi_.x), by = bin(p.y, lo_.y, hi_.y);
        for (TriId t : bins_[by * nb_ + bx]) {
            const auto& tv = mesh_->tri(t);
            const double A = mesh_->signed_area(t);
            const double l0 = signed_area(p, mesh_->vertex(tv[1]), mesh_->vertex(tv[2])) / A;
            const double l1 = signed_area(mesh_->vertex(tv[0]), p, mesh_->vertex(tv[2])) / A;
            const double l2 = 1.0 - l0 - l1;
            if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
                bary = {l0, l1, l2};
                return t;
            }
        }
        return kNoTri;
    }

    double interpolate(const std::vector<double>& nodal, const Vec2& p, double fallback) const {
        std::array<double, 3> b;
        const TriId t = locate(p, b);
        if (t == kNoTri) return fallback;
        const auto& tv = mesh_->tri(t);
        return b[0] * nodal[tv[0]] + b[1] * nodal[tv[1]] + b[2] * nodal[tv[2]];
    }

private:
    int bin(double x, double lo, double hi) const {
        const int b = static_cast<int>((x - lo) / (hi - lo + 1e-300) * nb_);
        return std::min(std::max(b, 0), nb_ - 1);
    }
    const TriMesh* mesh_;
    Vec2 lo_, hi_;
    int nb_;
    std::vector<std::vector<TriId>> bins_;
};

/// Asymmetry of the damage field about the horizontal midline,
///   A = int |phi(x,y) - phi(x, 2 y_mid - y)| dA / int (1 - phi) dA,
/// evaluated by centroid sampling with reflected-point interpolation.
/// Zero for a perfectly symmetric field; bounded by 2.
inline double asymmetry_metric(const TriMesh& mesh, const std::vector<double>& phi, double y_mid) {
    const PointLocator loc(mesh);
    double num = 0.0, den = 0.0;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tv = mesh.tri(t);
        const double A = mesh.area(t);
        const Vec2 c = mesh.centroid(t);
        const double here = (phi[tv[0]] + phi[tv[1]] + phi[tv[2]]) / 3.0;
        const double there = loc.interpolate(phi, {c.x, 2.0 * y_mid - c.y}, here);
        num += A * std::abs(here - there);
        den += A * (1.0 - here);
    }
    if (den <= 1e-12) return 0.0;
    return num / den;
}

// ---------------------------------------------------------------------------
// Steady 1D profile study
// ---------------------------------------------------------------------------

struct Profile1DResult {
    double linf_error = 0.0;       // vs the analytic 1 - exp(-|x|/ell)
    double dissipation = 0.0;      // per unit crack length
    double dissipation_rel_err = 0.0; // vs Gc
    std::size_t n_elements = 0;
};

/// Solve the steady phase-field equation (phi - 1) - ell^2 lap phi = 0 with
/// phi(0) = 0 on a thin strip [-w*ell, w*ell] and compare against the
/// optimal profile 1 - exp(-|x|/ell).
inline Profile1DResult profile_1d(double ell, double Gc, double half_width_in_ell = 10.0,
                                  double h_over_ell = 0.1) {
    const double L = 2.0 * half_width_in_ell * ell;
    const double h = h_over_ell * ell;
    const int nx = static_cast<int>(std::lround(L / h));
    if (nx % 2 != 0) throw InvalidParameter("profile_1d: resolution must center a node at x=0");

    TriMesh mesh = structured_rectangle(L, h, nx, 1);
    for (auto& v : mesh.vertices) v.x -= 0.5 * L;

    std::vector<NodeConstraint> bc;
    for (VertexId i = 0; i < mesh.n_vertices(); ++i)
        if (std::abs(mesh.vertex(i).x) < 1e-9 * L) bc.push_back({i, 0, 0.0});

    const DofMap dm(mesh, Space::P1Scalar, bc);
    const std::vector<double> w(mesh.n_triangles() * tri_rule().n, 1.0);
    AssembledSystem sys = assemble_scalar_operator(dm, w, ell * ell);
    sys.rhs += assemble_scalar_load(dm, w); // (q, 1)
    const std::vector<double> phi = dm.expand(solve_spd(sys.A, sys.rhs, 1e-12), true);

    Profile1DResult r;
    r.n_elements = mesh.n_triangles();
    for (VertexId i = 0; i < mesh.n_vertices(); ++i) {
        const double exact = 1.0 - std::exp(-std::abs(mesh.vertex(i).x) / ell);
        r.linf_error = std::max(r.linf_error, std::abs(phi[i] - exact));
    }
    MaterialParams dummy = MaterialParams::from_lame(1.0, 1.0, 1.0, Gc, ell);
    r.dissipation = dissipation(mesh, phi, dummy) / h;
    r.dissipation_rel_err = std::abs(r.dissipation - Gc) / Gc;
    return r;
}

/// Jittered variant of the notched plate: interior vertices are displaced by
/// a deterministic pseudorandom fraction of the local cell size, producing a
/// highly irregular mesh while keeping the boundary, the slit line, and
/// element orientations intact.
inline TriMesh make_unstructured_notched(double W, double H, int nx, int ny, double notch_len,
                                         double jitter = 0.38, std::uint32_t seed = 20220913) {
    TriMesh m = notched_rectangle(W, H, nx, ny, notch_len);
    const double dx = W / nx, dy = H / ny;

    std::vector<char> frozen(m.n_vertices(), 0);
    for (const auto& [e, tag] : m.boundary_edges) frozen[e.a] = frozen[e.b] = 1;

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double amp = jitter; amp > 1e-3; amp *= 0.5) {
        std::vector<Vec2> saved = m.vertices;
        std::mt19937 local = rng;
        for (std::size_t i = 0; i < m.n_vertices(); ++i) {
            const double ox = unit(local), oy = unit(local);
            if (frozen[i]) continue; // slit and hull nodes stay put
            m.vertices[i].x += amp * dx * ox;
            m.vertices[i].y += amp * dy * oy;
        }
        bool valid = true;
        for (TriId t = 0; t < m.n_triangles() && valid; ++t)
            if (m.signed_area(t) < 1e-12 * dx * dy) valid = false;
        if (valid) break;
        m.vertices = std::move(saved);
    }
    assign_refinement_edges(m);
    return m;
}

} // namespace fractura
