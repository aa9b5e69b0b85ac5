#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fractura/alpha.hpp"
#include "fractura/errors.hpp"
#include "fractura/linalg.hpp"
#include "fractura/mesh.hpp"
#include "fractura/model.hpp"

namespace fractura {

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Symmetric 6-point triangle rule, exact through degree 4 (covers the
/// cubic-bubble x linear products). Weights sum to 1 and scale by the
/// element area. Used for every element integral in the project.
struct TriQuadRule {
    struct Point {
        double l0, l1, l2, w;
    };
    std::array<Point, 6> pts;
    static constexpr int n = 6;
};

inline const TriQuadRule& tri_rule() {
    static const TriQuadRule rule = [] {
        TriQuadRule r{};
        const double a = 0.445948490915965, wa = 0.223381589678011;
        const double b = 0.091576213509771, wb = 0.109951743655322;
        r.pts = {{{a, a, 1 - 2 * a, wa},
                  {a, 1 - 2 * a, a, wa},
                  {1 - 2 * a, a, a, wa},
                  {b, b, 1 - 2 * b, wb},
                  {b, 1 - 2 * b, b, wb},
                  {1 - 2 * b, b, b, wb}}};
        return r;
    }();
    return rule;
}

/// Cubic bubble on the reference triangle, normalized to 1 at the centroid.
inline double bubble_value(double l0, double l1, double l2) {
    return 27.0 * l0 * l1 * l2;
}

// ---------------------------------------------------------------------------
// Element geometry
// ---------------------------------------------------------------------------

struct ElemGeom {
    std::array<Vec2, 3> grad; // P1 shape gradients (constant)
    double area;
};

inline ElemGeom elem_geom(const TriMesh& mesh, TriId t) {
    const auto& tv = mesh.tri(t);
    const Vec2 &a = mesh.vertex(tv[0]), &b = mesh.vertex(tv[1]), &c = mesh.vertex(tv[2]);
    const double A2 = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    ElemGeom g;
    g.area = 0.5 * A2;
    const double inv = 1.0 / A2;
    g.grad[0] = {(b.y - c.y) * inv, (c.x - b.x) * inv};
    g.grad[1] = {(c.y - a.y) * inv, (a.x - c.x) * inv};
    g.grad[2] = {(a.y - b.y) * inv, (b.x - a.x) * inv};
    return g;
}

/// Constant element strain of an interleaved P1 displacement field.
inline Sym2 element_strain(const TriMesh& mesh, TriId t, const std::vector<double>& u) {
    const ElemGeom g = elem_geom(mesh, t);
    const auto& tv = mesh.tri(t);
    Sym2 eps;
    for (int i = 0; i < 3; ++i) {
        const double ux = u[2 * tv[i]], uy = u[2 * tv[i] + 1];
        eps.xx += g.grad[i].x * ux;
        eps.yy += g.grad[i].y * uy;
        eps.xy += 0.5 * (g.grad[i].y * ux + g.grad[i].x * uy);
    }
    return eps;
}

// ---------------------------------------------------------------------------
// Dof management
// ---------------------------------------------------------------------------

enum class Space { P1Scalar, P1Vector, EnrichedScalar };

/// Dirichlet constraint on a nodal dof. comp is 0/1 for vector fields and
/// ignored for scalar ones.
struct NodeConstraint {
    VertexId node;
    int comp = 0;
    double value = 0.0;
};

/// Maps mesh entities to equation numbers and carries the Dirichlet data.
/// Dof order: nodal dofs first (interleaved x,y for vector fields), then one
/// bubble dof per element for the enriched scalar space. Bubbles are never
/// constrained.
class DofMap {
public:
    DofMap(const TriMesh& mesh, Space space, const std::vector<NodeConstraint>& dirichlet = {})
        : mesh_(&mesh), space_(space) {
        const std::size_t nv = mesh.n_vertices();
        const std::size_t ne = mesh.n_triangles();
        switch (space) {
            case Space::P1Scalar: n_dofs_ = nv; break;
            case Space::P1Vector: n_dofs_ = 2 * nv; break;
            case Space::EnrichedScalar: n_dofs_ = nv + ne; break;
        }
        free_of_dof_.assign(n_dofs_, 0);
        fixed_.assign(n_dofs_, 0.0);
        for (const auto& c : dirichlet) {
            if (c.node >= nv) throw InvalidParameter("DofMap: constraint node out of range");
            const std::size_t d = (space == Space::P1Vector) ? 2 * c.node + c.comp : c.node;
            free_of_dof_[d] = -1;
            fixed_[d] = c.value;
        }
        n_free_ = 0;
        for (std::size_t d = 0; d < n_dofs_; ++d)
            if (free_of_dof_[d] == 0) free_of_dof_[d] = static_cast<std::ptrdiff_t>(n_free_++);
    }

    const TriMesh& mesh() const { return *mesh_; }
    Space space() const { return space_; }
    std::size_t n_dofs() const { return n_dofs_; }
    std::size_t n_free() const { return n_free_; }
    bool is_free(std::size_t dof) const { return free_of_dof_[dof] >= 0; }
    std::ptrdiff_t free_index(std::size_t dof) const { return free_of_dof_[dof]; }
    double fixed_value(std::size_t dof) const { return fixed_[dof]; }

    std::size_t bubble_dof(TriId t) const { return mesh_->n_vertices() + t; }

    /// Gather the free entries of a full-length vector.
    Vector reduce(const std::vector<double>& full) const {
        if (full.size() != n_dofs_) throw InvalidParameter("DofMap::reduce: size mismatch");
        Vector out(n_free_);
        for (std::size_t d = 0; d < n_dofs_; ++d)
            if (free_of_dof_[d] >= 0) out[free_of_dof_[d]] = full[d];
        return out;
    }

    /// Scatter free values into a full-length vector; constrained entries get
    /// their prescribed values (or zero when solving for increments).
    std::vector<double> expand(const Vector& free, bool with_fixed_values = false) const {
        std::vector<double> out(n_dofs_, 0.0);
        for (std::size_t d = 0; d < n_dofs_; ++d) {
            if (free_of_dof_[d] >= 0) out[d] = free[free_of_dof_[d]];
            else if (with_fixed_values) out[d] = fixed_[d];
        }
        return out;
    }

private:
    const TriMesh* mesh_;
    Space space_;
    std::size_t n_dofs_ = 0;
    std::size_t n_free_ = 0;
    std::vector<std::ptrdiff_t> free_of_dof_;
    std::vector<double> fixed_;
};

/// Vertices incident to boundary edges carrying the given tag.
inline std::vector<VertexId> nodes_on_tag(const TriMesh& mesh, int tag) {
    std::vector<VertexId> out;
    for (const auto& [e, t] : mesh.boundary_edges) {
        if (t != tag) continue;
        out.push_back(e.a);
        out.push_back(e.b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct AssembledSystem {
    SparseSym A;
    Vector rhs;
    const DofMap* dofs = nullptr;
};

// ---------------------------------------------------------------------------
// Scalar-field kernels (P1 and bubble-enriched)
// ---------------------------------------------------------------------------

namespace detail {

struct LocalBasis {
    // value and gradient of the (up to 4) local scalar shape functions at a
    // quadrature point
    std::array<double, 4> val;
    std::array<Vec2, 4> grad;
    int n;
};

inline LocalBasis local_basis(const ElemGeom& g, const TriQuadRule::Point& q, bool enriched) {
    LocalBasis b{};
    b.n = enriched ? 4 : 3;
    b.val = {q.l0, q.l1, q.l2, 0.0};
    b.grad = {g.grad[0], g.grad[1], g.grad[2], Vec2{}};
    if (enriched) {
        b.val[3] = bubble_value(q.l0, q.l1, q.l2);
        b.grad[3] = 27.0 * (q.l1 * q.l2 * g.grad[0] + q.l0 * q.l2 * g.grad[1] +
                            q.l0 * q.l1 * g.grad[2]);
    }
    return b;
}

inline std::array<std::size_t, 4> local_dofs(const TriMesh& mesh, TriId t, bool enriched) {
    const auto& tv = mesh.tri(t);
    return {tv[0], tv[1], tv[2], enriched ? mesh.n_vertices() + t : 0};
}

} // namespace detail

/// Assemble kappa * (grad q, grad v) + (q, w(x) v) on the scalar space, with
/// the mass weight given per element and quadrature point. Dirichlet rows and
/// columns are eliminated, with the corresponding RHS correction returned.
inline AssembledSystem assemble_scalar_operator(const DofMap& dm,
                                                const std::vector<double>& mass_weight_qp,
                                                double kappa) {
    const TriMesh& mesh = dm.mesh();
    const bool enriched = dm.space() == Space::EnrichedScalar;
    if (dm.space() == Space::P1Vector)
        throw InvalidParameter("assemble_scalar_operator: scalar space required");
    const auto& rule = tri_rule();
    if (mass_weight_qp.size() != mesh.n_triangles() * rule.n)
        throw InvalidParameter("assemble_scalar_operator: weight table size mismatch");

    std::vector<Triplet> trips;
    trips.reserve(mesh.n_triangles() * (enriched ? 16 : 9));
    Vector rhs = Vector::Zero(dm.n_free());

    const int nl = enriched ? 4 : 3;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const ElemGeom g = elem_geom(mesh, t);
        const auto dofs = detail::local_dofs(mesh, t, enriched);
        double ke[4][4] = {};
        for (int k = 0; k < rule.n; ++k) {
            const auto& q = rule.pts[k];
            const auto b = detail::local_basis(g, q, enriched);
            const double wq = q.w * g.area;
            const double mw = mass_weight_qp[t * rule.n + k];
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j <= i; ++j)
                    ke[i][j] += wq * (kappa * b.grad[i].dot(b.grad[j]) + mw * b.val[i] * b.val[j]);
        }
        for (int i = 0; i < nl; ++i) {
            for (int j = 0; j <= i; ++j) {
                const double v = ke[i][j];
                const bool fi = dm.is_free(dofs[i]), fj = dm.is_free(dofs[j]);
                if (fi && fj) {
                    trips.emplace_back(dm.free_index(dofs[i]), dm.free_index(dofs[j]), v);
                } else if (fi && !fj) {
                    rhs[dm.free_index(dofs[i])] -= v * dm.fixed_value(dofs[j]);
                } else if (!fi && fj && i != j) {
                    rhs[dm.free_index(dofs[j])] -= v * dm.fixed_value(dofs[i]);
                }
            }
        }
    }
    AssembledSystem sys;
    sys.A = SparseSym(static_cast<Eigen::Index>(dm.n_free()), trips);
    sys.rhs = std::move(rhs);
    sys.dofs = &dm;
    return sys;
}

/// (q, f) with f sampled per element and quadrature point; rows over the free
/// dofs of the scalar test space.
inline Vector assemble_scalar_load(const DofMap& dm, const std::vector<double>& f_qp) {
    const TriMesh& mesh = dm.mesh();
    const bool enriched = dm.space() == Space::EnrichedScalar;
    const auto& rule = tri_rule();
    if (f_qp.size() != mesh.n_triangles() * rule.n)
        throw InvalidParameter("assemble_scalar_load: sample table size mismatch");
    Vector out = Vector::Zero(dm.n_free());
    const int nl = enriched ? 4 : 3;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const ElemGeom g = elem_geom(mesh, t);
        const auto dofs = detail::local_dofs(mesh, t, enriched);
        for (int k = 0; k < rule.n; ++k) {
            const auto& q = rule.pts[k];
            const auto b = detail::local_basis(g, q, enriched);
            const double c = q.w * g.area * f_qp[t * rule.n + k];
            for (int i = 0; i < nl; ++i)
                if (dm.is_free(dofs[i])) out[dm.free_index(dofs[i])] += c * b.val[i];
        }
    }
    return out;
}

/// kappa * (grad q, grad p) for a P1 nodal field p, over the test space rows.
inline Vector assemble_scalar_stiffness_apply(const DofMap& dm, const std::vector<double>& p1_field,
                                              double kappa) {
    const TriMesh& mesh = dm.mesh();
    if (p1_field.size() != mesh.n_vertices())
        throw InvalidParameter("assemble_scalar_stiffness_apply: field size mismatch");
    const bool enriched = dm.space() == Space::EnrichedScalar;
    const auto& rule = tri_rule();
    Vector out = Vector::Zero(dm.n_free());
    const int nl = enriched ? 4 : 3;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const ElemGeom g = elem_geom(mesh, t);
        const auto& tv = mesh.tri(t);
        const auto dofs = detail::local_dofs(mesh, t, enriched);
        const Vec2 grad_p = g.grad[0] * p1_field[tv[0]] + g.grad[1] * p1_field[tv[1]] +
                            g.grad[2] * p1_field[tv[2]];
        for (const auto& q : rule.pts) {
            const auto b = detail::local_basis(g, q, enriched);
            const double wq = q.w * g.area * kappa;
            for (int i = 0; i < nl; ++i)
                if (dm.is_free(dofs[i])) out[dm.free_index(dofs[i])] += wq * b.grad[i].dot(grad_p);
        }
    }
    return out;
}

/// Sample a P1 nodal field at every quadrature point (element-major table).
inline std::vector<double> sample_p1_at_qp(const TriMesh& mesh, const std::vector<double>& f) {
    const auto& rule = tri_rule();
    std::vector<double> out(mesh.n_triangles() * rule.n);
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tv = mesh.tri(t);
        for (int k = 0; k < rule.n; ++k) {
            const auto& q = rule.pts[k];
            out[t * rule.n + k] = q.l0 * f[tv[0]] + q.l1 * f[tv[1]] + q.l2 * f[tv[2]];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Q-norm Gram matrix
// ---------------------------------------------------------------------------

/// Parameters of the problem-adapted norm
///   |phi|^2 = eta |phi|_L2^2 + c [ (1 + ell/Gc) |phi|_L2^2 + ell^2 |grad phi|_L2^2 ],
/// with c = af_j * dt * gamma_j / am_j the first-order time factor.
struct QNorm {
    double ell, Gc, eta;
    double af_j, am_j, gamma_j;
    double dt;

    QNorm(const MaterialParams& p, const AlphaParams& a, double dt_)
        : ell(p.ell), Gc(p.Gc), eta(p.eta), af_j(a.af_j), am_j(a.am_j), gamma_j(a.gamma_j), dt(dt_) {
        if (!(dt > 0.0)) throw InvalidParameter("QNorm: dt must be positive");
    }

    double time_factor() const { return af_j * dt * gamma_j / am_j; }
    double mass_weight() const { return eta + time_factor() * (1.0 + ell / Gc); }
    double stiffness_coeff() const { return time_factor() * ell * ell; }
};

inline AssembledSystem qnorm_gram(const DofMap& dm, const QNorm& qn) {
    const std::vector<double> w(dm.mesh().n_triangles() * tri_rule().n, qn.mass_weight());
    return assemble_scalar_operator(dm, w, qn.stiffness_coeff());
}

/// Element-local Q-norm energy of a scalar function given by its local
/// coefficients (three vertices plus optional bubble).
inline double element_qnorm_sq(const TriMesh& mesh, TriId t, const std::array<double, 4>& coeff,
                               const QNorm& qn, bool enriched) {
    const ElemGeom g = elem_geom(mesh, t);
    const double mw = qn.mass_weight(), kappa = qn.stiffness_coeff();
    double acc = 0.0;
    const int nl = enriched ? 4 : 3;
    for (const auto& q : tri_rule().pts) {
        const auto b = detail::local_basis(g, q, enriched);
        double v = 0.0;
        Vec2 gr{};
        for (int i = 0; i < nl; ++i) {
            v += coeff[i] * b.val[i];
            gr = gr + b.grad[i] * coeff[i];
        }
        acc += q.w * g.area * (mw * v * v + kappa * gr.norm2());
    }
    return acc;
}

/// Discrete L2 norm of a nodal field (stride 2 for interleaved vectors).
inline double l2_norm(const TriMesh& mesh, const std::vector<double>& f, int stride = 1) {
    double acc = 0.0;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const double A = mesh.area(t);
        const auto& tv = mesh.tri(t);
        for (int c = 0; c < stride; ++c) {
            const double f0 = f[tv[0] * stride + c], f1 = f[tv[1] * stride + c],
                         f2 = f[tv[2] * stride + c];
            const double s = f0 + f1 + f2;
            acc += A / 12.0 * (f0 * f0 + f1 * f1 + f2 * f2 + s * s);
        }
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Momentum (vector) kernels
// ---------------------------------------------------------------------------

/// Constant traction applied to the boundary edges carrying a tag.
struct NeumannLoad {
    int tag;
    Vec2 traction; // Pa (per unit thickness)
};

namespace detail {

// Plane-strain Voigt moduli acting on [eps_xx, eps_yy, 2 eps_xy].
struct Voigt3 {
    double m[3][3] = {};
};

inline Voigt3 isotropic_moduli(const MaterialParams& p) {
    Voigt3 D;
    D.m[0][0] = D.m[1][1] = p.lambda + 2.0 * p.mu;
    D.m[0][1] = D.m[1][0] = p.lambda;
    D.m[2][2] = p.mu;
    return D;
}

// Spectral tension/compression moduli at a frozen strain state; the shear
// coupling uses the positive-part difference quotient so the pair sums to
// the isotropic moduli and both parts stay positive semidefinite.
inline void split_moduli(const MaterialParams& p, const Sym2& eps_ref, Voigt3& Dpos, Voigt3& Dneg) {
    const auto [l1, l2] = eps_ref.eigenvalues();
    const Vec2 m1 = eps_ref.eigenvector(l1);
    const Vec2 m2{-m1.y, m1.x};
    const double h1 = l1 > 0.0 ? 1.0 : 0.0;
    const double h2 = l2 > 0.0 ? 1.0 : 0.0;
    const double s =
        std::abs(l1 - l2) > 1e-14 * (std::abs(l1) + std::abs(l2) + 1e-300)
            ? (std::max(l1, 0.0) - std::max(l2, 0.0)) / (l1 - l2)
            : h1;

    // Voigt rows mapping engineering strain to the normal strain along an
    // eigenvector and to the shear pair mode.
    const double r1[3] = {m1.x * m1.x, m1.y * m1.y, m1.x * m1.y};
    const double r2[3] = {m2.x * m2.x, m2.y * m2.y, m2.x * m2.y};
    const double r12[3] = {2.0 * m1.x * m2.x, 2.0 * m1.y * m2.y, m1.x * m2.y + m1.y * m2.x};

    const double htr = eps_ref.trace() > 0.0 ? 1.0 : 0.0;
    Dpos = Voigt3{};
    Dneg = Voigt3{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double vol = p.lambda * (i < 2 ? 1.0 : 0.0) * (j < 2 ? 1.0 : 0.0);
            const double dev = 2.0 * p.mu * (h1 * r1[i] * r1[j] + h2 * r2[i] * r2[j] +
                                             0.5 * s * r12[i] * r12[j]);
            Dpos.m[i][j] = htr * vol + dev;
            const double dev_n = 2.0 * p.mu * ((1.0 - h1) * r1[i] * r1[j] +
                                               (1.0 - h2) * r2[i] * r2[j] +
                                               0.5 * (1.0 - s) * r12[i] * r12[j]);
            Dneg.m[i][j] = (1.0 - htr) * vol + dev_n;
        }
    }
}

// 6x6 element stiffness B^T D B * area, dof order [ux0, uy0, ux1, uy1, ux2, uy2].
inline void element_stiffness(const ElemGeom& g, const Voigt3& D, double scale, double ke[6][6]) {
    double B[3][6] = {};
    for (int i = 0; i < 3; ++i) {
        B[0][2 * i] = g.grad[i].x;
        B[1][2 * i + 1] = g.grad[i].y;
        B[2][2 * i] = g.grad[i].y;
        B[2][2 * i + 1] = g.grad[i].x;
    }
    double DB[3][6] = {};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 6; ++c)
            for (int k = 0; k < 3; ++k) DB[r][c] += D.m[r][k] * B[k][c];
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += B[k][r] * DB[k][c];
            ke[r][c] += scale * g.area * v;
        }
}

} // namespace detail

/// Degraded-stiffness factor used in assembly; keeps the operator
/// nonsingular where phi -> 0.
inline double effective_degradation(double phi, const MaterialParams& p) {
    return (1.0 - p.k_res) * degradation(phi, p).g + p.k_res;
}

/// y = K(phi) x over all vector dofs (no constraint handling); the same
/// degraded operator assembled by assemble_momentum.
inline std::vector<double> stiffness_apply(const TriMesh& mesh, const std::vector<double>& phi,
                                           const std::vector<double>& x, const MaterialParams& p,
                                           const std::vector<double>* u_ref = nullptr) {
    std::vector<double> y(2 * mesh.n_vertices(), 0.0);
    const auto& rule = tri_rule();
    const auto D_iso = detail::isotropic_moduli(p);
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const ElemGeom g = elem_geom(mesh, t);
        const auto& tv = mesh.tri(t);
        double s = 0.0;
        for (const auto& q : rule.pts)
            s += q.w * effective_degradation(q.l0 * phi[tv[0]] + q.l1 * phi[tv[1]] + q.l2 * phi[tv[2]], p);
        double ke[6][6] = {};
        if (p.stress_split == StressSplit::Full || u_ref == nullptr) {
            detail::element_stiffness(g, D_iso, s, ke);
        } else {
            detail::Voigt3 Dp, Dn;
            detail::split_moduli(p, element_strain(mesh, t, *u_ref), Dp, Dn);
            detail::element_stiffness(g, Dp, s, ke);
            detail::element_stiffness(g, Dn, 1.0, ke);
        }
        for (int i = 0; i < 3; ++i)
            for (int ci = 0; ci < 2; ++ci) {
                double acc = 0.0;
                for (int j = 0; j < 3; ++j)
                    for (int cj = 0; cj < 2; ++cj)
                        acc += ke[2 * i + ci][2 * j + cj] * x[2 * tv[j] + cj];
                y[2 * tv[i] + ci] += acc;
            }
    }
    return y;
}

/// y = M x with the consistent rho0 mass matrix, over all vector dofs.
inline std::vector<double> mass_apply(const TriMesh& mesh, const std::vector<double>& x,
                                      const MaterialParams& p) {
    std::vector<double> y(2 * mesh.n_vertices(), 0.0);
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const double mA = p.rho0 * mesh.area(t) / 12.0;
        const auto& tv = mesh.tri(t);
        for (int c = 0; c < 2; ++c) {
            const double s = x[2 * tv[0] + c] + x[2 * tv[1] + c] + x[2 * tv[2] + c];
            for (int i = 0; i < 3; ++i) y[2 * tv[i] + c] += mA * (s + x[2 * tv[i] + c]);
        }
    }
    return y;
}

/// External force vector: boundary tractions plus the rho0 g body force.
inline std::vector<double> external_force(const TriMesh& mesh, const MaterialParams& p,
                                          const std::vector<NeumannLoad>& loads,
                                          double load_scale = 1.0) {
    std::vector<double> f(2 * mesh.n_vertices(), 0.0);
    for (const auto& load : loads) {
        for (const auto& [e, tag] : mesh.boundary_edges) {
            if (tag != load.tag) continue;
            const double half = 0.5 * (mesh.vertex(e.b) - mesh.vertex(e.a)).norm() * load_scale;
            f[2 * e.a] += half * load.traction.x;
            f[2 * e.a + 1] += half * load.traction.y;
            f[2 * e.b] += half * load.traction.x;
            f[2 * e.b + 1] += half * load.traction.y;
        }
    }
    if (p.body_force.x != 0.0 || p.body_force.y != 0.0) {
        for (TriId t = 0; t < mesh.n_triangles(); ++t) {
            const double c = p.rho0 * mesh.area(t) / 3.0;
            for (const auto v : mesh.tri(t)) {
                f[2 * v] += c * p.body_force.x;
                f[2 * v + 1] += c * p.body_force.y;
            }
        }
    }
    return f;
}

/// Previous-step kinematic data entering the assembled right-hand sides.
struct StateView {
    const std::vector<double>* u_n = nullptr;      // 2*nv
    const std::vector<double>* udot_n = nullptr;   // 2*nv
    const std::vector<double>* uddot_n = nullptr;  // 2*nv
    const std::vector<double>* phi_n = nullptr;    // nv
    const std::vector<double>* phidot_n = nullptr; // nv
};

/// Momentum update system for the displacement increment:
///   [M + (beta_c dt^2 af_c / am_c) K(phi)] inc_u = rhs,
/// with rhs = (beta_c dt^2 / am_c) [ f_ext + M ((am_c/(2 beta_c) - 1) uddot_n
///            + (am_c/(beta_c dt)) udot_n) - K(phi) u_n ].
/// The external force is evaluated by the caller at the alpha point.
inline AssembledSystem assemble_momentum(const DofMap& dm, const std::vector<double>& phi,
                                         const MaterialParams& p, const AlphaParams& a, double dt,
                                         const StateView& state,
                                         const std::vector<double>& f_ext_alpha,
                                         const std::vector<double>* u_split_ref = nullptr) {
    if (dm.space() != Space::P1Vector)
        throw InvalidParameter("assemble_momentum: vector space required");
    if (!(dt > 0.0)) throw InvalidParameter("assemble_momentum: dt must be positive");
    const TriMesh& mesh = dm.mesh();
    const auto& rule = tri_rule();
    const double c_stiff = a.beta_c * dt * dt * a.af_c / a.am_c;

    std::vector<Triplet> trips;
    trips.reserve(36 * mesh.n_triangles());
    Vector rhs_bc = Vector::Zero(dm.n_free());
    const auto D_iso = detail::isotropic_moduli(p);

    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const ElemGeom g = elem_geom(mesh, t);
        const auto& tv = mesh.tri(t);
        double s = 0.0;
        for (const auto& q : rule.pts)
            s += q.w * effective_degradation(q.l0 * phi[tv[0]] + q.l1 * phi[tv[1]] + q.l2 * phi[tv[2]], p);

        double ke[6][6] = {};
        if (p.stress_split == StressSplit::Full || u_split_ref == nullptr) {
            detail::element_stiffness(g, D_iso, c_stiff * s, ke);
        } else {
            detail::Voigt3 Dp, Dn;
            detail::split_moduli(p, element_strain(mesh, t, *u_split_ref), Dp, Dn);
            detail::element_stiffness(g, Dp, c_stiff * s, ke);
            detail::element_stiffness(g, Dn, c_stiff, ke);
        }
        // consistent mass block
        const double mA = p.rho0 * g.area / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 2; ++c) ke[2 * i + c][2 * j + c] += mA * (i == j ? 2.0 : 1.0);

        std::size_t dofs[6];
        for (int i = 0; i < 3; ++i) {
            dofs[2 * i] = 2 * tv[i];
            dofs[2 * i + 1] = 2 * tv[i] + 1;
        }
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j <= i; ++j) {
                const double v = ke[i][j];
                const bool fi = dm.is_free(dofs[i]), fj = dm.is_free(dofs[j]);
                if (fi && fj) {
                    trips.emplace_back(dm.free_index(dofs[i]), dm.free_index(dofs[j]), v);
                } else if (fi && !fj) {
                    rhs_bc[dm.free_index(dofs[i])] -= v * dm.fixed_value(dofs[j]);
                } else if (!fi && fj && i != j) {
                    rhs_bc[dm.free_index(dofs[j])] -= v * dm.fixed_value(dofs[i]);
                }
            }
        }
    }

    // rhs = (beta dt^2/am) [ f_ext + M (c1 uddot + c2 udot) - K(phi) u_n ]
    const double c1 = a.am_c / (2.0 * a.beta_c) - 1.0;
    const double c2 = a.am_c / (a.beta_c * dt);
    std::vector<double> v(2 * mesh.n_vertices());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = c1 * (*state.uddot_n)[i] + c2 * (*state.udot_n)[i];
    const std::vector<double> Mv = mass_apply(mesh, v, p);
    const std::vector<double> Ku = stiffness_apply(mesh, phi, *state.u_n, p, u_split_ref);

    const double scale = a.beta_c * dt * dt / a.am_c;
    Vector rhs = rhs_bc;
    for (std::size_t d = 0; d < dm.n_dofs(); ++d)
        if (dm.is_free(d)) rhs[dm.free_index(d)] += scale * (f_ext_alpha[d] + Mv[d] - Ku[d]);

    AssembledSystem sys;
    sys.A = SparseSym(static_cast<Eigen::Index>(dm.n_free()), trips);
    sys.rhs = std::move(rhs);
    sys.dofs = &dm;
    return sys;
}

/// Phase-field update system for the increment:
///   [eta M + (gamma_j dt af_j / am_j) (ell^2 K + M_w)] inc_phi = rhs,
/// with linearization weight w = (ell H / Gc) g''(phi_n) + 1 and
/// rhs = (gamma_j dt / am_j) [ (q,1) - b(q; phi_n) + eta (am_j/gamma_j - 1)(q, phidot_n) ],
/// where b(q; phi) = ell^2 (grad q, grad phi) + (q, (ell H/Gc) g'(phi) + phi).
/// The history field must already reflect the current displacement iterate.
inline AssembledSystem assemble_phasefield(const DofMap& dm, const HistoryField& H,
                                           const MaterialParams& p, const AlphaParams& a, double dt,
                                           const StateView& state) {
    if (dm.space() == Space::P1Vector)
        throw InvalidParameter("assemble_phasefield: scalar space required");
    if (!(dt > 0.0)) throw InvalidParameter("assemble_phasefield: dt must be positive");
    const TriMesh& mesh = dm.mesh();
    const auto& rule = tri_rule();
    const int nqp = rule.n;
    if (H.n_qp != nqp || H.values.size() != mesh.n_triangles() * nqp)
        throw InvalidParameter("assemble_phasefield: history layout mismatch");

    const double c_op = a.gamma_j * dt * a.af_j / a.am_j;
    const std::vector<double>& phi_n = *state.phi_n;
    const std::vector<double> phi_qp = sample_p1_at_qp(mesh, phi_n);

    // operator mass weight eta + c_op * w(x); source samples for the rhs
    std::vector<double> mass_w(mesh.n_triangles() * nqp);
    std::vector<double> src(mesh.n_triangles() * nqp);
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        for (int k = 0; k < nqp; ++k) {
            const std::size_t idx = t * nqp + k;
            const double hw = p.ell * H.at(t, k) / p.Gc;
            const auto gd = degradation(phi_qp[idx], p);
            mass_w[idx] = p.eta + c_op * (hw * gd.ddg + 1.0);
            src[idx] = hw * gd.dg + phi_qp[idx]; // reaction part of b(q; phi_n)
        }
    }

    AssembledSystem sys = assemble_scalar_operator(dm, mass_w, c_op * p.ell * p.ell);

    const double scale = a.gamma_j * dt / a.am_j;
    Vector rhs = sys.rhs; // Dirichlet correction from the operator
    const std::vector<double> ones(mesh.n_triangles() * nqp, 1.0);
    rhs += scale * assemble_scalar_load(dm, ones);
    rhs -= scale * assemble_scalar_load(dm, src);
    rhs -= scale * assemble_scalar_stiffness_apply(dm, phi_n, p.ell * p.ell);
    if (p.eta != 0.0 && state.phidot_n != nullptr) {
        const double c = scale * p.eta * (a.am_j / a.gamma_j - 1.0);
        rhs += c * assemble_scalar_load(dm, sample_p1_at_qp(mesh, *state.phidot_n));
    }
    sys.rhs = std::move(rhs);
    return sys;
}

/// Update the history field from a displacement iterate: per quadrature
/// point running max of the tensile energy (constant per element for P1).
inline void update_history_from(const TriMesh& mesh, const std::vector<double>& u,
                                const MaterialParams& p, const HistoryField& H_base,
                                HistoryField& H_out) {
    const int nqp = H_base.n_qp;
    H_out.n_qp = nqp;
    H_out.values.resize(H_base.values.size());
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const double psi = tensile_energy(element_strain(mesh, t, u), p);
        for (int q = 0; q < nqp; ++q)
            H_out.at(t, q) = update_history(H_base.at(t, q), psi);
    }
}

} // namespace fractura
