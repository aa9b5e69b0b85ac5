#pragma once

#include <cmath>
#include <vector>

#include "fractura/errors.hpp"
#include "fractura/geometry.hpp"
#include "fractura/mesh.hpp"

namespace fractura {

enum class Degradation { Quadratic, Cubic };
enum class StressSplit { Full, TensionOnly };

/// Material and model parameters. lambda/mu are the Lame coefficients
/// (plane strain); ell is the phase-field localization length; eta the
/// phase-field viscosity; Gc the Griffith energy.
struct MaterialParams {
    double lambda = 0.0;
    double mu = 0.0;
    double rho0 = 0.0;
    double Gc = 0.0;
    double ell = 0.0;
    double eta = 0.0;
    Degradation degradation = Degradation::Quadratic;
    double S = 0.0;          // cubic shape parameter
    Vec2 body_force{0, 0};   // acceleration, m/s^2
    double k_res = 1e-6;     // residual stiffness factor in assembly
    StressSplit stress_split = StressSplit::Full;

    static MaterialParams from_lame(double lambda, double mu, double rho0, double Gc,
                                    double ell, double eta = 0.0) {
        MaterialParams p;
        p.lambda = lambda;
        p.mu = mu;
        p.rho0 = rho0;
        p.Gc = Gc;
        p.ell = ell;
        p.eta = eta;
        p.validate();
        return p;
    }

    static MaterialParams from_youngs(double E, double nu, double rho0, double Gc,
                                      double ell, double eta = 0.0) {
        return from_lame(E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu)),
                         rho0, Gc, ell, eta);
    }

    void validate() const {
        if (!(mu > 0.0)) throw InvalidParameter("MaterialParams: mu must be positive");
        if (!(lambda + mu > 0.0)) throw InvalidParameter("MaterialParams: lambda+mu must be positive");
        if (!(rho0 > 0.0)) throw InvalidParameter("MaterialParams: rho0 must be positive");
        if (!(Gc > 0.0)) throw InvalidParameter("MaterialParams: Gc must be positive");
        if (!(ell > 0.0)) throw InvalidParameter("MaterialParams: ell must be positive");
        if (eta < 0.0) throw InvalidParameter("MaterialParams: eta must be nonnegative");
        if (degradation == Degradation::Cubic && S < 0.0)
            throw InvalidParameter("MaterialParams: cubic shape parameter S must be >= 0");
    }

    double youngs() const { return mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu); }
    double poisson() const { return lambda / (2.0 * (lambda + mu)); }
};

/// Degradation function value and first two derivatives.
struct DegradationEval {
    double g, dg, ddg;
};

inline DegradationEval degradation(double phi, const MaterialParams& p) {
    if (p.degradation == Degradation::Quadratic)
        return {phi * phi, 2.0 * phi, 2.0};
    // g = S(phi^3 - phi^2) + 3 phi^2 - 2 phi^3 = (S-2) phi^3 + (3-S) phi^2
    const double a = p.S - 2.0, b = 3.0 - p.S;
    return {a * phi * phi * phi + b * phi * phi, 3.0 * a * phi * phi + 2.0 * b * phi,
            6.0 * a * phi + 2.0 * b};
}

/// Tension/compression split of a small-strain tensor via its spectral
/// decomposition: eps_plus collects the positive-part eigenvalues, and the
/// energies split as psi0 = psi_plus + psi_minus with
///   psi_plus = lambda/2 <tr eps>^2 + mu tr(eps_plus^2).
struct StrainSplit {
    Sym2 eps_plus;
    Sym2 eps_minus;
    double psi_plus = 0.0;
    double psi_minus = 0.0;
};

inline StrainSplit spectral_split(const Sym2& eps, const MaterialParams& p) {
    const auto [l1, l2] = eps.eigenvalues();
    StrainSplit s;
    if (l1 >= 0.0) {
        s.eps_plus = eps;
    } else if (l2 <= 0.0) {
        s.eps_plus = Sym2{};
    } else {
        const Vec2 m2 = eps.eigenvector(l2);
        s.eps_plus = outer(m2) * l2;
    }
    s.eps_minus = eps - s.eps_plus;

    const double tr = eps.trace();
    const double tr_pos = std::max(tr, 0.0);
    const double psi0 = 0.5 * p.lambda * tr * tr + p.mu * eps.trace_sq();
    s.psi_plus = 0.5 * p.lambda * tr_pos * tr_pos + p.mu * s.eps_plus.trace_sq();
    s.psi_minus = psi0 - s.psi_plus;
    return s;
}

/// Undamaged tensile energy density; drives the history field.
inline double tensile_energy(const Sym2& eps, const MaterialParams& p) {
    return spectral_split(eps, p).psi_plus;
}

/// Undamaged isotropic Cauchy stress (plane strain).
inline Sym2 undamaged_stress(const Sym2& eps, const MaterialParams& p) {
    const double ltr = p.lambda * eps.trace();
    return {ltr + 2.0 * p.mu * eps.xx, ltr + 2.0 * p.mu * eps.yy, 2.0 * p.mu * eps.xy};
}

/// Cauchy stress degraded by g(phi). The Full variant degrades the whole
/// isotropic stress; TensionOnly degrades only the tensile part
/// (g * d psi_plus/d eps + d psi_minus/d eps).
inline Sym2 stress(const Sym2& eps, double phi, const MaterialParams& p) {
    const double g = degradation(phi, p).g;
    if (p.stress_split == StressSplit::Full) return undamaged_stress(eps, p) * g;
    const StrainSplit s = spectral_split(eps, p);
    const double tr = eps.trace();
    const double tr_pos = std::max(tr, 0.0);
    const Sym2 sig_plus{p.lambda * tr_pos + 2.0 * p.mu * s.eps_plus.xx,
                        p.lambda * tr_pos + 2.0 * p.mu * s.eps_plus.yy,
                        2.0 * p.mu * s.eps_plus.xy};
    const Sym2 sig_minus{p.lambda * (tr - tr_pos) + 2.0 * p.mu * s.eps_minus.xx,
                         p.lambda * (tr - tr_pos) + 2.0 * p.mu * s.eps_minus.yy,
                         2.0 * p.mu * s.eps_minus.xy};
    return sig_plus * g + sig_minus;
}

/// Irreversibility: pointwise running maximum of the tensile energy.
inline double update_history(double H_old, double psi_plus) {
    return std::max(H_old, psi_plus);
}

/// Per-quadrature-point strain-energy history on a mesh (element-major).
struct HistoryField {
    std::vector<double> values; // n_triangles * n_qp
    int n_qp = 0;

    HistoryField() = default;
    HistoryField(std::size_t n_elems, int nqp) : values(n_elems * nqp, 0.0), n_qp(nqp) {}

    double& at(TriId t, int q) { return values[t * n_qp + q]; }
    double at(TriId t, int q) const { return values[t * n_qp + q]; }
    double element_max(TriId t) const {
        double v = 0.0;
        for (int q = 0; q < n_qp; ++q) v = std::max(v, at(t, q));
        return v;
    }
};

/// Fracture part of the free energy,
///   D = int Gc/2 ( (1-phi)^2/ell + ell |grad phi|^2 ).
/// Exact for P1 fields with the degree-2-capable rule used here.
inline double dissipation(const TriMesh& mesh, const std::vector<double>& phi,
                          const MaterialParams& p) {
    if (phi.size() != mesh.n_vertices())
        throw InvalidParameter("dissipation: phi size does not match mesh");
    double total = 0.0;
    for (TriId t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tv = mesh.tri(t);
        const Vec2 &a = mesh.vertex(tv[0]), &b = mesh.vertex(tv[1]), &c = mesh.vertex(tv[2]);
        const double A = mesh.signed_area(t);
        const double inv2A = 1.0 / (2.0 * A);
        // P1 gradients
        const Vec2 g0{(b.y - c.y) * inv2A, (c.x - b.x) * inv2A};
        const Vec2 g1{(c.y - a.y) * inv2A, (a.x - c.x) * inv2A};
        const Vec2 g2{(a.y - b.y) * inv2A, (b.x - a.x) * inv2A};
        const double p0 = phi[tv[0]], p1 = phi[tv[1]], p2 = phi[tv[2]];
        const Vec2 grad = g0 * p0 + g1 * p1 + g2 * p2;
        // (1-phi)^2 is quadratic: integrate with the edge-midpoint rule (exact).
        const double m01 = 1.0 - 0.5 * (p0 + p1);
        const double m12 = 1.0 - 0.5 * (p1 + p2);
        const double m20 = 1.0 - 0.5 * (p2 + p0);
        const double int_sq = A / 3.0 * (m01 * m01 + m12 * m12 + m20 * m20);
        total += 0.5 * p.Gc * (int_sq / p.ell + p.ell * grad.norm2() * A);
    }
    return total;
}

} // namespace fractura
