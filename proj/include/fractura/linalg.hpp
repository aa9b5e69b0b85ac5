#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <vector>

#include "fractura/errors.hpp"

namespace fractura {

using SpMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

/// Symmetric sparse matrix storing the lower triangle plus diagonal.
/// Entries above the diagonal passed at construction are folded below it.
class SparseSym {
public:
    SparseSym() = default;

    SparseSym(Eigen::Index n, const std::vector<Triplet>& entries) : lower_(n, n) {
        std::vector<Triplet> lo;
        lo.reserve(entries.size());
        for (const auto& t : entries) {
            if (t.row() >= t.col()) lo.emplace_back(t.row(), t.col(), t.value());
            else lo.emplace_back(t.col(), t.row(), t.value());
        }
        lower_.setFromTriplets(lo.begin(), lo.end());
        lower_.prune(0.0);
        lower_.makeCompressed();
    }

    Eigen::Index dim() const { return lower_.rows(); }

    Vector multiply(const Vector& x) const {
        return lower_.selfadjointView<Eigen::Lower>() * x;
    }

    Vector diagonal() const { return lower_.diagonal(); }

    const SpMat& lower() const { return lower_; }

    SpMat full() const {
        SpMat f;
        f = lower_.selfadjointView<Eigen::Lower>();
        return f;
    }

private:
    SpMat lower_;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems.
/// Deterministic for fixed inputs. Throws SolveFailure (carrying the last
/// relative residual) on breakdown or iteration exhaustion.
inline Vector solve_spd(const SparseSym& A, const Vector& b, double rtol = 1e-10,
                        Eigen::Index max_iter = 0) {
    const Eigen::Index n = A.dim();
    if (b.size() != n) throw InvalidParameter("solve_spd: dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return Vector::Zero(n);
    if (max_iter <= 0) max_iter = 2 * n + 500;

    Vector invd = A.diagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(invd[i] > 0.0)) throw SolveFailure("solve_spd: nonpositive diagonal entry");
        invd[i] = 1.0 / invd[i];
    }

    Vector x = Vector::Zero(n);
    Vector r = b;
    Vector z = invd.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    for (Eigen::Index k = 0; k < max_iter; ++k) {
        const Vector Ap = A.multiply(p);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0))
            throw SolveFailure("solve_spd: matrix not positive definite", r.norm() / bnorm);
        const double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        if (r.norm() <= rtol * bnorm) return x;
        z = invd.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolveFailure("solve_spd: no convergence in " + std::to_string(max_iter) + " iterations",
                       r.norm() / bnorm);
}

/// Direct sparse Cholesky (LDLT) solve; the reference path for tests and a
/// fallback when conjugate gradients are unsuitable.
inline Vector solve_spd_direct(const SparseSym& A, const Vector& b) {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(A.full());
    if (ldlt.info() != Eigen::Success) throw SolveFailure("solve_spd_direct: factorization failed");
    Vector x = ldlt.solve(b);
    if (ldlt.info() != Eigen::Success) throw SolveFailure("solve_spd_direct: solve failed");
    return x;
}

struct SaddleSolution {
    Vector eps; // residual representation, lives in the Gram (test) space
    Vector phi; // trial-space component
};

namespace detail {

// Direct solve of the full indefinite KKT system; the robust fallback when
// the Schur iteration stalls on badly scaled operators.
inline SaddleSolution solve_saddle_direct(const SparseSym& G, const SpMat& B, const Vector& g) {
    const Eigen::Index m = G.dim(), n = B.cols();
    std::vector<Triplet> trips;
    const SpMat Gf = G.full();
    trips.reserve(Gf.nonZeros() + 2 * B.nonZeros());
    for (Eigen::Index k = 0; k < Gf.outerSize(); ++k)
        for (SpMat::InnerIterator it(Gf, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < B.outerSize(); ++k)
        for (SpMat::InnerIterator it(B, k); it; ++it) {
            trips.emplace_back(it.row(), m + it.col(), it.value());
            trips.emplace_back(m + it.col(), it.row(), it.value());
        }
    SpMat K(m + n, m + n);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success)
        throw EstimatorFailure("solve_saddle: KKT factorization failed");
    Vector rhs = Vector::Zero(m + n);
    rhs.head(m) = g;
    const Vector sol = lu.solve(rhs);
    SaddleSolution out;
    out.eps = sol.head(m);
    out.phi = sol.tail(n);
    return out;
}

} // namespace detail

/// Solve [[G, B], [B^T, 0]] [eps; phi] = [g; 0] with G SPD and B of full
/// column rank, by eliminating eps: (B^T G^-1 B) phi = B^T G^-1 g, then
/// eps = G^-1 (g - B phi). G is factored once; the Schur complement is
/// applied matrix-free inside Jacobi-preconditioned conjugate gradients,
/// with a direct KKT factorization as fallback.
inline SaddleSolution solve_saddle(const SparseSym& G, const SpMat& B, const Vector& g,
                                   double rtol = 1e-12, Eigen::Index max_iter = 0) {
    const Eigen::Index m = G.dim();
    const Eigen::Index n = B.cols();
    if (B.rows() != m || g.size() != m) throw InvalidParameter("solve_saddle: dimension mismatch");
    if (max_iter <= 0) max_iter = n + 500;

    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(G.full());
    if (ldlt.info() != Eigen::Success)
        throw EstimatorFailure("solve_saddle: Gram factorization failed");

    const auto apply_S = [&](const Vector& v) -> Vector {
        return B.transpose() * ldlt.solve(B * v);
    };

    // diag(B^T diag(G)^-1 B) approximates diag(S) well enough to undo the
    // per-column scaling of strongly weighted operators
    const Vector Gd = G.diagonal();
    Vector precond = Vector::Zero(n);
    for (Eigen::Index j = 0; j < B.outerSize(); ++j)
        for (SpMat::InnerIterator it(B, j); it; ++it)
            precond[it.col()] += it.value() * it.value() / Gd[it.row()];
    for (Eigen::Index j = 0; j < n; ++j)
        precond[j] = precond[j] > 0.0 ? 1.0 / precond[j] : 1.0;

    const Vector rhs = B.transpose() * ldlt.solve(g);
    Vector phi = Vector::Zero(n);
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
        Vector r = rhs;
        Vector z = precond.cwiseProduct(r);
        Vector p = z;
        double rz = r.dot(z);
        bool converged = false;
        for (Eigen::Index k = 0; k < max_iter; ++k) {
            const Vector Sp = apply_S(p);
            const double pSp = p.dot(Sp);
            if (!(pSp > 0.0)) break; // fall back to the direct path
            const double alpha = rz / pSp;
            phi += alpha * p;
            r -= alpha * Sp;
            if (r.norm() <= rtol * rhs_norm) {
                converged = true;
                break;
            }
            z = precond.cwiseProduct(r);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        if (!converged) return detail::solve_saddle_direct(G, B, g);
    }

    SaddleSolution out;
    out.phi = std::move(phi);
    out.eps = ldlt.solve(g - B * out.phi);
    return out;
}

} // namespace fractura
