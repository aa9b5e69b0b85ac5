#pragma once

#include <array>
#include <cmath>

namespace fractura {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline Vec2 midpoint(const Vec2& a, const Vec2& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

/// Symmetric 2x2 tensor, stored as (xx, yy, xy).
struct Sym2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    Sym2() = default;
    Sym2(double xx_, double yy_, double xy_) : xx(xx_), yy(yy_), xy(xy_) {}

    double trace() const { return xx + yy; }
    double det() const { return xx * yy - xy * xy; }

    Sym2 operator+(const Sym2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
    Sym2 operator-(const Sym2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
    Sym2 operator*(double s) const { return {xx * s, yy * s, xy * s}; }

    /// tr(A^2) for symmetric A.
    double trace_sq() const { return xx * xx + yy * yy + 2.0 * xy * xy; }

    /// Eigenvalues in ascending order; exact for the 2x2 symmetric case.
    std::array<double, 2> eigenvalues() const {
        const double mean = 0.5 * (xx + yy);
        const double d = std::hypot(0.5 * (xx - yy), xy);
        return {mean - d, mean + d};
    }

    /// Unit eigenvector for the given eigenvalue. Stable for the nearly
    /// diagonal case; any unit vector is valid when the tensor is isotropic.
    Vec2 eigenvector(double lambda) const {
        // Pick the row of (A - lambda I) with the larger norm to avoid
        // cancellation; the eigenvector is orthogonal to it.
        const double r1x = xx - lambda, r1y = xy;
        const double r2x = xy, r2y = yy - lambda;
        const double n1 = r1x * r1x + r1y * r1y;
        const double n2 = r2x * r2x + r2y * r2y;
        double vx, vy;
        if (n1 >= n2) {
            vx = -r1y;
            vy = r1x;
        } else {
            vx = -r2y;
            vy = r2x;
        }
        const double n = std::hypot(vx, vy);
        if (n < 1e-300) return {1.0, 0.0}; // isotropic tensor: eigenbasis arbitrary
        return {vx / n, vy / n};
    }
};

/// Outer product v v^T as a symmetric tensor.
inline Sym2 outer(const Vec2& v) { return {v.x * v.x, v.y * v.y, v.x * v.y}; }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

} // namespace fractura
