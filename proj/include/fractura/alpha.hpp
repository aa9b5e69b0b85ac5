#pragma once

#include "fractura/errors.hpp"

namespace fractura {

/// Generalized-alpha constants for the coupled first/second-order system,
/// derived from the spectral radius rho_inf shared by both subsystems.
/// Superscript c = second-order (momentum), j = first-order (phase field).
struct AlphaParams {
    double af_c, am_c, gamma_c, beta_c;
    double af_j, am_j, gamma_j;
    double rho_inf;
};

inline AlphaParams alpha_params(double rho_inf) {
    if (!(rho_inf >= 0.0) || !(rho_inf <= 1.0))
        throw InvalidParameter("alpha_params: rho_inf must lie in [0,1]");
    AlphaParams a;
    a.rho_inf = rho_inf;
    a.af_c = 1.0 / (1.0 + rho_inf);
    a.am_c = (2.0 - rho_inf) / (1.0 + rho_inf);
    a.gamma_c = 0.5 + a.am_c - a.af_c;
    a.beta_c = 0.25 * (1.0 + a.am_c - a.af_c) * (1.0 + a.am_c - a.af_c);
    a.af_j = 1.0 / (1.0 + rho_inf);
    a.am_j = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
    a.gamma_j = 0.5 + a.am_j - a.af_j;
    return a;
}

} // namespace fractura
