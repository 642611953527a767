#pragma once

// Independent reference computations for verification. Everything here is
// deliberately decoupled from the production path: closed-form integrands,
// long-double arithmetic, Gauss-Legendre cells with exactly evaluated
// exponents, and quadrature resolutions a fixed multiple above the grids
// under test. Used by the test suites and the `oracle-check` subcommand only.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "carlab/bank.hpp"
#include "carlab/carleman.hpp"
#include "carlab/geometry.hpp"

namespace carlab::oracles {

/// Modified Bessel K_nu(x) from the integral representation
///   K_nu(x) = int_0^inf e^{-x cosh t} cosh(nu t) dt,
/// trapezoid in long double on [0, T*] with x cosh T* > 750. The integrand is
/// smooth with vanishing odd derivatives at t = 0, so the rule converges
/// super-algebraically; step 2^-13 gives far more than 10 digits.
inline double bessel_k(int nu, double x) {
    const long double xl = x;
    long double tmax = std::acosh(750.0L / xl);
    const long double h = 0x1.0p-13L;
    const std::size_t n = static_cast<std::size_t>(tmax / h) + 1;
    long double sum = 0.5L * std::exp(-xl);  // t = 0 term, cosh(0) = 1
    for (std::size_t i = 1; i <= n; ++i) {
        const long double t = h * i;
        sum += std::exp(-xl * std::cosh(t)) * std::cosh(static_cast<long double>(nu) * t);
    }
    return static_cast<double>(sum * h);
}

/// Radial solution of -Delta u + u = 0 outside the unit disk with u(1) = 1:
/// u(r) = K0(r)/K0(1), u'(r) = -K1(r)/K0(1).
struct ExteriorRadialReference {
    double value;
    double derivative;
};

inline ExteriorRadialReference exterior_radial_reference(double r) {
    const double k01 = bessel_k(0, 1.0);
    return {bessel_k(0, r) / k01, -bessel_k(1, r) / k01};
}

/// Harmonic extension of cos(k theta) into the disk of radius r_S.
inline double harmonic_mode(double r, double th, int k, double r_s = 1.0) {
    return std::pow(r / r_s, k) * std::cos(k * th);
}

// ---------------------------------------------------------------------------
// Independent Carleman-side quadrature (elliptic)
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<long double, 4> kGlNodes{
    0.06943184420297371239L, 0.33000947820757186760L, 0.66999052179242813240L,
    0.93056815579702628761L};
inline constexpr std::array<long double, 4> kGlWeights{
    0.17392742256872692869L, 0.32607257743127307131L, 0.32607257743127307131L,
    0.17392742256872692869L};

}  // namespace detail

/// Reference value of the five elliptic terms for an analytic field: exact
/// exponent at every quadrature point, Gauss-Legendre cells in r at a
/// resolution multiple, dense trapezoid in theta, long-double accumulation.
/// The exponent shift is chosen the same anchored way and reported; only
/// ratios against the implementation's terms are compared.
struct SideReference {
    long double lhs_interior = 0, lhs_upsilon = 0, rhs_pde = 0, rhs_pi = 0, rhs_tau = 0;
    long double shift = 0;
};

inline SideReference elliptic_side_reference(const BankFunction& f, double r_in, double r_out,
                                             bool upsilon_inner, double p_value, double gamma,
                                             double s, int n_r, int n_theta) {
    const long double a = r_in, b = r_out;
    const long double g = gamma, S = s;
    const auto phi = [&](long double r) { return upsilon_inner ? r - a : b - r; };
    const auto wexp = [&](long double r) { return 2.0L * S * std::exp(g * phi(r)); };
    const auto sigma = [&](long double r) { return S * g * std::exp(g * phi(r)); };

    const long double dth = 2.0L * std::numbers::pi_v<long double> / n_theta;
    const long double h = (b - a) / n_r;

    const auto f_lhs = [&](long double r, long double th) {
        const long double ur = f.d_r(static_cast<double>(r), static_cast<double>(th));
        const long double ut = f.d_theta(static_cast<double>(r), static_cast<double>(th));
        const long double u = f.value(static_cast<double>(r), static_cast<double>(th));
        const long double grad_sq = ur * ur + (ut / r) * (ut / r);
        const long double sg = sigma(r);
        return sg * g * (grad_sq + sg * sg * u * u) * r;
    };
    const auto f_pde = [&](long double r, long double th) {
        const long double lap = f.laplacian(static_cast<double>(r), static_cast<double>(th));
        const long double u = f.value(static_cast<double>(r), static_cast<double>(th));
        const long double pu = -lap + p_value * u;
        return pu * pu * r;
    };

    // Anchored shift from a scan of both volume integrands and the rings.
    long double shift = -1e400L;
    const auto consider = [&](long double w, long double F) {
        if (F > 0.0L) shift = std::max(shift, w + std::log(F));
    };
    for (int i = 0; i <= n_r; ++i) {
        const long double r = a + (b - a) * i / n_r;
        for (int k = 0; k < n_theta; ++k) {
            const long double th = dth * k;
            consider(wexp(r), f_lhs(r, th));
            consider(wexp(r), f_pde(r, th));
        }
    }
    const long double r_ups = upsilon_inner ? a : b;
    const long double r_pi = upsilon_inner ? b : a;
    for (int k = 0; k < n_theta; ++k) {
        const long double th = dth * k;
        const long double u_u = f.value(static_cast<double>(r_ups), static_cast<double>(th));
        const long double ur_u = f.d_r(static_cast<double>(r_ups), static_cast<double>(th));
        const long double ut_u = f.d_theta(static_cast<double>(r_ups), static_cast<double>(th));
        const long double sg = sigma(r_ups);
        consider(wexp(r_ups), sg * (ur_u * ur_u + sg * sg * u_u * u_u) +
                                  sg * (ut_u / r_ups) * (ut_u / r_ups));
        const long double u_p = f.value(static_cast<double>(r_pi), static_cast<double>(th));
        const long double ur_p = f.d_r(static_cast<double>(r_pi), static_cast<double>(th));
        const long double ut_p = f.d_theta(static_cast<double>(r_pi), static_cast<double>(th));
        const long double sgp = sigma(r_pi);
        consider(wexp(r_pi),
                 sgp * (ur_p * ur_p + (ut_p / r_pi) * (ut_p / r_pi) + sgp * sgp * u_p * u_p));
    }
    if (shift < -1e399L) shift = 0.0L;

    SideReference out;
    out.shift = shift;

    for (int k = 0; k < n_theta; ++k) {
        const long double th = dth * k;
        for (int i = 0; i < n_r; ++i) {
            const long double r0 = a + (b - a) * i / n_r;
            for (std::size_t q = 0; q < detail::kGlNodes.size(); ++q) {
                const long double r = r0 + h * detail::kGlNodes[q];
                const long double wq = h * detail::kGlWeights[q] * dth;
                const long double e = std::exp(wexp(r) - shift);
                out.lhs_interior += wq * e * f_lhs(r, th);
                out.rhs_pde += wq * e * f_pde(r, th);
            }
        }
    }

    for (int k = 0; k < n_theta; ++k) {
        const long double th = dth * k;
        const long double e_u = std::exp(wexp(r_ups) - shift);
        const long double e_p = std::exp(wexp(r_pi) - shift);
        const long double u_u = f.value(static_cast<double>(r_ups), static_cast<double>(th));
        const long double ur_u = f.d_r(static_cast<double>(r_ups), static_cast<double>(th));
        const long double ut_u = f.d_theta(static_cast<double>(r_ups), static_cast<double>(th));
        const long double sg = sigma(r_ups);
        // On circles the Euclidean normal derivative is the radial one.
        out.lhs_upsilon += e_u * sg * (ur_u * ur_u + sg * sg * u_u * u_u) * r_ups * dth;
        out.rhs_tau += e_u * sg * (ut_u / r_ups) * (ut_u / r_ups) * r_ups * dth;
        const long double u_p = f.value(static_cast<double>(r_pi), static_cast<double>(th));
        const long double ur_p = f.d_r(static_cast<double>(r_pi), static_cast<double>(th));
        const long double ut_p = f.d_theta(static_cast<double>(r_pi), static_cast<double>(th));
        const long double sgp = sigma(r_pi);
        const long double grad_sq_p = ur_p * ur_p + (ut_p / r_pi) * (ut_p / r_pi);
        out.rhs_pi += e_p * sgp * (grad_sq_p + sgp * sgp * u_p * u_p) * r_pi * dth;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Independent Carleman-side quadrature (parabolic)
// ---------------------------------------------------------------------------

inline SideReference parabolic_side_reference(const SpaceTimeBankFunction& f, double r_in,
                                              double r_out, bool upsilon_inner, double T,
                                              double gamma, double s, int n_r, int n_theta,
                                              int n_t) {
    const long double a = r_in, b = r_out, g = gamma, S = s;
    const auto phi = [&](long double r) { return upsilon_inner ? r - a : b - r; };
    const long double m = std::max(phi(a), phi(b));
    const long double e2gm = std::exp(2.0L * g * m);
    const long double t_min = T / (4.0L * n_t);
    const long double span = T - 2.0L * t_min;

    const auto ell = [&](long double t) { return 1.0L / (t * (T - t)); };
    const auto wexp = [&](long double t, long double r) {
        return 2.0L * S * (std::exp(g * phi(r)) - e2gm) * ell(t);
    };
    const auto sigma = [&](long double t, long double r) {
        return S * g * std::exp(g * phi(r)) * ell(t);
    };

    const long double dth = 2.0L * std::numbers::pi_v<long double> / n_theta;
    const long double h = (b - a) / n_r;
    const long double r_ups = upsilon_inner ? a : b;
    const long double r_pi = upsilon_inner ? b : a;

    const auto F_lhs = [&](long double t, long double r, long double th) {
        const double td = static_cast<double>(t), rd = static_cast<double>(r),
                     hd = static_cast<double>(th);
        const long double ur = f.d_r(td, rd, hd);
        const long double ut = f.d_theta(td, rd, hd);
        const long double u = f.value(td, rd, hd);
        const long double sg = sigma(t, r);
        return g * sg * (ur * ur + (ut / r) * (ut / r) + sg * sg * u * u) * r;
    };
    const auto F_pde = [&](long double t, long double r, long double th) {
        const double td = static_cast<double>(t), rd = static_cast<double>(r),
                     hd = static_cast<double>(th);
        const long double heat = f.dt(td, rd, hd) - f.laplacian(td, rd, hd);
        return heat * heat * r;
    };
    const auto F_ups = [&](long double t, long double th) {
        const double td = static_cast<double>(t), rd = static_cast<double>(r_ups),
                     hd = static_cast<double>(th);
        const long double ur = f.d_r(td, rd, hd);
        const long double u = f.value(td, rd, hd);
        const long double sg = sigma(t, r_ups);
        return sg * (ur * ur + sg * sg * u * u);
    };
    const auto F_tau = [&](long double t, long double th) {
        const double td = static_cast<double>(t), rd = static_cast<double>(r_ups),
                     hd = static_cast<double>(th);
        const long double ut = f.d_theta(td, rd, hd);
        const long double dtv = f.dt(td, rd, hd);
        const long double sg = sigma(t, r_ups);
        return dtv * dtv / sg + sg * (ut / r_ups) * (ut / r_ups);
    };
    const auto F_pi = [&](long double t, long double th) {
        const double td = static_cast<double>(t), rd = static_cast<double>(r_pi),
                     hd = static_cast<double>(th);
        const long double ur = f.d_r(td, rd, hd);
        const long double ut = f.d_theta(td, rd, hd);
        const long double u = f.value(td, rd, hd);
        const long double dtv = f.dt(td, rd, hd);
        const long double sg = sigma(t, r_pi);
        return dtv * dtv / sg + sg * (ur * ur + (ut / r_pi) * (ut / r_pi)) +
               sg * sg * sg * u * u;
    };

    long double shift = -1e400L;
    const auto consider = [&](long double w, long double F) {
        if (F > 0.0L) shift = std::max(shift, w + std::log(F));
    };
    for (int j = 0; j <= n_t; ++j) {
        const long double t = t_min + span * j / n_t;
        for (int i = 0; i <= n_r; ++i) {
            const long double r = a + (b - a) * i / n_r;
            for (int k = 0; k < n_theta; ++k) {
                const long double th = dth * k;
                consider(wexp(t, r), F_lhs(t, r, th));
                consider(wexp(t, r), F_pde(t, r, th));
            }
        }
        for (int k = 0; k < n_theta; ++k) {
            const long double th = dth * k;
            consider(wexp(t, r_ups), F_ups(t, th) + F_tau(t, th));
            consider(wexp(t, r_pi), F_pi(t, th));
        }
    }
    if (shift < -1e399L) shift = 0.0L;

    SideReference out;
    out.shift = shift;
    for (int j = 0; j <= n_t; ++j) {
        const long double t = t_min + span * j / n_t;
        const long double tw = (j == 0 || j == n_t) ? 0.5L * span / n_t : span / n_t;
        long double lhs_i = 0, pde = 0, ups = 0, tau = 0, pi = 0;
        for (int k = 0; k < n_theta; ++k) {
            const long double th = dth * k;
            for (int i = 0; i < n_r; ++i) {
                const long double r0 = a + (b - a) * i / n_r;
                for (std::size_t q = 0; q < detail::kGlNodes.size(); ++q) {
                    const long double r = r0 + h * detail::kGlNodes[q];
                    const long double wq = h * detail::kGlWeights[q] * dth;
                    const long double e = std::exp(wexp(t, r) - shift);
                    lhs_i += wq * e * F_lhs(t, r, th);
                    pde += wq * e * F_pde(t, r, th);
                }
            }
            const long double e_u = std::exp(wexp(t, r_ups) - shift);
            const long double e_p = std::exp(wexp(t, r_pi) - shift);
            ups += e_u * F_ups(t, th) * r_ups * dth;
            tau += e_u * F_tau(t, th) * r_ups * dth;
            pi += e_p * F_pi(t, th) * r_pi * dth;
        }
        out.lhs_interior += tw * lhs_i;
        out.rhs_pde += tw * pde;
        out.lhs_upsilon += tw * ups;
        out.rhs_tau += tw * tau;
        out.rhs_pi += tw * pi;
    }
    return out;
}

/// Manufactured heat solution u* = e^{-t}(x^2 + y^2) with source
/// f = d_t u* - Delta u* = -e^{-t}(r^2 + 4).
struct ManufacturedHeat {
    static double value(double t, double r, double) { return std::exp(-t) * r * r; }
    static double source(double t, double r, double) {
        return -std::exp(-t) * (r * r + 4.0);
    }
};

}  // namespace carlab::oracles
