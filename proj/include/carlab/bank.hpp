#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "carlab/geometry.hpp"
#include "carlab/riemannian.hpp"

namespace carlab {

namespace detail {

/// Smooth bump profile in the radial variable with value, first and second
/// derivatives; support is |r - center| < width.
struct RadialBump {
    double center;
    double width;

    double tau(double r) const { return (r - center) / width; }

    double value(double r) const { return smooth_bump(tau(r)); }

    double d1(double r) const {
        const double t = tau(r);
        const double t2 = t * t;
        if (t2 >= 1.0) return 0.0;
        const double om = 1.0 - t2;
        return value(r) * (-2.0 * t / (om * om)) / width;
    }

    double d2(double r) const {
        const double t = tau(r);
        const double t2 = t * t;
        if (t2 >= 1.0) return 0.0;
        const double om = 1.0 - t2;
        const double q = 2.0 * t / (om * om);
        const double dq = 2.0 / (om * om) + 8.0 * t2 / (om * om * om);
        return value(r) * (q * q - dq) / (width * width);
    }
};

}  // namespace detail

/// One test-bank member with closed-form polar derivatives. The inequality
/// evaluator consumes only sampled values; the analytic fields exist so
/// verification code can integrate exact integrands on refined grids.
struct BankFunction {
    std::string id;
    std::function<double(double, double)> value;
    std::function<double(double, double)> d_r;
    std::function<double(double, double)> d_theta;
    std::function<double(double, double)> laplacian;  // Euclidean

    GridField sample(const DomainPtr& dom) const {
        return GridField::sample(dom, value);
    }
};

/// Default elliptic bank: harmonic functions supported up to the boundary, a
/// Bessel-type radial decay profile, and compactly supported bumps times
/// angular modes. Spans both Pu = 0 and Pu != 0 behavior.
inline std::vector<BankFunction> default_elliptic_bank(const GridDomain& dom) {
    std::vector<BankFunction> bank;

    bank.push_back({"log_r",
                    [](double r, double) { return std::log(r); },
                    [](double r, double) { return 1.0 / r; },
                    [](double, double) { return 0.0; },
                    [](double, double) { return 0.0; }});

    bank.push_back({"r_cos",
                    [](double r, double th) { return r * std::cos(th); },
                    [](double, double th) { return std::cos(th); },
                    [](double r, double th) { return -r * std::sin(th); },
                    [](double, double) { return 0.0; }});

    bank.push_back({"r3_cos3",
                    [](double r, double th) { return r * r * r * std::cos(3.0 * th); },
                    [](double r, double th) { return 3.0 * r * r * std::cos(3.0 * th); },
                    [](double r, double th) { return -3.0 * r * r * r * std::sin(3.0 * th); },
                    [](double, double) { return 0.0; }});

    // K0-type radial profile e^{-r}/sqrt(r):  Delta u = u (1 + 1/(4 r^2)).
    auto k0v = [](double r) { return std::exp(-r) / std::sqrt(r); };
    bank.push_back({"k0_profile",
                    [=](double r, double) { return k0v(r); },
                    [=](double r, double) { return -k0v(r) * (1.0 + 0.5 / r); },
                    [](double, double) { return 0.0; },
                    [=](double r, double) { return k0v(r) * (1.0 + 0.25 / (r * r)); }});

    const detail::RadialBump bump{0.5 * (dom.r_inner + dom.r_outer),
                                  0.35 * (dom.r_outer - dom.r_inner)};
    for (int k : {0, 1, 2, 5}) {
        const std::string id = (k == 0) ? "bump" : "bump_cos" + std::to_string(k);
        const double kk = static_cast<double>(k);
        bank.push_back(
            {id,
             [=](double r, double th) { return bump.value(r) * std::cos(kk * th); },
             [=](double r, double th) { return bump.d1(r) * std::cos(kk * th); },
             [=](double r, double th) { return -kk * bump.value(r) * std::sin(kk * th); },
             [=](double r, double th) {
                 return (bump.d2(r) + bump.d1(r) / r - kk * kk * bump.value(r) / (r * r)) *
                        std::cos(kk * th);
             }});
    }
    return bank;
}

/// Space-time bank member for the parabolic inequality.
struct SpaceTimeBankFunction {
    std::string id;
    std::function<double(double, double, double)> value;      // (t, r, theta)
    std::function<double(double, double, double)> dt;
    std::function<double(double, double, double)> d_r;
    std::function<double(double, double, double)> d_theta;
    std::function<double(double, double, double)> laplacian;  // Euclidean, spatial
};

inline std::vector<SpaceTimeBankFunction> default_parabolic_bank(const GridDomain& dom,
                                                                 double T) {
    std::vector<SpaceTimeBankFunction> bank;

    bank.push_back({"decay_rcos",
                    [](double t, double r, double th) { return std::exp(-t) * r * std::cos(th); },
                    [](double t, double r, double th) { return -std::exp(-t) * r * std::cos(th); },
                    [](double t, double, double th) { return std::exp(-t) * std::cos(th); },
                    [](double t, double r, double th) { return -std::exp(-t) * r * std::sin(th); },
                    [](double, double, double) { return 0.0; }});

    bank.push_back({"decay_r2",
                    [](double t, double r, double) { return std::exp(-t) * r * r; },
                    [](double t, double r, double) { return -std::exp(-t) * r * r; },
                    [](double t, double r, double) { return 2.0 * std::exp(-t) * r; },
                    [](double, double, double) { return 0.0; },
                    [](double t, double, double) { return 4.0 * std::exp(-t); }});

    const detail::RadialBump bump{0.5 * (dom.r_inner + dom.r_outer),
                                  0.35 * (dom.r_outer - dom.r_inner)};

    bank.push_back({"ramp_bump",
                    [=](double t, double r, double) { return (1.0 + t / T) * bump.value(r); },
                    [=](double, double r, double) { return bump.value(r) / T; },
                    [=](double t, double r, double) { return (1.0 + t / T) * bump.d1(r); },
                    [](double, double, double) { return 0.0; },
                    [=](double t, double r, double) {
                        return (1.0 + t / T) * (bump.d2(r) + bump.d1(r) / r);
                    }});

    const double om = std::numbers::pi / T;
    bank.push_back({"sin_bump_cos",
                    [=](double t, double r, double th) {
                        return std::sin(om * t) * bump.value(r) * std::cos(th);
                    },
                    [=](double t, double r, double th) {
                        return om * std::cos(om * t) * bump.value(r) * std::cos(th);
                    },
                    [=](double t, double r, double th) {
                        return std::sin(om * t) * bump.d1(r) * std::cos(th);
                    },
                    [=](double t, double r, double th) {
                        return -std::sin(om * t) * bump.value(r) * std::sin(th);
                    },
                    [=](double t, double r, double th) {
                        return std::sin(om * t) *
                               (bump.d2(r) + bump.d1(r) / r - bump.value(r) / (r * r)) *
                               std::cos(th);
                    }});
    return bank;
}

}  // namespace carlab
