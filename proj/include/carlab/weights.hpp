#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"
#include "carlab/riemannian.hpp"

namespace carlab {

/// Largest exponent handed to exp(); anything above risks overflow even after
/// log-space assembly of factors.
inline constexpr double kExponentBudget = 700.0;

/// Carleman weight data for the elliptic inequality: the C^4 weight phi
/// (vanishing on Upsilon, positive inside, |grad phi| >= delta), the large
/// parameters (gamma, s) and the derived fields phi_big = e^{gamma phi},
/// sigma = s gamma phi_big.
struct EllipticWeight {
    DomainPtr dom;
    GridField phi;
    double delta = 0.0;
    BoundaryId upsilon = BoundaryId::inner;
    double gamma = 1.0;
    double s = 1.0;
    GridField phi_big;
    GridField sigma;
};

/// Radial weight for annular Carleman domains: distance to the Upsilon
/// circle, so phi = 0 on Upsilon, phi > 0 elsewhere and |grad phi| = 1.
inline GridField build_radial_weight(const DomainPtr& dom, BoundaryId upsilon) {
    if (dom->is_disk())
        throw UnsupportedGeometry("radial Carleman weights require an annular domain");
    if (!dom->has_boundary(upsilon))
        throw UnknownBoundary("upsilon boundary '" + to_string(upsilon) + "' not in domain");
    const double a = dom->radius(dom->boundary_ring(upsilon));
    return GridField::sample(dom, [&](double r, double) {
        return upsilon == BoundaryId::inner ? r - a : a - r;
    });
}

struct WeightReport {
    bool ok = false;
    double delta = 0.0;
    std::string violation;
    int worst_ring = -1;
    int worst_k = -1;
};

/// Checks the weight-function conditions on a discrete phi: positivity at
/// interior nodes, vanishing on Upsilon, and a gradient bounded away from
/// zero. Returns a report; throws nothing.
inline WeightReport validate_weight(const GridField& phi, BoundaryId upsilon,
                                    double delta_min = 1e-3) {
    const GridDomain& dom = *phi.dom;
    WeightReport rep;
    const int ups_ring = dom.boundary_ring(upsilon);

    for (int k = 0; k < dom.n_theta; ++k) {
        if (std::abs(phi.at(ups_ring, k)) > 1e-12) {
            rep.violation = "phi does not vanish on Upsilon";
            rep.worst_ring = ups_ring;
            rep.worst_k = k;
            return rep;
        }
    }
    for (int i = 0; i <= dom.n_r; ++i) {
        if (i == ups_ring) continue;
        for (int k = 0; k < dom.n_theta; ++k) {
            if (!(phi.at(i, k) > 0.0)) {
                rep.violation = "phi is not positive away from Upsilon";
                rep.worst_ring = i;
                rep.worst_k = k;
                return rep;
            }
        }
    }
    double delta = std::numeric_limits<double>::max();
    int wi = -1, wk = -1;
    for (int i = 0; i <= dom.n_r; ++i) {
        for (int k = 0; k < dom.n_theta; ++k) {
            const auto dphi = detail::cartesian_gradient(phi, i, k);
            const double mag = std::hypot(dphi[0], dphi[1]);
            if (mag < delta) {
                delta = mag;
                wi = i;
                wk = k;
            }
        }
    }
    rep.delta = delta;
    rep.worst_ring = wi;
    rep.worst_k = wk;
    if (delta <= delta_min) {
        std::ostringstream os;
        os << "min |grad phi| = " << delta << " <= delta_min = " << delta_min;
        rep.violation = os.str();
        return rep;
    }
    rep.ok = true;
    return rep;
}

inline void validate_weight_or_throw(const GridField& phi, BoundaryId upsilon,
                                     double delta_min = 1e-3) {
    const auto rep = validate_weight(phi, upsilon, delta_min);
    if (!rep.ok) {
        std::ostringstream os;
        os << rep.violation << " (worst node ring=" << rep.worst_ring
           << ", k=" << rep.worst_k << ")";
        throw WeightViolation(os.str());
    }
}

inline EllipticWeight make_elliptic_weight(const DomainPtr& dom, BoundaryId upsilon,
                                           double gamma, double s,
                                           double delta_min = 1e-3) {
    if (!(gamma > 0.0) || !(s > 0.0))
        throw ConfigInvalid("Carleman parameters require gamma > 0 and s > 0");
    EllipticWeight w;
    w.dom = dom;
    w.upsilon = upsilon;
    w.gamma = gamma;
    w.s = s;
    w.phi = build_radial_weight(dom, upsilon);
    const auto rep = validate_weight(w.phi, upsilon, delta_min);
    if (!rep.ok) throw WeightViolation(rep.violation);
    w.delta = rep.delta;
    w.phi_big = GridField(dom);
    w.sigma = GridField(dom);
    for (std::size_t n = 0; n < w.phi.v.size(); ++n) {
        const double e = gamma * w.phi.v[n];
        if (e > kExponentBudget)
            throw ParameterOverflow("gamma * phi exceeds the exponent budget");
        w.phi_big.v[n] = std::exp(e);
        w.sigma.v[n] = s * gamma * w.phi_big.v[n];
    }
    return w;
}

struct CarlemanFactors {
    GridField e2sphi;
    GridField sigma;
    GridField sigma3;
};

/// Raw (unshifted) weight factors e^{2 s phi_big}, sigma, sigma^3 assembled in
/// log space. Throws ParameterOverflow when any factor leaves the
/// representable exponent budget; the inequality evaluator avoids this by
/// applying a shared exponent shift instead.
inline CarlemanFactors carleman_factors(const EllipticWeight& w) {
    CarlemanFactors f{GridField(w.dom), GridField(w.dom), GridField(w.dom)};
    const double log_sg = std::log(w.s * w.gamma);
    for (std::size_t n = 0; n < w.phi.v.size(); ++n) {
        const double gphi = w.gamma * w.phi.v[n];
        const double exp_weight = 2.0 * w.s * std::exp(gphi);
        const double log_sigma3 = 3.0 * (log_sg + gphi);
        if (exp_weight > kExponentBudget || log_sigma3 > kExponentBudget)
            throw ParameterOverflow("Carleman factor exceeds the exponent budget");
        f.e2sphi.v[n] = std::exp(exp_weight);
        f.sigma.v[n] = w.sigma.v[n];
        f.sigma3.v[n] = std::exp(log_sigma3);
    }
    return f;
}

/// Degenerate-in-time weight for the parabolic inequality:
///   ell(t) = 1/[t(T-t)],
///   varphi(t,x) = (e^{gamma phi(x)} - e^{2 gamma m}) ell(t) < 0,
///   xi(t,x) = e^{gamma phi(x)} ell(t) > 0,  m = max phi.
/// The time grid is clamped to [t_min, T - t_min], t_min = T/(4 n_t), since
/// the weight degenerates at t in {0, T}.
struct ParabolicWeight {
    DomainPtr dom;
    GridField phi_x;
    double m = 0.0;
    double T = 1.0;
    double gamma = 1.0;
    double s = 1.0;
    std::vector<double> t_grid;
    std::vector<double> ell;

    double exp_gamma_phi(std::size_t node) const { return std::exp(gamma * phi_x.v[node]); }

    /// varphi at (time index j, node): always negative.
    double varphi(int j, std::size_t node) const {
        return (exp_gamma_phi(node) - std::exp(2.0 * gamma * m)) * ell[j];
    }

    double xi(int j, std::size_t node) const { return exp_gamma_phi(node) * ell[j]; }

    double sigma(int j, std::size_t node) const { return s * gamma * xi(j, node); }
};

inline ParabolicWeight build_parabolic_weight(const GridField& phi_x, double T, int n_t,
                                              double gamma, double s) {
    if (!(T > 0.0)) throw ConfigInvalid("parabolic weight requires T > 0");
    if (n_t < 16) throw ConfigInvalid("parabolic weight requires n_t >= 16");
    if (!(gamma > 0.0) || !(s > 0.0))
        throw ConfigInvalid("Carleman parameters require gamma > 0 and s > 0");
    ParabolicWeight w;
    w.dom = phi_x.dom;
    w.phi_x = phi_x;
    w.T = T;
    w.gamma = gamma;
    w.s = s;
    w.m = *std::max_element(phi_x.v.begin(), phi_x.v.end());
    const double t_min = T / (4.0 * n_t);
    w.t_grid.resize(n_t + 1);
    w.ell.resize(n_t + 1);
    const double span = T - 2.0 * t_min;
    for (int j = 0; j <= n_t; ++j) {
        const double t = t_min + span * j / n_t;
        w.t_grid[j] = t;
        w.ell[j] = 1.0 / (t * (T - t));
    }
    return w;
}

}  // namespace carlab
