#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"

namespace carlab {

/// Symmetric 2x2 tensor at one node (Cartesian components).
struct Sym2 {
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;

    double det() const { return a11 * a22 - a12 * a12; }
    Sym2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, a11 / d};
    }
    double min_eigenvalue() const {
        const double tr = a11 + a22;
        const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
        return 0.5 * (tr - disc);
    }
};

struct MetricSpec {
    std::string preset = "euclidean";  // euclidean | conformal | anisotropic
    double conformal_factor = 1.0;
    double amplitude = 0.5;
    double bump_center = 0.0;  // 0 means "derive from domain"
    double bump_width = 0.0;
};

/// Metric tensor g, its inverse, determinant and ellipticity constant sampled
/// at every grid node.
struct MetricField {
    DomainPtr dom;
    std::vector<Sym2> g;
    std::vector<Sym2> g_inv;
    std::vector<double> det;
    std::vector<double> sqrt_det;
    double theta_ell = 1.0;
    MetricSpec spec;

    const Sym2& at(int ring, int k) const { return g[dom->index(ring, k)]; }
    const Sym2& inv_at(int ring, int k) const { return g_inv[dom->index(ring, k)]; }
};

namespace detail {

/// C-infinity bump, 1 at tau = 0, supported on |tau| < 1.
inline double smooth_bump(double tau) {
    const double t2 = tau * tau;
    if (t2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

inline Sym2 eval_metric(const MetricSpec& spec, double r, double th) {
    if (spec.preset == "euclidean") return {1.0, 0.0, 1.0};
    if (spec.preset == "conformal")
        return {spec.conformal_factor, 0.0, spec.conformal_factor};
    if (spec.preset == "anisotropic") {
        const double rho = smooth_bump((r - spec.bump_center) / spec.bump_width);
        const double s = std::sin(th);
        return {1.0 + spec.amplitude * s * s * rho, 0.0, 1.0};
    }
    throw ConfigInvalid("unknown metric preset '" + spec.preset + "'");
}

}  // namespace detail

inline MetricField build_metric(const DomainPtr& dom, MetricSpec spec) {
    if (spec.preset == "conformal" && !(spec.conformal_factor > 0.0))
        throw ConfigInvalid("conformal metric factor must be > 0");
    if (spec.preset == "anisotropic") {
        if (spec.amplitude < 0.0) throw ConfigInvalid("anisotropic amplitude must be >= 0");
        if (spec.bump_width <= 0.0) {
            // Default bump: centered in the radial extent, clear of the center
            // point so the tensor stays smooth on disks.
            if (dom->is_disk()) {
                spec.bump_center = 0.55 * dom->r_outer;
                spec.bump_width = 0.25 * dom->r_outer;
            } else {
                spec.bump_center = 0.5 * (dom->r_inner + dom->r_outer);
                spec.bump_width = (dom->r_outer - dom->r_inner) / 3.0;
            }
        }
    }
    MetricField m;
    m.dom = dom;
    m.spec = spec;
    const std::size_t n = dom->node_count();
    m.g.resize(n);
    m.g_inv.resize(n);
    m.det.resize(n);
    m.sqrt_det.resize(n);
    double theta_ell = std::numeric_limits<double>::max();
    for (int i = 0; i <= dom->n_r; ++i) {
        for (int k = 0; k < dom->n_theta; ++k) {
            const std::size_t idx = dom->index(i, k);
            Sym2 gij = detail::eval_metric(spec, dom->radius(i), dom->theta(k));
            if (dom->is_disk() && i == 0) gij = detail::eval_metric(spec, 0.0, 0.0);
            m.g[idx] = gij;
            m.g_inv[idx] = gij.inverse();
            m.det[idx] = gij.det();
            m.sqrt_det[idx] = std::sqrt(m.det[idx]);
            theta_ell = std::min(theta_ell, gij.min_eigenvalue());
        }
    }
    if (!(theta_ell > 0.0)) throw ConfigInvalid("metric is not uniformly elliptic");
    m.theta_ell = theta_ell;
    return m;
}

inline MetricField euclidean_metric(const DomainPtr& dom) {
    return build_metric(dom, MetricSpec{});
}

struct PotentialField {
    DomainPtr dom;
    std::vector<double> p;
    double eta = 0.0;

    double at(int ring, int k) const { return p[dom->index(ring, k)]; }
};

inline PotentialField constant_potential(const DomainPtr& dom, double value, double eta = 0.0) {
    if (eta > 0.0 && value < eta)
        throw ConfigInvalid("potential below its declared lower bound eta");
    PotentialField f;
    f.dom = dom;
    f.p.assign(dom->node_count(), value);
    f.eta = eta;
    return f;
}

inline PotentialField zero_potential(const DomainPtr& dom) {
    return constant_potential(dom, 0.0, 0.0);
}

/// Vector field with Cartesian components per node.
struct VectorField {
    DomainPtr dom;
    std::vector<std::array<double, 2>> v;

    explicit VectorField(DomainPtr d)
        : dom(std::move(d)), v(dom->node_count(), {0.0, 0.0}) {}
    VectorField() = default;

    std::array<double, 2>& at(int ring, int k) { return v[dom->index(ring, k)]; }
    const std::array<double, 2>& at(int ring, int k) const { return v[dom->index(ring, k)]; }
};

namespace detail {

/// Radial derivative at one node: centered inside, one-sided second order on
/// the first/last ring.
inline double d_r(const GridField& u, int i, int k) {
    const GridDomain& dom = *u.dom;
    const double h = dom.dr();
    if (i == 0) return (-3.0 * u.at(0, k) + 4.0 * u.at(1, k) - u.at(2, k)) / (2.0 * h);
    if (i == dom.n_r)
        return (3.0 * u.at(i, k) - 4.0 * u.at(i - 1, k) + u.at(i - 2, k)) / (2.0 * h);
    return (u.at(i + 1, k) - u.at(i - 1, k)) / (2.0 * h);
}

inline double d_theta(const GridField& u, int i, int k) {
    return (u.at(i, k + 1) - u.at(i, k - 1)) / (2.0 * u.dom->dtheta());
}

/// Cartesian gradient at the collapsed disk center: project the first ring
/// onto the cos/sin modes (third-order accurate, works for any even n_theta).
inline std::array<double, 2> center_gradient(const GridField& u) {
    const GridDomain& dom = *u.dom;
    const double h = dom.dr();
    double cx = 0.0, cy = 0.0;
    for (int k = 0; k < dom.n_theta; ++k) {
        const double th = dom.theta(k);
        cx += u.at(1, k) * std::cos(th);
        cy += u.at(1, k) * std::sin(th);
    }
    const double scale = 2.0 / (dom.n_theta * h);
    return {scale * cx, scale * cy};
}

/// Cartesian gradient components at a node from mapped-grid partials.
inline std::array<double, 2> cartesian_gradient(const GridField& u, int i, int k) {
    const GridDomain& dom = *u.dom;
    if (dom.is_disk() && i == 0) return center_gradient(u);
    const double ur = d_r(u, i, k);
    const double ut = d_theta(u, i, k);
    const double r = dom.radius(i);
    const double th = dom.theta(k);
    const double c = std::cos(th), s = std::sin(th);
    return {c * ur - s * ut / r, s * ur + c * ut / r};
}

/// Mapped inverse-metric coefficients at a node: G^{rr}, G^{r theta},
/// G^{theta theta} for the polar chart, from the Cartesian inverse metric.
struct MappedInv {
    double grr, grt, gtt;
};

inline MappedInv mapped_inverse(const Sym2& ginv, double r, double th) {
    const double c = std::cos(th), s = std::sin(th);
    // rows of the inverse Jacobian: dr/dx = (c, s), dtheta/dx = (-s/r, c/r)
    const double ar0 = c, ar1 = s;
    const double at0 = -s / r, at1 = c / r;
    const auto quad = [&](double x0, double x1, double y0, double y1) {
        return ginv.a11 * x0 * y0 + ginv.a12 * (x0 * y1 + x1 * y0) + ginv.a22 * x1 * y1;
    };
    return {quad(ar0, ar1, ar0, ar1), quad(ar0, ar1, at0, at1), quad(at0, at1, at0, at1)};
}

}  // namespace detail

/// grad_g u = g^{ij} d_i u, returned in Cartesian components.
inline VectorField grad_g(const MetricField& g, const GridField& u) {
    VectorField out(u.dom);
    const GridDomain& dom = *u.dom;
    for (int i = 0; i <= dom.n_r; ++i) {
        for (int k = 0; k < dom.n_theta; ++k) {
            const auto du = detail::cartesian_gradient(u, i, k);
            const Sym2& gi = g.inv_at(i, k);
            out.at(i, k) = {gi.a11 * du[0] + gi.a12 * du[1],
                            gi.a12 * du[0] + gi.a22 * du[1]};
        }
    }
    return out;
}

/// Pointwise |X|_g^2 = g_ij X^i X^j.
inline GridField norm_g_sq(const MetricField& g, const VectorField& X) {
    GridField out(X.dom);
    const GridDomain& dom = *X.dom;
    for (int i = 0; i <= dom.n_r; ++i) {
        for (int k = 0; k < dom.n_theta; ++k) {
            const auto& x = X.at(i, k);
            const Sym2& gg = g.at(i, k);
            out.at(i, k) =
                gg.a11 * x[0] * x[0] + 2.0 * gg.a12 * x[0] * x[1] + gg.a22 * x[1] * x[1];
        }
    }
    return out;
}

/// Laplace-Beltrami operator in conservative mapped form,
///   Delta_g u = [d_r F^r + d_theta F^t] / W,  W = r sqrt|g|,
/// discretized by half-point flux differencing (the standard compact 9-point
/// second-order scheme on mapped grids). Boundary rings are filled by cubic
/// extrapolation of the interior values, which keeps second order there; the
/// collapsed disk center uses a flux balance over the circle r = dr/2.
inline GridField laplace_beltrami(const MetricField& g, const GridField& u) {
    const GridDomain& dom = *u.dom;
    const int nr = dom.n_r, nth = dom.n_theta;
    const double h = dom.dr();
    const double dth = dom.dtheta();
    const int first = dom.is_disk() ? 1 : 0;

    // Nodal radial derivative of u (centered; one-sided on edge rings), for
    // the cross terms of the angular flux.
    GridField ur_node(u.dom);
    for (int i = first; i <= nr; ++i)
        for (int k = 0; k < nth; ++k) ur_node.at(i, k) = detail::d_r(u, i, k);

    const auto avg_inv = [&](int i0, int k0, int i1, int k1) {
        const Sym2& a = g.inv_at(i0, k0);
        const Sym2& b = g.inv_at(i1, k1);
        return Sym2{0.5 * (a.a11 + b.a11), 0.5 * (a.a12 + b.a12), 0.5 * (a.a22 + b.a22)};
    };
    const auto avg_sd = [&](int i0, int k0, int i1, int k1) {
        return 0.5 * (g.sqrt_det[dom.index(i0, k0)] + g.sqrt_det[dom.index(i1, k1)]);
    };

    // Radial fluxes at (i + 1/2, k).
    GridField Fr(u.dom);  // slot (i, k) holds the flux at i + 1/2
    for (int i = std::max(first - 1, 0); i < nr; ++i) {
        const double rm = dom.radius(i) + 0.5 * h;
        for (int k = 0; k < nth; ++k) {
            const auto m = detail::mapped_inverse(avg_inv(i, k, i + 1, k), rm, dom.theta(k));
            const double W = rm * avg_sd(i, k, i + 1, k);
            const double dur = (u.at(i + 1, k) - u.at(i, k)) / h;
            double dut;
            if (dom.is_disk() && i == 0) {
                dut = 0.5 * detail::d_theta(u, 1, k);  // d_theta vanishes at the center
            } else {
                dut = 0.5 * (detail::d_theta(u, i, k) + detail::d_theta(u, i + 1, k));
            }
            Fr.at(i, k) = W * (m.grr * dur + m.grt * dut);
        }
    }

    // Angular fluxes at (i, k + 1/2).
    GridField Ft(u.dom);  // slot (i, k) holds the flux at k + 1/2
    for (int i = std::max(first, 1); i < nr; ++i) {
        const double r = dom.radius(i);
        for (int k = 0; k < nth; ++k) {
            const auto m =
                detail::mapped_inverse(avg_inv(i, k, i, k + 1), r, dom.theta(k) + 0.5 * dth);
            const double W = r * avg_sd(i, k, i, k + 1);
            const double dut = (u.at(i, k + 1) - u.at(i, k)) / dth;
            const double dur = 0.5 * (ur_node.at(i, k) + ur_node.at(i, k + 1));
            Ft.at(i, k) = W * (m.gtt * dut + m.grt * dur);
        }
    }

    GridField out(u.dom);
    for (int i = std::max(first, 1); i < nr; ++i) {
        const double r = dom.radius(i);
        for (int k = 0; k < nth; ++k) {
            const double div_r = (Fr.at(i, k) - Fr.at(i - 1, k)) / h;
            const double div_t = (Ft.at(i, k) - Ft.at(i, k - 1)) / dth;
            out.at(i, k) = (div_r + div_t) / (r * g.sqrt_det[dom.index(i, k)]);
        }
    }

    // Boundary rings by cubic extrapolation of the interior operator values.
    for (int k = 0; k < nth; ++k) {
        out.at(nr, k) = 3.0 * out.at(nr - 1, k) - 3.0 * out.at(nr - 2, k) + out.at(nr - 3, k);
        if (!dom.is_disk())
            out.at(0, k) = 3.0 * out.at(1, k) - 3.0 * out.at(2, k) + out.at(3, k);
    }

    if (dom.is_disk()) {
        // Flux balance over the half-cell circle around the center; the ring-0
        // radial fluxes already connect the center to ring 1.
        double flux = 0.0, volume = 0.0;
        const double rc = 0.5 * h;
        for (int k = 0; k < nth; ++k) {
            flux += Fr.at(0, k) * dth;
            volume += avg_sd(0, 0, 1, k) * 0.5 * rc * rc * dth;
        }
        const double lap_c = flux / volume;
        for (int k = 0; k < nth; ++k) out.at(0, k) = lap_c;
    }
    return out;
}

/// Metric-unit normal on a curve: nu_g^i = g^{ij} nu_j / sqrt(g^{kl} nu_k nu_l).
inline std::vector<std::array<double, 2>> metric_normal(const MetricField& g,
                                                        const BoundaryCurve& curve) {
    std::vector<std::array<double, 2>> out(curve.n_nodes());
    for (int k = 0; k < curve.n_nodes(); ++k) {
        const auto& nu = curve.normal[k];
        const Sym2& gi = g.inv_at(curve.ring, k);
        const double v0 = gi.a11 * nu[0] + gi.a12 * nu[1];
        const double v1 = gi.a12 * nu[0] + gi.a22 * nu[1];
        const double norm = std::sqrt(nu[0] * v0 + nu[1] * v1);
        out[k] = {v0 / norm, v1 / norm};
    }
    return out;
}

/// d_{nu_g} u = <nu_g, grad_g u> = nu_g . grad u (Euclidean contraction of the
/// metric normal with the plain gradient).
inline std::vector<double> dnu_g(const MetricField& g, const GridField& u,
                                 const BoundaryCurve& curve) {
    const auto nug = metric_normal(g, curve);
    std::vector<double> out(curve.n_nodes());
    for (int k = 0; k < curve.n_nodes(); ++k) {
        const auto du = detail::cartesian_gradient(u, curve.ring, k);
        out[k] = nug[k][0] * du[0] + nug[k][1] * du[1];
    }
    return out;
}

/// Euclidean tangential gradient of the boundary trace of u along a circle:
/// the signed arclength derivative plus its Cartesian components.
struct TangentialTrace {
    std::vector<double> d_arc;                     // signed d u / d s
    std::vector<std::array<double, 2>> components; // d_arc times unit tangent
};

inline TangentialTrace tangential_grad(const GridField& u, const BoundaryCurve& curve) {
    const GridDomain& dom = *u.dom;
    TangentialTrace out;
    out.d_arc.resize(curve.n_nodes());
    out.components.resize(curve.n_nodes());
    const double inv_r_dth = 1.0 / (curve.radius * dom.dtheta());
    for (int k = 0; k < curve.n_nodes(); ++k) {
        const double d =
            0.5 * (u.at(curve.ring, k + 1) - u.at(curve.ring, k - 1)) * inv_r_dth;
        const double th = dom.theta(k);
        out.d_arc[k] = d;
        out.components[k] = {-d * std::sin(th), d * std::cos(th)};
    }
    return out;
}

/// |grad_{tau_g} u|_g^2 per curve node, via the orthogonal decomposition
/// grad_{tau_g} u = grad_g u - (d_{nu_g} u) nu_g.
inline std::vector<double> tangential_grad_g(const MetricField& g, const GridField& u,
                                             const BoundaryCurve& curve) {
    const auto nug = metric_normal(g, curve);
    std::vector<double> out(curve.n_nodes());
    for (int k = 0; k < curve.n_nodes(); ++k) {
        const auto du = detail::cartesian_gradient(u, curve.ring, k);
        const Sym2& gi = g.inv_at(curve.ring, k);
        const std::array<double, 2> grad{gi.a11 * du[0] + gi.a12 * du[1],
                                         gi.a12 * du[0] + gi.a22 * du[1]};
        const double dn = nug[k][0] * du[0] + nug[k][1] * du[1];
        const std::array<double, 2> tang{grad[0] - dn * nug[k][0], grad[1] - dn * nug[k][1]};
        const Sym2& gg = g.at(curve.ring, k);
        out[k] = gg.a11 * tang[0] * tang[0] + 2.0 * gg.a12 * tang[0] * tang[1] +
                 gg.a22 * tang[1] * tang[1];
    }
    return out;
}

}  // namespace carlab
