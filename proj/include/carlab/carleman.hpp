#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carlab/bank.hpp"
#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"
#include "carlab/pool.hpp"
#include "carlab/riemannian.hpp"
#include "carlab/weights.hpp"

namespace carlab {

/// The five weighted integrals of the Carleman inequality, stored after the
/// shared exponent shift. Only ratios of these terms are meaningful across
/// parameter values; the shift preserves every lhs/rhs quotient exactly.
struct CarlemanSides {
    double lhs_interior = 0.0;
    double lhs_upsilon = 0.0;
    double rhs_pde = 0.0;
    double rhs_pi = 0.0;
    double rhs_upsilon_tangential = 0.0;
    double s = 0.0;
    double gamma = 0.0;
    double exponent_shift = 0.0;

    double lhs() const { return lhs_interior + lhs_upsilon; }
    double rhs() const { return rhs_pde + rhs_pi + rhs_upsilon_tangential; }
    bool indeterminate() const { return rhs() <= 1e-300; }
    double ratio() const { return lhs() / rhs(); }
};

struct SideRoles {
    BoundaryId upsilon = BoundaryId::inner;
    BoundaryId pi = BoundaryId::outer;
};

namespace detail {

/// integral over one radial column of exp(L(r)) with L = exponent + log(factor)
/// interpolated linearly per cell. Exact in the exponential, second order in
/// the smooth factor, and immune to weight layers far below the mesh width.
/// Nodes with factor == 0 terminate their cells with zero contribution (the
/// true integrand vanishes faster than any exponential there).
inline double log_linear_column(const std::vector<double>& L, double h) {
    constexpr double kDead = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < L.size(); ++i) {
        const double l0 = L[i], l1 = L[i + 1];
        if (l0 == kDead || l1 == kDead) continue;
        const double d = l1 - l0;
        if (std::abs(d) <= 30.0) {
            // expm1 keeps the quotient cancellation-free for small d
            const double q = d == 0.0 ? 1.0 : std::expm1(d) / d;
            total += h * std::exp(l0) * q;
        } else {
            total += h * (std::exp(l1) - std::exp(l0)) / d;
        }
    }
    return total;
}

constexpr double kDeadNode = -std::numeric_limits<double>::infinity();

/// (gamma, s)-independent ingredients of the elliptic terms for one field.
struct EllipticTermCache {
    DomainPtr dom;
    std::vector<double> grad_sq;  // |grad u|^2, Euclidean, full grid
    std::vector<double> usq;      // u^2, full grid
    std::vector<double> pu_sq;    // (-Delta_g u + p u)^2, full grid
    int ups_ring = 0, pi_ring = 0;
    double ups_ds = 0.0, pi_ds = 0.0;
    std::vector<double> ups_dnu_sq;  // |d_{nu_g} u|^2 on Upsilon
    std::vector<double> ups_usq;
    std::vector<double> ups_tan_sq;  // |grad_tau u|^2 on Upsilon (Euclidean)
    std::vector<double> pi_grad_sq;
    std::vector<double> pi_usq;
};

inline EllipticTermCache build_elliptic_cache(const MetricField& g, const PotentialField& p,
                                              const GridField& u, const SideRoles& roles) {
    const DomainPtr dom = u.dom;
    EllipticTermCache c;
    c.dom = dom;
    const std::size_t n = dom->node_count();
    c.grad_sq.resize(n);
    c.usq.resize(n);
    c.pu_sq.resize(n);

    const GridField lap = laplace_beltrami(g, u);
    for (int i = 0; i <= dom->n_r; ++i) {
        for (int k = 0; k < dom->n_theta; ++k) {
            const std::size_t idx = dom->index(i, k);
            const auto du = cartesian_gradient(u, i, k);
            c.grad_sq[idx] = du[0] * du[0] + du[1] * du[1];
            c.usq[idx] = u.v[idx] * u.v[idx];
            const double pu = -lap.v[idx] + p.p[idx] * u.v[idx];
            c.pu_sq[idx] = pu * pu;
        }
    }

    const BoundaryCurve ups = boundary_curve(dom, roles.upsilon);
    const BoundaryCurve pi = boundary_curve(dom, roles.pi);
    c.ups_ring = ups.ring;
    c.pi_ring = pi.ring;
    c.ups_ds = ups.ds[0];
    c.pi_ds = pi.ds[0];

    const auto dnu = dnu_g(g, u, ups);
    const auto tan = tangential_grad(u, ups);
    c.ups_dnu_sq.resize(dom->n_theta);
    c.ups_usq.resize(dom->n_theta);
    c.ups_tan_sq.resize(dom->n_theta);
    c.pi_grad_sq.resize(dom->n_theta);
    c.pi_usq.resize(dom->n_theta);
    for (int k = 0; k < dom->n_theta; ++k) {
        c.ups_dnu_sq[k] = dnu[k] * dnu[k];
        c.ups_usq[k] = u.at(ups.ring, k) * u.at(ups.ring, k);
        c.ups_tan_sq[k] = tan.d_arc[k] * tan.d_arc[k];
        c.pi_grad_sq[k] = c.grad_sq[dom->index(pi.ring, k)];
        c.pi_usq[k] = u.at(pi.ring, k) * u.at(pi.ring, k);
    }
    return c;
}

/// Same cache from a closed-form bank member: integrand factors assembled
/// from exact derivatives. Stencil application to sampled compact-support
/// functions would otherwise leak one mesh width past the support, and under
/// weights that grow hundreds of e-foldings per cell those spurious nodes
/// dominate the PDE term with a mesh-proportional artifact. The inequality
/// concerns exact H^2 functions, so the bank is evaluated exactly; a
/// non-Euclidean Laplace-Beltrami term still falls back to the discrete
/// operator (the presets carry no closed-form derivatives of g).
inline EllipticTermCache build_elliptic_cache_analytic(const MetricField& g,
                                                       const PotentialField& p,
                                                       const BankFunction& f,
                                                       const SideRoles& roles) {
    const DomainPtr dom = g.dom;
    EllipticTermCache c;
    c.dom = dom;
    const std::size_t n = dom->node_count();
    c.grad_sq.resize(n);
    c.usq.resize(n);
    c.pu_sq.resize(n);

    const bool euclid = g.spec.preset == "euclidean";
    GridField lap;
    if (!euclid) lap = laplace_beltrami(g, f.sample(dom));

    for (int i = 0; i <= dom->n_r; ++i) {
        const double r = dom->radius(i);
        for (int k = 0; k < dom->n_theta; ++k) {
            const double th = dom->theta(k);
            const std::size_t idx = dom->index(i, k);
            const double u = f.value(r, th);
            const double ur = f.d_r(r, th);
            const double ut = f.d_theta(r, th);
            c.grad_sq[idx] = ur * ur + (ut / r) * (ut / r);
            c.usq[idx] = u * u;
            const double lap_u = euclid ? f.laplacian(r, th) : lap.v[idx];
            const double pu = -lap_u + p.p[idx] * u;
            c.pu_sq[idx] = pu * pu;
        }
    }

    const BoundaryCurve ups = boundary_curve(dom, roles.upsilon);
    const BoundaryCurve pi = boundary_curve(dom, roles.pi);
    c.ups_ring = ups.ring;
    c.pi_ring = pi.ring;
    c.ups_ds = ups.ds[0];
    c.pi_ds = pi.ds[0];
    const auto nug = metric_normal(g, ups);

    c.ups_dnu_sq.resize(dom->n_theta);
    c.ups_usq.resize(dom->n_theta);
    c.ups_tan_sq.resize(dom->n_theta);
    c.pi_grad_sq.resize(dom->n_theta);
    c.pi_usq.resize(dom->n_theta);
    const double r_u = dom->radius(ups.ring);
    for (int k = 0; k < dom->n_theta; ++k) {
        const double th = dom->theta(k);
        const double u = f.value(r_u, th);
        const double ur = f.d_r(r_u, th);
        const double ut = f.d_theta(r_u, th);
        const double c_th = std::cos(th), s_th = std::sin(th);
        const double dx = c_th * ur - s_th * ut / r_u;
        const double dy = s_th * ur + c_th * ut / r_u;
        const double dnu = nug[k][0] * dx + nug[k][1] * dy;
        c.ups_dnu_sq[k] = dnu * dnu;
        c.ups_usq[k] = u * u;
        const double tan = ut / r_u;
        c.ups_tan_sq[k] = tan * tan;
        c.pi_grad_sq[k] = c.grad_sq[dom->index(pi.ring, k)];
        c.pi_usq[k] = c.usq[dom->index(pi.ring, k)];
    }
    return c;
}

/// Shared-shift anchor. For each term family it tracks max(w + log F) and
/// max(log F); the shift is the largest difference, i.e. the exponent at the
/// family's weighted support. Subtracting log(max F) makes the anchor
/// invariant under u -> lambda u, so stored terms scale exactly
/// quadratically, while keeping members supported away from the weight
/// maximum representable in double precision.
class ShiftAnchor {
public:
    static constexpr int kFamilies = 5;

    void include(int family, double exponent, double factor) {
        if (factor <= 0.0) return;
        const double lf = std::log(factor);
        auto& f = fam_[family];
        f.weighted = std::max(f.weighted, exponent + lf);
        f.plain = std::max(f.plain, lf);
    }

    double value() const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& f : fam_)
            if (f.weighted > -std::numeric_limits<double>::infinity())
                best = std::max(best, f.weighted - f.plain);
        if (best == -std::numeric_limits<double>::infinity()) return 0.0;
        // Snap to an integer: last-ulp wobble of the anchor would otherwise
        // leak into the stored terms and spoil exact quadratic homogeneity.
        return std::nearbyint(best);
    }

private:
    struct Family {
        double weighted = -std::numeric_limits<double>::infinity();
        double plain = -std::numeric_limits<double>::infinity();
    };
    std::array<Family, kFamilies> fam_;
};

inline CarlemanSides elliptic_sides_cached(const EllipticTermCache& c, const GridField& phi,
                                           double gamma, double s,
                                           const std::optional<double>& shift_override) {
    const GridDomain& dom = *c.dom;
    const std::size_t n = dom.node_count();

    std::vector<double> phi_big(n), w2s(n), sigma(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        phi_big[idx] = std::exp(gamma * phi.v[idx]);
        w2s[idx] = 2.0 * s * phi_big[idx];
        sigma[idx] = s * gamma * phi_big[idx];
    }

    // Volume factors (include the polar Jacobian r).
    std::vector<double> f_lhs(n), f_pde(n);
    for (int i = 0; i <= dom.n_r; ++i) {
        const double r = dom.radius(i);
        for (int k = 0; k < dom.n_theta; ++k) {
            const std::size_t idx = dom.index(i, k);
            const double sg = sigma[idx];
            f_lhs[idx] = sg * gamma * (c.grad_sq[idx] + sg * sg * c.usq[idx]) * r;
            f_pde[idx] = c.pu_sq[idx] * r;
        }
    }

    // Ring factors.
    const int nth = dom.n_theta;
    std::vector<double> f_ups(nth), f_pi(nth), f_tau(nth);
    for (int k = 0; k < nth; ++k) {
        const double sg_u = sigma[dom.index(c.ups_ring, k)];
        const double sg_p = sigma[dom.index(c.pi_ring, k)];
        f_ups[k] = sg_u * (c.ups_dnu_sq[k] + sg_u * sg_u * c.ups_usq[k]);
        f_pi[k] = sg_p * (c.pi_grad_sq[k] + sg_p * sg_p * c.pi_usq[k]);
        f_tau[k] = sg_u * c.ups_tan_sq[k];
    }

    double shift;
    if (shift_override) {
        shift = *shift_override;
    } else {
        ShiftAnchor anchor;
        for (std::size_t idx = 0; idx < n; ++idx) {
            anchor.include(0, w2s[idx], f_lhs[idx]);
            anchor.include(1, w2s[idx], f_pde[idx]);
        }
        for (int k = 0; k < nth; ++k) {
            anchor.include(2, w2s[dom.index(c.ups_ring, k)], f_ups[k]);
            anchor.include(3, w2s[dom.index(c.ups_ring, k)], f_tau[k]);
            anchor.include(4, w2s[dom.index(c.pi_ring, k)], f_pi[k]);
        }
        shift = anchor.value();
    }

    CarlemanSides out;
    out.s = s;
    out.gamma = gamma;
    out.exponent_shift = shift;

    const double h = dom.dr();
    const double dth = dom.dtheta();
    std::vector<double> L_lhs(dom.n_r + 1), L_pde(dom.n_r + 1);
    for (int k = 0; k < nth; ++k) {
        for (int i = 0; i <= dom.n_r; ++i) {
            const std::size_t idx = dom.index(i, k);
            const double base = w2s[idx] - shift;
            L_lhs[i] = f_lhs[idx] > 0.0 ? base + std::log(f_lhs[idx]) : kDeadNode;
            L_pde[i] = f_pde[idx] > 0.0 ? base + std::log(f_pde[idx]) : kDeadNode;
        }
        out.lhs_interior += log_linear_column(L_lhs, h) * dth;
        out.rhs_pde += log_linear_column(L_pde, h) * dth;
    }

    for (int k = 0; k < nth; ++k) {
        const double e_ups = w2s[dom.index(c.ups_ring, k)] - shift;
        const double e_pi = w2s[dom.index(c.pi_ring, k)] - shift;
        if (f_ups[k] > 0.0) out.lhs_upsilon += std::exp(e_ups + std::log(f_ups[k])) * c.ups_ds;
        if (f_tau[k] > 0.0)
            out.rhs_upsilon_tangential += std::exp(e_ups + std::log(f_tau[k])) * c.ups_ds;
        if (f_pi[k] > 0.0) out.rhs_pi += std::exp(e_pi + std::log(f_pi[k])) * c.pi_ds;
    }
    return out;
}

}  // namespace detail

/// Both sides of the elliptic Carleman inequality for one field u. All five
/// terms carry the same exponent shift (recorded in the result), so lhs/rhs
/// matches the unshifted ratio exactly.
inline CarlemanSides elliptic_sides(const EllipticWeight& w, const MetricField& g,
                                    const PotentialField& p, const GridField& u,
                                    SideRoles roles,
                                    std::optional<double> shift_override = std::nullopt) {
    if (u.dom != w.dom && u.dom->node_count() != w.dom->node_count())
        throw IncompatibleData("field and weight live on different grids");
    if (roles.upsilon == roles.pi)
        throw ConfigInvalid("Upsilon and Pi must be distinct boundaries");
    if (roles.upsilon != w.upsilon)
        throw ConfigInvalid("role assignment disagrees with the weight's Upsilon");
    const auto cache = detail::build_elliptic_cache(g, p, u, roles);
    return detail::elliptic_sides_cached(cache, w.phi, w.gamma, w.s, shift_override);
}

/// Space-time field on a fixed spatial grid: one snapshot per time node.
/// dudt may be supplied analytically; otherwise centered differences on the
/// time grid are used (one-sided second order at the ends).
struct SpaceTimeField {
    DomainPtr dom;
    std::vector<double> t;
    std::vector<GridField> u;
    std::vector<GridField> dudt;

    static SpaceTimeField sample(const DomainPtr& dom, const std::vector<double>& t_grid,
                                 const std::function<double(double, double, double)>& value,
                                 const std::function<double(double, double, double)>* dt_exact =
                                     nullptr) {
        SpaceTimeField f;
        f.dom = dom;
        f.t = t_grid;
        f.u.reserve(t_grid.size());
        for (double t : t_grid) {
            f.u.push_back(GridField::sample(
                dom, [&](double r, double th) { return value(t, r, th); }));
        }
        if (dt_exact) {
            f.dudt.reserve(t_grid.size());
            for (double t : t_grid) {
                f.dudt.push_back(GridField::sample(
                    dom, [&](double r, double th) { return (*dt_exact)(t, r, th); }));
            }
        }
        return f;
    }

    GridField time_derivative(std::size_t j) const {
        if (!dudt.empty()) return dudt[j];
        GridField out(dom);
        const std::size_t last = t.size() - 1;
        if (j == 0) {
            const double dt = t[1] - t[0];
            for (std::size_t n = 0; n < out.v.size(); ++n)
                out.v[n] = (-3.0 * u[0].v[n] + 4.0 * u[1].v[n] - u[2].v[n]) / (2.0 * dt);
        } else if (j == last) {
            const double dt = t[last] - t[last - 1];
            for (std::size_t n = 0; n < out.v.size(); ++n)
                out.v[n] = (3.0 * u[last].v[n] - 4.0 * u[last - 1].v[n] + u[last - 2].v[n]) /
                           (2.0 * dt);
        } else {
            const double dt = t[j + 1] - t[j - 1];
            for (std::size_t n = 0; n < out.v.size(); ++n)
                out.v[n] = (u[j + 1].v[n] - u[j - 1].v[n]) / dt;
        }
        return out;
    }
};

namespace detail {

struct ParabolicSlice {
    std::vector<double> W, f_lhs, f_pde;     // full grid
    std::vector<double> f_ups, f_tau, f_pi;  // rings
};

/// Shared engine for both parabolic-side paths: the builder fills one time
/// slice of exponents and factors; slices are recomputed per pass instead of
/// stored (refined sweeps would otherwise hold every snapshot's fields).
template <typename SliceBuilder>
CarlemanSides parabolic_sides_core(const ParabolicWeight& w, const BoundaryCurve& ups,
                                   const BoundaryCurve& pic, SliceBuilder&& build_slice,
                                   const std::optional<double>& shift_override) {
    const GridDomain& d = *w.dom;
    const std::size_t nn = d.node_count();
    const int nth = d.n_theta;
    const int nt = static_cast<int>(w.t_grid.size());

    double shift;
    ParabolicSlice sl;
    if (shift_override) {
        shift = *shift_override;
    } else {
        ShiftAnchor anchor;
        for (int j = 0; j < nt; ++j) {
            build_slice(j, sl);
            for (std::size_t idx = 0; idx < nn; ++idx) {
                anchor.include(0, sl.W[idx], sl.f_lhs[idx]);
                anchor.include(1, sl.W[idx], sl.f_pde[idx]);
            }
            for (int k = 0; k < nth; ++k) {
                anchor.include(2, sl.W[d.index(ups.ring, k)], sl.f_ups[k]);
                anchor.include(3, sl.W[d.index(ups.ring, k)], sl.f_tau[k]);
                anchor.include(4, sl.W[d.index(pic.ring, k)], sl.f_pi[k]);
            }
        }
        shift = anchor.value();
    }

    CarlemanSides out;
    out.s = w.s;
    out.gamma = w.gamma;
    out.exponent_shift = shift;

    const double h = d.dr();
    const double dth = d.dtheta();
    std::vector<double> L(d.n_r + 1);
    for (int j = 0; j < nt; ++j) {
        build_slice(j, sl);
        const double tw = (j == 0 || j == nt - 1) ? 0.5 * (w.t_grid[1] - w.t_grid[0])
                                                  : (w.t_grid[1] - w.t_grid[0]);
        double lhs_i = 0.0, pde = 0.0, ups_t = 0.0, tau_t = 0.0, pi_t = 0.0;
        for (int k = 0; k < nth; ++k) {
            for (int i = 0; i <= d.n_r; ++i) {
                const std::size_t idx = d.index(i, k);
                L[i] = sl.f_lhs[idx] > 0.0 ? sl.W[idx] - shift + std::log(sl.f_lhs[idx])
                                           : kDeadNode;
            }
            lhs_i += log_linear_column(L, h) * dth;
            for (int i = 0; i <= d.n_r; ++i) {
                const std::size_t idx = d.index(i, k);
                L[i] = sl.f_pde[idx] > 0.0 ? sl.W[idx] - shift + std::log(sl.f_pde[idx])
                                           : kDeadNode;
            }
            pde += log_linear_column(L, h) * dth;
        }
        for (int k = 0; k < nth; ++k) {
            const double e_u = sl.W[d.index(ups.ring, k)] - shift;
            const double e_p = sl.W[d.index(pic.ring, k)] - shift;
            if (sl.f_ups[k] > 0.0) ups_t += std::exp(e_u + std::log(sl.f_ups[k])) * ups.ds[k];
            if (sl.f_tau[k] > 0.0) tau_t += std::exp(e_u + std::log(sl.f_tau[k])) * ups.ds[k];
            if (sl.f_pi[k] > 0.0) pi_t += std::exp(e_p + std::log(sl.f_pi[k])) * pic.ds[k];
        }
        out.lhs_interior += tw * lhs_i;
        out.rhs_pde += tw * pde;
        out.lhs_upsilon += tw * ups_t;
        out.rhs_upsilon_tangential += tw * tau_t;
        out.rhs_pi += tw * pi_t;
    }
    return out;
}

}  // namespace detail

/// Both sides of the degenerate parabolic Carleman inequality for a discrete
/// space-time field. Trapezoid in time over the clamped grid,
/// exponential-fitted cells in radius, periodic trapezoid in angle;
/// sigma = s gamma xi.
inline CarlemanSides parabolic_sides(const ParabolicWeight& w, const MetricField& g,
                                     const SpaceTimeField& u, SideRoles roles,
                                     std::optional<double> shift_override = std::nullopt) {
    const DomainPtr dom = w.dom;
    if (u.dom->node_count() != dom->node_count())
        throw IncompatibleData("space-time field and weight live on different grids");
    if (u.t.size() != w.t_grid.size())
        throw IncompatibleData("space-time field does not match the weight's time grid");
    const GridDomain& d = *dom;
    const std::size_t nn = d.node_count();
    const int nth = d.n_theta;

    const BoundaryCurve ups = boundary_curve(dom, roles.upsilon);
    const BoundaryCurve pic = boundary_curve(dom, roles.pi);

    const double e2gm = std::exp(2.0 * w.gamma * w.m);
    std::vector<double> egphi(nn);
    for (std::size_t idx = 0; idx < nn; ++idx) egphi[idx] = std::exp(w.gamma * w.phi_x.v[idx]);

    const auto build_slice = [&](int j, detail::ParabolicSlice& sl) {
        const GridField& uj = u.u[j];
        const GridField dudt = u.time_derivative(j);
        const GridField lap = laplace_beltrami(g, uj);
        const auto dnu = dnu_g(g, uj, ups);
        const auto tan = tangential_grad(uj, ups);

        sl.W.resize(nn);
        sl.f_lhs.resize(nn);
        sl.f_pde.resize(nn);
        sl.f_ups.resize(nth);
        sl.f_tau.resize(nth);
        sl.f_pi.resize(nth);

        const double ell = w.ell[j];
        for (int i = 0; i <= d.n_r; ++i) {
            const double r = d.radius(i);
            for (int k = 0; k < nth; ++k) {
                const std::size_t idx = d.index(i, k);
                const auto du = detail::cartesian_gradient(uj, i, k);
                const double grad_sq = du[0] * du[0] + du[1] * du[1];
                const double usq = uj.v[idx] * uj.v[idx];
                const double sg = w.s * w.gamma * egphi[idx] * ell;
                sl.W[idx] = 2.0 * w.s * (egphi[idx] - e2gm) * ell;
                sl.f_lhs[idx] = w.gamma * sg * (grad_sq + sg * sg * usq) * r;
                const double heat = dudt.v[idx] - lap.v[idx];
                sl.f_pde[idx] = heat * heat * r;
            }
        }
        for (int k = 0; k < nth; ++k) {
            const std::size_t iu = d.index(ups.ring, k);
            const std::size_t ip = d.index(pic.ring, k);
            const double sg_u = w.s * w.gamma * egphi[iu] * ell;
            const double sg_p = w.s * w.gamma * egphi[ip] * ell;
            const double dt_u = dudt.v[iu];
            const double dt_p = dudt.v[ip];
            const double u_u = uj.v[iu];
            const double u_p = uj.v[ip];
            const auto du_p = detail::cartesian_gradient(uj, pic.ring, k);
            const double grad_sq_p = du_p[0] * du_p[0] + du_p[1] * du_p[1];
            sl.f_ups[k] = sg_u * (dnu[k] * dnu[k] + sg_u * sg_u * u_u * u_u);
            sl.f_tau[k] = dt_u * dt_u / sg_u + sg_u * tan.d_arc[k] * tan.d_arc[k];
            sl.f_pi[k] = dt_p * dt_p / sg_p + sg_p * grad_sq_p + sg_p * sg_p * sg_p * u_p * u_p;
        }
    };
    return detail::parabolic_sides_core(w, ups, pic, build_slice, shift_override);
}

/// Parabolic sides for a closed-form space-time bank member: factors from
/// exact derivatives, for the same support-leak reason as the elliptic
/// analytic cache. Non-Euclidean metrics fall back to the discrete
/// Laplace-Beltrami operator inside the heat residual.
inline CarlemanSides parabolic_sides_analytic(const ParabolicWeight& w, const MetricField& g,
                                              const SpaceTimeBankFunction& f, SideRoles roles,
                                              std::optional<double> shift_override =
                                                  std::nullopt) {
    const DomainPtr dom = w.dom;
    const GridDomain& d = *dom;
    const std::size_t nn = d.node_count();
    const int nth = d.n_theta;

    const BoundaryCurve ups = boundary_curve(dom, roles.upsilon);
    const BoundaryCurve pic = boundary_curve(dom, roles.pi);
    const auto nug = metric_normal(g, ups);
    const bool euclid = g.spec.preset == "euclidean";

    const double e2gm = std::exp(2.0 * w.gamma * w.m);
    std::vector<double> egphi(nn);
    for (std::size_t idx = 0; idx < nn; ++idx) egphi[idx] = std::exp(w.gamma * w.phi_x.v[idx]);

    const auto build_slice = [&](int j, detail::ParabolicSlice& sl) {
        const double t = w.t_grid[j];
        GridField lap;
        if (!euclid) {
            const GridField uj = GridField::sample(
                dom, [&](double r, double th) { return f.value(t, r, th); });
            lap = laplace_beltrami(g, uj);
        }

        sl.W.resize(nn);
        sl.f_lhs.resize(nn);
        sl.f_pde.resize(nn);
        sl.f_ups.resize(nth);
        sl.f_tau.resize(nth);
        sl.f_pi.resize(nth);

        const double ell = w.ell[j];
        for (int i = 0; i <= d.n_r; ++i) {
            const double r = d.radius(i);
            for (int k = 0; k < nth; ++k) {
                const double th = d.theta(k);
                const std::size_t idx = d.index(i, k);
                const double u = f.value(t, r, th);
                const double ur = f.d_r(t, r, th);
                const double ut = f.d_theta(t, r, th);
                const double grad_sq = ur * ur + (ut / r) * (ut / r);
                const double sg = w.s * w.gamma * egphi[idx] * ell;
                sl.W[idx] = 2.0 * w.s * (egphi[idx] - e2gm) * ell;
                sl.f_lhs[idx] = w.gamma * sg * (grad_sq + sg * sg * u * u) * r;
                const double lap_u = euclid ? f.laplacian(t, r, th) : lap.v[idx];
                const double heat = f.dt(t, r, th) - lap_u;
                sl.f_pde[idx] = heat * heat * r;
            }
        }
        const double r_u = d.radius(ups.ring);
        const double r_p = d.radius(pic.ring);
        for (int k = 0; k < nth; ++k) {
            const double th = d.theta(k);
            const std::size_t iu = d.index(ups.ring, k);
            const std::size_t ip = d.index(pic.ring, k);
            const double sg_u = w.s * w.gamma * egphi[iu] * ell;
            const double sg_p = w.s * w.gamma * egphi[ip] * ell;

            const double u_u = f.value(t, r_u, th);
            const double ur_u = f.d_r(t, r_u, th);
            const double ut_u = f.d_theta(t, r_u, th);
            const double dt_u = f.dt(t, r_u, th);
            const double c_th = std::cos(th), s_th = std::sin(th);
            const double dx = c_th * ur_u - s_th * ut_u / r_u;
            const double dy = s_th * ur_u + c_th * ut_u / r_u;
            const double dnu = nug[k][0] * dx + nug[k][1] * dy;
            sl.f_ups[k] = sg_u * (dnu * dnu + sg_u * sg_u * u_u * u_u);
            sl.f_tau[k] =
                dt_u * dt_u / sg_u + sg_u * (ut_u / r_u) * (ut_u / r_u);

            const double u_p = f.value(t, r_p, th);
            const double ur_p = f.d_r(t, r_p, th);
            const double ut_p = f.d_theta(t, r_p, th);
            const double dt_p = f.dt(t, r_p, th);
            const double grad_sq_p = ur_p * ur_p + (ut_p / r_p) * (ut_p / r_p);
            sl.f_pi[k] =
                dt_p * dt_p / sg_p + sg_p * grad_sq_p + sg_p * sg_p * sg_p * u_p * u_p;
        }
    };
    return detail::parabolic_sides_core(w, ups, pic, build_slice, shift_override);
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

struct SweepCell {
    CarlemanSides sides;
    bool indeterminate = true;
    double ratio = 0.0;
};

struct SweepResult {
    std::vector<std::string> test_ids;
    std::vector<double> gamma_values;
    std::vector<double> s_values;
    std::vector<SweepCell> cells;  // [test][gamma][s]
    bool stable_found = false;
    int gamma_star_index = -1;
    int s_star_index = -1;
    double gamma_star = 0.0;
    double s_star = 0.0;
    double c_emp = 0.0;
    std::string diagnostic;

    const SweepCell& cell(std::size_t t, std::size_t ig, std::size_t is) const {
        return cells[(t * gamma_values.size() + ig) * s_values.size() + is];
    }
    SweepCell& cell(std::size_t t, std::size_t ig, std::size_t is) {
        return cells[(t * gamma_values.size() + ig) * s_values.size() + is];
    }
};

namespace detail {

/// Stable-region detection: the smallest corner (gamma*, s*) such that every
/// bank member's ratio on the upper-right sub-grid stays within a factor 1.2
/// of that member's ratio at the grid maximum. C_emp is the largest ratio on
/// the detected region.
inline void detect_stable_region(SweepResult& res) {
    const std::size_t nT = res.test_ids.size();
    const std::size_t nG = res.gamma_values.size();
    const std::size_t nS = res.s_values.size();

    for (std::size_t t = 0; t < nT; ++t) {
        if (res.cell(t, nG - 1, nS - 1).indeterminate) {
            res.stable_found = false;
            res.diagnostic = "ratio indeterminate at the grid maximum for test '" +
                             res.test_ids[t] + "' (rhs below the floor)";
            return;
        }
    }

    const auto box_ok = [&](std::size_t ig0, std::size_t is0) {
        for (std::size_t t = 0; t < nT; ++t) {
            const double top = res.cell(t, nG - 1, nS - 1).ratio;
            for (std::size_t ig = ig0; ig < nG; ++ig) {
                for (std::size_t is = is0; is < nS; ++is) {
                    const auto& c = res.cell(t, ig, is);
                    if (c.indeterminate) return false;
                    if (c.ratio > 1.2 * top * (1.0 + 1e-12)) return false;
                }
            }
        }
        return true;
    };

    for (std::size_t ig = 0; ig < nG; ++ig) {
        for (std::size_t is = 0; is < nS; ++is) {
            if (!box_ok(ig, is)) continue;
            res.stable_found = true;
            res.gamma_star_index = static_cast<int>(ig);
            res.s_star_index = static_cast<int>(is);
            res.gamma_star = res.gamma_values[ig];
            res.s_star = res.s_values[is];
            double cmax = 0.0;
            for (std::size_t t = 0; t < nT; ++t)
                for (std::size_t jg = ig; jg < nG; ++jg)
                    for (std::size_t js = is; js < nS; ++js)
                        cmax = std::max(cmax, res.cell(t, jg, js).ratio);
            res.c_emp = cmax;
            return;
        }
    }
    res.stable_found = false;
    res.diagnostic = "no (gamma*, s*) corner bounds all bank ratios within 1.2x of the grid max";
}

}  // namespace detail

/// Elliptic (gamma, s) sweep over the closed-form bank on one annular domain.
/// Integrands are assembled from exact derivatives (see
/// build_elliptic_cache_analytic); entries are evaluated in a worker pool and
/// assembled by index.
inline SweepResult sweep(const std::vector<BankFunction>& bank, const MetricField& g,
                         const PotentialField& p, BoundaryId upsilon,
                         const std::vector<double>& gamma_values,
                         const std::vector<double>& s_values, double delta_min = 1e-3,
                         int threads = 0) {
    if (bank.empty() || gamma_values.empty() || s_values.empty())
        throw ConfigInvalid("sweep requires a non-empty bank and non-empty parameter grids");
    const DomainPtr dom = g.dom;
    const SideRoles roles{upsilon,
                          upsilon == BoundaryId::inner ? BoundaryId::outer : BoundaryId::inner};
    const GridField phi = build_radial_weight(dom, upsilon);
    validate_weight_or_throw(phi, upsilon, delta_min);

    SweepResult res;
    for (const auto& b : bank) res.test_ids.push_back(b.id);
    res.gamma_values = gamma_values;
    res.s_values = s_values;
    res.cells.resize(bank.size() * gamma_values.size() * s_values.size());

    std::vector<detail::EllipticTermCache> caches(bank.size());
    parallel_for(bank.size(), [&](std::size_t t) {
        caches[t] = detail::build_elliptic_cache_analytic(g, p, bank[t], roles);
    }, threads);

    const std::size_t nPoints = res.cells.size();
    parallel_for(nPoints, [&](std::size_t flat) {
        const std::size_t nS = s_values.size();
        const std::size_t nG = gamma_values.size();
        const std::size_t is = flat % nS;
        const std::size_t ig = (flat / nS) % nG;
        const std::size_t t = flat / (nS * nG);
        SweepCell cell;
        cell.sides = detail::elliptic_sides_cached(caches[t], phi, gamma_values[ig],
                                                   s_values[is], std::nullopt);
        cell.indeterminate = cell.sides.indeterminate();
        cell.ratio = cell.indeterminate ? 0.0 : cell.sides.ratio();
        res.cells[flat] = cell;
    }, threads);

    detail::detect_stable_region(res);
    return res;
}

/// Parabolic sweep over the closed-form space-time bank: same detection, with
/// the heat residual and boundary factors sampled from exact derivatives.
inline SweepResult parabolic_sweep(const std::vector<SpaceTimeBankFunction>& bank,
                                   const MetricField& g, BoundaryId upsilon, double T, int n_t,
                                   const std::vector<double>& gamma_values,
                                   const std::vector<double>& s_values,
                                   double delta_min = 1e-3, int threads = 0) {
    if (bank.empty() || gamma_values.empty() || s_values.empty())
        throw ConfigInvalid("sweep requires a non-empty bank and non-empty parameter grids");
    const DomainPtr dom = g.dom;
    const SideRoles roles{upsilon,
                          upsilon == BoundaryId::inner ? BoundaryId::outer : BoundaryId::inner};
    const GridField phi = build_radial_weight(dom, upsilon);
    validate_weight_or_throw(phi, upsilon, delta_min);

    SweepResult res;
    for (const auto& b : bank) res.test_ids.push_back(b.id);
    res.gamma_values = gamma_values;
    res.s_values = s_values;
    res.cells.resize(bank.size() * gamma_values.size() * s_values.size());

    const std::size_t nPoints = res.cells.size();
    parallel_for(nPoints, [&](std::size_t flat) {
        const std::size_t nS = s_values.size();
        const std::size_t nG = gamma_values.size();
        const std::size_t is = flat % nS;
        const std::size_t ig = (flat / nS) % nG;
        const std::size_t t = flat / (nS * nG);
        const ParabolicWeight w =
            build_parabolic_weight(phi, T, n_t, gamma_values[ig], s_values[is]);
        SweepCell cell;
        cell.sides = parabolic_sides_analytic(w, g, bank[t], roles);
        cell.indeterminate = cell.sides.indeterminate();
        cell.ratio = cell.indeterminate ? 0.0 : cell.sides.ratio();
        res.cells[flat] = cell;
    }, threads);

    detail::detect_stable_region(res);
    return res;
}

}  // namespace carlab
