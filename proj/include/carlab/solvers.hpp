#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"
#include "carlab/riemannian.hpp"

namespace carlab {

namespace detail {

/// Symmetric positive-definite discretization of the energy
///   E(u) = 1/2 int G^{ab} d_a u d_b u  r sqrt|g| dr dtheta + 1/2 int p u^2,
/// assembled cell by cell with cell-centered coefficients and mass lumping.
/// Its gradient is the stiffness operator; Dirichlet rows are eliminated
/// through a DOF map. The collapsed disk center is one unknown; cell corners
/// on ring 0 alias it, which reproduces the correct flux balance.
class GridOperator {
public:
    GridOperator(const MetricField& g, const std::vector<double>& p) {
        dom_ = g.dom;
        const GridDomain& d = *dom_;
        const int nr = d.n_r, nth = d.n_theta;
        const double h = d.dr(), dth = d.dtheta();
        ar_.resize(static_cast<std::size_t>(nr) * nth);
        ct_.resize(static_cast<std::size_t>(nr + 1) * nth, 0.0);
        cb_.resize(static_cast<std::size_t>(nr) * nth);
        volume_.assign(d.node_count(), 0.0);
        p_ = p;
        cross_ = false;

        const auto avg2 = [&](int i0, int k0, int i1, int k1) {
            const Sym2& a = g.inv_at(i0, k0);
            const Sym2& b = g.inv_at(i1, k1);
            return Sym2{0.5 * (a.a11 + b.a11), 0.5 * (a.a12 + b.a12), 0.5 * (a.a22 + b.a22)};
        };
        const auto avg_sd = [&](int i0, int k0, int i1, int k1) {
            return 0.5 * (g.sqrt_det[d.index(i0, k0)] + g.sqrt_det[d.index(i1, k1)]);
        };

        // radial edges (i + 1/2, k): diagonal coefficient W G^{rr}
        for (int i = 0; i < nr; ++i) {
            const double rm = d.radius(i) + 0.5 * h;
            for (int k = 0; k < nth; ++k) {
                const auto m = mapped_inverse(avg2(i, k, i + 1, k), rm, d.theta(k));
                ar_[static_cast<std::size_t>(i) * nth + k] = rm * avg_sd(i, k, i + 1, k) * m.grr;
            }
        }
        // angular edges (i, k + 1/2): diagonal coefficient W G^{tt}; skip the
        // degenerate disk-center ring
        const int first_ring = d.is_disk() ? 1 : 0;
        for (int i = first_ring; i <= nr; ++i) {
            const double r = d.radius(i);
            for (int k = 0; k < nth; ++k) {
                const auto m = mapped_inverse(avg2(i, k, i, k + 1), r, d.theta(k) + 0.5 * dth);
                ct_[static_cast<std::size_t>(i) * nth + k] = r * avg_sd(i, k, i, k + 1) * m.gtt;
            }
        }
        // cells: cross coefficient W G^{rt} at the center, and lumped volume
        for (int i = 0; i < nr; ++i) {
            const double rc = d.radius(i) + 0.5 * h;
            for (int k = 0; k < nth; ++k) {
                const double thc = d.theta(k) + 0.5 * dth;
                Sym2 gi{0.0, 0.0, 0.0};
                double sd = 0.0;
                const int corners[4][2] = {{i, k}, {i, k + 1}, {i + 1, k}, {i + 1, k + 1}};
                for (const auto& c : corners) {
                    const Sym2& q = g.inv_at(c[0], c[1]);
                    gi.a11 += 0.25 * q.a11;
                    gi.a12 += 0.25 * q.a12;
                    gi.a22 += 0.25 * q.a22;
                    sd += 0.25 * g.sqrt_det[d.index(c[0], c[1])];
                }
                const auto m = mapped_inverse(gi, rc, thc);
                const std::size_t ci = static_cast<std::size_t>(i) * nth + k;
                cb_[ci] = rc * sd * m.grt;
                if (cb_[ci] != 0.0) cross_ = true;
                const double quarter_mass = 0.25 * rc * sd * h * dth;
                for (const auto& c : corners) volume_[d.index(c[0], c[1])] += quarter_mass;
            }
        }
    }

    const GridDomain& dom() const { return *dom_; }
    const std::vector<double>& volume() const { return volume_; }

    /// out += gradient of the stiffness energy at u. Diagonal parts live on
    /// edges (compact 5-point coupling), the metric cross term on cells; both
    /// derive from one quadratic energy, so the operator is symmetric. Disk
    /// ring-0 slots accumulate their own shares and are reduced by the DOF
    /// map.
    void apply_stiffness(const std::vector<double>& u, std::vector<double>& out) const {
        const GridDomain& d = *dom_;
        const int nr = d.n_r, nth = d.n_theta;
        const double h = d.dr(), dth = d.dtheta();

        const double wr = dth / h;
        for (int i = 0; i < nr; ++i) {
            for (int k = 0; k < nth; ++k) {
                const std::size_t n0 = d.index(i, k);
                const std::size_t n1 = d.index(i + 1, k);
                const double f = ar_[static_cast<std::size_t>(i) * nth + k] * (u[n1] - u[n0]) * wr;
                out[n0] -= f;
                out[n1] += f;
            }
        }
        const double wt = h / dth;
        const int first_ring = d.is_disk() ? 1 : 0;
        for (int i = first_ring; i <= nr; ++i) {
            for (int k = 0; k < nth; ++k) {
                const std::size_t n0 = d.index(i, k);
                const std::size_t n1 = d.index(i, k + 1);
                const double f = ct_[static_cast<std::size_t>(i) * nth + k] * (u[n1] - u[n0]) * wt;
                out[n0] -= f;
                out[n1] += f;
            }
        }
        if (!cross_) return;
        for (int i = 0; i < nr; ++i) {
            for (int k = 0; k < nth; ++k) {
                const std::size_t ci = static_cast<std::size_t>(i) * nth + k;
                const double b = cb_[ci];
                if (b == 0.0) continue;
                const std::size_t n00 = d.index(i, k);
                const std::size_t n01 = d.index(i, k + 1);
                const std::size_t n10 = d.index(i + 1, k);
                const std::size_t n11 = d.index(i + 1, k + 1);
                const double dru = ((u[n10] - u[n00]) + (u[n11] - u[n01])) / (2.0 * h);
                const double dtu = ((u[n01] - u[n00]) + (u[n11] - u[n10])) / (2.0 * dth);
                // gradient of b * dru * dtu * (h dth)
                const double gr = b * dtu * dth / 2.0;   // d(dru)/du carries 1/(2h)
                const double gt = b * dru * h / 2.0;     // d(dtu)/du carries 1/(2 dth)
                out[n00] += -gr - gt;
                out[n10] += gr - gt;
                out[n01] += -gr + gt;
                out[n11] += gr + gt;
            }
        }
    }

    /// Diagonal of the stiffness operator (full grid), for Jacobi scaling.
    std::vector<double> stiffness_diagonal() const {
        const GridDomain& d = *dom_;
        const int nr = d.n_r, nth = d.n_theta;
        const double h = d.dr(), dth = d.dtheta();
        std::vector<double> diag(d.node_count(), 0.0);
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k < nth; ++k) {
                const double a = ar_[static_cast<std::size_t>(i) * nth + k] * dth / h;
                diag[d.index(i, k)] += a;
                diag[d.index(i + 1, k)] += a;
            }
        const int first_ring = d.is_disk() ? 1 : 0;
        for (int i = first_ring; i <= nr; ++i)
            for (int k = 0; k < nth; ++k) {
                const double c = ct_[static_cast<std::size_t>(i) * nth + k] * h / dth;
                diag[d.index(i, k)] += c;
                diag[d.index(i, k + 1)] += c;
            }
        if (cross_) {
            for (int i = 0; i < nr; ++i)
                for (int k = 0; k < nth; ++k) {
                    const double b = 0.5 * cb_[static_cast<std::size_t>(i) * nth + k];
                    diag[d.index(i, k)] += b;
                    diag[d.index(i + 1, k)] -= b;
                    diag[d.index(i, k + 1)] -= b;
                    diag[d.index(i + 1, k + 1)] += b;
                }
        }
        return diag;
    }

    const std::vector<double>& potential() const { return p_; }

private:
    DomainPtr dom_;
    std::vector<double> ar_;      // radial-edge coefficients W G^{rr}
    std::vector<double> ct_;      // angular-edge coefficients W G^{tt}
    std::vector<double> cb_;      // per-cell cross coefficients W G^{rt}
    bool cross_ = false;
    std::vector<double> volume_;  // lumped volume per node slot
    std::vector<double> p_;       // potential per node
};

/// Free-DOF view of a grid: interior rings, plus the single center unknown on
/// disks. Dirichlet rings are fixed by boundary data.
class DofMap {
public:
    explicit DofMap(DomainPtr dom) : dom_(std::move(dom)) {
        const GridDomain& d = *dom_;
        disk_ = d.is_disk();
        first_free_ring_ = disk_ ? 1 : 1;
        n_free_ = static_cast<std::size_t>(d.n_r - 1) * d.n_theta + (disk_ ? 1 : 0);
    }

    std::size_t n_free() const { return n_free_; }
    bool disk() const { return disk_; }

    void scatter(const std::vector<double>& free, std::vector<double>& full) const {
        const GridDomain& d = *dom_;
        std::size_t j = 0;
        if (disk_) {
            for (int k = 0; k < d.n_theta; ++k) full[d.index(0, k)] = free[0];
            j = 1;
        }
        for (int i = 1; i < d.n_r; ++i)
            for (int k = 0; k < d.n_theta; ++k) full[d.index(i, k)] = free[j++];
    }

    void gather(const std::vector<double>& full, std::vector<double>& free) const {
        const GridDomain& d = *dom_;
        std::size_t j = 0;
        if (disk_) free[j++] = full[d.index(0, 0)];
        for (int i = 1; i < d.n_r; ++i)
            for (int k = 0; k < d.n_theta; ++k) free[j++] = full[d.index(i, k)];
    }

    /// Gather a cell-accumulated gradient/mass array: the center collects the
    /// sum of its aliased ring-0 slots.
    void reduce(const std::vector<double>& full, std::vector<double>& free) const {
        const GridDomain& d = *dom_;
        std::size_t j = 0;
        if (disk_) {
            double sum = 0.0;
            for (int k = 0; k < d.n_theta; ++k) sum += full[d.index(0, k)];
            free[j++] = sum;
        }
        for (int i = 1; i < d.n_r; ++i)
            for (int k = 0; k < d.n_theta; ++k) free[j++] = full[d.index(i, k)];
    }

private:
    DomainPtr dom_;
    bool disk_ = false;
    int first_free_ring_ = 1;
    std::size_t n_free_ = 0;
};

struct CgStats {
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Preconditioned conjugate gradient with Jacobi scaling; terminates on
/// relative residual or throws SolverDiverged at the iteration cap
/// 50 sqrt(N) log(1/tol).
inline CgStats conjugate_gradient(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
    const std::vector<double>& diag, const std::vector<double>& b, std::vector<double>& x,
    double tol) {
    const std::size_t n = b.size();
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        return {0, 0.0};
    }
    const int max_iter = static_cast<int>(
        std::ceil(50.0 * std::sqrt(static_cast<double>(n)) * std::log(1.0 / tol))) + 10;

    std::vector<double> r(n), z(n), pvec(n), Ap(n);
    apply(x, Ap);
    double rnorm0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - Ap[i];
        rnorm0 += r[i] * r[i];
    }
    rnorm0 = std::sqrt(rnorm0);
    if (rnorm0 <= tol * bnorm) return {0, rnorm0 / bnorm};
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    pvec = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    for (int it = 1; it <= max_iter; ++it) {
        apply(pvec, Ap);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += pvec[i] * Ap[i];
        const double alpha = rz / pAp;
        double rnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * pvec[i];
            r[i] -= alpha * Ap[i];
            rnorm += r[i] * r[i];
        }
        rnorm = std::sqrt(rnorm);
        if (rnorm <= tol * bnorm) return {it, rnorm / bnorm};
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) pvec[i] = z[i] + beta * pvec[i];
    }
    throw SolverDiverged("conjugate gradient failed to reach tol within the iteration cap");
}

}  // namespace detail

struct EllipticProblem {
    enum class Kind { interior, exterior_truncated };

    DomainPtr domain;
    MetricField g;
    PotentialField p;
    std::map<BoundaryId, std::vector<double>> dirichlet;
    Kind kind = Kind::interior;
    double gamma_radius = 0.0;   // measurement circle (metadata for checks)
    double solver_tol = 1e-10;
    double truncation_tol = 1e-8;
};

namespace detail {

inline GridField solve_elliptic_system(const EllipticProblem& prob) {
    const DomainPtr dom = prob.domain;
    const GridDomain& d = *dom;

    // Boundary extension: Dirichlet values on their rings, zero elsewhere.
    std::vector<double> bc(d.node_count(), 0.0);
    for (const auto& [id, trace] : prob.dirichlet) {
        if (!d.has_boundary(id))
            throw IncompatibleData("Dirichlet data given on a nonexistent boundary");
        if (trace.size() != static_cast<std::size_t>(d.n_theta))
            throw IncompatibleData("Dirichlet trace size does not match n_theta");
        const int ring = d.boundary_ring(id);
        for (int k = 0; k < d.n_theta; ++k) bc[d.index(ring, k)] = trace[k];
    }
    for (const auto& [id, role] : d.boundary_tags) {
        if (prob.dirichlet.count(id) == 0 && role != BoundaryRole::artificial)
            throw IncompatibleData("missing Dirichlet trace on boundary '" + to_string(id) + "'");
    }

    const GridOperator op(prob.g, prob.p.p);
    const DofMap map(dom);
    const std::size_t nf = map.n_free();

    std::vector<double> pv_free(nf), diag_free(nf), vol_free(nf);
    {
        std::vector<double> tmp(d.node_count());
        map.reduce(op.volume(), vol_free);
        const auto sdiag = op.stiffness_diagonal();
        map.reduce(sdiag, diag_free);
        for (std::size_t idx = 0; idx < tmp.size(); ++idx)
            tmp[idx] = op.volume()[idx] * prob.p.p[idx];
        map.reduce(tmp, pv_free);
        // p V enters both the operator and its Jacobi diagonal.
        for (std::size_t i = 0; i < nf; ++i) diag_free[i] += pv_free[i];
    }

    std::vector<double> full(d.node_count()), grad(d.node_count());
    std::vector<double> u_bc_free(nf, 0.0);

    const auto apply = [&](const std::vector<double>& xfree, std::vector<double>& yfree) {
        map.scatter(xfree, full);
        // Homogeneous operator: zero on Dirichlet rings.
        for (const auto& [id, role] : d.boundary_tags) {
            const int ring = d.boundary_ring(id);
            for (int k = 0; k < d.n_theta; ++k) full[d.index(ring, k)] = 0.0;
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        op.apply_stiffness(full, grad);
        map.reduce(grad, yfree);
        for (std::size_t i = 0; i < nf; ++i) yfree[i] += pv_free[i] * xfree[i];
    };

    // Load vector from the boundary extension: b = -A_free,bc * g_bc.
    std::vector<double> b(nf, 0.0);
    {
        std::fill(full.begin(), full.end(), 0.0);
        for (std::size_t idx = 0; idx < full.size(); ++idx) full[idx] = bc[idx];
        std::fill(grad.begin(), grad.end(), 0.0);
        op.apply_stiffness(full, grad);
        map.reduce(grad, b);
        for (std::size_t i = 0; i < nf; ++i) b[i] = -b[i];
    }

    std::vector<double> x(nf, 0.0);
    detail::conjugate_gradient(apply, diag_free, b, x, prob.solver_tol);

    GridField out(dom);
    out.v = bc;
    map.scatter(x, out.v);
    // scatter overwrote interior only; re-impose boundary rings
    for (const auto& [id, role] : d.boundary_tags) {
        const int ring = d.boundary_ring(id);
        for (int k = 0; k < d.n_theta; ++k) out.v[d.index(ring, k)] = bc[d.index(ring, k)];
    }
    return out;
}

}  // namespace detail

/// Interior Dirichlet problem -Delta_g v + p v = 0 with v = a on the outer
/// boundary (disk B) or on both boundaries (annulus). Requires p >= 0.
inline GridField solve_interior(const EllipticProblem& prob) {
    if (prob.kind != EllipticProblem::Kind::interior)
        throw IncompatibleData("solve_interior called with a non-interior problem");
    for (double v : prob.p.p)
        if (v < 0.0) throw IncompatibleData("interior problem requires p >= 0");
    return detail::solve_elliptic_system(prob);
}

struct ExteriorSolution {
    GridField field;
    double truncation_bound = 0.0;
};

/// Truncated exterior problem on the annulus (r_S, R_inf) with homogeneous
/// Dirichlet data at the artificial boundary. Admissible only for p >= eta > 0;
/// the solution decays like e^{-sqrt(eta) r}, which bounds the truncation
/// error recorded in the result.
inline ExteriorSolution solve_exterior_truncated(const EllipticProblem& prob, double r_infinity) {
    if (prob.kind != EllipticProblem::Kind::exterior_truncated)
        throw IncompatibleData("solve_exterior_truncated called with a non-exterior problem");
    if (!(prob.p.eta > 0.0))
        throw IncompatibleData("exterior problem requires a potential lower bound eta > 0");
    const GridDomain& d = *prob.domain;
    if (d.is_disk() || std::abs(d.r_outer - r_infinity) > 1e-12)
        throw IncompatibleData("exterior domain must be the annulus (r_S, R_inf)");
    if (d.role_of(BoundaryId::outer) != BoundaryRole::artificial)
        throw IncompatibleData("exterior outer boundary must be tagged artificial");
    if (!(prob.gamma_radius > d.r_inner))
        throw IncompatibleData("exterior problem needs the measurement radius set");
    const double bound = std::exp(-std::sqrt(prob.p.eta) * (r_infinity - prob.gamma_radius));
    if (bound > prob.truncation_tol)
        throw TruncationTooSmall("R_inf too small: exp(-sqrt(eta)(R_inf - r_Gamma)) = " +
                                 std::to_string(bound) + " exceeds truncation_tol");

    EllipticProblem local = prob;
    local.dirichlet[BoundaryId::outer] = std::vector<double>(d.n_theta, 0.0);
    ExteriorSolution sol{detail::solve_elliptic_system(local), bound};
    return sol;
}

/// Boundary traces, normal derivative and the discrete trace norms on a
/// measurement circle.
struct CauchyData {
    std::vector<double> trace;
    std::vector<double> normal_deriv;
    double l2_trace = 0.0;
    double h1_trace = 0.0;
    double l2_normal = 0.0;
};

/// Discrete H1(circle) norm of a trace: L2 of the values plus L2 of the
/// arclength derivative (periodic centered differences).
inline double circle_h1_norm(const BoundaryCurve& curve, const std::vector<double>& trace) {
    const double inv_rd = 1.0 / (curve.radius * curve.dom->dtheta());
    double acc = 0.0;
    const int n = curve.n_nodes();
    for (int k = 0; k < n; ++k) {
        const double d =
            0.5 * (trace[(k + 1) % n] - trace[(k + n - 1) % n]) * inv_rd;
        acc += (trace[k] * trace[k] + d * d) * curve.ds[k];
    }
    return std::sqrt(acc);
}

inline double circle_l2_norm(const BoundaryCurve& curve, const std::vector<double>& values) {
    double acc = 0.0;
    for (int k = 0; k < curve.n_nodes(); ++k) acc += values[k] * values[k] * curve.ds[k];
    return std::sqrt(acc);
}

/// Trace and normal derivative of u on a grid circle. Centered radial stencil
/// when the circle is interior to the grid, one-sided second order on edges.
inline CauchyData extract_cauchy(const GridField& u, const BoundaryCurve& gamma_curve) {
    const GridDomain& d = *u.dom;
    const int ring = gamma_curve.ring;
    CauchyData out;
    out.trace.resize(d.n_theta);
    out.normal_deriv.resize(d.n_theta);
    const double sgn = gamma_curve.outward_radial ? 1.0 : -1.0;
    for (int k = 0; k < d.n_theta; ++k) {
        out.trace[k] = u.at(ring, k);
        out.normal_deriv[k] = sgn * detail::d_r(u, ring, k);
    }
    out.l2_trace = circle_l2_norm(gamma_curve, out.trace);
    out.h1_trace = circle_h1_norm(gamma_curve, out.trace);
    out.l2_normal = circle_l2_norm(gamma_curve, out.normal_deriv);
    return out;
}

struct ParabolicProblem {
    DomainPtr domain;  // disk B
    MetricField g;
    double T = 1.0;
    int n_t = 64;
    GridField u0;
    std::vector<std::vector<double>> boundary;  // (n_t + 1) x n_theta on S
    std::function<double(double, double, double)> source;  // optional (t, r, theta)
    double solver_tol = 1e-10;
};

struct ParabolicSolution {
    std::vector<double> t;
    std::vector<GridField> u;
    std::vector<GridField> dudt;
};

/// Crank-Nicolson stepping of du/dt = Delta_g u (+ f), Dirichlet data imposed
/// each step, each linear system solved by preconditioned CG warm-started at the
/// previous snapshot.
inline ParabolicSolution solve_parabolic(const ParabolicProblem& prob) {
    const DomainPtr dom = prob.domain;
    const GridDomain& d = *dom;
    if (prob.n_t < 64) throw IncompatibleData("parabolic stepping requires dt <= T/64");
    if (prob.boundary.size() != static_cast<std::size_t>(prob.n_t + 1))
        throw IncompatibleData("boundary data must have n_t + 1 time slices");
    const int s_ring = d.boundary_ring(BoundaryId::outer);
    for (int k = 0; k < d.n_theta; ++k) {
        if (std::abs(prob.boundary[0][k] - prob.u0.at(s_ring, k)) > 1e-10)
            throw IncompatibleData("compatibility failed: g(0,.) != u0 on S");
    }

    const double dt = prob.T / prob.n_t;
    const detail::GridOperator op(prob.g, std::vector<double>(d.node_count(), 0.0));
    const detail::DofMap map(dom);
    const std::size_t nf = map.n_free();

    std::vector<double> vol_free(nf);
    map.reduce(op.volume(), vol_free);
    std::vector<double> diag_free(nf);
    {
        const auto sdiag = op.stiffness_diagonal();
        std::vector<double> tmp(nf);
        map.reduce(sdiag, tmp);
        for (std::size_t i = 0; i < nf; ++i) diag_free[i] = vol_free[i] + 0.5 * dt * tmp[i];
    }

    std::vector<double> full(d.node_count()), grad(d.node_count());

    // y = (V + dt/2 K) x with homogeneous boundary.
    const auto apply = [&](const std::vector<double>& xfree, std::vector<double>& yfree) {
        map.scatter(xfree, full);
        for (int k = 0; k < d.n_theta; ++k) full[d.index(s_ring, k)] = 0.0;
        if (!d.is_disk())
            for (int k = 0; k < d.n_theta; ++k) full[d.index(0, k)] = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        op.apply_stiffness(full, grad);
        map.reduce(grad, yfree);
        for (std::size_t i = 0; i < nf; ++i)
            yfree[i] = vol_free[i] * xfree[i] + 0.5 * dt * yfree[i];
    };

    ParabolicSolution sol;
    sol.t.resize(prob.n_t + 1);
    sol.u.reserve(prob.n_t + 1);
    sol.u.push_back(prob.u0);

    std::vector<double> x(nf), b(nf), Ku(nf), tmp_free(nf);
    map.gather(prob.u0.v, x);

    GridField cur = prob.u0;
    for (int n = 0; n < prob.n_t; ++n) {
        const double t_new = (n + 1) * dt;
        sol.t[n] = n * dt;

        // K applied to the full old snapshot (its own boundary values included).
        std::fill(grad.begin(), grad.end(), 0.0);
        op.apply_stiffness(cur.v, grad);
        map.reduce(grad, Ku);

        map.gather(cur.v, tmp_free);
        for (std::size_t i = 0; i < nf; ++i)
            b[i] = vol_free[i] * tmp_free[i] - 0.5 * dt * Ku[i];

        if (prob.source) {
            std::vector<double> favg(d.node_count());
            for (int i = 0; i <= d.n_r; ++i)
                for (int k = 0; k < d.n_theta; ++k)
                    favg[d.index(i, k)] =
                        0.5 * (prob.source(n * dt, d.radius(i), d.theta(k)) +
                               prob.source(t_new, d.radius(i), d.theta(k)));
            if (d.is_disk()) {
                const double fc = favg[d.index(0, 0)];
                for (int k = 0; k < d.n_theta; ++k) favg[d.index(0, k)] = fc;
            }
            std::vector<double> ff(nf);
            map.gather(favg, ff);
            for (std::size_t i = 0; i < nf; ++i) b[i] += dt * vol_free[i] * ff[i];
        }

        // Coupling of the new Dirichlet values through (V + dt/2 K).
        std::fill(full.begin(), full.end(), 0.0);
        for (int k = 0; k < d.n_theta; ++k)
            full[d.index(s_ring, k)] = prob.boundary[n + 1][k];
        std::fill(grad.begin(), grad.end(), 0.0);
        op.apply_stiffness(full, grad);
        map.reduce(grad, tmp_free);
        for (std::size_t i = 0; i < nf; ++i) b[i] -= 0.5 * dt * tmp_free[i];

        detail::conjugate_gradient(apply, diag_free, b, x, prob.solver_tol);

        GridField next(dom);
        map.scatter(x, next.v);
        for (int k = 0; k < d.n_theta; ++k)
            next.v[d.index(s_ring, k)] = prob.boundary[n + 1][k];
        sol.u.push_back(next);
        cur = next;
    }
    sol.t[prob.n_t] = prob.T;

    sol.dudt.reserve(prob.n_t + 1);
    const int last = prob.n_t;
    for (int n = 0; n <= last; ++n) {
        GridField dudt(dom);
        if (n == 0) {
            for (std::size_t idx = 0; idx < dudt.v.size(); ++idx)
                dudt.v[idx] = (-3.0 * sol.u[0].v[idx] + 4.0 * sol.u[1].v[idx] -
                               sol.u[2].v[idx]) / (2.0 * dt);
        } else if (n == last) {
            for (std::size_t idx = 0; idx < dudt.v.size(); ++idx)
                dudt.v[idx] = (3.0 * sol.u[last].v[idx] - 4.0 * sol.u[last - 1].v[idx] +
                               sol.u[last - 2].v[idx]) / (2.0 * dt);
        } else {
            for (std::size_t idx = 0; idx < dudt.v.size(); ++idx)
                dudt.v[idx] = (sol.u[n + 1].v[idx] - sol.u[n - 1].v[idx]) / (2.0 * dt);
        }
        sol.dudt.push_back(std::move(dudt));
    }
    return sol;
}

}  // namespace carlab
