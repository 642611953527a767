#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"
#include "carlab/pool.hpp"
#include "carlab/riemannian.hpp"
#include "carlab/rng.hpp"
#include "carlab/solvers.hpp"

namespace carlab {

// ---------------------------------------------------------------------------
// Admissible boundary data
// ---------------------------------------------------------------------------

struct AdmissibleSpec {
    double alpha = 1.0;
    double beta = 1.0;
    int fourier_degree = 4;
    std::uint64_t rng_seed = 0;
};

/// Trigonometric polynomial on a circle, kept in coefficient form so the same
/// sample can be re-evaluated on refined meshes.
struct FourierTrace {
    double c0 = 0.0;
    std::vector<double> ck;  // cos coefficients, k = 1..K
    std::vector<double> dk;  // sin coefficients

    double eval(double th) const {
        double a = c0;
        for (std::size_t k = 0; k < ck.size(); ++k) {
            const double kk = static_cast<double>(k + 1);
            a += ck[k] * std::cos(kk * th) + dk[k] * std::sin(kk * th);
        }
        return a;
    }

    std::vector<double> values(const BoundaryCurve& curve) const {
        std::vector<double> out(curve.n_nodes());
        for (int k = 0; k < curve.n_nodes(); ++k) out[k] = eval(curve.dom->theta(k));
        return out;
    }
};

struct AdmissibleCheck {
    bool pass = false;
    double min_abs = 0.0;
    double max_tangential = 0.0;
    int worst_node = -1;
    std::string reason;
};

/// Nodewise admissibility: |a| >= alpha and |d_tau a| <= beta with the same
/// periodic centered tangential stencil the harness uses everywhere.
inline AdmissibleCheck check_admissible(const std::vector<double>& a,
                                        const AdmissibleSpec& spec,
                                        const BoundaryCurve& curve) {
    AdmissibleCheck out;
    const int n = curve.n_nodes();
    const double inv_rd = 1.0 / (curve.radius * curve.dom->dtheta());
    out.min_abs = std::numeric_limits<double>::max();
    out.max_tangential = 0.0;
    int worst_value = -1, worst_deriv = -1;
    for (int k = 0; k < n; ++k) {
        const double mag = std::abs(a[k]);
        if (mag < out.min_abs) {
            out.min_abs = mag;
            worst_value = k;
        }
        const double d = std::abs(0.5 * (a[(k + 1) % n] - a[(k + n - 1) % n]) * inv_rd);
        if (d > out.max_tangential) {
            out.max_tangential = d;
            worst_deriv = k;
        }
    }
    if (out.min_abs < spec.alpha - 1e-12) {
        out.reason = "|a| dips below alpha";
        out.worst_node = worst_value;
        return out;
    }
    if (out.max_tangential > spec.beta + 1e-12) {
        out.reason = "|d_tau a| exceeds beta";
        out.worst_node = worst_deriv;
        return out;
    }
    out.pass = true;
    return out;
}

/// Draws admissible traces a = c0 + sum(ck cos + dk sin): the oscillatory part
/// is rescaled under the derivative budget beta, c0 clears the amplitude of
/// the oscillation above alpha, and every draw is rejection-checked nodewise.
/// Emitted samples are positive; sign symmetry of the ratio is a tested
/// property, not a sampling degree of freedom.
inline std::vector<FourierTrace> sample_admissible(const AdmissibleSpec& spec,
                                                   const BoundaryCurve& curve, int count,
                                                   Rng* external_rng = nullptr) {
    if (!(spec.alpha > 0.0) || spec.beta < 0.0)
        throw ConfigInvalid("admissible spec requires alpha > 0 and beta >= 0");
    Rng own(spec.rng_seed);
    Rng& rng = external_rng ? *external_rng : own;
    std::vector<FourierTrace> out;
    out.reserve(count);
    const int K = spec.fourier_degree;
    for (int n = 0; n < count; ++n) {
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            FourierTrace tr;
            tr.ck.resize(K);
            tr.dk.resize(K);
            double deriv_bound = 0.0, amp_bound = 0.0;
            for (int k = 1; k <= K; ++k) {
                tr.ck[k - 1] = rng.symmetric() / k;
                tr.dk[k - 1] = rng.symmetric() / k;
                const double mass = std::abs(tr.ck[k - 1]) + std::abs(tr.dk[k - 1]);
                amp_bound += mass;
                deriv_bound += k * mass;
            }
            double lambda = 0.0;
            if (spec.beta > 0.0 && deriv_bound > 0.0) {
                const double frac = rng.uniform(0.25, 0.95);
                lambda = spec.beta * frac * curve.radius / deriv_bound;
            }
            for (int k = 0; k < K; ++k) {
                tr.ck[k] *= lambda;
                tr.dk[k] *= lambda;
            }
            amp_bound *= lambda;
            tr.c0 = spec.alpha * (1.0 + 0.5 * rng.uniform()) + amp_bound;

            const auto values = tr.values(curve);
            if (check_admissible(values, spec, curve).pass) {
                out.push_back(std::move(tr));
                accepted = true;
            }
        }
        if (!accepted)
            throw SamplingExhausted("admissible sampler hit 1000 rejections for one sample");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elliptic stability study (interior and exterior problems)
// ---------------------------------------------------------------------------

struct EllipticStudySetup {
    EllipticProblem::Kind kind = EllipticProblem::Kind::interior;
    double r_S = 1.0;          // circle carrying the unknown data
    double gamma_radius = 0.5; // measurement circle
    double r_infinity = 0.0;   // exterior truncation radius (exterior only)
    int n_r = 64;
    int n_theta = 128;
    MetricSpec metric;
    double p_value = 0.0;
    double eta = 0.0;
    double solver_tol = 1e-10;
    double truncation_tol = 1e-8;

    EllipticStudySetup refined() const {
        EllipticStudySetup r = *this;
        r.n_r *= 2;
        r.n_theta *= 2;
        return r;
    }
};

namespace detail {

struct EllipticInstance {
    DomainPtr dom;
    EllipticProblem prob;
    BoundaryCurve s_curve;
    BoundaryCurve gamma_curve;
    BoundaryId s_id = BoundaryId::outer;
};

inline EllipticInstance build_elliptic_instance(const EllipticStudySetup& cfg) {
    EllipticInstance inst;
    if (cfg.kind == EllipticProblem::Kind::interior) {
        if (!(cfg.gamma_radius > 0.0) || !(cfg.gamma_radius < cfg.r_S))
            throw ConfigInvalid("interior study needs 0 < gamma_radius < r_S");
        inst.dom = build_disk(cfg.r_S, cfg.n_r, cfg.n_theta, BoundaryRole::S);
        inst.s_id = BoundaryId::outer;
    } else {
        if (!(cfg.r_infinity > cfg.gamma_radius) || !(cfg.gamma_radius > cfg.r_S))
            throw ConfigInvalid("exterior study needs r_S < gamma_radius < r_infinity");
        inst.dom = build_annulus(cfg.r_S, cfg.r_infinity, cfg.n_r, cfg.n_theta,
                                 {{BoundaryId::inner, BoundaryRole::S},
                                  {BoundaryId::outer, BoundaryRole::artificial}});
        inst.s_id = BoundaryId::inner;
    }
    inst.prob.domain = inst.dom;
    inst.prob.g = build_metric(inst.dom, cfg.metric);
    inst.prob.p = constant_potential(inst.dom, cfg.p_value, cfg.eta);
    inst.prob.kind = cfg.kind;
    inst.prob.gamma_radius = cfg.gamma_radius;
    inst.prob.solver_tol = cfg.solver_tol;
    inst.prob.truncation_tol = cfg.truncation_tol;
    inst.s_curve = boundary_curve(inst.dom, inst.s_id);
    inst.gamma_curve = interior_circle(inst.dom, cfg.gamma_radius);
    return inst;
}

}  // namespace detail

struct SampleRecord {
    int id = 0;
    bool ok = false;
    std::string error;
    double l2_S = 0.0;
    double h1_S = 0.0;
    double h1_Gamma = 0.0;
    double l2_dn_Gamma = 0.0;
    double ratio = 0.0;
    double ratio_g1 = std::numeric_limits<double>::quiet_NaN();  // separable parabolic only
};

/// Solve one boundary-value problem and form the Lipschitz-stability quotient
///   ||a||_{H1(S)} / (||u||_{H1(Gamma)} + ||d_nu u||_{L2(Gamma)}).
inline SampleRecord elliptic_ratio(const FourierTrace& a, const EllipticStudySetup& cfg) {
    const auto inst = detail::build_elliptic_instance(cfg);
    SampleRecord rec;
    EllipticProblem prob = inst.prob;
    const auto a_values = a.values(inst.s_curve);
    prob.dirichlet[inst.s_id] = a_values;

    GridField u =
        cfg.kind == EllipticProblem::Kind::interior
            ? solve_interior(prob)
            : solve_exterior_truncated(prob, cfg.r_infinity).field;

    const CauchyData cauchy = extract_cauchy(u, inst.gamma_curve);
    rec.l2_S = circle_l2_norm(inst.s_curve, a_values);
    rec.h1_S = circle_h1_norm(inst.s_curve, a_values);
    rec.h1_Gamma = cauchy.h1_trace;
    rec.l2_dn_Gamma = cauchy.l2_normal;
    const double den = rec.h1_Gamma + rec.l2_dn_Gamma;
    if (!(den > 0.0)) {
        rec.ok = false;
        rec.error = "zero measurement norm for admissible data (uniqueness anomaly)";
        return rec;
    }
    rec.ratio = rec.h1_S / den;
    rec.ok = true;
    return rec;
}

struct StudyOptions {
    bool refine_worst = true;
    int scale_check_count = 0;
    double scale_factor = 1e3;
    int threads = 0;
};

struct StabilityReport {
    std::vector<SampleRecord> samples;
    int failures = 0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    int worst_id = -1;
    bool refined = false;
    double refined_worst_ratio = 0.0;
    double refined_rel_change = 0.0;
    struct ScaleCheck {
        int sample_id;
        double rel_deviation;
    };
    std::vector<ScaleCheck> scale_checks;
};

namespace detail {

inline void aggregate_report(StabilityReport& rep) {
    std::vector<double> ratios;
    rep.failures = 0;
    for (const auto& s : rep.samples) {
        if (!s.ok) {
            ++rep.failures;
            continue;
        }
        ratios.push_back(s.ratio);
        if (s.ratio > rep.max_ratio) {
            rep.max_ratio = s.ratio;
            rep.worst_id = s.id;
        }
    }
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        const std::size_t n = ratios.size();
        rep.median_ratio = (n % 2 == 1) ? ratios[n / 2]
                                        : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
    }
}

}  // namespace detail

/// Monte-Carlo stability study: draws admissible samples, solves each problem
/// in a worker pool, aggregates ratios, re-solves the worst sample on a
/// doubled mesh, and optionally verifies scale invariance of the ratio.
inline StabilityReport run_study(const AdmissibleSpec& spec, const EllipticStudySetup& cfg,
                                 int count, const StudyOptions& opts = {}) {
    const auto inst = detail::build_elliptic_instance(cfg);
    const auto samples = sample_admissible(spec, inst.s_curve, count);

    StabilityReport rep;
    rep.samples.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        SampleRecord rec;
        try {
            rec = elliptic_ratio(samples[i], cfg);
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.kind() + std::string(": ") + e.what();
        }
        rec.id = static_cast<int>(i);
        rep.samples[i] = rec;
    }, opts.threads);
    detail::aggregate_report(rep);

    if (opts.refine_worst && rep.worst_id >= 0) {
        const auto refined = elliptic_ratio(samples[rep.worst_id], cfg.refined());
        if (refined.ok) {
            rep.refined = true;
            rep.refined_worst_ratio = refined.ratio;
            rep.refined_rel_change =
                std::abs(refined.ratio - rep.max_ratio) / rep.max_ratio;
        }
    }

    const int n_scale = std::min<int>(opts.scale_check_count, static_cast<int>(samples.size()));
    for (int i = 0; i < n_scale; ++i) {
        if (!rep.samples[i].ok) continue;
        FourierTrace scaled = samples[i];
        scaled.c0 *= opts.scale_factor;
        for (auto& c : scaled.ck) c *= opts.scale_factor;
        for (auto& c : scaled.dk) c *= opts.scale_factor;
        const auto rec = elliptic_ratio(scaled, cfg);
        if (rec.ok)
            rep.scale_checks.push_back(
                {i, std::abs(rec.ratio - rep.samples[i].ratio) / rep.samples[i].ratio});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Parabolic stability study (Theorem-4.1 style ratios)
// ---------------------------------------------------------------------------

/// Harmonic polynomial profile c0 + sum (r/r_S)^k (a_k cos + b_k sin): used as
/// u0 so that boundary samples can be compatible by construction.
struct HarmonicProfile {
    double c0 = 1.0;
    std::vector<std::array<double, 2>> harmonics;  // (a_k, b_k), k = 1..

    double eval(double r_over_rs, double th) const {
        double v = c0;
        double pw = 1.0;
        for (std::size_t k = 0; k < harmonics.size(); ++k) {
            pw *= r_over_rs;
            const double kk = static_cast<double>(k + 1);
            v += pw * (harmonics[k][0] * std::cos(kk * th) +
                       harmonics[k][1] * std::sin(kk * th));
        }
        return v;
    }
};

struct ParabolicAdmissibleSpec {
    double alpha = 1.0;
    double beta = 1.0;
    HarmonicProfile u0;
    int time_degree = 2;
    int fourier_degree = 3;
    std::uint64_t rng_seed = 0;
};

/// Space-time boundary sample g(t, theta); either a compatible perturbation of
/// the u0 trace or a separable product g0(t) g1(theta).
struct ParabolicSample {
    // general form: base(theta) + sum_j (t/T)^j osc_j(theta)
    FourierTrace base;
    std::vector<FourierTrace> osc;
    double T = 1.0;
    // separable form (osc empty): g0(t) = 1 + ramp t/T, g1 = base
    bool separable = false;
    double ramp = 0.0;

    double eval(double t, double th) const {
        if (separable) return (1.0 + ramp * t / T) * base.eval(th);
        double v = base.eval(th);
        double pw = 1.0;
        for (const auto& o : osc) {
            pw *= t / T;
            v += pw * o.eval(th);
        }
        return v;
    }

    double eval_dt(double t, double th) const {
        if (separable) return (ramp / T) * base.eval(th);
        double v = 0.0;
        for (std::size_t j = 0; j < osc.size(); ++j) {
            const double jj = static_cast<double>(j + 1);
            v += jj * std::pow(t / T, jj - 1.0) / T * osc[j].eval(th);
        }
        return v;
    }
};

/// Nodewise parabolic admissibility with the harness stencils: |g| >= alpha
/// and |d_t g| + |d_tau g| <= beta at every (time node, angle node).
inline AdmissibleCheck check_admissible_parabolic(const ParabolicSample& g,
                                                  const ParabolicAdmissibleSpec& spec,
                                                  const BoundaryCurve& curve,
                                                  const std::vector<double>& t_grid) {
    AdmissibleCheck out;
    out.min_abs = std::numeric_limits<double>::max();
    const int n = curve.n_nodes();
    const int nt = static_cast<int>(t_grid.size());
    const double inv_rd = 1.0 / (curve.radius * curve.dom->dtheta());
    for (int j = 0; j < nt; ++j) {
        const double t = t_grid[j];
        const double dt_lo = j > 0 ? t_grid[j] - t_grid[j - 1] : t_grid[1] - t_grid[0];
        for (int k = 0; k < n; ++k) {
            const double th = curve.dom->theta(k);
            const double val = g.eval(t, th);
            out.min_abs = std::min(out.min_abs, std::abs(val));
            // time derivative: centered where possible, one-sided at the ends
            double dtv;
            if (j == 0) {
                dtv = (g.eval(t_grid[1], th) - val) / dt_lo;
            } else if (j == nt - 1) {
                dtv = (val - g.eval(t_grid[j - 1], th)) / dt_lo;
            } else {
                dtv = (g.eval(t_grid[j + 1], th) - g.eval(t_grid[j - 1], th)) /
                      (t_grid[j + 1] - t_grid[j - 1]);
            }
            const double thp = curve.dom->theta(k + 1);
            const double thm = curve.dom->theta(k - 1);
            const double dtau = 0.5 * (g.eval(t, thp) - g.eval(t, thm)) * inv_rd;
            const double total = std::abs(dtv) + std::abs(dtau);
            out.max_tangential = std::max(out.max_tangential, total);
            if (std::abs(val) < spec.alpha - 1e-12) {
                out.reason = "|g| dips below alpha";
                out.worst_node = k;
                return out;
            }
            if (total > spec.beta + 1e-12) {
                out.reason = "|d_t g| + |d_tau g| exceeds beta";
                out.worst_node = k;
                return out;
            }
        }
    }
    out.pass = true;
    return out;
}

/// Draws compatible space-time samples: the t = 0 trace equals the u0 trace;
/// oscillations vanish at t = 0 and are budgeted against beta analytically
/// before the nodewise rejection check.
inline std::vector<ParabolicSample> sample_admissible_parabolic(
    const ParabolicAdmissibleSpec& spec, const BoundaryCurve& curve, double T,
    const std::vector<double>& t_grid, int count, bool separable, double ramp) {
    Rng rng(spec.rng_seed);
    std::vector<ParabolicSample> out;
    out.reserve(count);

    FourierTrace base;
    base.c0 = spec.u0.c0;
    for (const auto& h : spec.u0.harmonics) {
        base.ck.push_back(h[0]);
        base.dk.push_back(h[1]);
    }

    for (int n = 0; n < count; ++n) {
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            ParabolicSample s;
            s.T = T;
            if (separable) {
                s.separable = true;
                s.ramp = ramp;
                AdmissibleSpec g1spec{spec.alpha, spec.beta / (2.0 * (1.0 + std::abs(ramp))),
                                      spec.fourier_degree, 0};
                auto g1 = sample_admissible(g1spec, curve, 1, &rng);
                s.base = g1.front();
            } else {
                s.base = base;
                double budget = spec.beta;
                // subtract the base trace's own tangential variation
                for (std::size_t k = 0; k < base.ck.size(); ++k)
                    budget -= (k + 1) * (std::abs(base.ck[k]) + std::abs(base.dk[k])) /
                              curve.radius;
                if (budget <= 0.0)
                    throw SamplingExhausted(
                        "u0 trace alone exhausts the beta budget; no admissible samples");
                double deriv_mass = 0.0, amp_mass = 0.0;
                std::vector<FourierTrace> osc(spec.time_degree);
                for (int j = 0; j < spec.time_degree; ++j) {
                    osc[j].ck.resize(spec.fourier_degree);
                    osc[j].dk.resize(spec.fourier_degree);
                    for (int k = 1; k <= spec.fourier_degree; ++k) {
                        osc[j].ck[k - 1] = rng.symmetric() / k;
                        osc[j].dk[k - 1] = rng.symmetric() / k;
                        const double mass =
                            std::abs(osc[j].ck[k - 1]) + std::abs(osc[j].dk[k - 1]);
                        amp_mass += mass;
                        // time-derivative factor j/T plus tangential factor k/r
                        deriv_mass += mass * ((j + 1) / T + k / curve.radius);
                    }
                }
                const double frac = rng.uniform(0.2, 0.9);
                double lambda = deriv_mass > 0.0 ? budget * frac / deriv_mass : 0.0;
                // amplitude must also keep |g| >= alpha given the base minimum
                double base_min = std::numeric_limits<double>::max();
                for (int k = 0; k < curve.n_nodes(); ++k)
                    base_min = std::min(base_min, std::abs(base.eval(curve.dom->theta(k))));
                if (amp_mass > 0.0)
                    lambda = std::min(lambda, (base_min - spec.alpha) * 0.9 / amp_mass);
                lambda = std::max(lambda, 0.0);
                for (auto& o : osc) {
                    for (auto& c : o.ck) c *= lambda;
                    for (auto& c : o.dk) c *= lambda;
                }
                s.osc = std::move(osc);
            }
            if (check_admissible_parabolic(s, spec, curve, t_grid).pass) {
                out.push_back(std::move(s));
                accepted = true;
            }
        }
        if (!accepted)
            throw SamplingExhausted("parabolic admissible sampler hit 1000 rejections");
    }
    return out;
}

struct ParabolicStudySetup {
    double r_S = 1.0;
    double gamma_radius = 0.5;
    int n_r = 48;
    int n_theta = 96;
    int n_t = 128;
    double T = 1.0;
    double eps_over_T = 0.25;
    MetricSpec metric;
    double solver_tol = 1e-10;

    ParabolicStudySetup refined() const {
        ParabolicStudySetup r = *this;
        r.n_r *= 2;
        r.n_theta *= 2;
        r.n_t *= 2;
        return r;
    }
};

/// Solve the IBVP for one boundary sample and form the quotient of
/// ||g||_{H1((eps,T-eps) x S)} by ||u||_{H1(Sigma_0)} + ||d_nu u||_{L2(Sigma_0)}.
inline SampleRecord parabolic_ratio(const ParabolicSample& g,
                                    const ParabolicAdmissibleSpec& spec,
                                    const ParabolicStudySetup& cfg) {
    SampleRecord rec;
    const DomainPtr dom = build_disk(cfg.r_S, cfg.n_r, cfg.n_theta, BoundaryRole::S);
    const BoundaryCurve s_curve = boundary_curve(dom, BoundaryId::outer);
    const BoundaryCurve g_curve = interior_circle(dom, cfg.gamma_radius);

    ParabolicProblem prob;
    prob.domain = dom;
    prob.g = build_metric(dom, cfg.metric);
    prob.T = cfg.T;
    prob.n_t = cfg.n_t;
    prob.solver_tol = cfg.solver_tol;
    if (g.separable) {
        // u0 is the harmonic extension of g1 (g0(0) = 1), exact in closed form.
        prob.u0 = GridField::sample(dom, [&](double r, double th) {
            double v = g.base.c0;
            double pw = 1.0;
            for (std::size_t k = 0; k < g.base.ck.size(); ++k) {
                pw *= r / cfg.r_S;
                const double kk = static_cast<double>(k + 1);
                v += pw * (g.base.ck[k] * std::cos(kk * th) +
                           g.base.dk[k] * std::sin(kk * th));
            }
            return v;
        });
    } else {
        prob.u0 = GridField::sample(
            dom, [&](double r, double th) { return spec.u0.eval(r / cfg.r_S, th); });
    }
    const double dt = cfg.T / cfg.n_t;
    prob.boundary.resize(cfg.n_t + 1);
    for (int j = 0; j <= cfg.n_t; ++j) {
        prob.boundary[j].resize(cfg.n_theta);
        for (int k = 0; k < cfg.n_theta; ++k)
            prob.boundary[j][k] = g.eval(j * dt, dom->theta(k));
    }

    const ParabolicSolution sol = solve_parabolic(prob);

    // Denominator over the full lateral cylinder Sigma_0 = (0,T) x Gamma.
    double h1_sq = 0.0, dn_sq = 0.0;
    const double inv_rd = 1.0 / (g_curve.radius * dom->dtheta());
    for (int j = 0; j <= cfg.n_t; ++j) {
        const double tw = (j == 0 || j == cfg.n_t) ? 0.5 * dt : dt;
        double acc_h1 = 0.0, acc_dn = 0.0;
        for (int k = 0; k < cfg.n_theta; ++k) {
            const double uv = sol.u[j].at(g_curve.ring, k);
            const double ut = sol.dudt[j].at(g_curve.ring, k);
            const double utau = 0.5 *
                                (sol.u[j].at(g_curve.ring, k + 1) -
                                 sol.u[j].at(g_curve.ring, k - 1)) *
                                inv_rd;
            const double dn = detail::d_r(sol.u[j], g_curve.ring, k);
            acc_h1 += (uv * uv + ut * ut + utau * utau) * g_curve.ds[k];
            acc_dn += dn * dn * g_curve.ds[k];
        }
        h1_sq += tw * acc_h1;
        dn_sq += tw * acc_dn;
    }
    rec.h1_Gamma = std::sqrt(h1_sq);
    rec.l2_dn_Gamma = std::sqrt(dn_sq);

    // Numerator over the clamped window (eps, T-eps); centered time stencils.
    const double eps = cfg.eps_over_T * cfg.T;
    double num_sq = 0.0, l2_sq = 0.0;
    for (int j = 0; j <= cfg.n_t; ++j) {
        const double t = j * dt;
        if (t < eps - 1e-12 || t > cfg.T - eps + 1e-12) continue;
        const bool edge = (t < eps + dt - 1e-12) || (t > cfg.T - eps - dt + 1e-12);
        const double tw = edge ? 0.5 * dt : dt;
        double acc = 0.0, acc_l2 = 0.0;
        for (int k = 0; k < cfg.n_theta; ++k) {
            const double th = dom->theta(k);
            const double gv = g.eval(t, th);
            const double gt = (g.eval(t + dt, th) - g.eval(t - dt, th)) / (2.0 * dt);
            const double gtau = 0.5 *
                                (g.eval(t, dom->theta(k + 1)) - g.eval(t, dom->theta(k - 1))) *
                                inv_rd;
            acc += (gv * gv + gt * gt + gtau * gtau) * s_curve.ds[k];
            acc_l2 += gv * gv * s_curve.ds[k];
        }
        num_sq += tw * acc;
        l2_sq += tw * acc_l2;
    }
    rec.h1_S = std::sqrt(num_sq);
    rec.l2_S = std::sqrt(l2_sq);

    const double den = rec.h1_Gamma + rec.l2_dn_Gamma;
    if (!(den > 0.0)) {
        rec.ok = false;
        rec.error = "zero measurement norm for admissible data (uniqueness anomaly)";
        return rec;
    }
    rec.ratio = rec.h1_S / den;
    if (g.separable) {
        const auto g1_values = g.base.values(s_curve);
        rec.ratio_g1 = circle_h1_norm(s_curve, g1_values) / den;
    }
    rec.ok = true;
    return rec;
}

/// Monte-Carlo parabolic study; mirrors run_study for the heat problem.
inline StabilityReport run_parabolic_study(const ParabolicAdmissibleSpec& spec,
                                           const ParabolicStudySetup& cfg, int count,
                                           bool separable, double ramp,
                                           const StudyOptions& opts = {}) {
    const DomainPtr dom = build_disk(cfg.r_S, cfg.n_r, cfg.n_theta, BoundaryRole::S);
    const BoundaryCurve s_curve = boundary_curve(dom, BoundaryId::outer);
    std::vector<double> t_grid(cfg.n_t + 1);
    for (int j = 0; j <= cfg.n_t; ++j) t_grid[j] = cfg.T * j / cfg.n_t;
    const auto samples =
        sample_admissible_parabolic(spec, s_curve, cfg.T, t_grid, count, separable, ramp);

    StabilityReport rep;
    rep.samples.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        SampleRecord rec;
        try {
            rec = parabolic_ratio(samples[i], spec, cfg);
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.kind() + std::string(": ") + e.what();
        }
        rec.id = static_cast<int>(i);
        rep.samples[i] = rec;
    }, opts.threads);
    detail::aggregate_report(rep);

    if (opts.refine_worst && rep.worst_id >= 0) {
        const auto refined = parabolic_ratio(samples[rep.worst_id], spec, cfg.refined());
        if (refined.ok) {
            rep.refined = true;
            rep.refined_worst_ratio = refined.ratio;
            rep.refined_rel_change = std::abs(refined.ratio - rep.max_ratio) / rep.max_ratio;
        }
    }

    const int n_scale = std::min<int>(opts.scale_check_count, static_cast<int>(samples.size()));
    for (int i = 0; i < n_scale; ++i) {
        if (!rep.samples[i].ok) continue;
        ParabolicSample scaled = samples[i];
        scaled.base.c0 *= opts.scale_factor;
        for (auto& c : scaled.base.ck) c *= opts.scale_factor;
        for (auto& c : scaled.base.dk) c *= opts.scale_factor;
        for (auto& o : scaled.osc) {
            for (auto& c : o.ck) c *= opts.scale_factor;
            for (auto& c : o.dk) c *= opts.scale_factor;
        }
        ParabolicAdmissibleSpec sspec = spec;
        sspec.u0.c0 *= opts.scale_factor;
        for (auto& h : sspec.u0.harmonics) {
            h[0] *= opts.scale_factor;
            h[1] *= opts.scale_factor;
        }
        const auto rec = parabolic_ratio(scaled, sspec, cfg);
        if (rec.ok)
            rep.scale_checks.push_back(
                {i, std::abs(rec.ratio - rep.samples[i].ratio) / rep.samples[i].ratio});
    }
    return rep;
}

}  // namespace carlab
