#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "carlab/bank.hpp"
#include "carlab/carleman.hpp"
#include "carlab/config.hpp"
#include "carlab/io.hpp"
#include "carlab/oracles.hpp"
#include "carlab/solvers.hpp"
#include "carlab/stability.hpp"

namespace carlab {

namespace detail {

inline std::string sweep_flag(const SweepCell& c) {
    return c.indeterminate ? "indeterminate" : "ok";
}

inline void write_sweep_files(const SweepResult& res, const std::filesystem::path& dir,
                              const std::string& prefix) {
    CsvWriter csv(dir / (prefix + ".csv"),
                  {"test_id", "s", "gamma", "lhs_interior", "lhs_upsilon", "rhs_pde", "rhs_pi",
                   "rhs_tau", "ratio", "flag"});
    for (std::size_t t = 0; t < res.test_ids.size(); ++t) {
        for (std::size_t ig = 0; ig < res.gamma_values.size(); ++ig) {
            for (std::size_t is = 0; is < res.s_values.size(); ++is) {
                const auto& c = res.cell(t, ig, is);
                csv.cell(res.test_ids[t]);
                csv.cell(c.sides.s);
                csv.cell(c.sides.gamma);
                csv.cell(c.sides.lhs_interior);
                csv.cell(c.sides.lhs_upsilon);
                csv.cell(c.sides.rhs_pde);
                csv.cell(c.sides.rhs_pi);
                csv.cell(c.sides.rhs_upsilon_tangential);
                csv.cell(c.ratio);
                csv.cell(sweep_flag(c));
                csv.end_row();
            }
        }
    }

    CsvWriter plot(dir / (prefix + "_plot.csv"), {"x", "y", "series"});
    for (std::size_t t = 0; t < res.test_ids.size(); ++t) {
        for (std::size_t ig = 0; ig < res.gamma_values.size(); ++ig) {
            std::string series = res.test_ids[t];
            if (res.gamma_values.size() > 1)
                series += "@gamma=" + fmt_double(res.gamma_values[ig]);
            for (std::size_t is = 0; is < res.s_values.size(); ++is) {
                const auto& c = res.cell(t, ig, is);
                if (c.indeterminate) continue;
                plot.cell(c.sides.s);
                plot.cell(c.ratio);
                plot.cell(series);
                plot.end_row();
            }
        }
    }
}

inline ordered_json sweep_summary_json(const SweepResult& res) {
    ordered_json j;
    j["stable_found"] = res.stable_found;
    if (res.stable_found) {
        j["gamma_star"] = res.gamma_star;
        j["s_star"] = res.s_star;
        j["c_emp"] = res.c_emp;
    } else {
        j["diagnostic"] = res.diagnostic;
    }
    j["gamma_grid"] = res.gamma_values;
    j["s_grid"] = res.s_values;
    j["test_ids"] = res.test_ids;
    return j;
}

inline ordered_json report_json(const StabilityReport& rep) {
    ordered_json j;
    j["count"] = rep.samples.size();
    j["failures"] = rep.failures;
    j["max_ratio"] = rep.max_ratio;
    j["median_ratio"] = rep.median_ratio;
    j["worst_sample_id"] = rep.worst_id;
    if (rep.refined) {
        j["refined_worst_ratio"] = rep.refined_worst_ratio;
        j["refined_rel_change"] = rep.refined_rel_change;
    }
    if (!rep.scale_checks.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& sc : rep.scale_checks) {
            ordered_json e;
            e["sample_id"] = sc.sample_id;
            e["rel_deviation"] = sc.rel_deviation;
            arr.push_back(e);
        }
        j["scale_checks"] = arr;
    }
    return j;
}

inline void write_report_files(const StabilityReport& rep, const ExperimentConfig& cfg,
                               const std::filesystem::path& dir, bool parabolic) {
    std::vector<std::string> header{"sample_id", "h1_S", "h1_Gamma", "l2_dn_Gamma", "ratio"};
    if (parabolic) header.push_back("ratio_g1");
    CsvWriter csv(dir / "samples.csv", header);
    for (const auto& s : rep.samples) {
        csv.cell(s.id);
        csv.cell(s.h1_S);
        csv.cell(s.h1_Gamma);
        csv.cell(s.l2_dn_Gamma);
        csv.cell(s.ratio);
        if (parabolic) csv.cell(std::isnan(s.ratio_g1) ? std::string("") : fmt_double(s.ratio_g1));
        csv.end_row();
    }

    CsvWriter plot(dir / "ratio_plot.csv", {"x", "y", "series"});
    for (const auto& s : rep.samples) {
        if (!s.ok) continue;
        plot.cell(s.id);
        plot.cell(s.ratio);
        plot.cell(std::string("ratio"));
        plot.end_row();
    }

    ordered_json j = report_json(rep);
    j["spec_echo"] = cfg.echo;
    write_json_file(dir / "report.json", j);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline void run_verify_carleman(const ExperimentConfig& cfg) {
    if (!cfg.geometry) throw ConfigInvalid("verify-carleman requires a geometry block");
    const auto build_sweep = [&](const GeometryConfig& geo) {
        const DomainPtr dom = geo.build();
        if (dom->is_disk()) throw ConfigInvalid("Carleman sweeps run on annular domains");
        const MetricField g = build_metric(dom, cfg.metric);
        const PotentialField p = constant_potential(dom, cfg.potential_value, cfg.potential_eta);
        return sweep(default_elliptic_bank(*dom), g, p, cfg.weight.upsilon,
                     cfg.weight.gamma_grid.values(), cfg.weight.s_grid.values(),
                     cfg.weight.delta_min, cfg.threads);
    };

    const SweepResult res = build_sweep(*cfg.geometry);
    detail::write_sweep_files(res, cfg.output_dir, "sweep");

    ordered_json summary = detail::sweep_summary_json(res);
    summary["subcommand"] = "verify-carleman";
    if (cfg.study.refine_sweep) {
        const SweepResult fine = build_sweep(cfg.geometry->refined());
        ordered_json r;
        r["stable_found"] = fine.stable_found;
        if (fine.stable_found) {
            r["c_emp"] = fine.c_emp;
            if (res.stable_found && res.c_emp > 0.0)
                r["c_emp_rel_change"] = std::abs(fine.c_emp - res.c_emp) / res.c_emp;
        }
        summary["refinement"] = r;
    }
    summary["zeta1"] = ordered_json{{"metric", cfg.metric.preset},
                                    {"potential", cfg.potential_value},
                                    {"upsilon", to_string(cfg.weight.upsilon)},
                                    {"delta_min", cfg.weight.delta_min}};
    summary["config"] = cfg.echo;
    write_json_file(cfg.output_dir / "summary.json", summary);
    std::cout << "verify-carleman: "
              << (res.stable_found ? "stable region found" : "no stable region") << "\n";
}

inline void run_verify_parabolic(const ExperimentConfig& cfg) {
    if (!cfg.geometry) throw ConfigInvalid("verify-parabolic requires a geometry block");
    const auto build_sweep = [&](const GeometryConfig& geo, int n_t) {
        const DomainPtr dom = geo.build();
        if (dom->is_disk()) throw ConfigInvalid("the parabolic Carleman domain is an annulus");
        const MetricField g = build_metric(dom, cfg.metric);
        return parabolic_sweep(default_parabolic_bank(*dom, cfg.parabolic.T), g,
                               cfg.weight.upsilon, cfg.parabolic.T, n_t,
                               cfg.weight.gamma_grid.values(), cfg.weight.s_grid.values(),
                               cfg.weight.delta_min, cfg.threads);
    };

    const SweepResult res = build_sweep(*cfg.geometry, cfg.parabolic.n_t);
    detail::write_sweep_files(res, cfg.output_dir, "parabolic_sweep");

    ordered_json summary = detail::sweep_summary_json(res);
    summary["subcommand"] = "verify-parabolic";
    if (cfg.study.refine_sweep) {
        const SweepResult fine = build_sweep(cfg.geometry->refined(), 2 * cfg.parabolic.n_t);
        ordered_json r;
        r["stable_found"] = fine.stable_found;
        if (fine.stable_found) {
            r["c_emp"] = fine.c_emp;
            if (res.stable_found && res.c_emp > 0.0)
                r["c_emp_rel_change"] = std::abs(fine.c_emp - res.c_emp) / res.c_emp;
        }
        summary["refinement"] = r;
    }
    summary["config"] = cfg.echo;
    write_json_file(cfg.output_dir / "summary.json", summary);
    std::cout << "verify-parabolic: "
              << (res.stable_found ? "stable region found" : "no stable region") << "\n";
}

inline void run_solve(const ExperimentConfig& cfg) {
    if (!cfg.problem) throw ConfigInvalid("solve requires a problem block");
    const ProblemConfig& pc = *cfg.problem;

    if (pc.kind == "parabolic") {
        ParabolicStudySetup setup;
        setup.r_S = pc.r_S;
        setup.gamma_radius = pc.gamma_radius;
        setup.n_r = pc.n_r;
        setup.n_theta = pc.n_theta;
        setup.n_t = cfg.parabolic.n_t;
        setup.T = cfg.parabolic.T;
        setup.metric = cfg.metric;
        setup.solver_tol = cfg.solver.tol;
        const DomainPtr dom = build_disk(pc.r_S, pc.n_r, pc.n_theta, BoundaryRole::S);
        ParabolicProblem prob;
        prob.domain = dom;
        prob.g = build_metric(dom, cfg.metric);
        prob.T = cfg.parabolic.T;
        prob.n_t = cfg.parabolic.n_t;
        prob.solver_tol = cfg.solver.tol;
        // time-constant boundary datum, compatible with its harmonic extension
        prob.u0 = GridField::sample(dom, [&](double r, double th) {
            double v = pc.data.c0;
            double pw = 1.0;
            for (std::size_t k = 0; k < pc.data.ck.size(); ++k) {
                pw *= r / pc.r_S;
                const double kk = static_cast<double>(k + 1);
                v += pw * (pc.data.ck[k] * std::cos(kk * th) +
                           pc.data.dk[k] * std::sin(kk * th));
            }
            return v;
        });
        prob.boundary.assign(prob.n_t + 1, std::vector<double>(pc.n_theta));
        for (int j = 0; j <= prob.n_t; ++j)
            for (int k = 0; k < pc.n_theta; ++k)
                prob.boundary[j][k] = pc.data.eval(dom->theta(k));
        const ParabolicSolution sol = solve_parabolic(prob);
        const BoundaryCurve gamma = interior_circle(dom, pc.gamma_radius);

        CsvWriter csv(cfg.output_dir / "cauchy.csv", {"t", "theta", "trace", "normal_deriv"});
        for (int j = 0; j <= prob.n_t; ++j) {
            const CauchyData cd = extract_cauchy(sol.u[j], gamma);
            for (int k = 0; k < pc.n_theta; ++k) {
                csv.cell(sol.t[j]);
                csv.cell(dom->theta(k));
                csv.cell(cd.trace[k]);
                csv.cell(cd.normal_deriv[k]);
                csv.end_row();
            }
        }
        CsvWriter field(cfg.output_dir / "solution.csv", {"r", "theta", "value"});
        const GridField& uT = sol.u.back();
        for (int i = 0; i <= dom->n_r; ++i)
            for (int k = 0; k < dom->n_theta; ++k) {
                field.cell(dom->radius(i));
                field.cell(dom->theta(k));
                field.cell(uT.at(i, k));
                field.end_row();
            }
        ordered_json summary;
        summary["subcommand"] = "solve";
        summary["kind"] = "parabolic";
        summary["config"] = cfg.echo;
        write_json_file(cfg.output_dir / "summary.json", summary);
        return;
    }

    EllipticStudySetup setup;
    setup.kind = pc.kind == "interior" ? EllipticProblem::Kind::interior
                                       : EllipticProblem::Kind::exterior_truncated;
    setup.r_S = pc.r_S;
    setup.gamma_radius = pc.gamma_radius;
    setup.r_infinity = cfg.solver.r_infinity;
    setup.n_r = pc.n_r;
    setup.n_theta = pc.n_theta;
    setup.metric = cfg.metric;
    setup.p_value = cfg.potential_value;
    setup.eta = cfg.potential_eta;
    setup.solver_tol = cfg.solver.tol;
    setup.truncation_tol = cfg.solver.truncation_tol;

    const auto inst = detail::build_elliptic_instance(setup);
    EllipticProblem prob = inst.prob;
    const auto a_values = pc.data.values(inst.s_curve);
    prob.dirichlet[inst.s_id] = a_values;
    const GridField u = setup.kind == EllipticProblem::Kind::interior
                            ? solve_interior(prob)
                            : solve_exterior_truncated(prob, setup.r_infinity).field;
    const CauchyData cd = extract_cauchy(u, inst.gamma_curve);

    CsvWriter csv(cfg.output_dir / "cauchy.csv", {"theta", "trace", "normal_deriv"});
    for (int k = 0; k < inst.dom->n_theta; ++k) {
        csv.cell(inst.dom->theta(k));
        csv.cell(cd.trace[k]);
        csv.cell(cd.normal_deriv[k]);
        csv.end_row();
    }
    CsvWriter field(cfg.output_dir / "solution.csv", {"r", "theta", "value"});
    for (int i = 0; i <= inst.dom->n_r; ++i)
        for (int k = 0; k < inst.dom->n_theta; ++k) {
            field.cell(inst.dom->radius(i));
            field.cell(inst.dom->theta(k));
            field.cell(u.at(i, k));
            field.end_row();
        }

    ordered_json summary;
    summary["subcommand"] = "solve";
    summary["kind"] = pc.kind;
    summary["l2_trace"] = cd.l2_trace;
    summary["h1_trace"] = cd.h1_trace;
    summary["l2_normal"] = cd.l2_normal;
    summary["config"] = cfg.echo;
    write_json_file(cfg.output_dir / "summary.json", summary);
    std::cout << "solve: wrote Cauchy data for kind=" << pc.kind << "\n";
}

inline void run_stability(const ExperimentConfig& cfg) {
    if (!cfg.problem) throw ConfigInvalid("stability requires a problem block");
    const ProblemConfig& pc = *cfg.problem;
    if (pc.kind == "parabolic")
        throw ConfigInvalid("use parabolic-stability for the parabolic study");

    EllipticStudySetup setup;
    setup.kind = pc.kind == "interior" ? EllipticProblem::Kind::interior
                                       : EllipticProblem::Kind::exterior_truncated;
    setup.r_S = pc.r_S;
    setup.gamma_radius = pc.gamma_radius;
    setup.r_infinity = cfg.solver.r_infinity;
    setup.n_r = pc.n_r;
    setup.n_theta = pc.n_theta;
    setup.metric = cfg.metric;
    setup.p_value = cfg.potential_value;
    setup.eta = cfg.potential_eta;
    setup.solver_tol = cfg.solver.tol;
    setup.truncation_tol = cfg.solver.truncation_tol;

    AdmissibleSpec spec;
    spec.alpha = cfg.admissible.alpha;
    spec.beta = cfg.admissible.beta;
    spec.fourier_degree = cfg.admissible.fourier_degree;
    spec.rng_seed = cfg.admissible.seed;

    StudyOptions opts;
    opts.refine_worst = cfg.study.refine_worst;
    opts.scale_check_count = cfg.study.scale_check_count;
    opts.threads = cfg.threads;

    const StabilityReport rep = run_study(spec, setup, cfg.study.count, opts);
    detail::write_report_files(rep, cfg, cfg.output_dir, /*parabolic=*/false);
    std::cout << "stability: max ratio " << fmt_double(rep.max_ratio) << " over "
              << rep.samples.size() << " samples\n";
}

inline void run_parabolic_stability(const ExperimentConfig& cfg) {
    if (!cfg.problem) throw ConfigInvalid("parabolic-stability requires a problem block");
    const ProblemConfig& pc = *cfg.problem;

    ParabolicStudySetup setup;
    setup.r_S = pc.r_S;
    setup.gamma_radius = pc.gamma_radius;
    setup.n_r = pc.n_r;
    setup.n_theta = pc.n_theta;
    setup.n_t = cfg.parabolic.n_t;
    setup.T = cfg.parabolic.T;
    setup.eps_over_T = cfg.parabolic.eps_over_T;
    setup.metric = cfg.metric;
    setup.solver_tol = cfg.solver.tol;

    ParabolicAdmissibleSpec spec;
    spec.alpha = cfg.admissible.alpha;
    spec.beta = cfg.admissible.beta;
    spec.u0 = cfg.admissible.u0;
    spec.time_degree = cfg.admissible.time_degree;
    spec.fourier_degree = cfg.admissible.fourier_degree;
    spec.rng_seed = cfg.admissible.seed;

    StudyOptions opts;
    opts.refine_worst = cfg.study.refine_worst;
    opts.scale_check_count = cfg.study.scale_check_count;
    opts.threads = cfg.threads;

    const StabilityReport rep = run_parabolic_study(spec, setup, cfg.study.count,
                                                    cfg.admissible.separable,
                                                    cfg.admissible.ramp, opts);
    detail::write_report_files(rep, cfg, cfg.output_dir, /*parabolic=*/true);
    std::cout << "parabolic-stability: max ratio " << fmt_double(rep.max_ratio) << " over "
              << rep.samples.size() << " samples\n";
}

// ---------------------------------------------------------------------------
// oracle-check: every closed-form reference the tests pin, at desk scale
// ---------------------------------------------------------------------------

struct OracleOutcome {
    std::string name;
    bool pass;
    double observed;
    double tolerance;
};

inline std::vector<OracleOutcome> run_oracles();

inline bool run_oracle_check(const ExperimentConfig& cfg) {
    const auto outcomes = run_oracles();
    bool all = true;
    ordered_json arr = ordered_json::array();
    for (const auto& o : outcomes) {
        all = all && o.pass;
        std::cout << "oracle " << o.name << ": " << (o.pass ? "PASS" : "FAIL")
                  << " (observed " << fmt_double(o.observed) << ", tol "
                  << fmt_double(o.tolerance) << ")\n";
        ordered_json e;
        e["name"] = o.name;
        e["pass"] = o.pass;
        e["observed"] = o.observed;
        e["tolerance"] = o.tolerance;
        arr.push_back(e);
    }
    ordered_json summary;
    summary["subcommand"] = "oracle-check";
    summary["all_pass"] = all;
    summary["oracles"] = arr;
    write_json_file(cfg.output_dir / "oracle_check.json", summary);
    return all;
}

inline std::vector<OracleOutcome> run_oracles() {
    std::vector<OracleOutcome> out;
    const auto record = [&](const std::string& name, double err, double tol) {
        out.push_back({name, err <= tol, err, tol});
    };

    {
        auto dom = build_annulus(1.0, 2.0, 64, 128,
                                 {{BoundaryId::inner, BoundaryRole::S},
                                  {BoundaryId::outer, BoundaryRole::Gamma}});
        auto f = GridField::sample(dom, [](double r, double) { return r * r; });
        const double exact = 7.5 * std::numbers::pi;
        record("volume_quadrature_r2", std::abs(integrate_volume(f) - exact), 1e-8);

        const auto curve = boundary_curve(dom, BoundaryId::inner);
        std::vector<double> cos2(curve.n_nodes());
        for (int k = 0; k < curve.n_nodes(); ++k) {
            const double c = std::cos(dom->theta(k));
            cos2[k] = c * c;
        }
        record("boundary_quadrature_cos2",
               std::abs(integrate_boundary(curve, cos2) - std::numbers::pi), 1e-12);

        const MetricField eu = euclidean_metric(dom);
        const MetricField conf = build_metric(dom, MetricSpec{"conformal", 2.0, 0, 0, 0});
        auto u = GridField::sample(dom, [](double r, double th) {
            return std::exp(r) * std::cos(th);
        });
        const GridField l1 = laplace_beltrami(eu, u);
        const GridField l2 = laplace_beltrami(conf, u);
        double worst = 0.0;
        for (std::size_t n = 0; n < l1.v.size(); ++n)
            worst = std::max(worst, std::abs(l2.v[n] - 0.5 * l1.v[n]) /
                                        std::max(1.0, std::abs(0.5 * l1.v[n])));
        record("conformal_laplacian_scaling", worst, 1e-12);
    }

    {
        // oracle self-check against 10+ digit modified-Bessel references
        const auto ref = oracles::exterior_radial_reference(2.0);
        record("bessel_value_quotient", std::abs(ref.value - 0.27051606131332919), 1e-12);
        record("bessel_derivative_quotient", std::abs(ref.derivative + 0.33220371340192425),
               1e-12);
    }

    {
        // Interior harmonic oracle at criterion scale.
        EllipticStudySetup setup;
        setup.kind = EllipticProblem::Kind::interior;
        setup.r_S = 1.0;
        setup.gamma_radius = 0.5;
        setup.n_r = 128;
        setup.n_theta = 256;
        const auto inst = detail::build_elliptic_instance(setup);
        EllipticProblem prob = inst.prob;
        std::vector<double> a(setup.n_theta);
        for (int k = 0; k < setup.n_theta; ++k) a[k] = std::cos(inst.dom->theta(k));
        prob.dirichlet[inst.s_id] = a;
        const GridField u = solve_interior(prob);
        const CauchyData cd = extract_cauchy(u, inst.gamma_curve);
        double err_sq = 0.0, ref_sq = 0.0;
        for (int k = 0; k < setup.n_theta; ++k) {
            const double exact = oracles::harmonic_mode(0.5, inst.dom->theta(k), 1);
            err_sq += (cd.trace[k] - exact) * (cd.trace[k] - exact);
            ref_sq += exact * exact;
        }
        record("interior_harmonic_trace", std::sqrt(err_sq / ref_sq), 1e-3);
    }

    {
        // Elliptic sides against the independent high-resolution reference.
        auto dom = build_annulus(1.0, 2.0, 256, 64,
                                 {{BoundaryId::inner, BoundaryRole::S},
                                  {BoundaryId::outer, BoundaryRole::Gamma}});
        const MetricField g = euclidean_metric(dom);
        const PotentialField p = zero_potential(dom);
        const auto bank = default_elliptic_bank(*dom);
        const auto& logr = bank.front();
        const EllipticWeight w = make_elliptic_weight(dom, BoundaryId::inner, 3.0, 20.0);
        const CarlemanSides sides =
            elliptic_sides(w, g, p, logr.sample(dom), {BoundaryId::inner, BoundaryId::outer});
        const auto ref = oracles::elliptic_side_reference(logr, 1.0, 2.0, true, 0.0, 3.0, 20.0,
                                                          1024, 256);
        const double scale = std::exp(static_cast<double>(ref.shift) - sides.exponent_shift);
        double worst = 0.0;
        const auto rel = [&](double mine, long double oracle) {
            const double o = static_cast<double>(oracle) * scale;
            if (o == 0.0 && mine == 0.0) return 0.0;
            return std::abs(mine - o) / std::max(std::abs(o), 1e-300);
        };
        worst = std::max(worst, rel(sides.lhs_interior, ref.lhs_interior));
        worst = std::max(worst, rel(sides.rhs_pi, ref.rhs_pi));
        record("elliptic_sides_vs_reference", worst, 1e-2);
    }

    {
        // Manufactured heat solution at a quick grid.
        const DomainPtr dom = build_disk(1.0, 48, 96, BoundaryRole::S);
        ParabolicProblem prob;
        prob.domain = dom;
        prob.g = euclidean_metric(dom);
        prob.T = 1.0;
        prob.n_t = 96;
        prob.u0 = GridField::sample(dom, [](double r, double th) {
            return oracles::ManufacturedHeat::value(0.0, r, th);
        });
        prob.boundary.assign(prob.n_t + 1, std::vector<double>(dom->n_theta));
        for (int j = 0; j <= prob.n_t; ++j)
            for (int k = 0; k < dom->n_theta; ++k)
                prob.boundary[j][k] =
                    oracles::ManufacturedHeat::value(j * prob.T / prob.n_t, 1.0, 0.0);
        prob.source = oracles::ManufacturedHeat::source;
        const ParabolicSolution sol = solve_parabolic(prob);
        double err_sq = 0.0, ref_sq = 0.0;
        for (int j = 0; j <= prob.n_t; ++j) {
            const double tw = (j == 0 || j == prob.n_t) ? 0.5 : 1.0;
            GridField diff(dom), exact(dom);
            for (int i = 0; i <= dom->n_r; ++i)
                for (int k = 0; k < dom->n_theta; ++k) {
                    const double e =
                        oracles::ManufacturedHeat::value(sol.t[j], dom->radius(i), 0.0);
                    diff.at(i, k) = (sol.u[j].at(i, k) - e) * (sol.u[j].at(i, k) - e);
                    exact.at(i, k) = e * e;
                }
            err_sq += tw * integrate_volume(diff);
            ref_sq += tw * integrate_volume(exact);
        }
        record("manufactured_heat_l2", std::sqrt(err_sq / ref_sq), 2e-3);
    }

    {
        // Sampler soundness at the criterion parameters.
        auto dom = build_disk(1.0, 16, 128, BoundaryRole::S);
        const auto curve = boundary_curve(dom, BoundaryId::outer);
        AdmissibleSpec spec{1.0, 2.0, 4, 7};
        const auto samples = sample_admissible(spec, curve, 100);
        int pass = 0;
        for (const auto& s : samples)
            if (check_admissible(s.values(curve), spec, curve).pass) ++pass;
        record("sampler_admissibility", 100.0 - pass, 0.0);
    }

    return out;
}

}  // namespace carlab
