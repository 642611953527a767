// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its runtime. Tolerances and thresholds are pinned in code.

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "carlab/bank.hpp"
#include "carlab/carleman.hpp"
#include "carlab/config.hpp"
#include "carlab/oracles.hpp"
#include "carlab/rng.hpp"
#include "carlab/runner.hpp"
#include "carlab/solvers.hpp"
#include "carlab/stability.hpp"

using namespace carlab;
namespace fs = std::filesystem;

namespace {

class Criterion {
public:
    Criterion(int number, std::string name, double budget_seconds)
        : number_(number), name_(std::move(name)), budget_(budget_seconds),
          start_(std::chrono::steady_clock::now()) {}

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok_ = false;
            notes_.push_back(what);
        }
    }

    void fail(const std::string& what) { expect(false, what); }

    bool finish() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        expect(elapsed < budget_, "runtime " + std::to_string(elapsed) + " s exceeds budget " +
                                      std::to_string(budget_) + " s");
        std::printf("[ACCEPTANCE] criterion %d (%s): %s (%.1f s)\n", number_, name_.c_str(),
                    ok_ ? "PASS" : "FAIL", elapsed);
        for (const auto& n : notes_) std::printf("[ACCEPTANCE]   - %s\n", n.c_str());
        std::fflush(stdout);
        return ok_;
    }

private:
    int number_;
    std::string name_;
    double budget_;
    bool ok_ = true;
    std::vector<std::string> notes_;
    std::chrono::steady_clock::time_point start_;
};

DomainPtr annulus12(int n_r, int n_theta) {
    return build_annulus(1.0, 2.0, n_r, n_theta,
                         {{BoundaryId::inner, BoundaryRole::S},
                          {BoundaryId::outer, BoundaryRole::Gamma}});
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("criterion 1: operator convergence") {
    Criterion c(1, "laplace_beltrami order on x^2+y^2", 10.0);
    std::vector<double> errs;
    for (auto [nr, nth] : {std::pair{32, 64}, {64, 128}, {128, 256}}) {
        auto dom = annulus12(nr, nth);
        const auto g = euclidean_metric(dom);
        const auto u = GridField::sample(dom, [](double r, double) { return r * r; });
        const auto lap = laplace_beltrami(g, u);
        double worst = 0.0;
        for (double v : lap.v) worst = std::max(worst, std::abs(v - 4.0));
        errs.push_back(worst);
    }
    // The scheme is exact on quadratics up to roundoff; accept either a
    // measured order >= 1.9 or errors at the rounding floor on all grids.
    const bool at_floor = errs[0] < 1e-10 && errs[1] < 1e-10 && errs[2] < 1e-10;
    if (!at_floor) {
        c.expect(std::log2(errs[0] / errs[1]) >= 1.9, "order below 1.9 on first refinement");
        c.expect(std::log2(errs[1] / errs[2]) >= 1.9, "order below 1.9 on second refinement");
    }
    CHECK(c.finish());
}

TEST_CASE("criterion 2: elliptic oracle") {
    Criterion c(2, "separation-of-variables and Bessel references", 60.0);

    auto dom = build_disk(1.0, 128, 256, BoundaryRole::S);
    for (int mode : {1, 3}) {
        EllipticProblem prob;
        prob.domain = dom;
        prob.g = euclidean_metric(dom);
        prob.p = zero_potential(dom);
        prob.kind = EllipticProblem::Kind::interior;
        prob.dirichlet[BoundaryId::outer].resize(dom->n_theta);
        for (int k = 0; k < dom->n_theta; ++k)
            prob.dirichlet[BoundaryId::outer][k] = std::cos(mode * dom->theta(k));
        const GridField u = solve_interior(prob);
        const auto cauchy = extract_cauchy(u, interior_circle(dom, 0.5));
        double err_sq = 0.0, ref_sq = 0.0;
        for (int k = 0; k < dom->n_theta; ++k) {
            const double exact = oracles::harmonic_mode(0.5, dom->theta(k), mode);
            err_sq += (cauchy.trace[k] - exact) * (cauchy.trace[k] - exact);
            ref_sq += exact * exact;
        }
        c.expect(std::sqrt(err_sq / ref_sq) <= 1e-3,
                 "trace error above 1e-3 for mode " + std::to_string(mode));
    }

    // Bessel oracle, self-checked to >= 10 digits before use.
    const auto ref = oracles::exterior_radial_reference(2.0);
    c.expect(std::abs(ref.value - 0.27051606131332919) < 1e-12, "K0 oracle self-check");
    c.expect(std::abs(ref.derivative + 0.33220371340192425) < 1e-12, "K1 oracle self-check");

    const double r_inf = 21.0;
    auto ext = build_annulus(1.0, r_inf, 2000, 32,
                             {{BoundaryId::inner, BoundaryRole::S},
                              {BoundaryId::outer, BoundaryRole::artificial}});
    EllipticProblem prob;
    prob.domain = ext;
    prob.g = euclidean_metric(ext);
    prob.p = constant_potential(ext, 1.0, 1.0);
    prob.kind = EllipticProblem::Kind::exterior_truncated;
    prob.gamma_radius = 2.0;
    prob.dirichlet[BoundaryId::inner] = std::vector<double>(32, 1.0);
    const auto sol = solve_exterior_truncated(prob, r_inf);
    const auto cauchy = extract_cauchy(sol.field, interior_circle(ext, 2.0));
    for (int k = 0; k < 32; ++k) {
        c.expect(std::abs(cauchy.trace[k] - 0.270846) <= 1e-3, "u(2) outside 0.270846 +- 1e-3");
        c.expect(std::abs(cauchy.normal_deriv[k] + 0.332204) <= 1e-3,
                 "d_nu u(2) outside -0.332204 +- 1e-3");
        c.expect(std::abs(cauchy.trace[k] - ref.value) <= 1e-3, "u(2) drifts from the oracle");
        c.expect(std::abs(cauchy.normal_deriv[k] - ref.derivative) <= 1e-3,
                 "d_nu u(2) drifts from the oracle");
    }
    CHECK(c.finish());
}

TEST_CASE("criterion 3: elliptic Carleman inequality sweep") {
    Criterion c(3, "stable region and mesh-stable C_emp", 300.0);
    const std::vector<double> s_grid{5, 10, 20, 40, 80, 160};
    double c_emp[2] = {0.0, 0.0};
    int idx = 0;
    for (auto [nr, nth] : {std::pair{64, 128}, {128, 256}}) {
        auto dom = annulus12(nr, nth);
        const auto g = euclidean_metric(dom);
        const auto p = zero_potential(dom);
        const auto inputs = default_elliptic_bank(*dom);
        c.expect(inputs.size() == 8, "default bank is not 8 functions");
        const auto res = sweep(inputs, g, p, BoundaryId::inner, {3.0}, s_grid);
        if (!res.stable_found) {
            c.fail("no stable region: " + res.diagnostic);
            break;
        }
        // lhs <= C_emp rhs on the detected region, all members
        for (std::size_t t = 0; t < res.test_ids.size(); ++t)
            for (std::size_t is = res.s_star_index; is < s_grid.size(); ++is) {
                const auto& cell = res.cell(t, 0, is);
                c.expect(!cell.indeterminate, "indeterminate ratio inside the region");
                c.expect(cell.sides.lhs() <= res.c_emp * cell.sides.rhs() * (1.0 + 1e-12),
                         "lhs exceeds C_emp * rhs inside the region");
            }
        c_emp[idx++] = res.c_emp;
    }
    if (idx == 2)
        c.expect(std::abs(c_emp[1] - c_emp[0]) <= 0.2 * c_emp[0],
                 "C_emp changed by more than 20% under refinement");
    CHECK(c.finish());
}

TEST_CASE("criterion 4: homogeneity and shift invariance") {
    Criterion c(4, "quadratic homogeneity and exponent-shift invariance", 10.0);
    auto dom = annulus12(48, 96);
    const auto g = euclidean_metric(dom);
    const auto p = zero_potential(dom);
    const auto bank = default_elliptic_bank(*dom);

    Rng rng(20240811);
    for (int trial = 0; trial < 3; ++trial) {
        const auto& member = bank[rng.next_word() % bank.size()];
        const double s = rng.uniform(5.0, 40.0);
        const double gamma = rng.uniform(1.0, 3.0);
        const auto w = make_elliptic_weight(dom, BoundaryId::inner, gamma, s);
        const auto u = member.sample(dom);
        GridField doubled(dom);
        for (std::size_t n = 0; n < u.v.size(); ++n) doubled.v[n] = 2.0 * u.v[n];

        const SideRoles roles{BoundaryId::inner, BoundaryId::outer};
        const auto s1 = elliptic_sides(w, g, p, u, roles);
        const auto s2 = elliptic_sides(w, g, p, doubled, roles);
        const double t1[5] = {s1.lhs_interior, s1.lhs_upsilon, s1.rhs_pde, s1.rhs_pi,
                              s1.rhs_upsilon_tangential};
        const double t2[5] = {s2.lhs_interior, s2.lhs_upsilon, s2.rhs_pde, s2.rhs_pi,
                              s2.rhs_upsilon_tangential};
        for (int i = 0; i < 5; ++i) {
            if (t1[i] == 0.0)
                c.expect(t2[i] == 0.0, "zero term became nonzero under scaling");
            else
                c.expect(std::abs(t2[i] - 4.0 * t1[i]) <= 1e-12 * 4.0 * t1[i],
                         "term not exactly quadratic under u -> 2u (" + member.id + ")");
        }

        const double delta = rng.uniform(5.0, 50.0);
        const auto s3 = elliptic_sides(w, g, p, u, roles, s1.exponent_shift + delta);
        if (!s1.indeterminate())
            c.expect(std::abs(s3.ratio() - s1.ratio()) <= 1e-12 * s1.ratio(),
                     "ratio moved under an exponent shift");
    }
    CHECK(c.finish());
}

TEST_CASE("criterion 5: tangential decomposition identity") {
    Criterion c(5, "|grad_tau_g u|^2 = |grad_g u|^2 - |d_nu_g u|^2", 5.0);
    auto dom = annulus12(64, 128);
    const auto u = GridField::sample(dom, [](double r, double th) {
        return std::exp(r) * std::cos(2.0 * th) + r * std::sin(th);
    });
    for (const char* preset : {"euclidean", "anisotropic"}) {
        const auto g = build_metric(dom, MetricSpec{preset, 1.0, 0.5, 0, 0});
        for (BoundaryId id : {BoundaryId::inner, BoundaryId::outer}) {
            const auto curve = boundary_curve(dom, id);
            const auto tg = tangential_grad_g(g, u, curve);
            const auto dn = dnu_g(g, u, curve);
            const auto nsq = norm_g_sq(g, grad_g(g, u));
            for (int k = 0; k < curve.n_nodes(); ++k) {
                const double full = nsq.at(curve.ring, k);
                const double expected = full - dn[k] * dn[k];
                if (std::abs(tg[k] - expected) > 1e-12 * std::max(1.0, std::abs(full))) {
                    c.fail(std::string("identity violated for ") + preset);
                    break;
                }
            }
        }
    }
    CHECK(c.finish());
}

TEST_CASE("criterion 6: interior stability study") {
    Criterion c(6, "Monte-Carlo Lipschitz-stability study", 600.0);
    AdmissibleSpec spec{1.0, 2.0, 4, 7};
    EllipticStudySetup setup;
    setup.kind = EllipticProblem::Kind::interior;
    setup.r_S = 1.0;
    setup.gamma_radius = 0.5;
    setup.n_r = 64;
    setup.n_theta = 128;

    // sampler soundness on the study circle
    const auto inst = detail::build_elliptic_instance(setup);
    const auto samples = sample_admissible(spec, inst.s_curve, 100);
    c.expect(samples.size() == 100, "sampler did not emit 100 samples");
    int admissible = 0;
    for (const auto& s : samples)
        if (check_admissible(s.values(inst.s_curve), spec, inst.s_curve).pass) ++admissible;
    c.expect(admissible == 100, "sampler soundness below 100%");

    StudyOptions opts;
    opts.refine_worst = true;
    opts.scale_check_count = 10;
    opts.scale_factor = 1e3;
    const auto rep = run_study(spec, setup, 100, opts);
    c.expect(rep.failures == 0, "solver failures inside the study");
    c.expect(std::isfinite(rep.max_ratio) && rep.max_ratio > 0.0, "max ratio not finite");
    c.expect(rep.refined, "worst-sample refinement did not run");
    c.expect(rep.refined_rel_change <= 0.10, "worst ratio not mesh-stable within 10%");
    c.expect(rep.scale_checks.size() == 10, "scale checks incomplete");
    for (const auto& sc : rep.scale_checks)
        c.expect(sc.rel_deviation <= 1e-9, "scale invariance above 1e-9");
    CHECK(c.finish());
}

TEST_CASE("criterion 7: parabolic manufactured solution") {
    Criterion c(7, "space-time convergence of the heat solver", 300.0);
    const auto run = [&](int nr, int nth, int nt) {
        auto dom = build_disk(1.0, nr, nth, BoundaryRole::S);
        ParabolicProblem prob;
        prob.domain = dom;
        prob.g = euclidean_metric(dom);
        prob.T = 1.0;
        prob.n_t = nt;
        prob.u0 = GridField::sample(dom, [](double r, double th) {
            return oracles::ManufacturedHeat::value(0.0, r, th);
        });
        prob.boundary.assign(nt + 1, std::vector<double>(nth));
        for (int j = 0; j <= nt; ++j)
            for (int k = 0; k < nth; ++k)
                prob.boundary[j][k] = oracles::ManufacturedHeat::value(j * 1.0 / nt, 1.0, 0.0);
        prob.source = oracles::ManufacturedHeat::source;
        const auto sol = solve_parabolic(prob);
        double err_sq = 0.0, ref_sq = 0.0;
        for (int j = 0; j <= nt; ++j) {
            const double tw = (j == 0 || j == nt) ? 0.5 : 1.0;
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
        return std::sqrt(err_sq / ref_sq);
    };
    const double coarse = run(32, 64, 128);
    const double fine = run(64, 128, 256);
    c.expect(fine <= 1e-3, "relative space-time L2 error above 1e-3 at (64,128,256)");
    c.expect(std::log2(coarse / fine) >= 1.9, "combined order below 1.9");
    CHECK(c.finish());
}

TEST_CASE("criterion 8: parabolic Carleman inequality sweep") {
    Criterion c(8, "degenerate-weight stable region", 600.0);
    const std::vector<double> s_grid{2, 4, 8, 16, 32};
    double c_emp[2] = {0.0, 0.0};
    int idx = 0;
    for (auto [nr, nth, nt] : {std::tuple{96, 192, 96}, {192, 384, 192}}) {
        auto dom = build_annulus(0.5, 1.0, nr, nth,
                                 {{BoundaryId::inner, BoundaryRole::Gamma},
                                  {BoundaryId::outer, BoundaryRole::S}});
        const auto g = euclidean_metric(dom);
        const auto inputs = default_parabolic_bank(*dom, 1.0);
        c.expect(inputs.size() == 4, "parabolic bank is not 4 functions");
        const auto res =
            parabolic_sweep(inputs, g, BoundaryId::outer, 1.0, nt, {2.0}, s_grid);
        if (!res.stable_found) {
            c.fail("no stable region: " + res.diagnostic);
            break;
        }
        for (std::size_t t = 0; t < res.test_ids.size(); ++t)
            for (std::size_t is = res.s_star_index; is < s_grid.size(); ++is) {
                const auto& cell = res.cell(t, 0, is);
                c.expect(cell.sides.lhs() <= res.c_emp * cell.sides.rhs() * (1.0 + 1e-12),
                         "lhs exceeds C_emp * rhs inside the region");
            }
        c_emp[idx++] = res.c_emp;
    }
    if (idx == 2)
        c.expect(std::abs(c_emp[1] - c_emp[0]) <= 0.25 * c_emp[0],
                 "C_emp changed by more than 25% under refinement");
    CHECK(c.finish());
}

TEST_CASE("criterion 9: parabolic stability study") {
    Criterion c(9, "separable boundary data at eps = T/4", 600.0);
    ParabolicAdmissibleSpec spec;
    spec.alpha = 1.0;
    spec.beta = 4.0;
    spec.fourier_degree = 2;
    spec.rng_seed = 17;
    spec.u0.c0 = 2.0;

    ParabolicStudySetup setup;
    setup.r_S = 1.0;
    setup.gamma_radius = 0.5;
    setup.n_r = 48;
    setup.n_theta = 96;
    setup.n_t = 128;
    setup.T = 1.0;
    setup.eps_over_T = 0.25;

    StudyOptions opts;
    opts.refine_worst = false;
    const auto rep = run_parabolic_study(spec, setup, 6, true, 1.0, opts);
    c.expect(rep.failures == 0, "solver failures inside the study");
    for (const auto& s : rep.samples) {
        c.expect(std::isfinite(s.ratio) && s.ratio > 0.0, "non-finite sample ratio");
        c.expect(std::isfinite(s.ratio_g1) && s.ratio_g1 > 0.0,
                 "missing separable-factor ratio");
    }

    // constant data against closed-form norm arithmetic
    ParabolicSample g;
    g.base.c0 = 1.0;
    g.T = setup.T;
    g.separable = true;
    g.ramp = 0.0;
    ParabolicAdmissibleSpec cspec;
    cspec.alpha = 0.5;
    cspec.beta = 1.0;
    cspec.u0.c0 = 1.0;
    const auto rec = parabolic_ratio(g, cspec, setup);
    c.expect(rec.ok, "constant-data solve failed");
    const double expected =
        std::sqrt((setup.T - 2.0 * setup.eps_over_T * setup.T) * setup.r_S /
                  (setup.T * setup.gamma_radius));
    c.expect(std::abs(rec.ratio - expected) <= 1e-6,
             "constant-data ratio deviates from the closed form");
    CHECK(c.finish());
}

TEST_CASE("criterion 10: determinism") {
    Criterion c(10, "byte-identical reruns", 120.0);
    const fs::path base = fs::temp_directory_path() / "carlab_acceptance_det";
    fs::remove_all(base);

    {
        nlohmann::json j{
            {"geometry",
             {{"kind", "annulus"}, {"r_inner", 1.0}, {"r_outer", 2.0}, {"n_r", 32},
              {"n_theta", 64},
              {"tags", {{"inner", "S"}, {"outer", "Gamma"}}}}},
            {"weight",
             {{"upsilon", "inner"},
              {"gamma_grid", {{"start", 3.0}, {"factor", 2.0}, {"count", 1}}},
              {"s_grid", {{"start", 5.0}, {"factor", 2.0}, {"count", 4}}}}},
            {"output", {{"dir", ""}}}};
        for (const char* tag : {"a", "b"}) {
            j["output"]["dir"] = (base / "sweep" / tag).string();
            run_verify_carleman(parse_config(j));
        }
        c.expect(slurp(base / "sweep" / "a" / "sweep.csv") ==
                     slurp(base / "sweep" / "b" / "sweep.csv"),
                 "verify-carleman CSV differs between reruns");
    }
    {
        nlohmann::json j{
            {"problem",
             {{"kind", "interior"}, {"r_S", 1.0}, {"gamma_radius", 0.5}, {"n_r", 32},
              {"n_theta", 64}}},
            {"admissible", {{"alpha", 1.0}, {"beta", 2.0}, {"seed", 7}}},
            {"study", {{"count", 6}, {"refine_worst", true}, {"scale_check_count", 2}}},
            {"output", {{"dir", ""}}}};
        for (const char* tag : {"a", "b"}) {
            j["output"]["dir"] = (base / "study" / tag).string();
            run_stability(parse_config(j));
        }
        for (const char* name : {"samples.csv", "ratio_plot.csv"})
            c.expect(slurp(base / "study" / "a" / name) == slurp(base / "study" / "b" / name),
                     std::string(name) + " differs between reruns");
    }
    CHECK(c.finish());
}
