#include <catch_amalgamated.hpp>

#include <cmath>

#include "carlab/geometry.hpp"
#include "carlab/riemannian.hpp"

using namespace carlab;
using Catch::Approx;

namespace {

DomainPtr unit_annulus(int n_r = 64, int n_theta = 128) {
    return build_annulus(1.0, 2.0, n_r, n_theta,
                         {{BoundaryId::inner, BoundaryRole::S},
                          {BoundaryId::outer, BoundaryRole::Gamma}});
}

MetricField constant_metric(const DomainPtr& dom, Sym2 g) {
    MetricField m;
    m.dom = dom;
    m.g.assign(dom->node_count(), g);
    m.g_inv.assign(dom->node_count(), g.inverse());
    m.det.assign(dom->node_count(), g.det());
    m.sqrt_det.assign(dom->node_count(), std::sqrt(g.det()));
    m.theta_ell = g.min_eigenvalue();
    return m;
}

double max_node_error(const GridField& f, const std::function<double(double, double)>& ref) {
    double worst = 0.0;
    const GridDomain& d = *f.dom;
    for (int i = 0; i <= d.n_r; ++i)
        for (int k = 0; k < d.n_theta; ++k)
            worst = std::max(worst, std::abs(f.at(i, k) - ref(d.radius(i), d.theta(k))));
    return worst;
}

}  // namespace

TEST_CASE("laplace_beltrami: Euclidean quadratic is reproduced") {
    auto dom = unit_annulus();
    const auto g = euclidean_metric(dom);
    const auto u = GridField::sample(dom, [](double r, double) { return r * r; });
    const auto lap = laplace_beltrami(g, u);
    CHECK(max_node_error(lap, [](double, double) { return 4.0; }) < 1e-9);
}

TEST_CASE("laplace_beltrami: log r is discretely harmonic to O(h^2)") {
    double errs[2];
    int idx = 0;
    for (int n : {32, 64}) {
        auto dom = unit_annulus(n, 2 * n);
        const auto g = euclidean_metric(dom);
        const auto u = GridField::sample(dom, [](double r, double) { return std::log(r); });
        errs[idx++] = max_node_error(laplace_beltrami(g, u), [](double, double) { return 0.0; });
    }
    CHECK(errs[0] < 1e-2);
    const double order = std::log2(errs[0] / errs[1]);
    CHECK(order >= 1.9);
}

TEST_CASE("laplace_beltrami: constant conformal factor scales the Laplacian") {
    auto dom = unit_annulus();
    const auto eu = euclidean_metric(dom);
    const auto conf = build_metric(dom, MetricSpec{"conformal", 3.0, 0, 0, 0});
    const auto u = GridField::sample(dom, [](double r, double th) {
        return std::exp(r) * std::cos(th);
    });
    const auto l_eu = laplace_beltrami(eu, u);
    const auto l_c = laplace_beltrami(conf, u);
    double worst = 0.0;
    for (std::size_t n = 0; n < l_eu.v.size(); ++n)
        worst = std::max(worst, std::abs(l_c.v[n] - l_eu.v[n] / 3.0));
    CHECK(worst < 1e-11);
}

TEST_CASE("laplace_beltrami: observed order >= 1.9 on a smooth field") {
    const auto exact = [](double r, double th) {
        // Delta (e^r cos theta) in polar coordinates
        return (std::exp(r) + std::exp(r) / r - std::exp(r) / (r * r)) * std::cos(th);
    };
    double errs[2];
    int idx = 0;
    for (int n : {32, 64}) {
        auto dom = unit_annulus(n, 2 * n);
        const auto g = euclidean_metric(dom);
        const auto u = GridField::sample(dom, [](double r, double th) {
            return std::exp(r) * std::cos(th);
        });
        errs[idx++] = max_node_error(laplace_beltrami(g, u), exact);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
}

TEST_CASE("laplace_beltrami handles the collapsed disk center") {
    auto disk = build_disk(1.0, 32, 64, BoundaryRole::S);
    const auto g = euclidean_metric(disk);
    const auto u = GridField::sample(disk, [](double r, double) { return r * r; });
    const auto lap = laplace_beltrami(g, u);
    CHECK(lap.at(0, 0) == Approx(4.0).margin(1e-9));
    CHECK(lap.at(0, 17) == lap.at(0, 0));  // center slots identical
}

TEST_CASE("grad_g basics") {
    auto dom = unit_annulus();
    const auto g = euclidean_metric(dom);
    const auto x_field = GridField::sample(dom, [](double r, double th) {
        return r * std::cos(th);
    });
    const auto grad = grad_g(g, x_field);
    double worst = 0.0;
    for (const auto& v : grad.v)
        worst = std::max({worst, std::abs(v[0] - 1.0), std::abs(v[1])});
    CHECK(worst < 5e-3);  // second-order angular stencils

    const auto c = GridField::sample(dom, [](double, double) { return 5.5; });
    const auto grad_c = grad_g(g, c);
    for (const auto& v : grad_c.v) {
        CHECK(std::abs(v[0]) < 1e-12);
        CHECK(std::abs(v[1]) < 1e-12);
    }
}

TEST_CASE("grad_g raises the index with the inverse metric") {
    auto dom = unit_annulus();
    const auto g = constant_metric(dom, Sym2{2.0, 0.0, 1.0});
    const auto x_field = GridField::sample(dom, [](double r, double th) {
        return r * std::cos(th);
    });
    const auto grad = grad_g(g, x_field);
    for (const auto& v : grad.v) {
        CHECK(v[0] == Approx(0.5).margin(5e-3));
        CHECK(std::abs(v[1]) < 5e-3);
    }

    const auto nsq = norm_g_sq(g, grad);
    for (double v : nsq.v) CHECK(v == Approx(0.5).margin(1e-2));
}

TEST_CASE("norm_g_sq basics and ellipticity bound") {
    auto dom = unit_annulus(16, 32);
    const auto eu = euclidean_metric(dom);
    VectorField X(dom);
    for (auto& v : X.v) v = {1.0, 0.0};
    const auto n1 = norm_g_sq(eu, X);
    for (double v : n1.v) CHECK(v == Approx(1.0));

    VectorField zero(dom);
    const auto n0 = norm_g_sq(eu, zero);
    for (double v : n0.v) CHECK(v == 0.0);

    const auto aniso = build_metric(dom, MetricSpec{"anisotropic", 1.0, 0.5, 0, 0});
    VectorField Y(dom);
    for (std::size_t n = 0; n < Y.v.size(); ++n) Y.v[n] = {0.3, -1.2};
    const auto ny = norm_g_sq(aniso, Y);
    const double ysq = 0.3 * 0.3 + 1.2 * 1.2;
    for (double v : ny.v) CHECK(v >= aniso.theta_ell * ysq - 1e-12);
}

TEST_CASE("metric_normal is unit length in g") {
    auto dom = unit_annulus();
    const auto curve = boundary_curve(dom, BoundaryId::outer);

    const auto eu = euclidean_metric(dom);
    const auto nu_eu = metric_normal(eu, curve);
    for (int k = 0; k < curve.n_nodes(); ++k) {
        CHECK(nu_eu[k][0] == Approx(curve.normal[k][0]).margin(1e-13));
        CHECK(nu_eu[k][1] == Approx(curve.normal[k][1]).margin(1e-13));
    }

    const auto conf = build_metric(dom, MetricSpec{"conformal", 4.0, 0, 0, 0});
    const auto nu_c = metric_normal(conf, curve);
    for (int k = 0; k < curve.n_nodes(); ++k) {
        CHECK(nu_c[k][0] == Approx(0.5 * curve.normal[k][0]).margin(1e-12));
        // |nu_g|_g = 1 exactly
        const double norm_g = 4.0 * (nu_c[k][0] * nu_c[k][0] + nu_c[k][1] * nu_c[k][1]);
        CHECK(norm_g == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("dnu_g radial derivatives on circles") {
    auto dom = unit_annulus();
    const auto g = euclidean_metric(dom);
    const auto outer = boundary_curve(dom, BoundaryId::outer);

    const auto r_field = GridField::sample(dom, [](double r, double) { return r; });
    for (double v : dnu_g(g, r_field, outer)) CHECK(v == Approx(1.0).margin(1e-8));

    const auto c_field = GridField::sample(dom, [](double, double) { return 2.0; });
    for (double v : dnu_g(g, c_field, outer)) CHECK(std::abs(v) < 1e-12);

    const auto log_field = GridField::sample(dom, [](double r, double) { return std::log(r); });
    for (double v : dnu_g(g, log_field, outer)) CHECK(v == Approx(0.5).margin(1e-4));
}

TEST_CASE("tangential_grad is the arclength derivative of the trace") {
    auto dom = unit_annulus(32, 256);
    const auto inner = boundary_curve(dom, BoundaryId::inner);   // r = 1
    const auto outer = boundary_curve(dom, BoundaryId::outer);   // r = 2
    const auto u = GridField::sample(dom, [](double, double th) { return std::cos(th); });

    const auto t_in = tangential_grad(u, inner);
    const auto t_out = tangential_grad(u, outer);
    for (int k = 0; k < inner.n_nodes(); ++k) {
        const double s = std::sin(dom->theta(k));
        CHECK(std::abs(t_in.d_arc[k]) == Approx(std::abs(s)).margin(1e-3));
        CHECK(std::abs(t_out.d_arc[k]) == Approx(std::abs(s) / 2.0).margin(1e-3));
    }

    const auto c = GridField::sample(dom, [](double, double) { return 1.0; });
    const auto t_c = tangential_grad(c, inner);
    for (double v : t_c.d_arc) CHECK(v == 0.0);
}

TEST_CASE("tangential decomposition identity per boundary node") {
    auto dom = unit_annulus(32, 64);
    const auto u = GridField::sample(dom, [](double r, double th) {
        return std::exp(r) * std::cos(2.0 * th) + r;
    });
    for (const char* preset : {"euclidean", "anisotropic"}) {
        const auto g = build_metric(dom, MetricSpec{preset, 1.0, 0.5, 0, 0});
        for (BoundaryId id : {BoundaryId::inner, BoundaryId::outer}) {
            const auto curve = boundary_curve(dom, id);
            const auto tg = tangential_grad_g(g, u, curve);
            const auto dn = dnu_g(g, u, curve);
            const auto grad = grad_g(g, u);
            const auto nsq = norm_g_sq(g, grad);
            for (int k = 0; k < curve.n_nodes(); ++k) {
                const double full = nsq.at(curve.ring, k);
                const double expected = full - dn[k] * dn[k];
                const double scale = std::max(1.0, std::abs(full));
                CHECK(std::abs(tg[k] - expected) <= 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("Euclidean tangential_grad_g matches the flat tangential gradient") {
    auto dom = unit_annulus(32, 64);
    const auto g = euclidean_metric(dom);
    const auto u = GridField::sample(dom, [](double r, double th) {
        return r * r * std::sin(th);
    });
    const auto curve = boundary_curve(dom, BoundaryId::outer);
    const auto tg = tangential_grad_g(g, u, curve);
    const auto flat = tangential_grad(u, curve);
    for (int k = 0; k < curve.n_nodes(); ++k)
        CHECK(tg[k] == Approx(flat.d_arc[k] * flat.d_arc[k]).margin(1e-12));
}

TEST_CASE("metric invariants hold for the shipped presets") {
    auto dom = unit_annulus(16, 32);
    for (const char* preset : {"euclidean", "conformal", "anisotropic"}) {
        const auto g = build_metric(dom, MetricSpec{preset, 2.0, 0.5, 0, 0});
        CHECK(g.theta_ell > 0.0);
        for (std::size_t n = 0; n < g.g.size(); ++n) {
            const Sym2& a = g.g[n];
            const Sym2& b = g.g_inv[n];
            CHECK(a.a11 * b.a11 + a.a12 * b.a12 == Approx(1.0).margin(1e-12));
            CHECK(a.a11 * b.a12 + a.a12 * b.a22 == Approx(0.0).margin(1e-12));
            CHECK(g.det[n] > 0.0);
            CHECK(a.min_eigenvalue() >= g.theta_ell - 1e-12);
        }
    }
}
