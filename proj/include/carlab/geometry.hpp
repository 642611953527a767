#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "carlab/errors.hpp"

namespace carlab {

enum class BoundaryId { inner, outer };
enum class BoundaryRole { S, Gamma, artificial };

inline std::string to_string(BoundaryId id) {
    return id == BoundaryId::inner ? "inner" : "outer";
}

inline std::string to_string(BoundaryRole role) {
    switch (role) {
        case BoundaryRole::S: return "S";
        case BoundaryRole::Gamma: return "Gamma";
        default: return "artificial";
    }
}

/// Structured polar grid over a concentric disk or annulus.
///
/// Nodes live on rings i = 0..n_r at radius r_inner + i*dr and angles
/// theta_k = 2*pi*k/n_theta, k = 0..n_theta-1; the angular index is periodic.
/// For a disk (r_inner == 0) ring 0 collapses to the center point; fields
/// store one redundant value per angular slot there and must keep them equal.
struct GridDomain {
    enum class Kind { disk, annulus };

    Kind kind = Kind::annulus;
    double r_inner = 0.0;
    double r_outer = 1.0;
    std::array<double, 2> center{0.0, 0.0};
    int n_r = 0;
    int n_theta = 0;
    std::map<BoundaryId, BoundaryRole> boundary_tags;

    bool is_disk() const { return kind == Kind::disk; }
    int n_rings() const { return n_r + 1; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(n_rings()) * static_cast<std::size_t>(n_theta);
    }

    double dr() const { return (r_outer - r_inner) / n_r; }
    double dtheta() const { return 2.0 * std::numbers::pi / n_theta; }
    double radius(int ring) const { return r_inner + ring * dr(); }
    double theta(int k) const { return k * dtheta(); }

    int wrap(int k) const {
        k %= n_theta;
        return k < 0 ? k + n_theta : k;
    }

    std::size_t index(int ring, int k) const {
        return static_cast<std::size_t>(ring) * n_theta + static_cast<std::size_t>(wrap(k));
    }

    std::array<double, 2> position(int ring, int k) const {
        const double r = radius(ring);
        const double th = theta(wrap(k));
        return {center[0] + r * std::cos(th), center[1] + r * std::sin(th)};
    }

    int boundary_ring(BoundaryId id) const {
        if (id == BoundaryId::inner) {
            if (is_disk()) throw UnknownBoundary("disk domain has no inner boundary");
            return 0;
        }
        return n_r;
    }

    bool has_boundary(BoundaryId id) const { return boundary_tags.count(id) != 0; }

    BoundaryRole role_of(BoundaryId id) const {
        auto it = boundary_tags.find(id);
        if (it == boundary_tags.end())
            throw UnknownBoundary("no role assigned to boundary '" + to_string(id) + "'");
        return it->second;
    }

    BoundaryId boundary_with_role(BoundaryRole role) const {
        for (const auto& [id, r] : boundary_tags)
            if (r == role) return id;
        throw UnknownBoundary("no boundary carries role '" + to_string(role) + "'");
    }
};

using DomainPtr = std::shared_ptr<const GridDomain>;

namespace detail {

inline void check_counts(int n_r, int n_theta) {
    if (n_r < 8) throw InvalidGeometry("n_r must be >= 8, got " + std::to_string(n_r));
    if (n_theta < 16 || n_theta % 2 != 0)
        throw InvalidGeometry("n_theta must be >= 16 and even, got " + std::to_string(n_theta));
}

}  // namespace detail

inline DomainPtr build_annulus(double r_inner, double r_outer, int n_r, int n_theta,
                               std::map<BoundaryId, BoundaryRole> tags) {
    if (!(r_outer > r_inner) || !(r_inner > 0.0))
        throw InvalidGeometry("annulus requires r_outer > r_inner > 0");
    detail::check_counts(n_r, n_theta);
    if (tags.count(BoundaryId::inner) != 1 || tags.count(BoundaryId::outer) != 1)
        throw InvalidGeometry("annulus needs exactly one role per boundary {inner, outer}");
    auto dom = std::make_shared<GridDomain>();
    dom->kind = GridDomain::Kind::annulus;
    dom->r_inner = r_inner;
    dom->r_outer = r_outer;
    dom->n_r = n_r;
    dom->n_theta = n_theta;
    dom->boundary_tags = std::move(tags);
    return dom;
}

inline DomainPtr build_disk(double r_outer, int n_r, int n_theta, BoundaryRole outer_role) {
    if (!(r_outer > 0.0)) throw InvalidGeometry("disk requires r_outer > 0");
    detail::check_counts(n_r, n_theta);
    auto dom = std::make_shared<GridDomain>();
    dom->kind = GridDomain::Kind::disk;
    dom->r_inner = 0.0;
    dom->r_outer = r_outer;
    dom->n_r = n_r;
    dom->n_theta = n_theta;
    dom->boundary_tags = {{BoundaryId::outer, outer_role}};
    return dom;
}

/// Scalar field sampled at grid nodes. Periodicity in theta is implicit in the
/// storage (one slot per distinct angle); the disk-center redundancy is kept
/// explicit and must stay synchronized.
struct GridField {
    DomainPtr dom;
    std::vector<double> v;

    GridField() = default;
    explicit GridField(DomainPtr d) : dom(std::move(d)), v(dom->node_count(), 0.0) {}

    double& at(int ring, int k) { return v[dom->index(ring, k)]; }
    double at(int ring, int k) const { return v[dom->index(ring, k)]; }

    static GridField zeros(const DomainPtr& d) { return GridField(d); }

    /// Sample a function of polar coordinates (r, theta).
    static GridField sample(const DomainPtr& d, const std::function<double(double, double)>& f) {
        GridField out(d);
        for (int i = 0; i <= d->n_r; ++i) {
            const double r = d->radius(i);
            for (int k = 0; k < d->n_theta; ++k) out.at(i, k) = f(r, d->theta(k));
        }
        if (d->is_disk()) {
            const double c = out.at(0, 0);
            for (int k = 0; k < d->n_theta; ++k) out.at(0, k) = c;
        }
        return out;
    }
};

/// One circular boundary (or interior measurement circle) with arclength
/// elements and the unit normal pointing out of the region it bounds.
struct BoundaryCurve {
    DomainPtr dom;
    BoundaryId id = BoundaryId::outer;
    int ring = 0;
    double radius = 0.0;
    bool outward_radial = true;  // normal = +r_hat if true, -r_hat otherwise
    std::vector<std::array<double, 2>> position;
    std::vector<std::array<double, 2>> normal;
    std::vector<double> ds;

    int n_nodes() const { return dom->n_theta; }
};

namespace detail {

inline BoundaryCurve make_circle(const DomainPtr& dom, BoundaryId id, int ring,
                                 bool outward_radial) {
    BoundaryCurve c;
    c.dom = dom;
    c.id = id;
    c.ring = ring;
    c.radius = dom->radius(ring);
    c.outward_radial = outward_radial;
    const int n = dom->n_theta;
    c.position.resize(n);
    c.normal.resize(n);
    c.ds.assign(n, c.radius * dom->dtheta());
    const double sgn = outward_radial ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        const double th = dom->theta(k);
        c.position[k] = dom->position(ring, k);
        c.normal[k] = {sgn * std::cos(th), sgn * std::sin(th)};
    }
    return c;
}

}  // namespace detail

/// Boundary curve of the domain; the normal points out of the grid region
/// (inward radial direction on the inner circle of an annulus).
inline BoundaryCurve boundary_curve(const DomainPtr& dom, BoundaryId id) {
    if (!dom->has_boundary(id))
        throw UnknownBoundary("domain has no boundary '" + to_string(id) + "'");
    const int ring = dom->boundary_ring(id);
    return detail::make_circle(dom, id, ring, id == BoundaryId::outer);
}

/// Measurement circle at an interior grid radius; the normal is the outward
/// radial direction (outer normal of the region the circle encloses).
inline BoundaryCurve interior_circle(const DomainPtr& dom, double radius) {
    const double x = (radius - dom->r_inner) / dom->dr();
    const int ring = static_cast<int>(std::lround(x));
    if (ring <= 0 || ring >= dom->n_r || std::abs(x - ring) > 1e-10)
        throw GammaOffGrid("radius " + std::to_string(radius) + " is not an interior grid circle");
    return detail::make_circle(dom, BoundaryId::outer, ring, true);
}

/// Composite radial quadrature weights: Simpson on an even cell count, with a
/// 3/8 tail when n_r is odd. Fourth order for smooth radial factors.
inline std::vector<double> radial_quadrature_weights(const GridDomain& dom) {
    const int n = dom.n_r;
    const double h = dom.dr();
    std::vector<double> w(n + 1, 0.0);
    int simpson_cells = (n % 2 == 0) ? n : n - 3;
    for (int c = 0; c + 2 <= simpson_cells; c += 2) {
        w[c] += h / 3.0;
        w[c + 1] += 4.0 * h / 3.0;
        w[c + 2] += h / 3.0;
    }
    if (n % 2 != 0) {
        const int b = simpson_cells;
        w[b] += 3.0 * h / 8.0;
        w[b + 1] += 9.0 * h / 8.0;
        w[b + 2] += 9.0 * h / 8.0;
        w[b + 3] += 3.0 * h / 8.0;
    }
    return w;
}

/// integral of f dx over the domain, dx = r dr dtheta: composite Simpson in r,
/// periodic trapezoid in theta.
inline double integrate_volume(const GridField& f) {
    const GridDomain& dom = *f.dom;
    const auto w = radial_quadrature_weights(dom);
    const double dth = dom.dtheta();
    double total = 0.0;
    for (int i = 0; i <= dom.n_r; ++i) {
        const double rw = w[i] * dom.radius(i);
        if (rw == 0.0 && dom.radius(i) == 0.0) continue;
        double ring_sum = 0.0;
        for (int k = 0; k < dom.n_theta; ++k) ring_sum += f.at(i, k);
        total += rw * ring_sum;
    }
    return total * dth;
}

/// integral of f dS over a circle: periodic trapezoid rule (all weights equal),
/// spectrally accurate for smooth periodic integrands.
inline double integrate_boundary(const BoundaryCurve& curve, const std::vector<double>& f) {
    if (f.size() != static_cast<std::size_t>(curve.n_nodes()))
        throw InvalidGeometry("boundary integrand size does not match curve node count");
    double total = 0.0;
    for (int k = 0; k < curve.n_nodes(); ++k) total += f[k] * curve.ds[k];
    return total;
}

}  // namespace carlab
