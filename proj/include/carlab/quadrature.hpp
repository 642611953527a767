#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace carlab {

/// Endpoint coefficients of the exponentially fitted cell rule
///   integral_0^1 e^{(1-t) w0 + t w1} [(1-t) F0 + t F1] dt = A0 F0 + A1 F1.
///
/// The exponent is interpolated linearly across the cell and integrated
/// exactly, so the rule stays second order in the smooth factor even when the
/// weight varies by hundreds of e-foldings per cell. Composite Simpson would
/// reduce such a layer to its end-node weight and make every weighted ratio
/// proportional to the mesh width.
inline std::pair<double, double> exp_linear_coeffs(double w0, double w1) {
    const double d = w1 - w0;
    if (std::abs(d) < 1e-4) {
        // Series in d; relative truncation error ~ d^5.
        const double e0 = std::exp(w0);
        const double a0 = e0 * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d / 120.0)));
        const double a1 = e0 * (0.5 + d * (1.0 / 3.0 + d * (1.0 / 8.0 + d / 30.0)));
        return {a0, a1};
    }
    const double e0 = std::exp(w0);
    const double e1 = std::exp(w1);
    const double inv_d2 = 1.0 / (d * d);
    const double a0 = (e1 - e0 - e0 * d) * inv_d2;
    const double a1 = (e0 + e1 * (d - 1.0)) * inv_d2;
    return {a0, a1};
}

/// integral of e^{w(r)} F(r) dr over one radial column with node samples,
/// cell width h. w must already carry any shared exponent shift.
inline double weighted_column_integral(const std::vector<double>& w,
                                       const std::vector<double>& F, double h) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        const auto [a0, a1] = exp_linear_coeffs(w[i], w[i + 1]);
        total += h * (a0 * F[i] + a1 * F[i + 1]);
    }
    return total;
}

}  // namespace carlab
