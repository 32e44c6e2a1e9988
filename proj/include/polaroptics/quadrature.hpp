// quadrature.hpp - Composite Gauss-Legendre rules with panel doubling

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "polaroptics/errors.hpp"

namespace polaroptics::quadrature {

inline constexpr std::size_t gauss_order = 20;

// Full 20-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::array<double, gauss_order> x{};
    std::array<double, gauss_order> w{};
};

inline const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, gauss_order>;
        const auto& xa = G::abscissa();
        const auto& wa = G::weights();
        GaussRule r;
        std::size_t k = 0;
        for (std::size_t i = 0; i < xa.size(); ++i) {
            r.x[k] = xa[i];
            r.w[k++] = wa[i];
            r.x[k] = -xa[i];
            r.w[k++] = wa[i];
        }
        return r;
    }();
    return rule;
}

// Nodes and weights of the composite rule with `panels` equal panels on [a, b].
inline void composite_nodes(double a, double b, std::size_t panels,
                            std::vector<double>& nodes, std::vector<double>& weights) {
    const auto& rule = gauss_rule();
    const double h = (b - a) / static_cast<double>(panels);
    nodes.resize(panels * gauss_order);
    weights.resize(panels * gauss_order);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * h;
        for (std::size_t i = 0; i < gauss_order; ++i) {
            nodes[p * gauss_order + i] = mid + 0.5 * h * rule.x[i];
            weights[p * gauss_order + i] = 0.5 * h * rule.w[i];
        }
    }
}

template <class F>
double composite_gauss(F&& f, double a, double b, std::size_t panels) {
    const auto& rule = gauss_rule();
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * h;
        double panel = 0.0;
        for (std::size_t i = 0; i < gauss_order; ++i)
            panel += rule.w[i] * f(mid + 0.5 * h * rule.x[i]);
        sum += 0.5 * h * panel;
    }
    return sum;
}

struct AdaptiveResult {
    double value{0.0};
    double error_estimate{0.0};
    std::size_t panels{0};
};

// Doubles the panel count until two successive composite estimates agree to
// abs_tol. Throws NumericError with the last estimates when max_doublings is
// exhausted.
template <class F>
AdaptiveResult adaptive_gauss(F&& f, double a, double b, std::size_t initial_panels,
                              double abs_tol, std::size_t max_doublings = 8) {
    std::size_t panels = initial_panels == 0 ? 1 : initial_panels;
    double coarse = composite_gauss(f, a, b, panels);
    for (std::size_t k = 0; k < max_doublings; ++k) {
        panels *= 2;
        const double fine = composite_gauss(f, a, b, panels);
        const double err = std::abs(fine - coarse);
        if (err <= abs_tol) return {fine, err, panels};
        coarse = fine;
    }
    std::ostringstream msg;
    msg << "adaptive Gauss quadrature on [" << a << ", " << b << "] did not reach tolerance "
        << abs_tol << " after " << panels << " panels (last estimate " << coarse << ")";
    throw NumericError(msg.str());
}

} // namespace polaroptics::quadrature
