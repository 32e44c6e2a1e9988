// bath.hpp - Superohmic spectral density, bath correlation functions (BCF),
// lineshape function and memory-kernel tables

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <sstream>
#include <vector>

#include "polaroptics/errors.hpp"
#include "polaroptics/quadrature.hpp"
#include "polaroptics/units.hpp"

namespace polaroptics::bath {

using cplx = std::complex<double>;

// Inverse temperature with an explicit zero-temperature state (no large-float
// stand-in, so coth(beta*omega/2) is never evaluated at overflow).
class InverseTemperature {
public:
    constexpr InverseTemperature() = default;

    static constexpr InverseTemperature zero_temperature() noexcept { return {}; }

    static InverseTemperature finite(double beta) {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw DomainError("inverse temperature must be positive and finite");
        InverseTemperature b;
        b.beta_ = beta;
        b.finite_ = true;
        return b;
    }

    // T = 0 K maps to the zero-temperature state.
    static InverseTemperature from_kelvin(double kelvin) {
        if (kelvin < 0.0) throw DomainError("temperature must be non-negative");
        if (kelvin == 0.0) return zero_temperature();
        return finite(1.0 / (units::boltzmann_eV_per_K * kelvin));
    }

    constexpr bool is_zero_temperature() const noexcept { return !finite_; }

    double value() const {
        if (!finite_) throw DomainError("zero-temperature bath has no finite beta");
        return beta_;
    }

    double kelvin() const noexcept {
        return finite_ ? 1.0 / (units::boltzmann_eV_per_K * beta_) : 0.0;
    }

    friend constexpr bool operator==(const InverseTemperature&, const InverseTemperature&) = default;

private:
    double beta_{0.0};
    bool finite_{false};
};

// J(w) = a w^u / xi^(u-1) exp(-w/xi)
struct BathParams {
    double a{1.0};     // dimensionless coupling amplitude
    int u{3};          // exponent
    double xi{0.09};   // cutoff energy, eV
    InverseTemperature beta{};

    friend bool operator==(const BathParams&, const BathParams&) = default;
};

inline void validate(const BathParams& p) {
    if (!(p.a >= 0.0) || !std::isfinite(p.a)) throw DomainError("bath amplitude a must be >= 0");
    if (p.u < 1) throw DomainError("spectral exponent u must be >= 1");
    if (!(p.xi > 0.0) || !std::isfinite(p.xi)) throw DomainError("cutoff xi must be > 0");
}

inline double spectral_density(const BathParams& p, double omega) {
    if (omega < 0.0 || std::isnan(omega)) throw DomainError("spectral density needs omega >= 0");
    if (omega == 0.0) return 0.0;
    return p.a * std::pow(omega, p.u) / std::pow(p.xi, p.u - 1) * std::exp(-omega / p.xi);
}

// lambda = int J(w)/w dw = a xi Gamma(u)
inline double reorganization_energy(const BathParams& p) {
    validate(p);
    return p.a * p.xi * std::tgamma(static_cast<double>(p.u));
}

// Upper integration limit: beyond it J(w) < 1e-16 of its peak value at u*xi.
inline double spectral_cutoff(const BathParams& p) {
    const double u = static_cast<double>(p.u);
    // log of J(x xi)/J(u xi) for x = w/xi
    auto log_ratio = [u](double x) { return u * std::log(x / u) - (x - u); };
    double x = u + 1.0;
    while (log_ratio(x) > std::log(1e-16)) x += 1.0;
    return x * p.xi;
}

namespace detail {

inline double thermal_factor(const BathParams& p, double omega) {
    if (p.beta.is_zero_temperature()) return 1.0;
    const double x = 0.5 * p.beta.value() * omega;
    return x > 20.0 ? 1.0 + 2.0 * std::exp(-2.0 * x) : 1.0 / std::tanh(x);
}

// Panels for the composite rule on [0, w_cut] so that each panel spans at most
// `per_period` of an oscillation of exp(-i w t).
inline std::size_t panels_for_time(const BathParams& p, double t, double per_period = 0.5) {
    const double wc = spectral_cutoff(p);
    const double periods = wc * std::abs(t) / (2.0 * units::pi);
    return static_cast<std::size_t>(std::ceil(periods / per_period)) + 16;
}

// Weighted spectral node set shared by the fast tabulation routines.
struct SpectralNodes {
    std::vector<double> omega;
    std::vector<double> weight;   // quadrature weight * J(w)
    std::vector<double> thermal;  // coth(beta w / 2), 1 at zero temperature
};

inline SpectralNodes make_nodes(const BathParams& p, std::size_t panels) {
    SpectralNodes n;
    quadrature::composite_nodes(0.0, spectral_cutoff(p), panels, n.omega, n.weight);
    n.thermal.resize(n.omega.size());
    for (std::size_t k = 0; k < n.omega.size(); ++k) {
        n.weight[k] *= spectral_density(p, n.omega[k]);
        n.thermal[k] = thermal_factor(p, n.omega[k]);
    }
    return n;
}

// Evaluates sum_k c_k exp(i w_k t_j) on the uniform grid t_j = j dt for
// first <= j < first + count, using per-node phase recurrences reseeded every
// 512 steps.
inline std::vector<cplx> phase_sums(const std::vector<double>& omega,
                                    const std::vector<double>& coeff_re,
                                    const std::vector<double>& coeff_im,
                                    double dt, std::size_t count, std::size_t first = 0) {
    const std::size_t m = omega.size();
    std::vector<double> pr(m), pi(m), sr(m), si(m);
    for (std::size_t k = 0; k < m; ++k) {
        sr[k] = std::cos(omega[k] * dt);
        si[k] = std::sin(omega[k] * dt);
    }
    std::vector<cplx> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        if (j % 512 == 0) {
            const double t = static_cast<double>(first + j) * dt;
            for (std::size_t k = 0; k < m; ++k) {
                pr[k] = std::cos(omega[k] * t);
                pi[k] = std::sin(omega[k] * t);
            }
        }
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            re += coeff_re[k] * pr[k] - coeff_im[k] * pi[k];
            im += coeff_re[k] * pi[k] + coeff_im[k] * pr[k];
        }
        out[j] = {re, im};
        for (std::size_t k = 0; k < m; ++k) {
            const double nr = pr[k] * sr[k] - pi[k] * si[k];
            const double ni = pr[k] * si[k] + pi[k] * sr[k];
            pr[k] = nr;
            pi[k] = ni;
        }
    }
    return out;
}

inline void require_time(double t) {
    if (t < 0.0 || std::isnan(t)) throw DomainError("time argument must be >= 0");
}

// int_0^wc J(w) f(w) dw for a real integrand factor f. The absolute tolerance
// is 1e-14 of the larger of int J coth and int |J f|.
template <class F>
double spectral_integral(const BathParams& p, double t, F&& factor) {
    const double wc = spectral_cutoff(p);
    const std::size_t panels = panels_for_time(p, t);
    const double scale = quadrature::composite_gauss(
        [&](double w) { return spectral_density(p, w) * thermal_factor(p, w); }, 0.0, wc, 32);
    const double magnitude = quadrature::composite_gauss(
        [&](double w) { return spectral_density(p, w) * std::abs(factor(w)); }, 0.0, wc, panels);
    const double tol = 1e-14 * std::max({scale, magnitude, 1e-300});
    auto integrand = [&](double w) { return spectral_density(p, w) * factor(w); };
    return quadrature::adaptive_gauss(integrand, 0.0, wc, panels, tol).value;
}

// -int J(w) sin(w t) dw, shared by the zero- and finite-temperature BCF.
inline double bcf_imaginary_part(const BathParams& p, double t) {
    return -spectral_integral(p, t, [t](double w) { return std::sin(w * t); });
}

} // namespace detail

// alpha_0(t) = int_0^inf J(w) exp(-i w t) dw  (numerical quadrature)
inline cplx bcf_zero_temperature(const BathParams& p, double t) {
    validate(p);
    detail::require_time(t);
    const double re = detail::spectral_integral(p, t, [t](double w) { return std::cos(w * t); });
    return {re, detail::bcf_imaginary_part(p, t)};
}

// alpha_T(t) = int_0^inf J(w) [coth(beta w/2) cos(w t) - i sin(w t)] dw
inline cplx bcf_finite_temperature(const BathParams& p, double t) {
    validate(p);
    detail::require_time(t);
    if (p.beta.is_zero_temperature())
        throw DomainError("finite-temperature BCF requires a finite beta");
    const double re = detail::spectral_integral(
        p, t, [&p, t](double w) { return detail::thermal_factor(p, w) * std::cos(w * t); });
    return {re, detail::bcf_imaginary_part(p, t)};
}

// Dispatches on the temperature state of `p`.
inline cplx bcf(const BathParams& p, double t) {
    return p.beta.is_zero_temperature() ? bcf_zero_temperature(p, t)
                                        : bcf_finite_temperature(p, t);
}

// g(t) = int_0^t (t - s) alpha(s) ds + i lambda t. Evaluated through the
// equivalent spectral form int J(w) [coth (1 - cos wt) + i sin wt] / w^2 dw.
inline cplx lineshape_g(const BathParams& p, double t) {
    validate(p);
    detail::require_time(t);
    if (t == 0.0) return {0.0, 0.0};
    const double re = detail::spectral_integral(p, t, [&p, t](double w) {
        const double s = std::sin(0.5 * w * t);
        return detail::thermal_factor(p, w) * 2.0 * s * s / (w * w);
    });
    const double im = detail::spectral_integral(
        p, t, [t](double w) { return std::sin(w * t) / (w * w); });
    return {re, im};
}

// Tabulated alpha(t_k), t_k = k dt.
struct BathKernel {
    double dt{0.0};
    std::vector<cplx> values;
    BathParams params;

    std::size_t size() const noexcept { return values.size(); }
    double t_max() const noexcept {
        return values.empty() ? 0.0 : dt * static_cast<double>(values.size() - 1);
    }
};

// Tables are built in blocks of this many points. Each block uses a
// composite rule sized for its own end time, so a value depends only on its
// index and tables can be extended without changing earlier entries.
inline constexpr std::size_t bcf_block_points = 8192;

namespace detail {

inline void append_bcf_block(const BathParams& p, double dt, std::size_t block,
                             std::size_t count, std::vector<cplx>& out) {
    const std::size_t first = block * bcf_block_points;
    const double t_end = dt * static_cast<double>(first + bcf_block_points);
    const auto nodes = make_nodes(p, panels_for_time(p, t_end, 0.25));
    const std::size_t m = nodes.omega.size();
    // plain = sum wJ exp(i w t) = C + iS, so alpha_0 = conj(plain) and
    // alpha_T = C_thermal - iS.
    std::vector<double> cr(m), ci(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) cr[k] = nodes.weight[k];
    const auto plain = phase_sums(nodes.omega, cr, ci, dt, count, first);
    if (p.beta.is_zero_temperature()) {
        for (std::size_t j = 0; j < count; ++j) out.push_back(std::conj(plain[j]));
        return;
    }
    for (std::size_t k = 0; k < m; ++k) cr[k] = nodes.weight[k] * nodes.thermal[k];
    const auto thermal = phase_sums(nodes.omega, cr, ci, dt, count, first);
    for (std::size_t j = 0; j < count; ++j) out.push_back({thermal[j].real(), -plain[j].imag()});
}

} // namespace detail

// Appends entries to `kernel` until it holds n_points values.
inline void extend_bcf(BathKernel& kernel, std::size_t n_points) {
    auto& v = kernel.values;
    v.reserve(n_points);
    while (v.size() < n_points) {
        const std::size_t block = v.size() / bcf_block_points;
        const std::size_t offset = v.size() - block * bcf_block_points;
        const std::size_t end = std::min(n_points, (block + 1) * bcf_block_points);
        if (offset != 0) {
            // partial block: rebuild it whole so entries stay index-determined
            v.resize(block * bcf_block_points);
        }
        detail::append_bcf_block(kernel.params, kernel.dt, block, end - v.size(), v);
    }
}

// Fast tabulation of alpha(j dt), j < n_points.
inline BathKernel tabulate_bcf(const BathParams& p, double dt, std::size_t n_points) {
    validate(p);
    if (!(dt > 0.0)) throw DomainError("tabulation step must be > 0");
    BathKernel kernel{dt, {}, p};
    extend_bcf(kernel, n_points);
    return kernel;
}

// Fast tabulation of g(t_k), t_k = k dt (same spectral form as lineshape_g).
inline std::vector<cplx> tabulate_lineshape(const BathParams& p, double dt, std::size_t n_points) {
    validate(p);
    if (!(dt > 0.0)) throw DomainError("tabulation step must be > 0");
    const double t_end = dt * static_cast<double>(n_points ? n_points - 1 : 0);
    const auto nodes = detail::make_nodes(p, detail::panels_for_time(p, t_end, 0.25));
    const std::size_t m = nodes.omega.size();
    // g = sum wJ/w^2 [coth - coth cos(wt) + i sin(wt)]
    double constant = 0.0;
    std::vector<double> cr(m), ci(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double base = nodes.weight[k] / (nodes.omega[k] * nodes.omega[k]);
        constant += base * nodes.thermal[k];
        cr[k] = base * nodes.thermal[k];
    }
    const auto cos_part = detail::phase_sums(nodes.omega, cr, ci, dt, n_points);
    std::vector<cplx> sin_part;
    if (!p.beta.is_zero_temperature()) {
        for (std::size_t k = 0; k < m; ++k)
            cr[k] = nodes.weight[k] / (nodes.omega[k] * nodes.omega[k]);
        sin_part = detail::phase_sums(nodes.omega, cr, ci, dt, n_points);
    }
    std::vector<cplx> g(n_points);
    for (std::size_t j = 0; j < n_points; ++j) {
        const double im = sin_part.empty() ? cos_part[j].imag() : sin_part[j].imag();
        g[j] = {constant - cos_part[j].real(), im};
    }
    if (n_points > 0) g[0] = {0.0, 0.0};
    return g;
}

// G_delta(t_k) = int_0^{t_k} alpha(s) exp(i delta s) ds on t_k = k dt, k*dt <= t_max,
// by cumulative Simpson with the kernel sampled at half steps. `alpha` is any
// callable double -> complex.
template <class Kernel>
    requires std::invocable<Kernel&, double>
std::vector<cplx> memory_kernel_table(Kernel&& alpha, double delta, double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max > 0.0)) throw DomainError("memory kernel table needs dt, t_max > 0");
    const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
    std::vector<cplx> table(steps + 1);
    table[0] = {0.0, 0.0};
    auto f = [&](double s) { return cplx(alpha(s)) * std::exp(cplx(0.0, delta * s)); };
    cplx left = f(0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const cplx mid = f(t0 + 0.5 * dt);
        const cplx right = f(t0 + dt);
        table[k + 1] = table[k] + dt / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    return table;
}

inline std::vector<cplx> memory_kernel_table(const BathParams& p, double delta, double t_max,
                                             double dt) {
    validate(p);
    return memory_kernel_table([&p](double s) { return bcf(p, s); }, delta, t_max, dt);
}

} // namespace polaroptics::bath
