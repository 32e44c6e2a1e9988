// response.hpp - Dipole correlation traces to susceptibility, dielectric
// function and refractive index

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string_view>
#include <vector>

#include "polaroptics/errors.hpp"

namespace polaroptics::response {

using cplx = std::complex<double>;

// M(t_k) on t_k = k dt. mu_tot_sq records the dipole weight removed by
// normalizing the probe state; kz is the probe wavevector (nm^-1).
struct CorrelationTrace {
    double dt{0.0};
    std::vector<cplx> values;
    double mu_tot_sq{1.0};
    double kz{0.0};
    bool decayed{true};

    double t_max() const noexcept {
        return values.empty() ? 0.0 : dt * static_cast<double>(values.size() - 1);
    }
};

enum class SpectrumRole { susceptibility, dielectric, refractive_index };

inline std::string_view to_string(SpectrumRole r) {
    switch (r) {
    case SpectrumRole::susceptibility: return "chi";
    case SpectrumRole::dielectric: return "epsilon";
    case SpectrumRole::refractive_index: return "n";
    }
    return "?";
}

struct Spectrum {
    std::vector<double> omegas;
    std::vector<cplx> values;
    SpectrumRole role{SpectrumRole::susceptibility};
    // samples where Im eps < 0 beyond tolerance (gain)
    std::vector<std::size_t> gain_indices;

    std::size_t size() const noexcept { return omegas.size(); }
};

inline constexpr double decay_tolerance = 1e-6;
inline constexpr double gain_tolerance = 1e-12;

namespace detail {

inline void require_grid(const std::vector<double>& omegas) {
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!std::isfinite(omegas[i])) throw DomainError("energy grid contains a non-finite value");
        if (i > 0 && !(omegas[i] > omegas[i - 1]))
            throw DomainError("energy grid must be strictly increasing");
    }
}

inline void require_role(const Spectrum& s, SpectrumRole r) {
    if (s.role != r) {
        std::ostringstream msg;
        msg << "expected a " << to_string(r) << " spectrum, got " << to_string(s.role);
        throw DomainError(msg.str());
    }
}

} // namespace detail

// chi(w) = i * scale * int_0^T exp(i w t) M(t) dt (trapezoid). The factor i
// makes Im chi the absorptive part: M = exp(-i e t - g t/2) gives
// chi = -scale / ((w - e) + i g/2), with Im chi peaking at 2/g for w = e.
inline Spectrum susceptibility(const CorrelationTrace& trace, const std::vector<double>& omegas,
                               double scale) {
    detail::require_grid(omegas);
    Spectrum out{omegas, std::vector<cplx>(omegas.size()), SpectrumRole::susceptibility, {}};
    const auto& m = trace.values;
    if (m.empty()) return out;
    const double m0 = std::abs(m.front());
    const double tail = std::abs(m.back());
    if (m0 > 0.0 && tail >= decay_tolerance * m0) {
        std::ostringstream msg;
        msg << "correlation trace not decayed: |M(T)| = " << tail << " at T = " << trace.t_max();
        throw TruncationError(msg.str(), tail);
    }
    if (m0 == 0.0 && tail > 0.0) throw TruncationError("correlation trace starts at zero but does not vanish", tail);
    if (m.size() < 2) return out;
    const double dt = trace.dt;
    for (std::size_t j = 0; j < omegas.size(); ++j) {
        // exp(i w t_k) by recurrence, reseeded periodically
        const cplx step = std::polar(1.0, omegas[j] * dt);
        cplx phase{1.0, 0.0};
        cplx sum = 0.5 * m.front();
        for (std::size_t k = 1; k < m.size(); ++k) {
            if (k % 1024 == 0) phase = std::polar(1.0, omegas[j] * dt * static_cast<double>(k));
            else phase *= step;
            sum += (k + 1 == m.size() ? 0.5 : 1.0) * phase * m[k];
        }
        out.values[j] = cplx(0.0, scale) * dt * sum;
    }
    return out;
}

// eps = n_bg^2 + chi
inline Spectrum dielectric(const Spectrum& chi, cplx n_bg) {
    detail::require_role(chi, SpectrumRole::susceptibility);
    Spectrum out{chi.omegas, std::vector<cplx>(chi.size()), SpectrumRole::dielectric, {}};
    const cplx bg = n_bg * n_bg;
    for (std::size_t i = 0; i < chi.size(); ++i) out.values[i] = bg + chi.values[i];
    return out;
}

// Passive branch of sqrt(eps): Im n >= 0. For a gain sample (Im eps < 0) the
// branch with Re n > 0 is kept and the index recorded in gain_indices.
inline cplx passive_sqrt(cplx eps) {
    // normalize -0 so that sqrt(-1 - 0i) = +i
    if (eps.imag() == 0.0) eps = {eps.real(), 0.0};
    cplx n = std::sqrt(eps);
    if (n.imag() < 0.0 && eps.imag() >= 0.0) n = -n;
    return n;
}

inline Spectrum refractive_index(const Spectrum& eps) {
    detail::require_role(eps, SpectrumRole::dielectric);
    Spectrum out{eps.omegas, std::vector<cplx>(eps.size()), SpectrumRole::refractive_index, {}};
    for (std::size_t i = 0; i < eps.size(); ++i) {
        out.values[i] = passive_sqrt(eps.values[i]);
        if (eps.values[i].imag() < -gain_tolerance) out.gain_indices.push_back(i);
    }
    return out;
}

} // namespace polaroptics::response
