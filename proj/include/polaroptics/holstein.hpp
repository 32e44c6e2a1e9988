// holstein.hpp - Disordered Holstein thin film: closed-form dipole correlation,
// refractive index and film absorption

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "polaroptics/bath.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/materials.hpp"
#include "polaroptics/nmqsd.hpp"
#include "polaroptics/response.hpp"
#include "polaroptics/tmm.hpp"

namespace polaroptics::holstein {

using cplx = std::complex<double>;

struct ThinFilmParams {
    double eps_s{3.6};     // singlet energy incl. reorganization shift, eV
    double sigma{0.14};    // Gaussian disorder std, eV
    double gamma{5e-5};    // radiative damping, eV
    bath::BathParams bath{};
    cplx n_bg{std::sqrt(cplx(1.5, 0.015))};
    double scale{0.1};
};

inline void validate(const ThinFilmParams& p) {
    if (!std::isfinite(p.eps_s)) throw DomainError("eps_s must be finite");
    if (!(p.sigma >= 0.0)) throw DomainError("sigma must be >= 0");
    if (!(p.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    if (!std::isfinite(p.scale)) throw DomainError("scale must be finite");
    bath::validate(p.bath);
}

inline constexpr double trace_tail_tolerance = 1e-8;

// Time after which the disorder and damping envelope is below 1e-9 (the
// lineshape only adds decay).
inline double default_t_max(const ThinFilmParams& p) {
    validate(p);
    const double l = std::log(1e9);
    double t = std::numeric_limits<double>::infinity();
    if (p.sigma > 0.0) t = std::min(t, std::sqrt(2.0 * l) / p.sigma);
    if (p.gamma > 0.0) t = std::min(t, 2.0 * l / p.gamma);
    if (!std::isfinite(t)) throw DomainError("sigma = gamma = 0: the correlation never decays");
    return t;
}

// M(t) = exp(-i eps_s t - sigma^2 t^2 / 2 - gamma t / 2 - g(t)), M(0) = 1.
// The Gaussian factor is the disorder average of exp(-i zeta t), zeta ~ N(0, sigma^2).
inline response::CorrelationTrace dipole_correlation_thin_film(const ThinFilmParams& p, double dt,
                                                               double t_max) {
    validate(p);
    if (!(dt > 0.0) || !(t_max >= dt)) throw DomainError("need dt > 0 and t_max >= dt");
    const auto n = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9)) + 1;
    std::vector<cplx> g;
    if (p.bath.a > 0.0) g = bath::tabulate_lineshape(p.bath, dt, n);
    response::CorrelationTrace tr;
    tr.dt = dt;
    tr.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = dt * static_cast<double>(k);
        cplx expo(-0.5 * p.sigma * p.sigma * t * t - 0.5 * p.gamma * t, -p.eps_s * t);
        if (!g.empty()) expo -= g[k];
        tr.values[k] = std::exp(expo);
    }
    const double tail = std::abs(tr.values.back());
    if (tail >= trace_tail_tolerance) {
        std::ostringstream msg;
        msg << "thin-film correlation not decayed at t_max = " << tr.t_max() << " (|M| = " << tail << ")";
        throw TruncationError(msg.str(), tail);
    }
    return tr;
}

inline constexpr double default_dt = 0.01;

inline response::Spectrum thin_film_susceptibility(const ThinFilmParams& p,
                                                   const std::vector<double>& omegas,
                                                   double dt = default_dt) {
    const auto tr = dipole_correlation_thin_film(p, dt, default_t_max(p));
    return response::susceptibility(tr, omegas, p.scale);
}

inline response::Spectrum thin_film_refractive_index(const ThinFilmParams& p,
                                                     const std::vector<double>& omegas,
                                                     double dt = default_dt) {
    return response::refractive_index(
        response::dielectric(thin_film_susceptibility(p, omegas, dt), p.n_bg));
}

// Single Holstein molecule in the one-excitation sector for the engine: the
// site energy carries +lambda because the engine's closure does not remove the
// reorganization phase, so its overlap is exp(-i eps_s t - gamma t/2 - g(t)).
inline nmqsd::LinearOQSModel single_molecule_model(double eps_s, const bath::BathParams& b,
                                                   double gamma = 0.0) {
    nmqsd::LinearOQSModel m;
    m.h_s = nmqsd::Matrix::Constant(1, 1, cplx(eps_s + bath::reorganization_energy(b), 0.0));
    m.damping = Eigen::VectorXd::Constant(1, gamma);
    m.couplings.push_back({{0}, b});
    return m;
}

struct FilmGeometry {
    double thickness_nm{60.0};
    double theta_deg{15.0};
    tmm::Polarization pol{tmm::Polarization::s};
    tmm::IndexSource ambient{cplx{1.0, 0.0}};
    tmm::IndexSource substrate{cplx{1.46, 0.0}};
};

inline tmm::Stack film_stack(const response::Spectrum& n, const FilmGeometry& geo) {
    tmm::Stack s;
    s.ambient = tmm::Layer::semi_infinite(geo.ambient);
    s.layers.push_back(tmm::Layer::film(geo.thickness_nm, materials::from_spectrum(n, "film")));
    s.substrate = tmm::Layer::semi_infinite(geo.substrate);
    return s;
}

struct FilmOptics {
    std::vector<double> energies;
    std::vector<double> A, R, T;
    response::Spectrum n;
};

inline FilmOptics thin_film_optics(const ThinFilmParams& p, const std::vector<double>& energies,
                                   const FilmGeometry& geo = {}, double dt = default_dt) {
    FilmOptics out;
    out.energies = energies;
    out.n = thin_film_refractive_index(p, energies, dt);
    const auto stack = film_stack(out.n, geo);
    for (double e : energies) {
        const auto rt = tmm::reflect_transmit(stack, e, geo.theta_deg, geo.pol);
        const double a = 1.0 - rt.R - rt.T;
        if (a < -tmm::absorption_tolerance) {
            std::ostringstream msg;
            msg << "negative film absorption " << a << " at " << e << " eV";
            throw NumericError(msg.str());
        }
        out.R.push_back(rt.R);
        out.T.push_back(rt.T);
        out.A.push_back(a);
    }
    return out;
}

inline std::vector<double> thin_film_absorption(const ThinFilmParams& p,
                                                const std::vector<double>& energies,
                                                const FilmGeometry& geo = {},
                                                double dt = default_dt) {
    return thin_film_optics(p, energies, geo, dt).A;
}

} // namespace polaroptics::holstein
