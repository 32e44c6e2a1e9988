// tmm.hpp - Coherent transfer-matrix reflectance and transmittance of planar
// multilayers at oblique incidence

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "polaroptics/errors.hpp"
#include "polaroptics/materials.hpp"
#include "polaroptics/parallel.hpp"
#include "polaroptics/units.hpp"

namespace polaroptics::tmm {

using cplx = std::complex<double>;

enum class Polarization { s, p };

using IndexSource = std::variant<cplx, materials::IndexTable>;

struct Layer {
    std::optional<double> thickness_nm;  // empty for semi-infinite media
    IndexSource index{cplx{1.0, 0.0}};

    cplx index_at(double energy) const {
        if (const auto* c = std::get_if<cplx>(&index)) return *c;
        return std::get<materials::IndexTable>(index)(energy);
    }

    static Layer semi_infinite(IndexSource n) { return {std::nullopt, std::move(n)}; }
    static Layer film(double d_nm, IndexSource n) {
        if (!(d_nm > 0.0) || !std::isfinite(d_nm)) throw DomainError("layer thickness must be > 0");
        return {d_nm, std::move(n)};
    }
};

struct Stack {
    Layer ambient = Layer::semi_infinite(cplx{1.0, 0.0});
    std::vector<Layer> layers;
    Layer substrate = Layer::semi_infinite(cplx{1.0, 0.0});
};

inline void validate(const Stack& s) {
    if (s.ambient.thickness_nm || s.substrate.thickness_nm)
        throw DomainError("ambient and substrate must be semi-infinite");
    for (const auto& l : s.layers)
        if (!l.thickness_nm || !(*l.thickness_nm > 0.0))
            throw DomainError("inner layers need a finite thickness > 0");
}

struct RT {
    cplx r;
    cplx t;
    double R{0.0};
    double T{0.0};
    bool evanescent_substrate{false};
};

namespace detail {

// Forward-propagating branch of n cos(theta): decaying (Im > 0), or for
// propagating waves Re > 0.
inline bool is_forward(cplx n, cplx cos_t) {
    const cplx ncos = n * cos_t;
    if (std::abs(ncos.imag()) > 100.0 * std::numeric_limits<double>::epsilon() * std::abs(ncos))
        return ncos.imag() > 0.0;
    return ncos.real() > 0.0;
}

inline cplx snell_cos(cplx n, cplx n0_sin0) {
    cplx c = std::sqrt(cplx(1.0, 0.0) - (n0_sin0 / n) * (n0_sin0 / n));
    return is_forward(n, c) ? c : -c;
}

inline void interface(Polarization pol, cplx ni, cplx nj, cplx ci, cplx cj, cplx& r, cplx& t) {
    if (pol == Polarization::s) {
        const cplx den = ni * ci + nj * cj;
        r = (ni * ci - nj * cj) / den;
        t = 2.0 * ni * ci / den;
    } else {
        const cplx den = nj * ci + ni * cj;
        r = (nj * ci - ni * cj) / den;
        t = 2.0 * ni * ci / den;
    }
}

} // namespace detail

// Indices n[0..L+1] (ambient, layers, substrate) and layer thicknesses d[0..L-1].
inline RT reflect_transmit_indices(const std::vector<cplx>& n, const std::vector<double>& d,
                                   double energy_eV, double theta_deg,
                                   Polarization pol = Polarization::s) {
    if (n.size() != d.size() + 2) throw DomainError("need one thickness per inner layer");
    if (!(energy_eV > 0.0)) throw DomainError("photon energy must be > 0");
    if (!(theta_deg >= 0.0 && theta_deg < 90.0)) throw DomainError("angle must be in [0, 90) degrees");
    const std::size_t n_media = n.size();
    std::vector<cplx> c(n_media);
    const double th = units::deg_to_rad(theta_deg);
    const cplx n0_sin0 = n[0] * std::sin(th);
    if (std::abs(n0_sin0.imag()) > 1e-12 * std::abs(n0_sin0) && theta_deg > 0.0)
        throw DomainError("absorbing ambient at oblique incidence has no real in-plane wavevector");
    for (std::size_t i = 0; i < n_media; ++i) c[i] = detail::snell_cos(n[i], n0_sin0);

    const double lambda = units::wavelength_nm(energy_eV);
    using M2 = Eigen::Matrix2cd;
    cplx r, t;
    detail::interface(pol, n[0], n[1], c[0], c[1], r, t);
    M2 m;
    m << 1.0, r, r, 1.0;
    m /= t;
    for (std::size_t i = 1; i + 1 < n_media; ++i) {
        cplx delta = 2.0 * units::pi * n[i] * c[i] * d[i - 1] / lambda;
        // beyond ~35 the layer is opaque; clamping keeps the matrix finite
        if (delta.imag() > 35.0) delta = {delta.real(), 35.0};
        detail::interface(pol, n[i], n[i + 1], c[i], c[i + 1], r, t);
        M2 prop;
        prop << std::exp(cplx(0.0, -1.0) * delta), 0.0, 0.0, std::exp(cplx(0.0, 1.0) * delta);
        M2 iface;
        iface << 1.0, r, r, 1.0;
        m = m * prop * iface / t;
    }
    RT out;
    out.r = m(1, 0) / m(0, 0);
    out.t = 1.0 / m(0, 0);
    out.R = std::norm(out.r);
    const cplx nf = n[n_media - 1], cf = c[n_media - 1];
    if (pol == Polarization::s) {
        out.T = std::norm(out.t) * (nf * cf).real() / (n[0] * c[0]).real();
    } else {
        out.T = std::norm(out.t) * (nf * std::conj(cf)).real() / (n[0] * std::conj(c[0])).real();
    }
    out.evanescent_substrate = std::abs((nf * cf).real()) < 1e-14 && nf.imag() == 0.0;
    return out;
}

inline std::vector<cplx> indices_at(const Stack& stack, double energy_eV) {
    std::vector<cplx> n;
    n.reserve(stack.layers.size() + 2);
    n.push_back(stack.ambient.index_at(energy_eV));
    for (const auto& l : stack.layers) n.push_back(l.index_at(energy_eV));
    n.push_back(stack.substrate.index_at(energy_eV));
    return n;
}

inline std::vector<double> thicknesses(const Stack& stack) {
    std::vector<double> d;
    for (const auto& l : stack.layers) d.push_back(*l.thickness_nm);
    return d;
}

inline RT reflect_transmit(const Stack& stack, double energy_eV, double theta_deg,
                           Polarization pol = Polarization::s) {
    validate(stack);
    return reflect_transmit_indices(indices_at(stack, energy_eV), thicknesses(stack), energy_eV,
                                    theta_deg, pol);
}

inline constexpr double absorption_tolerance = 1e-8;

// A = 1 - R - T. Values below -1e-8 indicate a gain medium or a branch error.
inline double absorption(const Stack& stack, double energy_eV, double theta_deg,
                         Polarization pol = Polarization::s) {
    const auto rt = reflect_transmit(stack, energy_eV, theta_deg, pol);
    const double a = 1.0 - rt.R - rt.T;
    if (a < -absorption_tolerance) {
        std::ostringstream msg;
        msg << "negative absorption " << a << " at E = " << energy_eV << " eV, theta = " << theta_deg;
        throw NumericError(msg.str());
    }
    return a;
}

// R(E_i, theta_j); rows are energies, columns angles. stack_for(theta) may
// return a different stack per angle. Columns are evaluated in parallel.
inline Eigen::MatrixXd reflectivity_map(const std::function<Stack(double)>& stack_for,
                                        const std::vector<double>& energies,
                                        const std::vector<double>& thetas,
                                        Polarization pol = Polarization::s, std::size_t workers = 1) {
    Eigen::MatrixXd map(static_cast<Eigen::Index>(energies.size()),
                        static_cast<Eigen::Index>(thetas.size()));
    parallel_for(thetas.size(), workers, [&](std::size_t j) {
        const Stack s = stack_for(thetas[j]);
        for (std::size_t i = 0; i < energies.size(); ++i)
            map(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                reflect_transmit(s, energies[i], thetas[j], pol).R;
    });
    return map;
}

} // namespace polaroptics::tmm
