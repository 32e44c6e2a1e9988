// htc.hpp - Holstein-Tavis-Cummings microcavity in the single-excitation
// manifold: model construction, probe state, susceptibility and cavity stack

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "polaroptics/bath.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/materials.hpp"
#include "polaroptics/nmqsd.hpp"
#include "polaroptics/response.hpp"
#include "polaroptics/tmm.hpp"
#include "polaroptics/units.hpp"

namespace polaroptics::htc {

using cplx = std::complex<double>;

struct CavityParams {
    double e0{3.42};         // cavity energy at kz = 0, eV
    double n_r{2.0};         // dispersion refractive index
    double kappa{0.21};      // photon decay rate, eV
    double mu_c_ratio{2.0};  // cavity dipole / molecular dipole
    std::vector<double> kz_grid;  // nm^-1, sorted

    std::size_t n_modes() const noexcept { return kz_grid.size(); }
};

struct HTCParams {
    std::size_t n_mol{30};
    double eps_s{3.6};
    double gamma{5e-5};
    double rabi{0.92};
    std::vector<double> positions;  // nm
    bath::BathParams bath{1.0, 3, 0.09, bath::InverseTemperature::from_kelvin(300.0)};
};

inline void validate(const CavityParams& c) {
    if (!(c.e0 > 0.0)) throw DomainError("cavity energy e0 must be > 0");
    if (!(c.n_r >= 1.0)) throw DomainError("dispersion index n_r must be >= 1");
    if (!(c.kappa >= 0.0)) throw DomainError("kappa must be >= 0");
    if (!std::isfinite(c.mu_c_ratio)) throw DomainError("mu_c_ratio must be finite");
    if (c.kz_grid.empty()) throw DomainError("cavity needs at least one kz mode");
    if (!std::is_sorted(c.kz_grid.begin(), c.kz_grid.end())) throw DomainError("kz grid must be sorted");
}

inline void validate(const HTCParams& p) {
    if (p.n_mol < 1) throw DomainError("need at least one molecule");
    if (!(p.rabi >= 0.0)) throw DomainError("Rabi splitting must be >= 0");
    if (!(p.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    if (p.positions.size() != p.n_mol) throw DomainError("positions must have one entry per molecule");
    bath::validate(p.bath);
}

// omega(kz) = sqrt(e0^2 + (hbar c kz / n_r)^2)
inline double cavity_dispersion(const CavityParams& c, double kz) {
    const double x = units::hbar_c_eV_nm * kz / c.n_r;
    return std::sqrt(c.e0 * c.e0 + x * x);
}

// g(kz) = Omega / (2 sqrt N) * sqrt(omega(kz) / e0); the collective coupling
// at kz = 0 is Omega / 2.
inline double coupling_strength(const HTCParams& p, const CavityParams& c, double kz) {
    return p.rabi / (2.0 * std::sqrt(static_cast<double>(p.n_mol))) *
           std::sqrt(cavity_dispersion(c, kz) / c.e0);
}

// In-plane wavevector of light of energy E incident from vacuum at theta.
inline double angle_to_kz(double energy_eV, double theta_deg) {
    if (!(theta_deg >= 0.0 && theta_deg < 90.0)) throw DomainError("angle must be in [0, 90) degrees");
    return energy_eV / units::hbar_c_eV_nm * std::sin(units::deg_to_rad(theta_deg));
}

// n_modes values spanning [0, kz(e0, theta_max)].
inline std::vector<double> span_kz_grid(double e0, double theta_max_deg, std::size_t n_modes) {
    if (n_modes == 0) throw DomainError("need at least one mode");
    std::vector<double> g(n_modes, 0.0);
    if (n_modes == 1) return g;
    const double kmax = angle_to_kz(e0, theta_max_deg);
    for (std::size_t j = 0; j < n_modes; ++j)
        g[j] = kmax * static_cast<double>(j) / static_cast<double>(n_modes - 1);
    return g;
}

// n_modes values with spacing dk centred on the probe wavevector.
inline std::vector<double> centered_kz_grid(double probe_kz, double dk, std::size_t n_modes) {
    if (n_modes == 0) throw DomainError("need at least one mode");
    std::vector<double> g(n_modes);
    const double mid = 0.5 * static_cast<double>(n_modes - 1);
    for (std::size_t j = 0; j < n_modes; ++j) g[j] = probe_kz + (static_cast<double>(j) - mid) * dk;
    return g;
}

inline double default_kz_spacing(double e0, double theta_max_deg, std::size_t n_modes) {
    return angle_to_kz(e0, theta_max_deg) / static_cast<double>(std::max<std::size_t>(n_modes, 2) - 1);
}

// z_m equally spaced over one period 2 pi / dk; the bright vectors of grid
// modes are then mutually orthogonal.
inline std::vector<double> equally_spaced_positions(std::size_t n_mol, double dk) {
    if (!(dk > 0.0)) throw DomainError("kz spacing must be > 0");
    std::vector<double> z(n_mol);
    for (std::size_t m = 0; m < n_mol; ++m)
        z[m] = static_cast<double>(m) * 2.0 * units::pi / (dk * static_cast<double>(n_mol));
    return z;
}

inline constexpr std::size_t default_max_dim = 4096;

// Basis: |exc m> for m < N, then |1_kz> for each grid mode.
inline nmqsd::LinearOQSModel build_single_excitation_model(const HTCParams& p, const CavityParams& c,
                                                           std::size_t max_dim = default_max_dim,
                                                           bool with_bath = true) {
    validate(p);
    validate(c);
    const std::size_t n = p.n_mol, m = c.n_modes(), d = n + m;
    if (d > max_dim) {
        std::ostringstream msg;
        msg << "model dimension " << d << " exceeds cap " << max_dim;
        throw DomainError(msg.str());
    }
    const auto di = static_cast<Eigen::Index>(d);
    nmqsd::LinearOQSModel model;
    model.h_s = nmqsd::Matrix::Zero(di, di);
    model.damping = Eigen::VectorXd::Zero(di);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        model.h_s(ii, ii) = p.eps_s;
        model.damping[ii] = p.gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double kz = c.kz_grid[j];
        const auto jj = static_cast<Eigen::Index>(n + j);
        model.h_s(jj, jj) = cavity_dispersion(c, kz);
        model.damping[jj] = c.kappa;
        const double g = coupling_strength(p, c, kz);
        for (std::size_t i = 0; i < n; ++i) {
            // interaction -mu.E: negative sign on the exciton-photon element
            const cplx v = -g * std::polar(1.0, kz * p.positions[i]);
            const auto ii = static_cast<Eigen::Index>(i);
            model.h_s(ii, jj) = v;
            model.h_s(jj, ii) = std::conj(v);
        }
    }
    if (with_bath && p.bath.a > 0.0)
        for (std::size_t i = 0; i < n; ++i) model.couplings.push_back({{i}, p.bath});
    return model;
}

struct ProbeState {
    nmqsd::Vector psi;  // normalized
    double mu_tot_sq{0.0};
    std::size_t photon_mode{0};
};

// Molecular amplitudes exp(i kz z_m) and mu_c on the grid mode nearest the
// probe wavevector (unit molecular dipole).
inline ProbeState initial_probe_state(const HTCParams& p, const CavityParams& c, double probe_kz) {
    if (c.kz_grid.empty()) throw DomainError("probe needs a non-empty kz grid");
    validate(p);
    const std::size_t n = p.n_mol;
    ProbeState s;
    s.psi = nmqsd::Vector::Zero(static_cast<Eigen::Index>(n + c.n_modes()));
    for (std::size_t i = 0; i < n; ++i)
        s.psi[static_cast<Eigen::Index>(i)] = std::polar(1.0, probe_kz * p.positions[i]);
    std::size_t best = 0;
    for (std::size_t j = 1; j < c.n_modes(); ++j)
        if (std::abs(c.kz_grid[j] - probe_kz) < std::abs(c.kz_grid[best] - probe_kz)) best = j;
    s.photon_mode = best;
    s.psi[static_cast<Eigen::Index>(n + best)] = c.mu_c_ratio;
    s.mu_tot_sq = s.psi.squaredNorm();
    if (s.mu_tot_sq > 0.0) s.psi /= std::sqrt(s.mu_tot_sq);
    return s;
}

inline nmqsd::EvolutionConfig default_cavity_evolution() {
    nmqsd::EvolutionConfig cfg;
    cfg.dt = 0.02;
    cfg.t_max = 500.0;
    cfg.tail_tolerance = 1e-7;
    cfg.tail_window = 5.0;
    return cfg;
}

inline response::CorrelationTrace cavity_correlation(const HTCParams& p, const CavityParams& c,
                                                     double probe_kz,
                                                     const nmqsd::EvolutionConfig& cfg,
                                                     nmqsd::KernelSet* cache = nullptr) {
    const auto model = build_single_excitation_model(p, c);
    const auto probe = initial_probe_state(p, c, probe_kz);
    auto result = nmqsd::propagate_zero_noise(model, probe.psi, cfg, cache);
    result.trace.mu_tot_sq = probe.mu_tot_sq;
    result.trace.kz = probe_kz;
    return std::move(result.trace);
}

inline response::Spectrum cavity_susceptibility(const HTCParams& p, const CavityParams& c,
                                                double probe_kz, const std::vector<double>& omegas,
                                                double scale,
                                                const nmqsd::EvolutionConfig& cfg = default_cavity_evolution(),
                                                nmqsd::KernelSet* cache = nullptr) {
    return response::susceptibility(cavity_correlation(p, c, probe_kz, cfg, cache), omegas, scale);
}

enum class GridMode { probe_centered, span };

// Everything needed to set up the cavity model at one probe angle.
struct CavitySetup {
    HTCParams molecules{};
    CavityParams cavity{};
    std::size_t n_modes{21};
    GridMode grid{GridMode::probe_centered};
    double theta_max_deg{70.0};  // sets the kz spacing
    double z_offset_nm{0.0};
};

struct AngleModel {
    HTCParams molecules;
    CavityParams cavity;
    double probe_kz{0.0};
};

inline AngleModel model_for_angle(const CavitySetup& s, double theta_deg) {
    AngleModel m{s.molecules, s.cavity, angle_to_kz(s.cavity.e0, theta_deg)};
    const double dk = default_kz_spacing(s.cavity.e0, s.theta_max_deg, s.n_modes);
    m.cavity.kz_grid = s.grid == GridMode::span ? span_kz_grid(s.cavity.e0, s.theta_max_deg, s.n_modes)
                                                : centered_kz_grid(m.probe_kz, dk, s.n_modes);
    if (m.molecules.positions.size() != m.molecules.n_mol) {
        m.molecules.positions = equally_spaced_positions(m.molecules.n_mol, dk);
        for (auto& z : m.molecules.positions) z += s.z_offset_nm;
    }
    return m;
}

// Layer sequence behind the effective (mirror + film) layer.
struct CavityStackConfig {
    double effective_thickness_nm{105.0};
    cplx n_bg{std::sqrt(cplx(1.5, 0.015))};
    double mirror_thickness_nm{100.0};
    std::string mirror_material{"aluminium"};    // packaged name or CSV path
    std::string substrate_material{"quartz"};
    bool include_lif{false};
    double lif_thickness_nm{1.0};
};

struct CavityMaterials {
    materials::IndexTable mirror;
    materials::IndexTable substrate;
    std::optional<materials::IndexTable> lif;
};

inline CavityMaterials load_cavity_materials(const CavityStackConfig& cfg) {
    CavityMaterials m{materials::resolve(cfg.mirror_material), materials::resolve(cfg.substrate_material),
                      std::nullopt};
    if (cfg.include_lif) m.lif = materials::builtin("lif");
    return m;
}

// vacuum / effective layer n = sqrt(n_bg^2 + chi) / [LiF] / mirror / substrate
inline tmm::Stack cavity_stack(const response::Spectrum& chi, const CavityStackConfig& cfg,
                               const CavityMaterials& mats) {
    const auto n = response::refractive_index(response::dielectric(chi, cfg.n_bg));
    tmm::Stack s;
    s.layers.push_back(tmm::Layer::film(cfg.effective_thickness_nm, materials::from_spectrum(n, "cavity")));
    if (cfg.include_lif && mats.lif) s.layers.push_back(tmm::Layer::film(cfg.lif_thickness_nm, *mats.lif));
    s.layers.push_back(tmm::Layer::film(cfg.mirror_thickness_nm, mats.mirror));
    s.substrate = tmm::Layer::semi_infinite(mats.substrate);
    return s;
}

// 2x2 coupled-oscillator polariton energies at the probe wavevector.
inline std::pair<double, double> coupled_oscillator(double eps_s, double omega_c, double rabi) {
    const double half = 0.5 * std::sqrt(rabi * rabi + (omega_c - eps_s) * (omega_c - eps_s));
    const double mid = 0.5 * (omega_c + eps_s);
    return {mid - half, mid + half};
}

} // namespace polaroptics::htc
