// uncertainty.hpp - Monte Carlo propagation of input deviations to
// reflectivity maps and polariton peak positions

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "polaroptics/errors.hpp"
#include "polaroptics/fit.hpp"
#include "polaroptics/parallel.hpp"
#include "polaroptics/tmm.hpp"

namespace polaroptics::uncertainty {

using cplx = std::complex<double>;

struct McDeviations {
    double sigma_E{1e-6};          // eV
    double sigma_theta{1e-3};      // degrees
    double sigma_d_nm{1.0};        // thickness of the perturbed layer
    double sigma_n_amp{1e-2};      // index noise amplitude at omega0
    std::optional<double> omega0;  // defaults to the lowest grid energy
    std::size_t n_samples{200};
    std::uint64_t seed{0};
};

inline void validate(const McDeviations& d) {
    if (!(d.sigma_E >= 0.0 && d.sigma_theta >= 0.0 && d.sigma_d_nm >= 0.0 && d.sigma_n_amp >= 0.0))
        throw DomainError("deviations must be >= 0");
    if (d.n_samples < 2) throw DomainError("need at least two Monte Carlo samples");
}

// sigma_n(E) = amp * exp(-(E - omega0) / 2)
inline double index_sigma(const McDeviations& d, double energy, double omega0) {
    return d.sigma_n_amp * std::exp(-(energy - omega0) / 2.0);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for one sample, fixed by (seed, sample index) only.
inline std::mt19937_64 sample_stream(std::uint64_t seed, std::size_t sample) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(sample)));
}

// Mergeable running mean / variance.
struct Welford {
    std::size_t n{0};
    double mean{0.0};
    double m2{0.0};

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double nt = static_cast<double>(n + o.n);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / nt;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / nt;
        n += o.n;
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
};

struct McSetup {
    std::function<tmm::Stack(double)> stack_for;  // stack per angle
    std::size_t perturbed_layer{0};               // index into Stack::layers
    tmm::Polarization pol{tmm::Polarization::s};
};

struct McResult {
    std::vector<double> energies;
    std::vector<double> thetas;
    Eigen::MatrixXd base;  // unperturbed R
    Eigen::MatrixXd mean;
    Eigen::MatrixXd std;
    std::vector<Eigen::MatrixXd> samples;  // kept when requested
};

// Each sample first draws its device deviations: thickness of the perturbed
// layer, then the real and imaginary index offsets, applied as
// sigma_n(E) * (dRe + i dIm) across the whole grid so a sampled curve stays
// smooth. Then per grid point, in order: dE, dtheta. All are standard normal
// draws from the sample's own stream; results do not depend on `workers`.
inline McResult mc_reflectivity(const McSetup& setup, const std::vector<double>& energies,
                                const std::vector<double>& thetas, const McDeviations& dev,
                                std::size_t workers = 1, bool keep_samples = false) {
    validate(dev);
    if (energies.empty() || thetas.empty()) throw DomainError("empty Monte Carlo grid");
    const auto ne = static_cast<Eigen::Index>(energies.size());
    const auto nt = static_cast<Eigen::Index>(thetas.size());
    const double omega0 = dev.omega0 ? *dev.omega0 : *std::min_element(energies.begin(), energies.end());

    // indices and thicknesses per angle, fixed across samples
    std::vector<std::vector<std::vector<cplx>>> idx(thetas.size());
    std::vector<std::vector<double>> thick(thetas.size());
    McResult out{energies, thetas, Eigen::MatrixXd(ne, nt), Eigen::MatrixXd(ne, nt), Eigen::MatrixXd(ne, nt), {}};
    for (std::size_t j = 0; j < thetas.size(); ++j) {
        const auto stack = setup.stack_for(thetas[j]);
        tmm::validate(stack);
        if (setup.perturbed_layer >= stack.layers.size())
            throw DomainError("perturbed layer index out of range");
        thick[j] = tmm::thicknesses(stack);
        for (std::size_t i = 0; i < energies.size(); ++i) {
            idx[j].push_back(tmm::indices_at(stack, energies[i]));
            out.base(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                tmm::reflect_transmit_indices(idx[j].back(), thick[j], energies[i], thetas[j], setup.pol).R;
        }
    }

    std::vector<Eigen::MatrixXd> maps(dev.n_samples, Eigen::MatrixXd(ne, nt));
    const std::size_t layer = setup.perturbed_layer + 1;  // position in the index vector
    parallel_for(dev.n_samples, workers, [&](std::size_t s) {
        auto rng = sample_stream(dev.seed, s);
        std::normal_distribution<double> normal(0.0, 1.0);
        auto& map = maps[s];
        const double dd = normal(rng), dnr = normal(rng), dni = normal(rng);
        for (std::size_t j = 0; j < thetas.size(); ++j) {
            auto d = thick[j];
            d[setup.perturbed_layer] += dev.sigma_d_nm * dd;
            if (!(d[setup.perturbed_layer] > 0.0)) throw DomainError("thickness deviation made a layer vanish");
            for (std::size_t i = 0; i < energies.size(); ++i) {
                const double de = normal(rng), dth = normal(rng);
                auto n = idx[j][i];
                const double sn = index_sigma(dev, energies[i], omega0);
                n[layer] += cplx(sn * dnr, sn * dni);
                const double e = energies[i] + dev.sigma_E * de;
                // R is even in the angle, so jitter through normal incidence folds back
                const double th = std::abs(thetas[j] + dev.sigma_theta * dth);
                map(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    tmm::reflect_transmit_indices(n, d, e, th, setup.pol).R;
            }
        }
    });

    // reduction in sample order
    for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < nt; ++j) {
            Welford w;
            for (const auto& m : maps) w.add(m(i, j));
            out.mean(i, j) = w.mean;
            out.std(i, j) = w.stddev();
        }
    if (keep_samples) out.samples = std::move(maps);
    return out;
}

struct PeakError {
    double theta{0.0};
    double base_lp{std::numeric_limits<double>::quiet_NaN()};
    double base_up{std::numeric_limits<double>::quiet_NaN()};
    double mean_lp{std::numeric_limits<double>::quiet_NaN()};
    double mean_up{std::numeric_limits<double>::quiet_NaN()};
    double var_lp{0.0};
    double var_up{0.0};
    double delta{0.0};  // shared error bar sqrt((var_lp + var_up) / 2)
    double lost_fraction{0.0};
    bool flagged{false};
};

inline constexpr double lost_fraction_limit = 0.2;

// Re-finds the LP/UP minima in every sample column. Needs samples kept.
inline std::vector<PeakError> peak_location_error(const McResult& mc, double min_depth = 1e-4) {
    if (mc.samples.empty()) throw DomainError("peak errors need the per-sample maps");
    std::vector<PeakError> out;
    const auto column = [&](const Eigen::MatrixXd& m, std::size_t j) {
        std::vector<double> c(mc.energies.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            c[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return c;
    };
    for (std::size_t j = 0; j < mc.thetas.size(); ++j) {
        PeakError pe;
        pe.theta = mc.thetas[j];
        if (auto p = fit::polariton_pair(fit::find_minima(mc.energies, column(mc.base, j), min_depth))) {
            pe.base_lp = p->first.position;
            pe.base_up = p->second.position;
        }
        Welford lp, up;
        std::size_t lost = 0;
        for (const auto& m : mc.samples) {
            auto p = fit::polariton_pair(fit::find_minima(mc.energies, column(m, j), min_depth));
            if (!p) {
                ++lost;
                continue;
            }
            lp.add(p->first.position);
            up.add(p->second.position);
        }
        pe.lost_fraction = static_cast<double>(lost) / static_cast<double>(mc.samples.size());
        pe.flagged = pe.lost_fraction > lost_fraction_limit || std::isnan(pe.base_lp);
        if (lp.n > 0) {
            pe.mean_lp = lp.mean;
            pe.mean_up = up.mean;
            pe.var_lp = lp.variance();
            pe.var_up = up.variance();
            pe.delta = std::sqrt(0.5 * (pe.var_lp + pe.var_up));
        }
        out.push_back(pe);
    }
    return out;
}

} // namespace polaroptics::uncertainty
