#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polaroptics/holstein.hpp"
#include "polaroptics/response.hpp"

using namespace polaroptics;
using cplx = std::complex<double>;

namespace {

response::CorrelationTrace lorentz_trace(double eps, double gamma, double dt, double t_max) {
    response::CorrelationTrace tr;
    tr.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = dt * k;
        tr.values.push_back(std::exp(cplx(-0.5 * gamma * t, -eps * t)));
    }
    return tr;
}

std::vector<double> grid(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

} // namespace

TEST(Susceptibility, SingleLorentzian) {
    const double eps = 3.0, gamma = 0.2;
    const auto tr = lorentz_trace(eps, gamma, 0.005, 250.0);
    const auto omegas = grid(2.0, 4.0, 81);
    const auto chi = response::susceptibility(tr, omegas, 1.0);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const cplx exact = -1.0 / cplx(omegas[i] - eps, 0.5 * gamma);
        EXPECT_LT(std::abs(chi.values[i] - exact), 2e-4 * std::abs(exact)) << omegas[i];
    }
    // absorptive part peaks at eps with height 2 / gamma
    const auto at_peak = response::susceptibility(tr, {eps}, 1.0);
    EXPECT_NEAR(at_peak.values[0].imag(), 2.0 / gamma, 1e-3);
}

TEST(Susceptibility, ZeroTraceGivesZero) {
    response::CorrelationTrace tr;
    tr.dt = 0.1;
    tr.values.assign(100, cplx(0.0, 0.0));
    const auto chi = response::susceptibility(tr, grid(1.0, 2.0, 5), 3.0);
    for (const auto& v : chi.values) EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(Susceptibility, LinearInScale) {
    const auto tr = lorentz_trace(3.0, 0.3, 0.01, 150.0);
    const auto om = grid(2.5, 3.5, 11);
    const auto a = response::susceptibility(tr, om, 1.0);
    const auto b = response::susceptibility(tr, om, 2.0);
    for (std::size_t i = 0; i < om.size(); ++i) EXPECT_LT(std::abs(b.values[i] - 2.0 * a.values[i]), 1e-12);
}

TEST(Susceptibility, UndecayedTailThrows) {
    const auto tr = lorentz_trace(3.0, 0.01, 0.01, 10.0);
    try {
        response::susceptibility(tr, {3.0}, 1.0);
        FAIL() << "expected truncation error";
    } catch (const TruncationError& e) {
        EXPECT_GT(e.tail(), 0.9);
    }
}

TEST(Susceptibility, RejectsUnsortedGrid) {
    const auto tr = lorentz_trace(3.0, 0.3, 0.01, 150.0);
    EXPECT_THROW(response::susceptibility(tr, {3.0, 2.0}, 1.0), DomainError);
}

TEST(Susceptibility, ConvergedInTimeStepOnThinFilmTrace) {
    const holstein::ThinFilmParams p;
    const auto om = grid(3.0, 4.5, 61);
    const double tmax = holstein::default_t_max(p);
    const auto coarse = response::susceptibility(holstein::dipole_correlation_thin_film(p, 0.01, tmax), om, 1.0);
    const auto fine = response::susceptibility(holstein::dipole_correlation_thin_film(p, 0.005, tmax), om, 1.0);
    double peak = 0.0;
    for (const auto& v : fine.values) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < om.size(); ++i)
        EXPECT_LT(std::abs(coarse.values[i] - fine.values[i]), 1e-4 * peak);
}

TEST(Dielectric, AddsBackground) {
    response::Spectrum chi{{1.0, 2.0, 3.0}, {cplx(0, 0), cplx(0, 0), cplx(0.2, 0.1)},
                           response::SpectrumRole::susceptibility, {}};
    const auto e1 = response::dielectric(chi, 1.0);
    EXPECT_EQ(e1.values[0], cplx(1.0, 0.0));
    EXPECT_LT(std::abs(e1.values[2] - cplx(1.2, 0.1)), 1e-15);
    const auto e2 = response::dielectric(chi, std::sqrt(cplx(1.5, 0.015)));
    EXPECT_LT(std::abs(e2.values[0] - cplx(1.5, 0.015)), 1e-15);
    EXPECT_EQ(e2.role, response::SpectrumRole::dielectric);
    EXPECT_THROW(response::dielectric(e2, 1.0), DomainError);
}

TEST(RefractiveIndex, Branches) {
    response::Spectrum eps{{1.0, 2.0, 3.0, 4.0},
                           {cplx(4.0, 0.0), cplx(-1.0, 0.0), cplx(1.5, 0.015), cplx(-1.0, -0.0)},
                           response::SpectrumRole::dielectric, {}};
    const auto n = response::refractive_index(eps);
    EXPECT_LT(std::abs(n.values[0] - cplx(2.0, 0.0)), 1e-15);
    EXPECT_LT(std::abs(n.values[1] - cplx(0.0, 1.0)), 1e-15);
    EXPECT_NEAR(n.values[2].real(), 1.22476018, 1e-8);
    EXPECT_NEAR(n.values[2].imag(), 0.00612365, 1e-8);
    EXPECT_LT(std::abs(n.values[3] - cplx(0.0, 1.0)), 1e-15);
    EXPECT_TRUE(n.gain_indices.empty());
}

TEST(RefractiveIndex, GainFlagged) {
    response::Spectrum eps{{1.0, 2.0}, {cplx(2.0, -0.5), cplx(2.0, 0.5)}, response::SpectrumRole::dielectric, {}};
    const auto n = response::refractive_index(eps);
    ASSERT_EQ(n.gain_indices.size(), 1u);
    EXPECT_EQ(n.gain_indices[0], 0u);
    EXPECT_GT(n.values[0].real(), 0.0);
    EXPECT_GE(n.values[1].imag(), 0.0);
}

TEST(RefractiveIndex, RoundTripAndBranchInvariant) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0), up(0.0, 2.0);
    response::Spectrum chi;
    for (int i = 0; i < 500; ++i) {
        chi.omegas.push_back(1.0 + 0.01 * i);
        chi.values.emplace_back(u(rng), up(rng));
    }
    const cplx nbg = std::sqrt(cplx(1.5, 0.015));
    const auto n = response::refractive_index(response::dielectric(chi, nbg));
    for (std::size_t i = 0; i < chi.values.size(); ++i) {
        EXPECT_GE(n.values[i].imag(), 0.0);
        EXPECT_LT(std::abs(n.values[i] * n.values[i] - nbg * nbg - chi.values[i]), 1e-12);
    }
}
