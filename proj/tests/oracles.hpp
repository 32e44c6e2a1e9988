// oracles.hpp - Independent reference computations used only by the tests.
// Nothing here calls into the library's numerical routines.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// alpha_0(t) = a xi^2 u! / (1 + i xi t)^(u+1) for J = a w^u / xi^(u-1) e^(-w/xi)
inline cplx bcf_closed_form(double a, int u, double xi, double t) {
    double fact = 1.0;
    for (int k = 2; k <= u; ++k) fact *= k;
    return a * xi * xi * fact / std::pow(cplx(1.0, xi * t), u + 1);
}

// Adaptive Simpson on a real function (recursive, no shared code with the library).
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 40) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double l, double r, double fl, double fm, double fr, double whole, double eps, int d) {
            const double m = 0.5 * (l + r);
            const double lm = 0.5 * (l + m), rm = 0.5 * (m + r);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - l) / 6.0 * (fl + 4.0 * flm + fm);
            const double right = (r - m) / 6.0 * (fm + 4.0 * frm + fr);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
                return left + right + (left + right - whole) / 15.0;
            return rec(l, m, fl, flm, fm, left, 0.5 * eps, d - 1) +
                   rec(m, r, fm, frm, fr, right, 0.5 * eps, d - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Fixed high-order composite Simpson (2n intervals), used where many
// evaluations make recursion expensive.
inline double simpson_fixed(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / (2.0 * n);
    double s = f(a) + f(b);
    for (int k = 1; k < 2 * n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

// Characteristic (Abeles) matrix reflectance for a planar stack. n includes
// ambient and substrate; d holds inner thicknesses in nm.
struct Abeles {
    cplx r, t;
    double R, T;
};

inline Abeles abeles(const std::vector<cplx>& n, const std::vector<double>& d, double lambda_nm,
                     double theta_rad, bool s_pol) {
    const cplx s0 = n[0] * std::sin(theta_rad);
    std::vector<cplx> cs, q;
    for (auto ni : n) {
        cplx c = std::sqrt(1.0 - (s0 / ni) * (s0 / ni));
        if ((ni * c).imag() < 0.0 || ((ni * c).imag() == 0.0 && (ni * c).real() < 0.0)) c = -c;
        cs.push_back(c);
        q.push_back(s_pol ? ni * c : ni / c);
    }
    const double k0 = 2.0 * pi / lambda_nm;
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (std::size_t j = 1; j + 1 < n.size(); ++j) {
        const cplx delta = k0 * n[j] * cs[j] * d[j - 1];
        Eigen::Matrix2cd mj;
        mj << std::cos(delta), -cplx(0, 1) * std::sin(delta) / q[j], -cplx(0, 1) * q[j] * std::sin(delta),
            std::cos(delta);
        m = m * mj;
    }
    const cplx q0 = q.front(), qs = q.back();
    const cplx b = m(0, 0) + m(0, 1) * qs, c = m(1, 0) + m(1, 1) * qs;
    Abeles out;
    out.r = (q0 * b - c) / (q0 * b + c);
    out.t = 2.0 * q0 / (q0 * b + c);
    out.R = std::norm(out.r);
    out.T = qs.real() / q0.real() * std::norm(out.t);
    return out;
}

// Im of the Voigt susceptibility: Lorentzian (half width g/2, height 2/g at
// the centre) convolved with a normalized Gaussian of std sigma, by direct
// quadrature over the Gaussian variable.
inline double voigt_im_chi(double omega, double eps, double sigma, double gamma) {
    auto integrand = [&](double z) {
        const double gauss = std::exp(-0.5 * z * z / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
        const double x = omega - eps - z;
        const double lor = 0.5 * gamma / (x * x + 0.25 * gamma * gamma);
        return gauss * lor;
    };
    // the Lorentzian is very narrow; integrate with breakpoints around it
    const double c = omega - eps;
    const double w = std::max(50.0 * gamma, 1e-6);
    const double lo = -12.0 * sigma, hi = 12.0 * sigma;
    double s = 0.0;
    auto piece = [&](double a, double b) {
        if (b > a) s += simpson(integrand, a, b, 1e-13);
    };
    const double l1 = std::clamp(c - w, lo, hi), r1 = std::clamp(c + w, lo, hi);
    piece(lo, l1);
    piece(l1, r1);
    piece(r1, hi);
    return s;
}

// exp(-i H t) v for a small Hermitian H by eigendecomposition.
inline Eigen::VectorXcd evolve(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& v, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    Eigen::VectorXcd c = eig.eigenvectors().adjoint() * v;
    for (Eigen::Index a = 0; a < c.size(); ++a) c[a] *= std::polar(1.0, -eig.eigenvalues()[a] * t);
    return eig.eigenvectors() * c;
}

// Monte Carlo estimate of E[exp(-i zeta t)], zeta ~ N(0, sigma^2).
inline std::pair<cplx, double> disorder_average(double sigma, double t, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    cplx sum{0.0, 0.0};
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx v = std::polar(1.0, -normal(rng) * t);
        sum += v;
        sum_sq += std::norm(v);
    }
    const cplx mean = sum / static_cast<double>(n);
    const double var = (sum_sq / static_cast<double>(n) - std::norm(mean)) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var)};
}

} // namespace oracle
