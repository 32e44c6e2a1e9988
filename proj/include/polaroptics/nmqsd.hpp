// nmqsd.hpp - Zero-noise NMQSD propagation with the first-level closure of
// the functional derivative, for finite single-excitation models

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "polaroptics/bath.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/response.hpp"

namespace polaroptics::nmqsd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// L_m = sum_{r in support} |r><r| coupled to its own bath.
struct BathCoupling {
    std::vector<std::size_t> support;
    bath::BathParams bath;
};

struct LinearOQSModel {
    Matrix h_s;
    Eigen::VectorXd damping;  // decay rates; enter the drift as -rate/2
    std::vector<BathCoupling> couplings;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(h_s.rows()); }
};

inline void validate(const LinearOQSModel& m) {
    if (m.h_s.rows() == 0 || m.h_s.rows() != m.h_s.cols())
        throw DomainError("system Hamiltonian must be a non-empty square matrix");
    if (!m.h_s.allFinite()) throw DomainError("system Hamiltonian has non-finite entries");
    const double herm = (m.h_s - m.h_s.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-12 * std::max(1.0, m.h_s.cwiseAbs().maxCoeff())) {
        std::ostringstream msg;
        msg << "system Hamiltonian is not Hermitian (max |H - H^+| = " << herm << ")";
        throw DomainError(msg.str());
    }
    if (m.damping.size() != m.h_s.rows()) throw DomainError("damping vector size mismatch");
    for (Eigen::Index i = 0; i < m.damping.size(); ++i)
        if (!(m.damping[i] >= 0.0) || !std::isfinite(m.damping[i]))
            throw DomainError("damping rates must be finite and >= 0");
    for (const auto& c : m.couplings) {
        if (c.support.empty()) throw DomainError("coupling projector has empty support");
        auto s = c.support;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw DomainError("coupling projector support has repeated states");
        if (s.back() >= m.dim()) throw DomainError("coupling projector support out of range");
        bath::validate(c.bath);
    }
}

// Dense projector matrix of a coupling (tests and diagnostics).
inline Matrix projector(const BathCoupling& c, std::size_t dim) {
    Matrix l = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (auto r : c.support) l(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)) = 1.0;
    return l;
}

struct EvolutionConfig {
    double dt{0.005};
    double t_max{400.0};
    double tail_tolerance{1e-8};
    // stop once |<psi0|psi_t>| stays below tail_tolerance for this long
    double tail_window{5.0};
    // propagate in a frame rotating at this energy; defaults to the mean eigenvalue
    std::optional<double> frame_energy{};
    // 0 disables state history
    std::size_t history_stride{0};
};

inline void validate(const EvolutionConfig& c) {
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw DomainError("dt must be > 0");
    if (!(c.t_max >= c.dt)) throw DomainError("t_max must be >= dt");
    if (!(c.tail_tolerance >= 0.0)) throw DomainError("tail tolerance must be >= 0");
    if (!(c.tail_window >= 0.0)) throw DomainError("tail window must be >= 0");
}

// Cache of BCF tables keyed by (bath, step). Published tables are immutable
// and may be shared between concurrent propagations; a longer request
// publishes an extended copy, whose leading entries are identical.
class KernelSet {
public:
    std::shared_ptr<const bath::BathKernel> get(const bath::BathParams& p, double step,
                                                std::size_t n_points) {
        const Key key{p.a, p.u, p.xi, p.beta.is_zero_temperature() ? 0.0 : p.beta.value(), step};
        std::lock_guard lock(mutex_);
        auto it = tables_.find(key);
        if (it != tables_.end() && it->second->size() >= n_points) return it->second;
        auto table = std::make_shared<bath::BathKernel>(
            it != tables_.end() ? *it->second : bath::BathKernel{step, {}, p});
        const std::size_t b = bath::bcf_block_points;
        bath::extend_bcf(*table, (n_points + b - 1) / b * b);
        tables_[key] = table;
        return table;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return tables_.size();
    }

private:
    using Key = std::tuple<double, int, double, double, double>;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const bath::BathKernel>> tables_;
};

struct PropagationResult {
    response::CorrelationTrace trace;
    std::vector<double> history_times;
    std::vector<Vector> history;  // lab-frame states
    std::size_t steps{0};
};

namespace detail {

// One (r, s) entry of a coupling: memory term contribution
// out_r -= sum_b K_{rs,b}(t) V_sb phi_b, with
// K_{rs,b}(t) = int_0^t alpha(tau) U_rs(tau) exp(i E_b tau) dtau and
// U_rs(tau) = sum_a V_ra conj(V_sa) exp(-i E_a tau).
struct PairKernel {
    std::size_t r{0}, s{0};
    std::size_t coupling{0};
    Vector c;  // c_a = V_ra conj(V_sa)
    Vector k;  // K_{rs,b}
};

class Engine {
public:
    Engine(const LinearOQSModel& model, double frame, std::vector<const bath::BathKernel*> kernels)
        : model_(model), kernels_(std::move(kernels)), frame_(frame) {
        const auto d = static_cast<Eigen::Index>(model.dim());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(model.h_s);
        if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of H_S failed");
        energies_ = eig.eigenvalues().array() - frame;
        v_ = eig.eigenvectors();
        generator_ = -cplx(0.0, 1.0) * model.h_s;
        for (Eigen::Index i = 0; i < d; ++i) {
            generator_(i, i) += cplx(frame, 0.0) * cplx(0.0, 1.0) - 0.5 * model.damping[i];
        }
        for (std::size_t m = 0; m < model.couplings.size(); ++m) {
            for (auto r : model.couplings[m].support) {
                for (auto s : model.couplings[m].support) {
                    PairKernel p;
                    p.r = r;
                    p.s = s;
                    p.coupling = m;
                    p.c = v_.row(static_cast<Eigen::Index>(r)).transpose().cwiseProduct(
                        v_.row(static_cast<Eigen::Index>(s)).adjoint());
                    p.k = Vector::Zero(d);
                    pairs_.push_back(std::move(p));
                }
            }
        }
    }

    // f(tau) = alpha(tau) U_rs(tau) exp(i E_b tau), added with weight w.
    void accumulate(std::size_t node, double tau, double w) {
        if (pairs_.empty()) return;
        const auto d = energies_.size();
        Vector ea(d), eb(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            ea[a] = std::polar(1.0, -energies_[a] * tau);
            eb[a] = std::conj(ea[a]);
        }
        for (auto& p : pairs_) {
            const cplx alpha = kernels_[p.coupling]->values[node];
            const cplx u = p.c.cwiseProduct(ea).sum();
            p.k.noalias() += (w * alpha * u) * eb;
        }
    }

    void drift(const Vector& psi, Vector& out) const {
        out.noalias() = generator_ * psi;
        if (pairs_.empty()) return;
        const Vector phi = v_.adjoint() * psi;
        for (const auto& p : pairs_) {
            const auto s = static_cast<Eigen::Index>(p.s);
            cplx acc{0.0, 0.0};
            for (Eigen::Index b = 0; b < phi.size(); ++b) acc += p.k[b] * v_(s, b) * phi[b];
            out[static_cast<Eigen::Index>(p.r)] -= acc;
        }
    }

    double frame() const noexcept { return frame_; }
    void set_kernels(std::vector<const bath::BathKernel*> kernels) { kernels_ = std::move(kernels); }

private:
    const LinearOQSModel& model_;
    std::vector<const bath::BathKernel*> kernels_;
    double frame_;
    Eigen::VectorXd energies_;
    Matrix v_;
    Matrix generator_;
    std::vector<PairKernel> pairs_;
};

} // namespace detail

// Solves d psi/dt = [-i H_S - Gamma/2 - sum_m L_m W_m(t)] psi from psi0 with
// fixed-step RK4 and records <psi0|psi_t>. psi0 is normalized first and its
// squared norm stored as mu_tot_sq. The memory integrals are advanced with
// Simpson's rule on quarter steps, so the BCF is tabulated at dt/4.
inline PropagationResult propagate_zero_noise(const LinearOQSModel& model, const Vector& psi0,
                                              const EvolutionConfig& config,
                                              KernelSet* cache = nullptr) {
    validate(model);
    validate(config);
    if (static_cast<std::size_t>(psi0.size()) != model.dim())
        throw DomainError("initial state dimension does not match the model");
    const double norm = psi0.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError("initial state must be non-zero");

    const double dt = config.dt;
    const auto n_steps = static_cast<std::size_t>(std::ceil(config.t_max / dt - 1e-9));
    const double quarter = 0.25 * dt;
    const std::size_t n_nodes = 4 * n_steps + 1;

    // BCF tables are fetched as the run advances, so an early stop on a
    // decayed tail never pays for the unused part
    KernelSet local;
    KernelSet& set = cache ? *cache : local;
    std::vector<std::shared_ptr<const bath::BathKernel>> owned(model.couplings.size());
    std::size_t available = 0;
    auto fetch = [&](std::size_t needed) {
        std::vector<const bath::BathKernel*> kernels;
        available = n_nodes;
        for (std::size_t m = 0; m < model.couplings.size(); ++m) {
            owned[m] = set.get(model.couplings[m].bath, quarter, needed);
            kernels.push_back(owned[m].get());
            available = std::min(available, owned[m]->size());
        }
        return kernels;
    };
    auto kernels = fetch(std::min(n_nodes, bath::bcf_block_points));

    double frame = 0.0;
    if (config.frame_energy) {
        frame = *config.frame_energy;
    } else {
        frame = model.h_s.diagonal().real().mean();  // trace / dim = mean eigenvalue
    }
    detail::Engine engine(model, frame, kernels);

    const Vector start = psi0 / norm;
    Vector psi = start;
    Vector k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()), tmp(psi.size());

    PropagationResult result;
    result.trace.dt = dt;
    result.trace.mu_tot_sq = norm * norm;
    result.trace.values.reserve(n_steps + 1);
    result.trace.values.push_back(start.dot(psi));  // conj(start) . psi
    auto record_history = [&](std::size_t step) {
        if (config.history_stride == 0 || step % config.history_stride != 0) return;
        const double t = static_cast<double>(step) * dt;
        result.history_times.push_back(t);
        result.history.push_back(psi * std::polar(1.0, -frame * t));
    };
    record_history(0);

    const std::size_t window_steps =
        static_cast<std::size_t>(std::ceil(config.tail_window / dt - 1e-9));
    std::size_t below = 0;
    bool decayed = false;
    const double h3 = quarter / 3.0;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const std::size_t base = 4 * n;
        if (base + 4 >= available && available < n_nodes)
            engine.set_kernels(fetch(std::min(n_nodes, base + 5 + bath::bcf_block_points)));
        const double t0 = static_cast<double>(n) * dt;
        engine.drift(psi, k1);
        // K(t + dt/2) = K(t) + h/3 (f0 + 4 f1 + f2)
        engine.accumulate(base, t0, h3);
        engine.accumulate(base + 1, t0 + quarter, 4.0 * h3);
        engine.accumulate(base + 2, t0 + 2.0 * quarter, h3);
        tmp = psi + (0.5 * dt) * k1;
        engine.drift(tmp, k2);
        tmp = psi + (0.5 * dt) * k2;
        engine.drift(tmp, k3);
        // K(t + dt) = K(t + dt/2) + h/3 (f2 + 4 f3 + f4)
        engine.accumulate(base + 2, t0 + 2.0 * quarter, h3);
        engine.accumulate(base + 3, t0 + 3.0 * quarter, 4.0 * h3);
        engine.accumulate(base + 4, t0 + dt, h3);
        tmp = psi + dt * k3;
        engine.drift(tmp, k4);
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!psi.allFinite()) {
            std::ostringstream msg;
            msg << "state became non-finite at t = " << t0 + dt;
            throw NumericError(msg.str());
        }

        const double t = static_cast<double>(n + 1) * dt;
        const cplx overlap = start.dot(psi) * std::polar(1.0, -frame * t);
        result.trace.values.push_back(overlap);
        record_history(n + 1);
        result.steps = n + 1;
        if (config.tail_tolerance > 0.0 && std::abs(overlap) < config.tail_tolerance) {
            if (++below >= window_steps) {
                decayed = true;
                break;
            }
        } else {
            below = 0;
        }
    }
    result.trace.decayed = decayed || std::abs(result.trace.values.back()) < config.tail_tolerance;
    return result;
}

// Drift matrix -i H_S - Gamma/2 - sum_m L_m W_m(t) in the lab frame, built from
// per-frequency memory_kernel_table integrals of the pointwise BCF. Slow; meant
// as an independent route for checks and small models.
inline Matrix effective_drift(const LinearOQSModel& model, double t, double table_dt = 0.01) {
    validate(model);
    if (t < 0.0) throw DomainError("time must be >= 0");
    const auto d = static_cast<Eigen::Index>(model.dim());
    Matrix drift = -cplx(0.0, 1.0) * model.h_s;
    for (Eigen::Index i = 0; i < d; ++i) drift(i, i) -= 0.5 * model.damping[i];
    if (t == 0.0 || model.couplings.empty()) return drift;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(model.h_s);
    const Eigen::VectorXd e = eig.eigenvalues();
    const Matrix& v = eig.eigenvectors();
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / table_dt - 1e-9)));
    const double step = t / static_cast<double>(steps);
    for (const auto& c : model.couplings) {
        // BCF sampled once on the half-step grid used by the Simpson table
        std::vector<cplx> alpha(2 * steps + 1);
        for (std::size_t j = 0; j < alpha.size(); ++j)
            alpha[j] = bath::bcf(c.bath, 0.5 * step * static_cast<double>(j));
        auto lookup = [&alpha, step](double s) {
            const auto j = static_cast<std::size_t>(std::llround(2.0 * s / step));
            return alpha[std::min(j, alpha.size() - 1)];
        };
        const Matrix l = projector(c, model.dim());
        Matrix lt = v.adjoint() * l * v;
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                // G_ab(t) = int alpha exp(-i (E_a - E_b) tau)
                const auto g = bath::memory_kernel_table(lookup, e[b] - e[a], t, step);
                lt(a, b) *= g.back();
            }
        drift -= l * (v * lt * v.adjoint());
    }
    return drift;
}

} // namespace polaroptics::nmqsd
