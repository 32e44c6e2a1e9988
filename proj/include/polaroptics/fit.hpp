// fit.hpp - Bounded Nelder-Mead, chi-squared objectives, reflectivity minima
// and the thin-film / cavity fits

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polaroptics/csv.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/holstein.hpp"
#include "polaroptics/htc.hpp"
#include "polaroptics/nmqsd.hpp"
#include "polaroptics/parallel.hpp"
#include "polaroptics/tmm.hpp"

namespace polaroptics::fit {

// ---------------------------------------------------------------- optimizer

struct NelderMeadOptions {
    std::size_t max_evaluations{2000};
    double tolerance{1e-6};      // simplex diameter in scaled [0, 1] coordinates
    double initial_step{0.05};   // fraction of each bound range
};

struct NelderMeadResult {
    std::vector<double> x;
    double value{0.0};
    std::size_t evaluations{0};
    std::size_t iterations{0};
    bool converged{false};
    std::vector<double> history;  // best value after each iteration
};

namespace detail {

// Folds u back into [0, 1] by reflection at the bounds.
inline double reflect_unit(double u) {
    if (!std::isfinite(u)) return 0.5;
    for (int k = 0; k < 8 && (u < 0.0 || u > 1.0); ++k) u = u < 0.0 ? -u : 2.0 - u;
    return std::clamp(u, 0.0, 1.0);
}

} // namespace detail

// Minimizes f over the box [lower, upper]. Works in coordinates scaled to the
// unit box; trial points outside are reflected back in.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0, const std::vector<double>& lower,
                                    const std::vector<double>& upper,
                                    const NelderMeadOptions& opt = {}) {
    const std::size_t n = x0.size();
    if (n == 0 || lower.size() != n || upper.size() != n) throw DomainError("Nelder-Mead: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i]))
            throw DomainError("Nelder-Mead: bounds must be finite and ordered");
        if (x0[i] < lower[i] || x0[i] > upper[i]) throw DomainError("Nelder-Mead: start outside bounds");
    }
    using Point = std::vector<double>;
    auto to_x = [&](const Point& u) {
        Point x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = lower[i] + u[i] * (upper[i] - lower[i]);
        return x;
    };
    NelderMeadResult res;
    auto eval = [&](const Point& u) {
        ++res.evaluations;
        const double v = f(to_x(u));
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<Point> simplex(n + 1, Point(n));
    for (std::size_t i = 0; i < n; ++i) simplex[0][i] = (x0[i] - lower[i]) / (upper[i] - lower[i]);
    for (std::size_t k = 1; k <= n; ++k) {
        simplex[k] = simplex[0];
        double& u = simplex[k][k - 1];
        u = u + opt.initial_step <= 1.0 ? u + opt.initial_step : u - opt.initial_step;
    }
    std::vector<double> fv(n + 1);
    for (std::size_t k = 0; k <= n; ++k) fv[k] = eval(simplex[k]);

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        std::vector<Point> s2;
        std::vector<double> f2;
        for (auto k : order) {
            s2.push_back(simplex[k]);
            f2.push_back(fv[k]);
        }
        simplex.swap(s2);
        fv.swap(f2);
    };
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t k = 1; k <= n; ++k)
            for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[k][i] - simplex[0][i]));
        return d;
    };
    auto along = [&](const Point& c, const Point& w, double t) {
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = detail::reflect_unit(c[i] + t * (w[i] - c[i]));
        return p;
    };

    sort_simplex();
    while (true) {
        if (diameter() < opt.tolerance) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evaluations) break;
        ++res.iterations;
        Point centroid(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
        const Point& worst = simplex[n];
        const Point xr = along(centroid, worst, -1.0);
        const double fr = eval(xr);
        if (fr < fv[0]) {
            const Point xe = along(centroid, worst, -2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            const bool outside = fr < fv[n];
            const Point xc = outside ? along(centroid, worst, -0.5) : along(centroid, worst, 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fv[n])) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[k][i] = simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]);
                    fv[k] = eval(simplex[k]);
                }
            }
        }
        sort_simplex();
        if (!res.history.empty() && fv[0] > res.history.back())
            throw NumericError("Nelder-Mead best value increased between iterations");
        res.history.push_back(fv[0]);
    }
    res.x = to_x(simplex[0]);
    res.value = fv[0];
    return res;
}

// ---------------------------------------------------------------- chi-squared

// sum (model - data)^2 / max(var, floor); unit variances when `variances` is empty.
inline double chi_squared(const std::vector<double>& model, const std::vector<double>& data,
                          const std::vector<double>& variances = {}, double floor = 1e-300) {
    if (model.size() != data.size()) throw DomainError("chi-squared: curves differ in length");
    if (!variances.empty() && variances.size() != data.size())
        throw DomainError("chi-squared: variance vector length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const double r = model[k] - data[k];
        s += r * r / (variances.empty() ? 1.0 : std::max(variances[k], floor));
    }
    return s;
}

// Linear interpolation of (mx, my) onto xs; xs must lie within [mx.front(), mx.back()].
inline std::vector<double> interpolate(const std::vector<double>& mx, const std::vector<double>& my,
                                       const std::vector<double>& xs) {
    if (mx.size() != my.size() || mx.size() < 2) throw DomainError("interpolation needs >= 2 points");
    std::vector<double> out(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double x = xs[k];
        if (x < mx.front() || x > mx.back()) throw DomainError("data abscissa outside model grid");
        auto it = std::upper_bound(mx.begin(), mx.end(), x);
        std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - mx.begin()), 1, mx.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = (x - mx[lo]) / (mx[hi] - mx[lo]);
        out[k] = my[lo] + w * (my[hi] - my[lo]);
    }
    return out;
}

inline double chi_squared(const csv::Curve& model, const csv::Curve& data) {
    return chi_squared(interpolate(model.x, model.y, data.x), data.y);
}

// ---------------------------------------------------------------- minima

struct Minimum {
    double position{0.0};
    double value{0.0};
    double depth{0.0};  // prominence: lower of the two bounding maxima minus the minimum
    double width{0.0};  // full width at half depth
};

// Local minima by discrete differences, refined with a parabola through the
// three points around each. Minima with depth below min_depth are dropped.
inline std::vector<Minimum> find_minima(const std::vector<double>& x, const std::vector<double>& y,
                                        double min_depth = 0.0) {
    if (x.size() != y.size()) throw DomainError("find_minima: length mismatch");
    std::vector<Minimum> out;
    const std::size_t n = y.size();
    if (n < 3) return out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
        Minimum m;
        const double d1 = y[i - 1] - y[i], d2 = y[i + 1] - y[i];
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        // vertex of the parabola through the three samples
        const double denom = h0 * d2 + h1 * d1;
        const double shift = denom > 0.0 ? 0.5 * (h1 * h1 * d1 - h0 * h0 * d2) / denom : 0.0;
        const double curv = (d1 / h0 + d2 / h1) / (h0 + h1);
        m.position = x[i] + shift;
        m.value = y[i] - curv * shift * shift;
        // bounding maxima
        double left = y[i], right = y[i];
        std::size_t l = i, r = i;
        while (l > 0 && y[l - 1] >= y[l]) left = y[--l];
        while (r + 1 < n && y[r + 1] >= y[r]) right = y[++r];
        m.depth = std::min(left, right) - m.value;
        if (m.depth <= min_depth) continue;
        const double half = m.value + 0.5 * m.depth;
        auto crossing = [&](std::size_t from, int dir) {
            std::size_t k = from;
            while (true) {
                const std::size_t next = dir < 0 ? k - 1 : k + 1;
                if ((dir < 0 && k == 0) || (dir > 0 && k + 1 >= n)) return x[k];
                if (y[next] >= half) {
                    const double w = (half - y[k]) / (y[next] - y[k]);
                    return x[k] + w * (x[next] - x[k]);
                }
                k = next;
            }
        };
        m.width = crossing(i, +1) - crossing(i, -1);
        out.push_back(m);
    }
    return out;
}

// The two deepest minima ordered by position (lower, upper), if present.
inline std::optional<std::pair<Minimum, Minimum>> polariton_pair(const std::vector<Minimum>& mins) {
    if (mins.size() < 2) return std::nullopt;
    auto sorted = mins;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Minimum& a, const Minimum& b) { return a.depth > b.depth; });
    Minimum a = sorted[0], b = sorted[1];
    if (b.position < a.position) std::swap(a, b);
    return std::make_pair(a, b);
}

// ---------------------------------------------------------------- problems

struct FreeParameter {
    std::string name;
    double lower{0.0};
    double upper{1.0};
    double initial{0.5};
};

enum class Objective { pointwise_chi2, minima_chi2 };

struct FitProblem {
    std::vector<FreeParameter> free;
    std::map<std::string, double> fixed;
    Objective objective{Objective::pointwise_chi2};
    NelderMeadOptions options{};
};

inline void validate(const FitProblem& p) {
    if (p.free.empty()) throw DomainError("fit problem has no free parameters");
    for (const auto& f : p.free) {
        if (!(std::isfinite(f.lower) && std::isfinite(f.upper) && f.lower < f.upper))
            throw DomainError("bounds of '" + f.name + "' must be finite and ordered");
        if (f.initial < f.lower || f.initial > f.upper)
            throw DomainError("initial value of '" + f.name + "' outside its bounds");
        if (p.fixed.count(f.name)) throw DomainError("'" + f.name + "' is both free and fixed");
    }
}

struct ParameterEstimate {
    std::string name;
    double value{0.0};
    double uncertainty{0.0};
    bool at_bound{false};
};

struct FitReport {
    std::vector<ParameterEstimate> parameters;
    double chi2{0.0};
    std::size_t evaluations{0};
    std::size_t iterations{0};
    bool converged{false};
    bool non_identifiable{false};
    std::vector<double> history;
    std::vector<std::string> warnings;

    double value(const std::string& name) const {
        for (const auto& p : parameters)
            if (p.name == name) return p.value;
        throw DomainError("no fitted parameter '" + name + "'");
    }
};

namespace detail {

// Quadratic approximation at the optimum: Hessian of chi2 in scaled
// coordinates by central differences (stencil shifted inside the box).
inline void quadratic_uncertainties(const std::function<double(const std::vector<double>&)>& f,
                                    const FitProblem& prob, std::size_t n_data, FitReport& rep) {
    const std::size_t n = prob.free.size();
    std::vector<double> u(n), range(n);
    for (std::size_t i = 0; i < n; ++i) {
        range[i] = prob.free[i].upper - prob.free[i].lower;
        u[i] = (rep.parameters[i].value - prob.free[i].lower) / range[i];
    }
    const double h = 1e-3;
    auto at = [&](std::vector<double> uu) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = prob.free[i].lower + uu[i] * range[i];
        return f(x);
    };
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::clamp(u[i], h, 1.0 - h);
    const double f0 = at(c);
    Eigen::MatrixXd hess(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = c, m = c;
        p[i] += h;
        m[i] -= h;
        hess(i, i) = (at(p) - 2.0 * f0 + at(m)) / (h * h);
        for (std::size_t j = 0; j < i; ++j) {
            auto pp = c, pm = c, mp = c, mm = c;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            hess(i, j) = hess(j, i) = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const auto ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || ev.minCoeff() <= 1e-8 * top) {
        rep.non_identifiable = true;
        rep.warnings.push_back("near-singular curvature at the optimum: parameters not identifiable");
        for (auto& p : rep.parameters) p.uncertainty = std::numeric_limits<double>::infinity();
        return;
    }
    const double dof = static_cast<double>(n_data > n ? n_data - n : 1);
    const double s2 = rep.chi2 / dof;
    const Eigen::MatrixXd cov = 2.0 * s2 * hess.inverse();
    for (std::size_t i = 0; i < n; ++i)
        rep.parameters[i].uncertainty = std::sqrt(std::max(cov(i, i), 0.0)) * range[i];
}

inline FitReport run_fit(const FitProblem& prob,
                         const std::function<double(const std::vector<double>&)>& objective,
                         std::size_t n_data) {
    validate(prob);
    std::vector<double> x0, lo, hi;
    for (const auto& f : prob.free) {
        x0.push_back(f.initial);
        lo.push_back(f.lower);
        hi.push_back(f.upper);
    }
    const auto nm = nelder_mead(objective, x0, lo, hi, prob.options);
    FitReport rep;
    rep.chi2 = nm.value;
    rep.evaluations = nm.evaluations;
    rep.iterations = nm.iterations;
    rep.converged = nm.converged;
    rep.history = nm.history;
    if (!nm.converged) rep.warnings.push_back("evaluation budget exhausted; reporting best point");
    for (std::size_t i = 0; i < prob.free.size(); ++i) {
        const auto& f = prob.free[i];
        const double tol = 1e-4 * (f.upper - f.lower);
        ParameterEstimate e{f.name, nm.x[i], 0.0, nm.x[i] - f.lower < tol || f.upper - nm.x[i] < tol};
        if (e.at_bound) rep.warnings.push_back("parameter '" + f.name + "' at its bound");
        rep.parameters.push_back(e);
    }
    quadratic_uncertainties(objective, prob, n_data, rep);
    return rep;
}

inline double lookup(const std::map<std::string, double>& values, const std::string& name,
                     double fallback) {
    auto it = values.find(name);
    return it == values.end() ? fallback : it->second;
}

} // namespace detail

// ---------------------------------------------------------------- thin film

inline FitProblem default_thin_film_problem() {
    FitProblem p;
    p.free = {{"eps_s", 3.3, 3.9, 3.6}, {"sigma", 0.05, 0.3, 0.14}, {"xi", 0.03, 0.2, 0.09},
              {"scale", 0.0, 1.0, 0.1}};
    p.fixed = {{"a", 1.0}, {"gamma", 5e-5}};
    return p;
}

// Thin-film parameters with names from `free` set from x and everything else
// from `fixed` over `base`.
inline holstein::ThinFilmParams thin_film_params(const FitProblem& prob, const std::vector<double>& x,
                                                 holstein::ThinFilmParams base = {}) {
    std::map<std::string, double> v = prob.fixed;
    for (std::size_t i = 0; i < prob.free.size(); ++i) v[prob.free[i].name] = x[i];
    for (const auto& [name, value] : v) {
        if (name == "eps_s") base.eps_s = value;
        else if (name == "sigma") base.sigma = value;
        else if (name == "xi") base.bath.xi = value;
        else if (name == "a") base.bath.a = value;
        else if (name == "gamma") base.gamma = value;
        else if (name == "scale") base.scale = value;
        else throw DomainError("unknown thin-film parameter '" + name + "'");
    }
    return base;
}

// Pointwise chi2 of the film absorption A(E) against data (unit variances).
inline FitReport fit_thin_film(const csv::Curve& data, const FitProblem& prob,
                               const holstein::ThinFilmParams& base = {},
                               const holstein::FilmGeometry& geo = {}) {
    if (data.x.size() < prob.free.size() + 1) throw DataError("too few data points for the fit");
    auto objective = [&](const std::vector<double>& x) {
        const auto p = thin_film_params(prob, x, base);
        try {
            return chi_squared(holstein::thin_film_absorption(p, data.x, geo), data.y);
        } catch (const TruncationError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    return detail::run_fit(prob, objective, data.x.size());
}

// ---------------------------------------------------------------- cavity

// Measured polariton minima at one angle; NaN depths mark unresolved dips.
struct MinimaRow {
    double angle_deg{0.0};
    double e_lp{0.0};
    double e_up{0.0};
    double depth_lp{std::numeric_limits<double>::quiet_NaN()};
    double depth_up{std::numeric_limits<double>::quiet_NaN()};
};

struct CavityModelConfig {
    htc::CavitySetup setup{};
    htc::CavityStackConfig stack{};
    nmqsd::EvolutionConfig evolution = htc::default_cavity_evolution();
    double scale{0.02};
    std::vector<double> energies;  // reflectivity grid
    tmm::Polarization pol{tmm::Polarization::s};
    std::size_t workers{1};
};

inline std::vector<double> default_cavity_energies() {
    std::vector<double> e;
    for (int i = 0; i <= 400; ++i) e.push_back(2.6 + 0.005 * i);
    return e;
}

// R(E) at one angle.
inline std::vector<double> cavity_reflectivity(const CavityModelConfig& cfg,
                                               const htc::CavityMaterials& mats, double theta_deg,
                                               nmqsd::KernelSet* cache) {
    const auto m = htc::model_for_angle(cfg.setup, theta_deg);
    const auto chi = htc::cavity_susceptibility(m.molecules, m.cavity, m.probe_kz, cfg.energies,
                                                cfg.scale, cfg.evolution, cache);
    const auto stack = htc::cavity_stack(chi, cfg.stack, mats);
    std::vector<double> r(cfg.energies.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = tmm::reflect_transmit(stack, cfg.energies[i], theta_deg, cfg.pol).R;
    return r;
}

// Model LP/UP minima (NaN when fewer than two dips are found).
inline std::vector<MinimaRow> cavity_minima(const CavityModelConfig& cfg, const htc::CavityMaterials& mats,
                                            const std::vector<double>& angles, nmqsd::KernelSet* cache) {
    std::vector<MinimaRow> rows(angles.size());
    parallel_for(angles.size(), cfg.workers, [&](std::size_t k) {
        const auto r = cavity_reflectivity(cfg, mats, angles[k], cache);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        MinimaRow row{angles[k], nan, nan, nan, nan};
        if (auto pair = polariton_pair(find_minima(cfg.energies, r, 1e-4))) {
            row.e_lp = pair->first.position;
            row.e_up = pair->second.position;
            row.depth_lp = pair->first.depth;
            row.depth_up = pair->second.depth;
        }
        rows[k] = row;
    });
    return rows;
}

struct MinimaWeights {
    double position_unit{0.01};  // eV
    double depth_unit{0.01};     // reflectivity
    double depth_weight{1.0};
    double missing_penalty{1e6};
};

inline double minima_chi2(const std::vector<MinimaRow>& model, const std::vector<MinimaRow>& data,
                          const MinimaWeights& w = {}) {
    if (model.size() != data.size()) throw DomainError("minima chi2: angle count mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& m = model[k];
        const auto& d = data[k];
        if (std::isnan(m.e_lp) || std::isnan(m.e_up)) {
            s += w.missing_penalty;
            continue;
        }
        auto sq = [](double r) { return r * r; };
        s += sq((m.e_lp - d.e_lp) / w.position_unit) + sq((m.e_up - d.e_up) / w.position_unit);
        if (!std::isnan(d.depth_lp)) s += w.depth_weight * sq((m.depth_lp - d.depth_lp) / w.depth_unit);
        if (!std::isnan(d.depth_up)) s += w.depth_weight * sq((m.depth_up - d.depth_up) / w.depth_unit);
    }
    return s;
}

inline FitProblem default_cavity_problem() {
    FitProblem p;
    p.objective = Objective::minima_chi2;
    p.free = {{"n_r", 1.2, 3.5, 2.0}, {"e0", 3.0, 3.8, 3.42}, {"rabi", 0.3, 1.5, 0.92},
              {"mu_c_ratio", 0.0, 4.0, 2.0}};
    return p;
}

inline CavityModelConfig cavity_config(const FitProblem& prob, const std::vector<double>& x,
                                       CavityModelConfig cfg) {
    std::map<std::string, double> v = prob.fixed;
    for (std::size_t i = 0; i < prob.free.size(); ++i) v[prob.free[i].name] = x[i];
    for (const auto& [name, value] : v) {
        if (name == "n_r") cfg.setup.cavity.n_r = value;
        else if (name == "e0") cfg.setup.cavity.e0 = value;
        else if (name == "rabi") cfg.setup.molecules.rabi = value;
        else if (name == "mu_c_ratio") cfg.setup.cavity.mu_c_ratio = value;
        else if (name == "kappa") cfg.setup.cavity.kappa = value;
        else if (name == "eps_s") cfg.setup.molecules.eps_s = value;
        else if (name == "scale") cfg.scale = value;
        else throw DomainError("unknown cavity parameter '" + name + "'");
    }
    return cfg;
}

inline FitReport fit_cavity(const std::vector<MinimaRow>& data, const FitProblem& prob,
                            const CavityModelConfig& base, const MinimaWeights& weights = {}) {
    std::size_t resolved = 0;
    std::vector<std::string> warnings;
    for (const auto& d : data) {
        if (std::isnan(d.e_lp) || std::isnan(d.e_up)) throw DataError("minima rows need both positions");
        if (std::isnan(d.depth_lp) || std::isnan(d.depth_up)) {
            std::ostringstream msg;
            msg << "angle " << d.angle_deg << ": unresolved depth, depth terms dropped";
            warnings.push_back(msg.str());
        } else {
            ++resolved;
        }
    }
    if (data.size() < 2) throw DataError("cavity fit needs at least two angles");
    std::vector<double> angles;
    for (const auto& d : data) angles.push_back(d.angle_deg);
    const auto mats = htc::load_cavity_materials(base.stack);
    nmqsd::KernelSet cache;
    auto objective = [&](const std::vector<double>& x) {
        const auto cfg = cavity_config(prob, x, base);
        return minima_chi2(cavity_minima(cfg, mats, angles, &cache), data, weights);
    };
    auto rep = detail::run_fit(prob, objective, 2 * data.size() + 2 * resolved);
    rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
    return rep;
}

} // namespace polaroptics::fit
