#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "polaroptics/fit.hpp"

using namespace polaroptics;

namespace {

std::vector<double> grid(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

double lorentz_dip(double x, double c, double w, double depth) {
    return depth * 0.25 * w * w / ((x - c) * (x - c) + 0.25 * w * w);
}

csv::Curve synthetic_film_data(const holstein::ThinFilmParams& truth) {
    csv::Curve c;
    c.x = grid(3.1, 4.3, 49);
    c.y = holstein::thin_film_absorption(truth, c.x);
    return c;
}

holstein::ThinFilmParams film_truth() {
    holstein::ThinFilmParams p;
    p.eps_s = 3.62;
    p.sigma = 0.12;
    p.bath.xi = 0.1;
    p.scale = 0.15;
    return p;
}

} // namespace

TEST(ChiSquared, Basics) {
    const std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 2.5, 2.0};
    EXPECT_EQ(fit::chi_squared(a, a), 0.0);
    EXPECT_DOUBLE_EQ(fit::chi_squared(a, b), 1.25);
    EXPECT_DOUBLE_EQ(fit::chi_squared(a, b, {1.0, 0.25, 4.0}), 1.25);
    EXPECT_THROW(fit::chi_squared(a, {1.0}), DomainError);
    EXPECT_THROW(fit::chi_squared(a, b, {1.0}), DomainError);
}

TEST(ChiSquared, CurveInterpolatesModel) {
    csv::Curve model{{0.0, 1.0, 2.0}, {0.0, 2.0, 4.0}, {}};
    csv::Curve data{{0.5, 1.5}, {1.0, 3.5}, {}};
    EXPECT_DOUBLE_EQ(fit::chi_squared(model, data), 0.25);
    data.x = {2.5};
    data.y = {0.0};
    EXPECT_THROW(fit::chi_squared(model, data), DomainError);
}

TEST(ChiSquared, InvariantUnderRowPermutation) {
    const auto truth = film_truth();
    auto data = synthetic_film_data(truth);
    for (auto& y : data.y) y += 0.003;
    std::vector<std::size_t> perm(data.x.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
    std::vector<double> xs, ys;
    for (auto k : perm) {
        xs.push_back(data.x[k]);
        ys.push_back(data.y[k]);
    }
    const auto restored = csv::normalize_curve(xs, ys);
    ASSERT_EQ(restored.warnings.size(), 1u);
    EXPECT_EQ(restored.x, data.x);
    EXPECT_EQ(restored.y, data.y);
    const auto model = holstein::thin_film_absorption(truth, data.x);
    std::vector<double> model_perm;
    for (auto k : perm) model_perm.push_back(model[k]);
    EXPECT_NEAR(fit::chi_squared(model, data.y), fit::chi_squared(model_perm, ys), 1e-15);
}

TEST(Minima, ParabolaVertexRecovered) {
    const auto x = grid(0.0, 1.0, 21);
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 + 3.0 * (v - 0.4321) * (v - 0.4321));
    const auto m = fit::find_minima(x, y);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].position, 0.4321, 1e-12);
    EXPECT_NEAR(m[0].value, 2.0, 1e-12);
}

TEST(Minima, TwoLorentzianDips) {
    const auto x = grid(2.6, 4.6, 401);
    std::vector<double> y;
    for (double v : x) y.push_back(0.9 - lorentz_dip(v, 3.1234, 0.08, 0.5) - lorentz_dip(v, 3.9876, 0.12, 0.3));
    const auto m = fit::find_minima(x, y, 1e-4);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_NEAR(m[0].position, 3.1234, 2e-4);
    EXPECT_NEAR(m[1].position, 3.9876, 2e-4);
    EXPECT_NEAR(m[0].width, 0.08, 0.01);
    EXPECT_NEAR(m[1].width, 0.12, 0.015);
    EXPECT_GT(m[0].depth, m[1].depth);
    const auto pair = fit::polariton_pair(m);
    ASSERT_TRUE(pair.has_value());
    EXPECT_LT(pair->first.position, pair->second.position);
}

TEST(Minima, PairPicksDeepestTwo) {
    const auto x = grid(0.0, 10.0, 1001);
    std::vector<double> y;
    for (double v : x)
        y.push_back(1.0 - lorentz_dip(v, 2.0, 0.3, 0.05) - lorentz_dip(v, 5.0, 0.3, 0.6) - lorentz_dip(v, 8.0, 0.3, 0.4));
    const auto pair = fit::polariton_pair(fit::find_minima(x, y));
    ASSERT_TRUE(pair.has_value());
    EXPECT_NEAR(pair->first.position, 5.0, 1e-3);
    EXPECT_NEAR(pair->second.position, 8.0, 1e-3);
}

TEST(Minima, MonotoneAndShallowCurvesGiveNothing) {
    const auto x = grid(0.0, 1.0, 50);
    std::vector<double> up, wiggle;
    for (double v : x) {
        up.push_back(v * v);
        wiggle.push_back(1.0 + 1e-6 * std::sin(40.0 * v));
    }
    EXPECT_TRUE(fit::find_minima(x, up).empty());
    EXPECT_FALSE(fit::find_minima(x, wiggle).empty());
    EXPECT_TRUE(fit::find_minima(x, wiggle, 1e-4).empty());
    EXPECT_FALSE(fit::polariton_pair(fit::find_minima(x, up)).has_value());
}

TEST(NelderMead, RosenbrockInBox) {
    auto f = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    fit::NelderMeadOptions opt;
    opt.max_evaluations = 5000;
    opt.tolerance = 1e-9;
    const auto r = fit::nelder_mead(f, {-1.0, 2.0}, {-2.0, -1.0}, {2.0, 3.0}, opt);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1]);
}

TEST(NelderMead, OptimumOutsideBoxStopsAtBound) {
    auto f = [](const std::vector<double>& x) { return std::pow(x[0] - 5.0, 2) + std::pow(x[1] - 0.3, 2); };
    const auto r = fit::nelder_mead(f, {0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0});
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 0.3, 1e-5);
    for (double v : r.x) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(NelderMead, BudgetAndArgumentChecks) {
    auto f = [](const std::vector<double>& x) { return std::pow(x[0] - 0.2, 2); };
    fit::NelderMeadOptions opt;
    opt.max_evaluations = 5;
    const auto r = fit::nelder_mead(f, {0.9}, {0.0}, {1.0}, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_THROW(fit::nelder_mead(f, {2.0}, {0.0}, {1.0}), DomainError);
    EXPECT_THROW(fit::nelder_mead(f, {0.5}, {1.0}, {0.0}), DomainError);
    EXPECT_THROW(fit::nelder_mead(f, {}, {}, {}), DomainError);
}

TEST(Report, FlagsParameterAtBoundAndUncertainties) {
    fit::FitProblem prob;
    prob.free = {{"p", 0.0, 1.0, 0.5}, {"q", -2.0, 2.0, 0.0}};
    auto f = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[0] - 1.5, 2) + 4.0 * std::pow(x[1] - 0.7, 2) + 1.0;
    };
    const auto rep = fit::detail::run_fit(prob, f, 12);
    EXPECT_TRUE(rep.parameters[0].at_bound);
    EXPECT_FALSE(rep.parameters[1].at_bound);
    EXPECT_NEAR(rep.value("q"), 0.7, 1e-4);
    // cov = 2 s^2 H^-1 with s^2 = chi2 / (n - k)
    const double s2 = rep.chi2 / 10.0;
    EXPECT_NEAR(rep.parameters[1].uncertainty, std::sqrt(2.0 * s2 / 8.0), 1e-4);
    EXPECT_FALSE(rep.non_identifiable);
    EXPECT_THROW(rep.value("r"), DomainError);
}

TEST(Report, FlatDirectionIsNonIdentifiable) {
    fit::FitProblem prob;
    prob.free = {{"p", 0.0, 1.0, 0.5}, {"q", 0.0, 1.0, 0.5}};
    auto f = [](const std::vector<double>& x) { return std::pow(x[0] - 0.3, 2) + 0.01; };
    const auto rep = fit::detail::run_fit(prob, f, 10);
    EXPECT_TRUE(rep.non_identifiable);
    EXPECT_TRUE(std::isinf(rep.parameters[1].uncertainty));
}

TEST(Problem, Validation) {
    auto p = fit::default_thin_film_problem();
    EXPECT_NO_THROW(fit::validate(p));
    p.fixed["sigma"] = 0.1;
    EXPECT_THROW(fit::validate(p), DomainError);
    p = fit::default_thin_film_problem();
    p.free[0].initial = 5.0;
    EXPECT_THROW(fit::validate(p), DomainError);
    p = fit::default_thin_film_problem();
    p.free.push_back({"colour", 0.0, 1.0, 0.5});
    EXPECT_THROW(fit::thin_film_params(p, {3.6, 0.1, 0.09, 0.1, 0.5}), DomainError);
}

TEST(ThinFilmFit, RecoversKnownParameters) {
    const auto truth = film_truth();
    const auto data = synthetic_film_data(truth);
    auto prob = fit::default_thin_film_problem();
    const auto start = std::chrono::steady_clock::now();
    const auto rep = fit::fit_thin_film(data, prob);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_TRUE(rep.converged);
    EXPECT_NEAR(rep.value("eps_s"), 3.62, 0.02 * 3.62);
    EXPECT_NEAR(rep.value("sigma"), 0.12, 0.02 * 0.12);
    EXPECT_NEAR(rep.value("xi"), 0.1, 0.02 * 0.1);
    EXPECT_NEAR(rep.value("scale"), 0.15, 0.02 * 0.15);
    EXPECT_LT(rep.chi2, 1e-8);
    for (std::size_t k = 1; k < rep.history.size(); ++k) EXPECT_LE(rep.history[k], rep.history[k - 1]);
    RecordProperty("seconds", std::to_string(secs));
}

TEST(ThinFilmFit, WithoutVibronicBathFitsWorse) {
    const auto data = synthetic_film_data(film_truth());
    auto prob = fit::default_thin_film_problem();
    prob.free.erase(prob.free.begin() + 2);  // xi irrelevant without coupling
    prob.fixed["a"] = 0.0;
    const auto voigt = fit::fit_thin_film(data, prob);
    EXPECT_GT(voigt.chi2, 1e3 * 1e-8);
}

TEST(ThinFilmFit, DeterministicAcrossRuns) {
    const auto data = synthetic_film_data(film_truth());
    auto prob = fit::default_thin_film_problem();
    prob.options.tolerance = 1e-4;
    const auto a = fit::fit_thin_film(data, prob);
    const auto b = fit::fit_thin_film(data, prob);
    EXPECT_EQ(a.chi2, b.chi2);
    EXPECT_EQ(a.evaluations, b.evaluations);
    for (std::size_t i = 0; i < a.parameters.size(); ++i) EXPECT_EQ(a.parameters[i].value, b.parameters[i].value);
}

TEST(ThinFilmFit, RejectsTooFewPoints) {
    csv::Curve tiny{{3.5, 3.6}, {0.1, 0.2}, {}};
    EXPECT_THROW(fit::fit_thin_film(tiny, fit::default_thin_film_problem()), DataError);
}

TEST(MinimaChi2, UnitsAndPenalty) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<fit::MinimaRow> data{{20.0, 3.10, 3.90, 0.30, nan}, {30.0, 3.05, 3.95, nan, nan}};
    std::vector<fit::MinimaRow> model{{20.0, 3.11, 3.90, 0.32, 0.2}, {30.0, 3.05, 3.97, 0.1, 0.1}};
    EXPECT_NEAR(fit::minima_chi2(model, data), 1.0 + 4.0 + 4.0, 1e-9);
    model[1].e_up = nan;
    EXPECT_NEAR(fit::minima_chi2(model, data), 5.0 + 1e6, 1e-6);
    model.pop_back();
    EXPECT_THROW(fit::minima_chi2(model, data), DomainError);
}

TEST(CavityFit, ReducedModelRecoversCavityEnergy) {
    fit::CavityModelConfig base;
    base.setup.molecules.n_mol = 12;
    base.setup.n_modes = 3;
    base.energies = grid(2.6, 4.6, 201);
    const std::vector<double> angles{15.0, 45.0};
    auto truth = base;
    truth.setup.cavity.e0 = 3.47;
    const auto mats = htc::load_cavity_materials(base.stack);
    nmqsd::KernelSet cache;
    const auto data = fit::cavity_minima(truth, mats, angles, &cache);
    for (const auto& r : data) ASSERT_FALSE(std::isnan(r.e_lp));

    fit::FitProblem prob;
    prob.objective = fit::Objective::minima_chi2;
    prob.free = {{"e0", 3.3, 3.6, 3.42}};
    prob.options.tolerance = 1e-4;
    const auto rep = fit::fit_cavity(data, prob, base);
    EXPECT_NEAR(rep.value("e0"), 3.47, 2e-3);
    EXPECT_LT(rep.chi2, 1.0);
    EXPECT_FALSE(rep.parameters[0].at_bound);
}

TEST(CavityFit, RejectsIncompleteRows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit::CavityModelConfig base;
    EXPECT_THROW(fit::fit_cavity({{20.0, nan, 3.9, nan, nan}, {30.0, 3.1, 3.9, nan, nan}},
                                 fit::default_cavity_problem(), base),
                 DataError);
    EXPECT_THROW(fit::fit_cavity({{20.0, 3.1, 3.9, nan, nan}}, fit::default_cavity_problem(), base), DataError);
}
