#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ecx/error.hpp"
#include "ecx/forecast.hpp"
#include "ecx/metrics.hpp"
#include "oracles.hpp"

using namespace ecx;

namespace {

AnalogueSet random_set(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 0.2);
    AnalogueSet s;
    for (std::size_t i = 0; i < n; ++i) {
        Analogue a;
        a.position = {u(rng), u(rng)};
        a.displacement = {1.0 + a.position[0] + g(rng), 0.5 - a.position[1] + g(rng)};
        a.entity = i;
        s.analogues.push_back(a);
    }
    return s;
}

oracle::Nw reference(const Vec2& q, const AnalogueSet& s, double sigma) {
    std::vector<std::array<double, 2>> pos, disp;
    for (const auto& a : s.analogues) {
        pos.push_back(a.position);
        disp.push_back(a.displacement);
    }
    return oracle::nwkr(q, pos, disp, sigma);
}

TrajectorySet linear_trajectories(std::size_t entities, int years, double growth) {
    TrajectorySet t;
    for (std::size_t e = 0; e < entities; ++e) {
        t.entities.push_back("E" + std::to_string(e));
        for (int y = 0; y < years; ++y) {
            const double base = 1.0 + static_cast<double>(e);
            t.points.push_back({e, 2000 + y, base * std::pow(growth, y), 2.0 * base * std::pow(growth, y)});
        }
    }
    return t;
}

}  // namespace

TEST(Kernel, SingleAnalogueReturnsIt) {
    AnalogueSet s;
    s.analogues.push_back({{0.3, 0.3}, {0.7, -1.2}, 0, 2000, 1});
    const auto r = nwkr_predict({0.9, 0.1}, s, {0.05});
    EXPECT_DOUBLE_EQ(r.expectation[0], 0.7);
    EXPECT_DOUBLE_EQ(r.expectation[1], -1.2);
    EXPECT_EQ(r.standard_deviation[0], 0.0);
}

TEST(Kernel, TwoAnaloguesHandWeights) {
    AnalogueSet s;
    s.analogues.push_back({{0.0, 0.0}, {1.0, 0.0}, 0, 2000, 1});
    s.analogues.push_back({{1.0, 0.0}, {3.0, 0.0}, 1, 2000, 1});
    const double sigma = 0.5;
    const Vec2 q{0.25, 0.0};
    const double w0 = std::exp(-0.0625 / (2 * sigma * sigma)), w1 = std::exp(-0.5625 / (2 * sigma * sigma));
    const double mean = (w0 * 1 + w1 * 3) / (w0 + w1);
    const auto r = nwkr_predict(q, s, {sigma});
    EXPECT_NEAR(r.expectation[0], mean, 1e-14);
    const double var = (w0 * (1 - mean) * (1 - mean) + w1 * (3 - mean) * (3 - mean)) / (w0 + w1);
    EXPECT_NEAR(r.standard_deviation[0], std::sqrt(var), 1e-14);
    const auto p = kernel_probabilities(q, s, {sigma});
    EXPECT_NEAR(p.probability[0], w0 / (w0 + w1), 1e-15);
}

TEST(Kernel, MatchesResummationOracle) {
    const auto s = random_set(50, 1);
    for (double sigma : {0.02, 0.1, 0.5}) {
        for (const Vec2& q : {Vec2{0.1, 0.2}, Vec2{0.5, 0.5}, Vec2{0.95, 0.05}}) {
            const auto r = nwkr_predict(q, s, {sigma});
            const auto o = reference(q, s, sigma);
            for (int d = 0; d < 2; ++d) {
                EXPECT_NEAR(r.expectation[d], o.mean[d], 1e-12);
                EXPECT_NEAR(r.standard_deviation[d], o.sd[d], 1e-12);
            }
        }
    }
}

TEST(Kernel, DuplicatingAnaloguesChangesNothing) {
    const auto s = random_set(30, 2);
    auto twice = s;
    twice.analogues.insert(twice.analogues.end(), s.analogues.begin(), s.analogues.end());
    const auto a = nwkr_predict({0.4, 0.6}, s, {0.1}), b = nwkr_predict({0.4, 0.6}, twice, {0.1});
    EXPECT_NEAR(a.expectation[0], b.expectation[0], 1e-13);
    EXPECT_NEAR(a.standard_deviation[1], b.standard_deviation[1], 1e-13);
}

TEST(Kernel, ExpectationInsideConvexHull) {
    const auto s = random_set(40, 3);
    double lo0 = INFINITY, hi0 = -INFINITY;
    for (const auto& a : s.analogues) {
        lo0 = std::min(lo0, a.displacement[0]);
        hi0 = std::max(hi0, a.displacement[0]);
    }
    for (double x = -1.0; x <= 2.0; x += 0.25) {
        const auto r = nwkr_predict({x, x}, s, {0.05});
        EXPECT_GE(r.expectation[0], lo0);
        EXPECT_LE(r.expectation[0], hi0);
    }
}

TEST(Kernel, FarQueryFallsBackToNearest) {
    AnalogueSet s;
    s.analogues.push_back({{0.0, 0.0}, {1.0, 1.0}, 0, 2000, 1});
    s.analogues.push_back({{1.0, 1.0}, {2.0, 2.0}, 1, 2000, 1});
    const auto r = nwkr_predict({100.0, 100.0}, s, {0.01});
    EXPECT_TRUE(r.nearest_fallback);
    EXPECT_DOUBLE_EQ(r.expectation[0], 2.0);
}

TEST(Kernel, ValidatesSigma) {
    EXPECT_THROW((KernelSpec{0.0}.validate()), ValidationError);
    EXPECT_THROW((KernelSpec{-1.0}.validate()), ValidationError);
    const auto s = random_set(10, 4);
    EXPECT_GT(default_kernel(s).sigma, 0.0);
}

TEST(Spsb, ConstantDisplacementIsExact) {
    auto s = random_set(20, 5);
    for (auto& a : s.analogues) a.displacement = {0.25, -0.5};
    const auto r = spsb_predict({0.5, 0.5}, s, {0.2}, {200, 50, 1, {}});
    EXPECT_DOUBLE_EQ(r.expectation[0], 0.25);
    EXPECT_DOUBLE_EQ(r.expectation[1], -0.5);
    EXPECT_EQ(r.standard_deviation[0], 0.0);
}

TEST(Spsb, BitReproducibleAndSeedSensitive) {
    const auto s = random_set(60, 6);
    const SpsbParams p{3000, 20, 42, {7, 2001}};
    const auto a = spsb_sample({0.3, 0.3}, s, {0.1}, p);
    const auto b = spsb_sample({0.3, 0.3}, s, {0.1}, p);
    EXPECT_EQ(a.result.expectation, b.result.expectation);
    EXPECT_EQ(a.counts, b.counts);
    auto q = p;
    q.seed = 43;
    EXPECT_NE(spsb_sample({0.3, 0.3}, s, {0.1}, q).counts, a.counts);
}

TEST(Spsb, DrawFrequenciesFollowKernel) {
    const auto s = random_set(25, 7);
    const Vec2 q{0.5, 0.5};
    const SpsbParams p{20000, 50, 3, {}};
    const auto d = spsb_sample(q, s, {0.2}, p);
    const auto w = kernel_probabilities(q, s, {0.2});
    const double total = static_cast<double>(std::accumulate(d.counts.begin(), d.counts.end(), std::uint64_t{0}));
    EXPECT_EQ(total, 20000.0 * 50.0);
    double freq_sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = static_cast<double>(d.counts[i]) / total;
        freq_sum += f;
        EXPECT_NEAR(f, w.probability[i], 5 * std::sqrt(w.probability[i] / total) + 1e-9);
    }
    EXPECT_NEAR(freq_sum, 1.0, 1e-12);
}

TEST(Spsb, ConvergesToKernelRegression) {
    const auto s = random_set(80, 8);
    const Vec2 q{0.4, 0.7};
    const auto nw = nwkr_predict(q, s, {0.15});
    const auto sp = spsb_predict(q, s, {0.15}, {20000, 100, 9, {}});
    for (int d = 0; d < 2; ++d) {
        EXPECT_NEAR(sp.expectation[d], nw.expectation[d], 0.01 * std::fabs(nw.expectation[d]));
        EXPECT_NEAR(std::sqrt(100.0) * sp.standard_deviation[d], nw.standard_deviation[d], 0.05 * nw.standard_deviation[d]);
    }
}

TEST(Convergence, ErrorShrinksWithBootstraps) {
    const auto s = random_set(100, 10);
    std::vector<Vec2> queries;
    for (int i = 0; i < 8; ++i) queries.push_back({0.1 + 0.1 * i, 0.9 - 0.1 * i});
    const std::vector<std::size_t> schedule{30, 300, 3000, 30000};
    const auto d = convergence_scan(queries, s, {0.1}, schedule, 50, 1);
    ASSERT_EQ(d.rows.size(), 4u);
    EXPECT_LT(d.rows.back().mae_expectation, d.rows.front().mae_expectation);
    EXPECT_LT(d.trend_rho, 0.0);
    EXPECT_LT(d.rare_sampled_fraction, 0.05);
    double p = 0;
    for (const auto& r : d.table) p += r.probability;
    EXPECT_NEAR(p, 1.0, 1e-12);
    const std::vector<std::size_t> bad{100, 10};
    EXPECT_THROW(convergence_scan(queries, s, {0.1}, bad, 50, 1), ValidationError);
}

TEST(Cagr, WorkedExamples) {
    EXPECT_NEAR(cagr(100.0, 121.0, 2.0), 10.0, 1e-12);
    EXPECT_NEAR(cagr(100.0, 100.0, 5.0), 0.0, 1e-15);
    EXPECT_NEAR(cagr(200.0, 100.0, 1.0), -50.0, 1e-12);
    EXPECT_THROW(cagr(0.0, 1.0, 1.0), ValidationError);
    EXPECT_THROW(cagr(1.0, 2.0, 0.5), ValidationError);
}

TEST(Baselines, StaticRandomAutocorrelation) {
    const auto s = random_set(10, 11);
    const auto st = baseline_predict(ForecastMethod::Static, s, std::nullopt, 1);
    ASSERT_TRUE(st);
    EXPECT_EQ(st->expectation, (Vec2{0.0, 0.0}));
    const auto ac = baseline_predict(ForecastMethod::Autocorrelation, s, Vec2{0.2, -0.1}, 1);
    ASSERT_TRUE(ac);
    EXPECT_EQ(ac->expectation, (Vec2{0.2, -0.1}));
    EXPECT_FALSE(baseline_predict(ForecastMethod::Autocorrelation, s, std::nullopt, 1));
    const auto rn = baseline_predict(ForecastMethod::Random, s, std::nullopt, 1);
    ASSERT_TRUE(rn);
    bool found = false;
    for (const auto& a : s.analogues) found = found || a.displacement == rn->expectation;
    EXPECT_TRUE(found);
    EXPECT_FALSE(baseline_predict(ForecastMethod::Random, AnalogueSet{}, std::nullopt, 1));
}

TEST(Backtest, AnaloguesNeverReachPastForecastYear) {
    const auto t = linear_trajectories(6, 12, 1.05);
    for (int dt = 1; dt <= 4; ++dt) {
        const auto s = analogues_before(t, 2008, dt);
        EXPECT_FALSE(s.empty());
        for (const auto& a : s.analogues) {
            EXPECT_LT(a.time, 2008);
            EXPECT_LE(a.time + dt, 2008);
            EXPECT_EQ(a.horizon, dt);
        }
    }
}

TEST(Backtest, PersistentGrowthIsForecastPerfectlyByAutocorrelation) {
    const auto t = linear_trajectories(5, 14, 1.0);
    BacktestParams p;
    p.methods = {ForecastMethod::Autocorrelation, ForecastMethod::Static, ForecastMethod::Nwkr};
    p.horizons = {3};
    const auto rep = backtest(t, p);
    EXPECT_EQ(rep.audit.violations, 0u);
    EXPECT_GT(rep.audit.analogues_checked, 0u);
    EXPECT_NEAR(rep.overall_mae(ForecastMethod::Autocorrelation), 0.0, 1e-9);
    EXPECT_NEAR(rep.overall_mae(ForecastMethod::Static), 0.0, 1e-9);
    const auto grow = backtest(linear_trajectories(5, 14, 1.1), p);
    EXPECT_LT(grow.overall_mae(ForecastMethod::Autocorrelation), grow.overall_mae(ForecastMethod::Static));
    for (const auto& row : grow.rows)
        if (row.method == ForecastMethod::Static) {
            EXPECT_NEAR(row.forecast, 0.0, 1e-12);
            EXPECT_NEAR(row.observed, 10.0, 1e-9);
        }
}

TEST(Backtest, Deterministic) {
    const auto t = linear_trajectories(8, 12, 1.03);
    BacktestParams p;
    p.bootstraps = 50;
    p.samples = 10;
    p.horizons = {3};
    const auto a = backtest(t, p), b = backtest(t, p);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].forecast, b.rows[i].forecast);
    EXPECT_EQ(backtest_summary(a), backtest_summary(b));
}

TEST(Country, ReconstructFitness) {
    BinaryMatrix m(2, 3, 0);
    m(0, 0) = m(0, 2) = m(1, 1) = 1;
    const std::vector<double> q{0.5, 1.0, 2.0};
    EXPECT_EQ(reconstruct_fitness(m, q), (std::vector<double>{2.5, 1.0}));
}

TEST(Country, InvertSquareSystemExactly) {
    Matrix<double> nrca(3, 3);
    const double vals[9] = {0.6, 0.1, 0.3, 0.3, 0.7, 0.2, 0.1, 0.2, 0.5};
    for (int i = 0; i < 9; ++i) nrca.data()[i] = vals[i];
    const std::vector<double> g{2.5, 3.7, 4.1};
    std::vector<double> lp(3, 0.0);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t c = 0; c < 3; ++c) lp[p] += nrca(c, p) * g[c];
    const auto inv = invert_nrca_gdp(nrca, lp);
    EXPECT_FALSE(inv.rank_deficient);
    EXPECT_EQ(inv.rank, 3u);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(inv.log_gdp[c], g[c], 1e-10);
    EXPECT_LT(inv.residual_norm, 1e-12);
}

TEST(Country, RankDeficientFlagged) {
    Matrix<double> nrca(2, 2, 0.5);
    const std::vector<double> lp{3.0, 3.0};
    const auto inv = invert_nrca_gdp(nrca, lp);
    EXPECT_TRUE(inv.rank_deficient);
    EXPECT_NEAR(inv.log_gdp[0], 3.0, 1e-10);
    EXPECT_NEAR(inv.log_gdp[1], 3.0, 1e-10);
}

TEST(Methods, NamesRoundTrip) {
    for (auto m : {ForecastMethod::Spsb, ForecastMethod::Nwkr, ForecastMethod::Random, ForecastMethod::Static,
                   ForecastMethod::Autocorrelation})
        EXPECT_EQ(parse_forecast_method(to_string(m)), m);
    EXPECT_THROW(parse_forecast_method("oracle"), ValidationError);
}
