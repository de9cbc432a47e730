#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ecx/error.hpp"
#include "ecx/metrics.hpp"
#include "ecx/stats.hpp"
#include "ecx/synth.hpp"
#include "oracles.hpp"

using namespace ecx;

namespace {

Matrix<double> from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix<double> m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

BinaryMatrix random_binary(std::size_t rows, std::size_t cols, double fill, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution on(fill);
    for (;;) {
        BinaryMatrix m(rows, cols, 0);
        for (auto& v : m.data()) v = on(rng) ? 1 : 0;
        bool ok = true;
        for (std::size_t r = 0; r < rows && ok; ++r) {
            bool any = false;
            for (auto v : m.row(r)) any = any || v;
            ok = any;
        }
        for (std::size_t c = 0; c < cols && ok; ++c) {
            bool any = false;
            for (std::size_t r = 0; r < rows; ++r) any = any || m(r, c);
            ok = any;
        }
        if (ok) return m;
    }
}

}  // namespace

TEST(Rca, HandComputedTwoByTwo) {
    // totals: rows 10 and 30, columns 15 and 25, world 40
    const auto x = from_rows({{5, 5}, {10, 20}});
    const auto r = compute_rca(x);
    EXPECT_NEAR(r.values(0, 0), (5.0 / 10) / (15.0 / 40), 1e-15);
    EXPECT_NEAR(r.values(0, 1), (5.0 / 10) / (25.0 / 40), 1e-15);
    EXPECT_NEAR(r.values(1, 0), (10.0 / 30) / (15.0 / 40), 1e-15);
    EXPECT_NEAR(r.values(1, 1), (20.0 / 30) / (25.0 / 40), 1e-15);
}

TEST(Rca, UniformExportsGiveOne) {
    Matrix<double> x(4, 6, 3.5);
    const auto r = compute_rca(x);
    for (double v : r.values.data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Rca, ZeroRowsAndColumnsAreFlagged) {
    const auto x = from_rows({{1, 0, 2}, {0, 0, 0}, {3, 0, 1}});
    const auto r = compute_rca(x);
    EXPECT_TRUE(r.zero_country[1]);
    EXPECT_TRUE(r.zero_product[1]);
    EXPECT_FALSE(r.zero_country[0]);
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(r.values(1, p), 0.0);
    for (double v : r.values.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Rca, MatchesOracleOnRandomMatrix) {
    std::mt19937_64 rng(7);
    std::lognormal_distribution<double> ln(0.0, 2.0);
    Matrix<double> x(30, 50);
    for (auto& v : x.data()) v = ln(rng);
    const auto got = compute_rca(x).values;
    const auto want = oracle::rca(x);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12 * want.data()[i]);
}

TEST(Rca, ScaleInvariant) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    Matrix<double> x(5, 7), y(5, 7);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x.data()[i] = u(rng);
        y.data()[i] = 1000.0 * x.data()[i];
    }
    const auto a = compute_rca(x).values, b = compute_rca(y).values;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(Threshold, OneAtExactlyOne) {
    RcaMatrix r{from_rows({{1.0, 0.999999}, {2.0, 0.0}}), {false, false}, {false, false}};
    const auto m = threshold_mcp(r);
    EXPECT_EQ(m.m(0, 0), 1);
    EXPECT_EQ(m.m(0, 1), 0);
    EXPECT_EQ(m.m(1, 0), 1);
    EXPECT_EQ(m.m(1, 1), 0);
    EXPECT_EQ(m.provenance, MatrixProvenance::Thresholded);
}

TEST(FitnessComplexity, MatchesStraightLineOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_binary(10, 15, 0.4, seed);
        const auto fc = fitness_complexity(m);
        const auto ref = oracle::fitness_complexity(m, fc.iterations);
        for (std::size_t c = 0; c < m.rows(); ++c) EXPECT_NEAR(fc.fitness[c], ref.f[c], 1e-8 * ref.f[c]);
        for (std::size_t p = 0; p < m.cols(); ++p) EXPECT_NEAR(fc.complexity[p], ref.q[p], 1e-8 * ref.q[p]);
    }
}

TEST(FitnessComplexity, MeansAreOne) {
    const auto m = random_binary(12, 9, 0.5, 3);
    const auto fc = fitness_complexity(m);
    EXPECT_NEAR(stats::mean(fc.fitness), 1.0, 1e-12);
    EXPECT_NEAR(stats::mean(fc.complexity), 1.0, 1e-12);
}

TEST(FitnessComplexity, FullMatrixIsExactFixedPoint) {
    BinaryMatrix m(4, 5, 1);
    const auto fc = fitness_complexity(m);
    EXPECT_TRUE(fc.converged);
    EXPECT_EQ(fc.iterations, 1u);
    for (double f : fc.fitness) EXPECT_DOUBLE_EQ(f, 1.0);
}

TEST(FitnessComplexity, StairstepIsStrictlyMonotone) {
    const auto m = stairstep(12, 18);
    const auto fc = fitness_complexity(m);
    EXPECT_TRUE(fc.rank_stable);
    for (std::size_t c = 1; c < m.rows(); ++c) EXPECT_GT(fc.fitness[c - 1], fc.fitness[c]);
    // products held by fewer countries are more complex
    for (std::size_t p = 1; p < m.cols(); ++p) {
        std::size_t a = 0, b = 0;
        for (std::size_t c = 0; c < m.rows(); ++c) {
            a += m(c, p - 1);
            b += m(c, p);
        }
        if (a > b) EXPECT_LT(fc.complexity[p - 1], fc.complexity[p]);
        if (a == b) EXPECT_NEAR(fc.complexity[p - 1], fc.complexity[p], 1e-12 * fc.complexity[p]);
    }
}

TEST(FitnessComplexity, EmptyRowNamed) {
    BinaryMatrix m(3, 3, 1);
    for (auto& v : m.row(1)) v = 0;
    try {
        fitness_complexity(m);
        FAIL() << "expected StructuralError";
    } catch (const StructuralError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(FitnessComplexity, PrunedScattersZeros) {
    BinaryMatrix m(4, 4, 0);
    m(0, 0) = m(0, 1) = m(2, 0) = 1;
    const auto fc = fitness_complexity_pruned(m);
    EXPECT_EQ(fc.fitness[1], 0.0);
    EXPECT_EQ(fc.fitness[3], 0.0);
    EXPECT_EQ(fc.complexity[2], 0.0);
    EXPECT_GT(fc.fitness[0], fc.fitness[2]);
}

TEST(FitnessComplexity, RejectsNonPositiveStart) {
    BinaryMatrix m(2, 2, 1);
    const std::vector<double> f{1.0, 0.0}, q{1.0, 1.0};
    EXPECT_THROW(fitness_complexity(m, f, q), ValidationError);
}

TEST(Nrca, ColumnsSumToOne) {
    const auto r = compute_rca(from_rows({{1, 2, 0}, {3, 1, 0}, {2, 2, 0}}));
    const auto n = compute_nrca(r);
    for (std::size_t p = 0; p < 2; ++p) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) s += n.weights(c, p);
        EXPECT_NEAR(s, 1.0, 1e-15);
    }
    EXPECT_TRUE(n.empty_product[2]);
}

TEST(LogPrody, SingleExporterGivesItsLogGdp) {
    const auto r = compute_rca(from_rows({{5, 0}, {0, 7}}));
    const std::vector<double> gdp{1000.0, 100000.0};
    const auto lp = compute_logprody(r, gdp);
    EXPECT_NEAR(lp.values[0], 3.0, 1e-12);
    EXPECT_NEAR(lp.values[1], 5.0, 1e-12);
}

TEST(LogPrody, MissingGdpRenormalizes) {
    const auto r = compute_rca(from_rows({{1, 1}, {1, 1}, {1, 3}}));
    const std::vector<double> gdp{100.0, std::numeric_limits<double>::quiet_NaN(), 10000.0};
    const auto lp = compute_logprody(r, gdp);
    // product 0: rows 0 and 2 have RCA 4/3 and 2/3, renormalized to 2/3 and 1/3
    EXPECT_NEAR(lp.values[0], (2.0 / 3) * 2 + (1.0 / 3) * 4, 1e-12);
    EXPECT_FALSE(lp.missing[0]);
}

TEST(Herfindahl, SharesAndBounds) {
    const auto h = compute_herfindahl(from_rows({{1, 0, 0}, {1, 0, 0}, {2, 4, 0}}));
    EXPECT_NEAR(h.values[0], 0.25 * 0.25 + 0.25 * 0.25 + 0.5 * 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(h.values[1], 1.0);
    EXPECT_TRUE(h.missing[2]);
    EXPECT_TRUE(std::isnan(h.values[2]));
}
