#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ecx/error.hpp"
#include "ecx/hmm.hpp"
#include "ecx/synth.hpp"
#include "oracles.hpp"

using namespace ecx;

namespace {

HmmModel tiny_model() {
    HmmModel m;
    m.country = "X";
    m.delta = 1e-6;
    m.trained = true;
    m.mean = {-3.0, -1.0, 0.3, 1.5};
    m.variance = {0.5, 0.3, 0.2, 0.4};
    m.initial = {0.4, 0.3, 0.2, 0.1};
    m.transition = {StageArray{0.7, 0.1, 0.1, 0.1}, StageArray{0.2, 0.6, 0.1, 0.1},
                    StageArray{0.05, 0.15, 0.7, 0.1}, StageArray{0.1, 0.1, 0.2, 0.6}};
    return m;
}

Matrix<double> two_level_series(std::size_t products, std::size_t years, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.15);
    Matrix<double> s(products, years);
    for (std::size_t p = 0; p < products; ++p)
        for (std::size_t t = 0; t < years; ++t) {
            const double level = (p % 4 == 0) ? 0.05 : (p % 4 == 1) ? 0.4 : (p % 4 == 2) ? 1.8 : 5.0;
            s(p, t) = level * std::exp(n(rng));
        }
    return s;
}

}  // namespace

TEST(Hmm, PosteriorMatchesPathEnumeration) {
    const auto m = tiny_model();
    const std::vector<double> rca{0.05, 0.4, 1.3, 0.9, 4.0, 0.01};
    const auto got = posterior_marginals(m, rca);
    const auto want = oracle::posterior_by_enumeration(m, rca);
    ASSERT_EQ(got.rows(), rca.size());
    for (std::size_t t = 0; t < rca.size(); ++t)
        for (std::size_t k = 0; k < kStageCount; ++k) EXPECT_NEAR(got(t, k), want(t, k), 1e-12);
}

TEST(Hmm, PosteriorRowsSumToOne) {
    const auto m = tiny_model();
    const std::vector<double> rca{1e-9, 2.0, 0.2, 0.2, 7.0, 1.0, 0.5, 0.3};
    const auto post = posterior_marginals(m, rca);
    for (std::size_t t = 0; t < post.rows(); ++t) {
        double s = 0;
        for (auto v : post.row(t)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Hmm, DecodePicksPosteriorArgmax) {
    const auto m = tiny_model();
    const std::vector<double> rca{0.05, 0.05, 0.4, 1.3, 4.0, 4.0};
    const auto post = oracle::posterior_by_enumeration(m, rca);
    const auto stages = decode_stages(m, rca);
    for (std::size_t t = 0; t < rca.size(); ++t) {
        int best = 0;
        for (int k = 1; k < 4; ++k)
            if (post(t, k) > post(t, best)) best = k;
        EXPECT_EQ(stages[t], best + 1);
    }
}

TEST(Hmm, BaumWelchNeverDecreasesLikelihood) {
    const auto series = two_level_series(24, 15, 1);
    auto m = initial_model(series);
    double previous = -INFINITY;
    for (int it = 0; it < 30; ++it) {
        const double ll = baum_welch_step(m, series, 1e-4);
        EXPECT_GE(ll, previous - 1e-8);
        previous = ll;
    }
}

TEST(Hmm, TrainedStagesAreOrderedAndStochastic) {
    const auto series = two_level_series(40, 20, 2);
    const auto m = train_hmm(series);
    ASSERT_TRUE(m.trained);
    for (std::size_t k = 1; k < kStageCount; ++k) EXPECT_LT(m.mean[k - 1], m.mean[k]);
    double init = 0;
    for (auto v : m.initial) init += v;
    EXPECT_NEAR(init, 1.0, 1e-9);
    for (const auto& row : m.transition) {
        double s = 0;
        for (auto v : row) s += v;
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
    EXPECT_NEAR(m.stage_rca(4), 5.0, 0.5);
    EXPECT_NEAR(m.stage_rca(1), 0.05, 0.02);
}

TEST(Hmm, ConstantSeriesIsUntrained) {
    Matrix<double> s(5, 10, 1.0);
    const auto m = train_hmm(s);
    EXPECT_FALSE(m.trained);
    EXPECT_THROW(posterior_marginals(m, s.row(0)), ComputationError);
}

TEST(Hmm, ShortSeriesRejected) {
    Matrix<double> s(5, 4, 1.0);
    EXPECT_THROW(train_hmm(s), ValidationError);
}

TEST(Hmm, QuantizeUsesPooledEdges) {
    const std::array<double, 3> edges{std::log(0.5), std::log(1.0), std::log(2.0)};
    const std::vector<double> rca{0.1, 0.5, 0.99, 1.0, 3.0};
    const auto q = quantize_rca(rca, edges, 0.0);
    EXPECT_EQ(q, (std::vector<int>{1, 2, 2, 3, 4}));
}

TEST(Hmm, JsonRoundTrip) {
    auto m = tiny_model();
    m.log_likelihood = {-10.0, -9.5};
    const auto back = model_from_json(to_json(m));
    EXPECT_EQ(back.mean, m.mean);
    EXPECT_EQ(back.variance, m.variance);
    EXPECT_EQ(back.transition, m.transition);
    EXPECT_EQ(back.initial, m.initial);
    EXPECT_EQ(back.country, m.country);
    EXPECT_EQ(back.trained, m.trained);
}

TEST(Flips, CountsTransitions) {
    BinaryExportMatrix a{BinaryMatrix(1, 2, 0)}, b{BinaryMatrix(1, 2, 0)}, c{BinaryMatrix(1, 2, 0)};
    b.m(0, 0) = 1;
    c.m(0, 1) = 1;
    const std::vector<BinaryExportMatrix> seq{a, b, c};
    EXPECT_EQ(flip_count(seq), 3u);
    EXPECT_DOUBLE_EQ(mean_flip_count(seq), 1.5);
}

TEST(Regularize, ReducesFlickerOnSyntheticPanel) {
    SynthSpec spec;
    spec.generator = "flicker";
    spec.countries = 16;
    spec.products = 24;
    spec.years = 20;
    spec.noise = 0.3;
    const auto panel = synth_panel(spec, 3);
    const auto cube = compute_rca_cube(*panel.exports);
    std::vector<BinaryExportMatrix> thresholded;
    for (const auto& r : cube) thresholded.push_back(threshold_mcp(r));
    const auto reg = regularize_panel(*panel.exports);
    ASSERT_EQ(reg.matrices.size(), thresholded.size());
    EXPECT_EQ(reg.matrices.front().provenance, MatrixProvenance::HmmRegularized);
    EXPECT_LT(mean_flip_count(reg.matrices), mean_flip_count(thresholded));
}
