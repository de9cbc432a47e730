#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ecx/config.hpp"
#include "ecx/error.hpp"
#include "ecx/panel.hpp"
#include "ecx/parallel.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"
#include "ecx/synth.hpp"
#include "ecx/trajectory.hpp"

using namespace ecx;

TEST(Csv, ExportPanelParsesAndAggregatesDigits) {
    std::istringstream in(
        "year,country,product,value\n"
        "2000,AAA,010111,5\n"
        "2000,AAA,010112,3\n"
        "2000,BBB,020000,2\n"
        "\n"
        "2001,BBB,010111,7\n");
    const auto p = parse_export_csv(in, 4);
    EXPECT_EQ(p.year_count(), 2u);
    EXPECT_EQ(p.countries().size(), 2u);
    EXPECT_EQ(p.products().size(), 2u);
    const auto a = p.countries().index("AAA");
    const auto prod = p.products().index("0101");
    EXPECT_DOUBLE_EQ(p.value(a, prod, 0), 8.0);
    EXPECT_FALSE(p.country_active(a, 1));
}

TEST(Csv, ExportPanelRoundTrip) {
    std::istringstream in("year,country,product,value\n2000,A,0101,1.5\n2001,B,0202,0.1\n");
    const auto p = parse_export_csv(in, 4);
    std::ostringstream out;
    write_export_csv(p, out);
    std::istringstream again(out.str());
    const auto q = parse_export_csv(again, 4);
    std::ostringstream out2;
    write_export_csv(q, out2);
    EXPECT_EQ(out.str(), out2.str());
}

TEST(Csv, ErrorsCarryLineNumbers) {
    std::istringstream bad_header("year,country,value\n");
    EXPECT_THROW(parse_export_csv(bad_header, 4), ParseError);
    std::istringstream negative("year,country,product,value\n2000,A,0101,-1\n");
    EXPECT_THROW(parse_export_csv(negative, 4), ValidationError);
    std::istringstream text("year,country,product,value\n2000,A,0101,1\n2000,A,0102,abc\n");
    try {
        parse_export_csv(text, 4);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream digits("year,country,product,value\n2000,A,0101,1\n");
    EXPECT_THROW(parse_export_csv(digits, 5), ValidationError);
}

TEST(Csv, GdpPanel) {
    std::istringstream in("year,country,gdppc\n2000,A,1000\n2001,A,1100\n2000,B,500\n");
    const auto g = parse_gdp_csv(in);
    EXPECT_TRUE(g.has("A", 2001));
    EXPECT_FALSE(g.has("B", 2001));
    EXPECT_DOUBLE_EQ(g.value("A", 2000), 1000.0);
    EXPECT_THROW(g.value("B", 2001), ValidationError);
    std::istringstream dup("year,country,gdppc\n2000,A,1\n2000,A,2\n");
    EXPECT_THROW(parse_gdp_csv(dup), ValidationError);
}

TEST(Csv, TrajectoriesRoundTrip) {
    TrajectorySet t;
    t.entities = {"P1", "P2"};
    t.points = {{0, 2000, 0.1, 0.2}, {1, 2000, 0.3, 1.0 / 3.0}};
    t.scalars = {{0, 2000, 0.5}, {1, 2000, 0.25}};
    std::ostringstream out;
    write_trajectories_csv(t, out);
    std::istringstream in(out.str());
    const auto back = parse_trajectories_csv(in);
    ASSERT_EQ(back.points.size(), 2u);
    EXPECT_EQ(back.points[1].y, 1.0 / 3.0);
    EXPECT_EQ(back.scalars.size(), 2u);
}

TEST(Stats, TiedRanks) {
    const std::vector<double> x{10, 20, 20, 5};
    EXPECT_EQ(stats::tied_rank(x), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Stats, QuantileMatchesLinearInterpolation) {
    const std::vector<double> s{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(stats::quantile_sorted(s, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(stats::quantile_sorted(s, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(stats::quantile_sorted(s, 1.0), 4.0);
}

TEST(Stats, SpearmanExactPValue) {
    // perfectly decreasing over 4 points: 1 of 24 permutations reaches rho = -1
    const std::vector<double> x{1, 2, 3, 4}, y{4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(stats::spearman(x, y), -1.0);
    EXPECT_NEAR(stats::spearman_negative_p_value(x, y), 1.0 / 24.0, 1e-15);
}

TEST(Stats, NormalQuantile) {
    EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963984540054, 1e-9);
    EXPECT_NEAR(stats::normal_quantile(0.5), 0.0, 1e-12);
}

TEST(Random, SubstreamsAreKeyedAndStable) {
    auto a = substream(1, {2, 3});
    auto b = substream(1, {2, 3});
    auto c = substream(1, {3, 2});
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}

TEST(Parallel, ChunksCoverRangeIndependentlyOfWorkers) {
    const auto ch = parallel::chunk_ranges(130, 64);
    EXPECT_EQ(ch.size(), 64u);
    EXPECT_EQ(ch.front().first, 0u);
    EXPECT_EQ(ch.back().second, 130u);
    for (std::size_t i = 1; i < ch.size(); ++i) EXPECT_EQ(ch[i].first, ch[i - 1].second);
    EXPECT_EQ(parallel::chunk_ranges(3, 64).size(), 3u);
    EXPECT_TRUE(parallel::chunk_ranges(0).empty());
}

TEST(Config, DefaultsAndRoundTrip) {
    RunConfig c;
    EXPECT_EQ(c.count("grid_nx"), 20u);
    EXPECT_EQ(c.seed(), 0u);
    c.set("seed", "12345");
    c.set("horizons", "2, 3");
    c.set("sigma", "0.25");
    std::ostringstream out;
    c.write(out);
    std::istringstream in(out.str());
    const auto back = RunConfig::parse(in);
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.counts("horizons"), (std::vector<std::size_t>{2, 3}));
    std::ostringstream again;
    back.write(again);
    EXPECT_EQ(out.str(), again.str());
}

TEST(Config, RejectsBadKeysAndValues) {
    RunConfig c;
    EXPECT_THROW(c.set("nope", "1"), ValidationError);
    EXPECT_THROW(c.set("grid_nx", "-3"), ValidationError);
    EXPECT_THROW(c.set("sigma", "abc"), ValidationError);
    EXPECT_THROW(c.set("regularization", "magic"), ValidationError);
    EXPECT_THROW(c.set("methods", "spsb,psychic"), ValidationError);
    std::istringstream in("# comment\n\nseed = 7\nbad line\n");
    EXPECT_THROW(RunConfig::parse(in), InputError);
}

TEST(Synth, DeterministicForSeed) {
    SynthSpec spec;
    spec.noise = 0.1;
    const auto a = synth_panel(spec, 4), b = synth_panel(spec, 4), c = synth_panel(spec, 5);
    std::ostringstream sa, sb, sc;
    write_export_csv(*a.exports, sa);
    write_export_csv(*b.exports, sb);
    write_export_csv(*c.exports, sc);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(sa.str(), sc.str());
}

TEST(Synth, StairstepShape) {
    const auto m = stairstep(4, 8);
    std::vector<int> rows;
    for (std::size_t r = 0; r < 4; ++r) {
        int s = 0;
        for (auto v : m.row(r)) s += v;
        rows.push_back(s);
        for (std::size_t c = 1; c < 8; ++c) EXPECT_LE(m(r, c), m(r, c - 1));
    }
    EXPECT_EQ(rows, (std::vector<int>{8, 6, 4, 2}));
}

TEST(Synth, BalancedDesignIsItsOwnRca) {
    // no full row or column, otherwise the margins cannot all be met
    BinaryMatrix pattern(6, 9, 0);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 9; ++c) pattern(r, c) = (r + c) % 3 == 0;
    const auto d = balanced_design(pattern, 0.3);
    for (std::size_t r = 0; r < 6; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 9; ++c) {
            s += d(r, c);
            if (pattern(r, c)) EXPECT_GE(std::log(d(r, c)), 0.3 - 1e-9);
            else EXPECT_LE(std::log(d(r, c)), -0.3 + 1e-9);
        }
        EXPECT_NEAR(s, 9.0, 1e-8);
    }
    for (std::size_t c = 0; c < 9; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < 6; ++r) s += d(r, c);
        EXPECT_NEAR(s, 6.0, 1e-8);
    }
}

TEST(Synth, SpecKeysValidated) {
    SynthSpec s;
    s.set("countries", "12");
    EXPECT_EQ(s.countries, 12u);
    EXPECT_THROW(s.set("colour", "blue"), ValidationError);
}
