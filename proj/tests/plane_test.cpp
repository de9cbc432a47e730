#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ecx/error.hpp"
#include "ecx/plane.hpp"
#include "ecx/synth.hpp"

using namespace ecx;

namespace {

GridSpec unit_grid(std::size_t n = 10, std::size_t min_count = 1) {
    GridSpec g;
    g.nx = g.ny = n;
    g.min_count = min_count;
    return g;
}

// `copies` samples at every cell centre with the given field.
template <typename F>
std::vector<Displacement> centred_displacements(const GridSpec& g, std::size_t copies, F velocity) {
    std::vector<Displacement> out;
    for (std::size_t ix = 0; ix < g.nx; ++ix)
        for (std::size_t iy = 0; iy < g.ny; ++iy)
            for (std::size_t k = 0; k < copies; ++k) {
                const double x = g.center_x(ix), y = g.center_y(iy);
                const auto [vx, vy] = velocity(x, y);
                out.push_back({x, y, vx, vy});
            }
    return out;
}

template <typename F>
std::vector<PositionedValue> centred_values(const GridSpec& g, std::size_t copies, F h) {
    std::vector<PositionedValue> out;
    for (std::size_t ix = 0; ix < g.nx; ++ix)
        for (std::size_t iy = 0; iy < g.ny; ++iy)
            for (std::size_t k = 0; k < copies; ++k) out.push_back({g.center_x(ix), g.center_y(iy), h(g.center_x(ix), g.center_y(iy))});
    return out;
}

}  // namespace

TEST(Grid, UpperEdgeInclusiveAndOutsideRejected) {
    const auto g = unit_grid(4);
    EXPECT_EQ(g.cell_of(1.0, 1.0), (std::pair<std::size_t, std::size_t>{3, 3}));
    EXPECT_EQ(g.cell_of(0.0, 0.0), (std::pair<std::size_t, std::size_t>{0, 0}));
    EXPECT_EQ(g.cell_of(0.25, 0.5), (std::pair<std::size_t, std::size_t>{1, 2}));
    EXPECT_FALSE(g.cell_of(1.0001, 0.5).has_value());
    EXPECT_FALSE(g.cell_of(-0.1, 0.5).has_value());
    const std::vector<Displacement> outside{{1.5, 0.5, 0.0, 0.0}};
    EXPECT_THROW(build_velocity_field(outside, g), ValidationError);
}

TEST(Grid, ValidateRejectsDegenerate) {
    GridSpec g;
    g.nx = 0;
    EXPECT_THROW(g.validate(), ValidationError);
    g = GridSpec{};
    g.x_max = g.x_min;
    EXPECT_THROW(g.validate(), ValidationError);
}

TEST(PlanePoints, TiedRankScaledToUnit) {
    const std::vector<std::vector<double>> x{{3.0, 1.0, 2.0, 2.0}}, y{{10.0, 20.0, 30.0, 40.0}};
    const auto pts = plane_points(x, y, 2000, CoordinateConvention::TiedRank);
    ASSERT_EQ(pts.size(), 4u);
    EXPECT_DOUBLE_EQ(pts[0].x, 1.0);
    EXPECT_DOUBLE_EQ(pts[1].x, 0.0);
    EXPECT_DOUBLE_EQ(pts[2].x, 0.5);
    EXPECT_DOUBLE_EQ(pts[3].x, 0.5);
    EXPECT_DOUBLE_EQ(pts[3].y, 1.0);
    EXPECT_EQ(pts[0].year, 2000);
}

TEST(PlanePoints, MissingValuesSkipped) {
    const double nan = std::nan("");
    const std::vector<std::vector<double>> x{{1.0, nan, 3.0}}, y{{1.0, 2.0, 3.0}};
    const auto pts = plane_points(x, y, 2000, CoordinateConvention::Raw);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[1].entity, 2u);
    EXPECT_DOUBLE_EQ(pts[1].x, 3.0);
}

TEST(Displacements, PairsConsecutiveYears) {
    const std::vector<PlanePoint> pts{{0, 2000, 0.1, 0.2}, {0, 2001, 0.3, 0.1}, {1, 2000, 0.5, 0.5}, {0, 2002, 0.3, 0.3}};
    const auto d = displacements(pts);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d[0].x, 0.1);
    EXPECT_NEAR(d[0].dx, 0.2, 1e-15);
    EXPECT_NEAR(d[0].dy, -0.1, 1e-15);
    EXPECT_NEAR(d[1].dy, 0.2, 1e-15);
    const std::vector<PlanePoint> one_year{{0, 2000, 0.1, 0.2}};
    EXPECT_THROW(displacements(one_year), ValidationError);
}

TEST(JoinScalars, MismatchRejected) {
    const std::vector<PlanePoint> pts{{0, 2000, 0.1, 0.2}, {1, 2000, 0.3, 0.4}};
    const std::vector<ScalarSample> ok{{1, 2000, 5.0}, {0, 2000, 4.0}}, bad{{0, 2000, 4.0}, {2, 2000, 1.0}};
    const auto j = join_scalars(pts, ok);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_DOUBLE_EQ(j[0].value, 4.0);
    EXPECT_DOUBLE_EQ(j[1].x, 0.3);
    EXPECT_THROW(join_scalars(pts, bad), ValidationError);
}

TEST(VelocityField, ConstantDriftRecoveredInEveryCell) {
    const auto g = unit_grid(8, 3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Displacement> d;
    for (int i = 0; i < 3000; ++i) d.push_back({u(rng), u(rng), 0.01, -0.02});
    const auto f = build_velocity_field(d, g);
    for (std::size_t ix = 0; ix < g.nx; ++ix)
        for (std::size_t iy = 0; iy < g.ny; ++iy) {
            ASSERT_TRUE(f.populated(ix, iy));
            EXPECT_NEAR(f.vx(ix, iy), 0.01, 1e-15);
            EXPECT_NEAR(f.vy(ix, iy), -0.02, 1e-15);
        }
}

TEST(VelocityField, SparseCellsMaskedNotNaNLeaking) {
    const auto g = unit_grid(4, 2);
    const std::vector<Displacement> d{{0.1, 0.1, 1.0, 1.0}, {0.12, 0.1, 3.0, 1.0}, {0.9, 0.9, 5.0, 5.0}};
    const auto f = build_velocity_field(d, g);
    EXPECT_TRUE(f.populated(0, 0));
    EXPECT_DOUBLE_EQ(f.vx(0, 0), 2.0);
    EXPECT_FALSE(f.populated(3, 3));
    EXPECT_TRUE(std::isnan(f.vx(3, 3)));
    EXPECT_EQ(f.count(3, 3), 1u);
    EXPECT_EQ(f.populated_cells(), 1u);
}

TEST(VelocityField, TimeReversalNegates) {
    // entities jitter inside their own cell, so both directions bin identically
    const auto g = unit_grid(5, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-0.03, 0.03);
    std::vector<PlanePoint> fwd, rev;
    std::size_t id = 0;
    for (std::size_t ix = 0; ix < 5; ++ix)
        for (std::size_t iy = 0; iy < 5; ++iy, ++id)
            for (int t = 0; t < 4; ++t) {
                const double x = g.center_x(ix) + jitter(rng), y = g.center_y(iy) + jitter(rng);
                fwd.push_back({id, 2000 + t, x, y});
                rev.push_back({id, 2003 - t, x, y});
            }
    const auto a = build_velocity_field(fwd, g), b = build_velocity_field(rev, g);
    for (std::size_t i = 0; i < a.vx.size(); ++i) {
        EXPECT_NEAR(a.vx.data()[i], -b.vx.data()[i], 1e-15);
        EXPECT_NEAR(a.vy.data()[i], -b.vy.data()[i], 1e-15);
    }
}

TEST(Gradient, ConstantFieldIsZeroAndFitRefuses) {
    const auto g = unit_grid(6, 1);
    const auto h = build_h_field(centred_values(g, 1, [](double, double) { return 2.5; }), g);
    const auto grad = gradient(h);
    for (double v : grad.dx.data()) EXPECT_EQ(v, 0.0);
    for (double v : grad.dy.data()) EXPECT_EQ(v, 0.0);
    const auto v = build_velocity_field(centred_displacements(g, 1, [](double, double) { return std::pair{0.1, 0.1}; }), g);
    EXPECT_THROW(fit_gradient_model(v, h), ComputationError);
}

TEST(Gradient, CentralDifferenceExactForQuadratic) {
    const auto g = unit_grid(10, 1);
    const auto h = build_h_field(centred_values(g, 1, [](double x, double y) { return x * x + 3 * y; }), g);
    const auto grad = gradient(h);
    for (std::size_t ix = 1; ix + 1 < g.nx; ++ix)
        for (std::size_t iy = 0; iy < g.ny; ++iy) {
            EXPECT_NEAR(grad.dx(ix, iy), 2 * g.center_x(ix), 1e-12);
            EXPECT_NEAR(grad.dy(ix, iy), 3.0, 1e-12);
        }
}

TEST(Gradient, OneSidedNextToMaskedCell) {
    const auto g = unit_grid(3, 1);
    std::vector<PositionedValue> s;
    for (std::size_t ix = 0; ix < 2; ++ix) s.push_back({g.center_x(ix), g.center_y(1), static_cast<double>(ix)});
    const auto grad = gradient(build_h_field(s, g));
    EXPECT_NEAR(grad.dx(0, 1), 1.0 / g.cell_width(), 1e-12);
    EXPECT_NEAR(grad.dx(1, 1), 1.0 / g.cell_width(), 1e-12);
    EXPECT_TRUE(std::isnan(grad.dy(0, 1)));
    EXPECT_TRUE(std::isnan(grad.dx(2, 2)));
}

TEST(GradientModel, BowlRecoversCoefficient) {
    const auto g = unit_grid(20, 1);
    const double k = 0.7;
    auto h = [](double x, double y) { return (x - 0.4) * (x - 0.4) + 2 * (y - 0.6) * (y - 0.6); };
    const auto hf = build_h_field(centred_values(g, 1, h), g);
    const auto vf = build_velocity_field(
        centred_displacements(g, 1, [&](double x, double y) { return std::pair{-k * 2 * (x - 0.4), -k * 4 * (y - 0.6)}; }), g);
    const auto fit = fit_gradient_model(vf, hf);
    EXPECT_EQ(fit.cells, 400u);
    EXPECT_NEAR(fit.x.k, k, 0.02 * k);
    EXPECT_NEAR(fit.y.k, k, 0.02 * k);
    EXPECT_GT(fit.x.r_squared, 0.99);
    EXPECT_GT(fit.y.r_squared, 0.99);
}

TEST(GradientModel, ShiftingHChangesNothing) {
    const auto g = unit_grid(12, 1);
    auto h = [](double x, double y) { return std::sin(3 * x) + y * y; };
    const auto vf = build_velocity_field(centred_displacements(g, 1, [](double x, double y) { return std::pair{x - y, y * x}; }), g);
    const auto a = fit_gradient_model(vf, build_h_field(centred_values(g, 1, h), g));
    const auto b = fit_gradient_model(vf, build_h_field(centred_values(g, 1, [&](double x, double y) { return h(x, y) + 40.0; }), g));
    EXPECT_NEAR(a.x.k, b.x.k, 1e-9);
    EXPECT_NEAR(a.y.r_squared, b.y.r_squared, 1e-9);
}

TEST(GradientModel, UnrelatedNoiseHasNoExplanatoryPower) {
    const auto g = unit_grid(20, 1);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto vf = build_velocity_field(centred_displacements(g, 1, [&](double, double) { return std::pair{n(rng), n(rng)}; }), g);
    const auto hf = build_h_field(centred_values(g, 1, [](double x, double y) { return x * x + y * y; }), g);
    const auto fit = fit_gradient_model(vf, hf);
    EXPECT_LT(fit.x.r_squared, 0.05);
    EXPECT_LT(fit.y.r_squared, 0.05);
}

TEST(Minima, FlatLineOfHMinima) {
    const auto g = unit_grid(20, 1);
    const double y0 = g.center_y(6);
    const auto line = minima_line(centred_values(g, 20, [&](double x, double y) { return x + (y - y0) * (y - y0); }), g, 20, 1);
    for (std::size_t i = 0; i < g.nx; ++i) {
        EXPECT_DOUBLE_EQ(line.raw[i], y0);
        EXPECT_NEAR(line.smoothed[i], y0, 1e-12);
        EXPECT_NEAR(line.standard_error[i], 0.0, 1e-12);
    }
    EXPECT_GT(line.bandwidth, 0.0);
}

TEST(Minima, SingleBootstrapIsDegenerate) {
    const auto g = unit_grid(10, 1);
    const auto line = minima_line(centred_values(g, 1, [](double x, double y) { return x * y; }), g, 1, 1);
    EXPECT_TRUE(line.degenerate);
    for (double se : line.standard_error) EXPECT_EQ(se, 0.0);
    EXPECT_THROW(minima_line(centred_values(g, 1, [](double, double) { return 0.0; }), g, 0, 1), ValidationError);
}

TEST(Minima, VelocityMinimaTrackHMinima) {
    SynthSpec spec;
    spec.generator = "drift";
    spec.products = 400;
    spec.years = 30;
    spec.strength = 0.05;
    spec.diffusion = 0.01;
    const auto panel = synth_panel(spec, 5);
    const auto& traj = *panel.trajectories;
    const auto grid = covering_grid(traj.points, 10, 10, 5);
    const auto d = displacements(traj.points);
    const auto hv = join_scalars(traj.points, traj.scalars);
    const auto v_line = minima_line(d, grid, 50, 2);
    const auto h_line = minima_line(hv, grid, 50, 2);
    std::size_t agree = 0, columns = 0;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        if (!std::isfinite(v_line.smoothed[i]) || !std::isfinite(h_line.smoothed[i])) continue;
        ++columns;
        const double se = std::hypot(v_line.standard_error[i], h_line.standard_error[i]);
        if (std::fabs(v_line.smoothed[i] - h_line.smoothed[i]) <= 2 * se) ++agree;
    }
    ASSERT_GT(columns, 5u);
    EXPECT_GE(static_cast<double>(agree), 0.9 * static_cast<double>(columns));
}

TEST(GridCsv, MaskedCellsEmpty) {
    const auto g = unit_grid(2, 2);
    const std::vector<Displacement> d{{0.1, 0.1, 1.0, 2.0}, {0.2, 0.2, 3.0, 4.0}};
    const std::vector<PositionedValue> h{{0.1, 0.1, 0.5}, {0.2, 0.2, 1.5}};
    std::ostringstream out;
    write_grid_csv(out, build_velocity_field(d, g), build_h_field(h, g));
    EXPECT_EQ(out.str(), "cellX,cellY,vx,vy,H,count\n0,0,2,3,1,2\n0,1,,,,0\n1,0,,,,0\n1,1,,,,0\n");
}
