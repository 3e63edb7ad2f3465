#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "renewnet/builtin.hpp"
#include "renewnet/optimize.hpp"

using namespace renewnet;

TEST(Maximize, AnalyticQuadratic) {
    MaximizeOptions o;
    o.tol = 1e-4;
    o.jobs = 1;
    const auto r = maximize([](double p) { return -(p - 0.5) * (p - 0.5); }, o);
    EXPECT_NEAR(r.param_star, 0.5, o.tol);
    EXPECT_LE(r.refinement.back().hi - r.refinement.back().lo, o.tol);
}

TEST(Maximize, OffGridQuadratic) {
    MaximizeOptions o;
    o.tol = 1e-3;
    const auto r = maximize([](double p) { return -(p - 0.3141) * (p - 0.3141); }, o);
    EXPECT_NEAR(r.param_star, 0.3141, o.tol);
    EXPECT_GE(r.value_star, r.best().objective - 1e-12);
}

TEST(Maximize, RefinedValueNeverBelowGridBest) {
    for (double c : {0.0, 0.07, 0.5, 0.93, 1.0}) {
        MaximizeOptions o;
        o.grid_points = 7;
        const auto r = maximize([c](double p) { return -std::abs(p - c) + 0.1 * std::sin(40 * p); }, o);
        EXPECT_GE(r.value_star, r.best().objective - 1e-12) << c;
        EXPECT_GE(r.param_star, 0.0);
        EXPECT_LE(r.param_star, 1.0);
    }
}

TEST(Maximize, RejectsBadTolerance) {
    MaximizeOptions o;
    o.tol = 0.0;
    EXPECT_THROW(maximize([](double) { return 0.0; }, o), Error);
}

TEST(Sweep, ConstantObjectiveTiesToSmallestParam) {
    const auto r = sweep([](double) { return 1.0; }, {0.7, 0.1, 0.4});
    EXPECT_EQ(r.argmax, 0u);
    EXPECT_EQ(r.best().param, 0.1);
    EXPECT_EQ(r.rows[1].param, 0.4);
}

TEST(Sweep, FailedPointsAreRecordedAndSkipped) {
    const auto r = sweep(
        [](double p) {
            if (p > 0.45 && p < 0.55) throw std::runtime_error("boom");
            if (p > 0.75) return std::nan("");
            return p;
        },
        {0.0, 0.25, 0.5, 0.75, 1.0});
    EXPECT_FALSE(r.rows[2].ok);
    EXPECT_EQ(r.rows[2].error, "boom");
    EXPECT_FALSE(r.rows[4].ok);
    EXPECT_EQ(r.best().param, 0.75);
}

TEST(Sweep, AllFailedIsAnError) {
    EXPECT_THROW(sweep([](double) -> double { throw std::runtime_error("no"); }, {0.1, 0.2}), Error);
    EXPECT_THROW(sweep([](double) { return 0.0; }, {}), Error);
}

TEST(Sweep, JobCountDoesNotChangeResults) {
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(k / 40.0);
    auto f = [](double p) { return std::sin(7 * p) * std::exp(-p); };
    const auto a = sweep(f, grid, 1), b = sweep(f, grid, 8);
    EXPECT_EQ(a.table().str(), b.table().str());
    EXPECT_EQ(a.argmax, b.argmax);
}

TEST(Sweep, TableHasOneHeader) {
    const auto r = sweep([](double p) { return 2 * p; }, {0.0, 0.5});
    EXPECT_EQ(r.table().str(), "param,objective\n0,0\n0.5,1\n");
}

TEST(Objectives, MatingEndpointsAreZero) {
    MatingParams p;
    p.horizon = 50;
    RunSettings rs;
    rs.da = 0.5;
    const auto f = utility_objective(parameter_family(mating_config(p), "theta"), rs);
    const auto r = sweep(f, {0.0, 0.5, 1.0}, 1);
    EXPECT_EQ(r.rows[0].objective, 0.0);
    EXPECT_EQ(r.rows[2].objective, 0.0);
    EXPECT_GT(r.rows[1].objective, 0.0);
    EXPECT_EQ(r.best().param, 0.5);
}

TEST(Objectives, DeterministicAcrossRepeats) {
    ResourceParams p;
    p.horizon = 3;
    RunSettings rs;
    rs.da = 0.02;
    const auto f = netgain_objective(parameter_family(resource_config(p), "eta"), rs);
    MaximizeOptions o;
    o.grid_points = 5;
    o.tol = 0.05;
    const auto a = maximize(f, o), b = maximize(f, o);
    EXPECT_EQ(a.table().str(), b.table().str());
    EXPECT_EQ(a.refinement_table().str(), b.refinement_table().str());
    EXPECT_EQ(a.param_star, b.param_star);
    EXPECT_EQ(a.value_star, b.value_star);
}

TEST(Objectives, PicardAndLxfAgreeOnShortHorizon) {
    ResourceParams p;
    p.horizon = 1;
    RunSettings lxf, pic;
    lxf.da = pic.da = 0.0025;
    pic.solver = SolverKind::picard;
    pic.picard_snapshots = 400;
    const auto fam = parameter_family(resource_config(p), "eta");
    const double a = netgain_objective(fam, lxf)(0.3), b = netgain_objective(fam, pic)(0.3);
    EXPECT_NEAR(a, b, 0.01 * std::abs(a));
}

TEST(Objectives, ContinuityGapsShrink) {
    MatingParams mp;
    mp.horizon = 40;
    RunSettings rs;
    rs.da = 0.5;
    const auto fm = utility_objective(parameter_family(mating_config(mp), "theta"), rs);
    ResourceParams rp;
    rp.horizon = 3;
    RunSettings rr;
    rr.da = 0.02;
    const auto fr = netgain_objective(parameter_family(resource_config(rp), "eta"), rr);
    for (const auto& [f, p] : {std::pair{fm, 0.6}, std::pair{fr, 0.3}}) {
        const double f0 = f(p);
        const double g2 = std::abs(f(p + 1e-2) - f0), g3 = std::abs(f(p + 1e-3) - f0);
        EXPECT_LT(g3, g2);
    }
}
