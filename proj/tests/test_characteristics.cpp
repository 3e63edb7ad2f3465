#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "renewnet/characteristics.hpp"

using namespace renewnet;

namespace {

const double e1 = std::exp(1.0);

std::shared_ptr<const CharacteristicField> field(const std::string& g, const std::string& d, double L, double T,
                                                 bool generic = false) {
    CharacteristicOptions o;
    o.force_generic = generic;
    return std::make_shared<const CharacteristicField>(Expression::parse(g, {"t", "x"}), Expression::parse(d, {"t", "x"}),
                                                       L, T, std::nullopt, o);
}

ScalarIBVP ibvp(std::shared_ptr<const CharacteristicField> f, const std::string& u0, BoundarySignal b = {}) {
    ScalarIBVP p;
    p.field = std::move(f);
    p.u0 = Expression::parse(u0, {"x"});
    p.b = std::move(b);
    return p;
}

// b(t) = 1 + sin(3t)/2 sampled finely enough that its linear interpolant is
// within 1e-9 of the smooth curve where the tests look.
BoundarySignal wavy(double T, std::size_t n = 20000) {
    std::vector<double> t, b;
    for (std::size_t k = 0; k <= n; ++k) {
        t.push_back(T * static_cast<double>(k) / static_cast<double>(n));
        b.push_back(1.0 + 0.5 * std::sin(3.0 * t.back()));
    }
    return BoundarySignal(t, b);
}

double wavy_fn(double t) { return 1.0 + 0.5 * std::sin(3.0 * t); }

class BothPaths : public ::testing::TestWithParam<bool> {};

}  // namespace

INSTANTIATE_TEST_SUITE_P(Characteristics, BothPaths, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "generic" : "tabulated"; });

TEST_P(BothPaths, FlowUnitSpeedIsExact) {
    const auto f = field("1", "0", 10.0, 5.0, GetParam());
    for (double t : {0.0, 0.3, 1.7, 4.0}) EXPECT_NEAR(f->flow_X(t, 0.0, 0.5), 0.5 + t, 1e-12);
    EXPECT_NEAR(f->flow_X(0.0, 2.0, 3.0), 1.0, 1e-12);
    EXPECT_NEAR(f->flow_X(2.0, 0.0, f->flow_X(0.0, 2.0, 3.0)), 3.0, 1e-12);
}

TEST_P(BothPaths, FlowLinearGrowth) {
    const auto f = field("x+1", "0", 5.0, 2.0, GetParam());
    EXPECT_NEAR(f->flow_X(1.0, 0.0, 0.0), e1 - 1.0, 1e-8);
    EXPECT_NEAR(f->gamma(1.0), e1 - 1.0, 1e-8);
    for (double x0 : {0.0, 0.4, 1.3})
        for (double t : {0.2, 0.9}) EXPECT_NEAR(f->flow_X(t, 0.0, x0), oracle::linear_growth_flow(t, 0.0, x0), 1e-8);
    const double back = f->flow_X(0.0, 1.2, 2.5);
    EXPECT_NEAR(f->flow_X(1.2, 0.0, back), 2.5, 1e-9);
}

TEST_P(BothPaths, HitTimes) {
    EXPECT_NEAR(field("1", "0", 4.0, 4.0, GetParam())->hit_time_T(0.0, 3.0, 1.25), 1.75, 1e-12);
    EXPECT_NEAR(field("2", "0", 4.0, 4.0, GetParam())->hit_time_T(0.0, 3.0, 1.0), 2.5, 1e-12);
    EXPECT_NEAR(field("x+1", "0", 3.0, 3.0, GetParam())->hit_time_T(0.0, 2.0, e1 - 1.0), 1.0, 1e-8);
}

TEST_P(BothPaths, GammaAndInverse) {
    const auto unit = field("1", "0", 4.0, 4.0, GetParam());
    EXPECT_NEAR(unit->gamma(1.5), 1.5, 1e-12);
    const auto fast = field("2.5", "0", 10.0, 4.0, GetParam());
    EXPECT_NEAR(fast->gamma(1.5), 3.75, 1e-12);
    const auto lin = field("x+1", "0", 3.0, 3.0, GetParam());
    for (double x : {0.1, 0.8, 1.9}) EXPECT_NEAR(lin->gamma(lin->Gamma_inv(x)), x, 1e-8);
}

TEST_P(BothPaths, TransportOfBoundaryValue) {
    const auto p = ibvp(field("1", "0", 3.0, 2.0, GetParam()), "0", BoundarySignal::constant(0.7));
    EXPECT_NEAR(exact_value(p, 1.0, 0.5), 0.7, 1e-12);
    EXPECT_NEAR(exact_value(p, 1.0, 1.5), 0.0, 1e-12);
    // right-continuous on gamma, left limit from the boundary side
    const double gam = p.field->gamma(1.0);
    EXPECT_NEAR(exact_value(p, 1.0, gam), 0.0, 1e-12);
    EXPECT_NEAR(exact_value_left(p, 1.0, gam), 0.7, 1e-12);
}

TEST_P(BothPaths, ConstantRate) {
    const double lambda = 0.3;
    const auto p = ibvp(field("1", "0.3", 4.0, 2.0, GetParam()), "2");
    for (double x : {1.5, 2.0, 3.9}) EXPECT_NEAR(exact_value(p, 1.2, x), 2.0 * std::exp(lambda * 1.2), 1e-10);
}

TEST_P(BothPaths, LinearGrowthDatumBranch) {
    const auto p = ibvp(field("x+1", "0", 6.0, 1.0, GetParam()), "1");
    for (double x : {2.0, 3.0, 5.5}) EXPECT_NEAR(exact_value(p, 1.0, x), std::exp(-1.0), 1e-9);
}

TEST_P(BothPaths, MatchesClosedFormsOnBothBranches) {
    const oracle::Fn u0 = [](double x) { return std::exp(-(x - 1.0) * (x - 1.0)) + 0.2 * x; };
    const std::string u0s = "exp(-(x - 1)^2) + 0.2*x";
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> tt(0.05, 1.5), xx(0.0, 3.0);

    const auto pc = ibvp(field("1.5", "-0.2", 3.0, 1.5, GetParam()), u0s, wavy(1.5));
    const auto pl = ibvp(field("x+1", "0", 3.0, 1.5, GetParam()), u0s, wavy(1.5));
    const auto pa = ibvp(field("1", "-x/2", 3.0, 1.5, GetParam()), u0s, wavy(1.5));
    for (int k = 0; k < 300; ++k) {
        const double t = tt(rng), x = xx(rng);
        EXPECT_NEAR(exact_value(pc, t, x), oracle::constant_coeffs(1.5, -0.2, u0, wavy_fn, t, x), 1e-7) << t << " " << x;
        EXPECT_NEAR(exact_value(pl, t, x), oracle::linear_growth(u0, wavy_fn, t, x), 1e-7) << t << " " << x;
        EXPECT_NEAR(exact_value(pa, t, x), oracle::age_mortality(u0, wavy_fn, t, x), 1e-7) << t << " " << x;
    }
}

TEST_P(BothPaths, IntegralsAndCellAverages) {
    const oracle::Fn u0 = [](double x) { return std::exp(-(x - 1.0) * (x - 1.0)); };
    const auto p = ibvp(field("x+1", "0", 3.0, 1.0, GetParam()), "exp(-(x - 1)^2)", wavy(1.0));
    const double t = 0.7, gam = std::exp(t) - 1.0;
    auto u = [&](double x) { return oracle::linear_growth(u0, wavy_fn, t, x); };
    EXPECT_NEAR(exact_integral(p, t, 0.2, 2.5), oracle::integral(u, 0.2, 2.5, gam), 1e-7);
    const auto w = Expression::parse("1 + x", {"x"});
    EXPECT_NEAR(exact_integral(p, t, 0.0, 3.0, &w),
                oracle::integral([&](double x) { return (1 + x) * u(x); }, 0.0, 3.0, gam), 1e-7);

    std::vector<double> faces;
    for (int j = 0; j <= 30; ++j) faces.push_back(0.1 * j);
    const auto avg = exact_cell_averages(p, t, faces);
    for (int j = 0; j < 30; ++j)
        EXPECT_NEAR(avg[j], oracle::integral(u, faces[j], faces[j + 1], gam) / 0.1, 1e-7) << j;
}

TEST(Characteristics, TimeDependentGrowth) {
    // g = 1 + t: x - x0 = (t - t0) + (t^2 - t0^2)/2, u constant along characteristics
    const auto f = field("1 + t", "0", 5.0, 2.0);
    EXPECT_FALSE(f->tabulated());
    EXPECT_NEAR(f->flow_X(1.0, 0.0, 0.5), 2.0, 1e-10);
    EXPECT_NEAR(f->hit_time_T(0.0, 2.0, 1.0), std::sqrt(7.0) - 1.0, 1e-10);
    const auto p = ibvp(f, "1 + x", BoundarySignal::constant(3.0));
    EXPECT_NEAR(exact_value(p, 1.0, 2.0), 1.5, 1e-10);
    const double tau = std::sqrt(7.0) - 1.0;
    EXPECT_NEAR(exact_value(p, 2.0, 1.0), 3.0 / (1.0 + tau), 1e-10);
}

TEST(Characteristics, ProfileFlagsGamma) {
    const auto p = ibvp(field("1", "0", 2.0, 1.0), "1", BoundarySignal::constant(2.0));
    const std::vector<double> grid{0.1, 0.5, 0.5 + 1e-6, 1.5};
    const auto pr = exact_profile(p, 0.5, grid);
    EXPECT_EQ(pr.values, (std::vector<double>{2.0, 1.0, 1.0, 1.0}));
    EXPECT_FALSE(pr.near_gamma[0]);
    EXPECT_TRUE(pr.near_gamma[1]);
    EXPECT_TRUE(pr.near_gamma[2]);
    EXPECT_FALSE(pr.near_gamma[3]);
}

TEST(Characteristics, BoundaryTrace) {
    const std::vector<std::pair<std::string, std::string>> fields{{"1", "0"}, {"x+1", "-0.3"}, {"2 + sin(x)", "-x/2"},
                                                                  {"1 + t/4", "0.1*t"}};
    const auto b = wavy(2.0);
    for (const auto& [g, d] : fields) {
        const auto p = ibvp(field(g, d, 2.0, 2.0), "1", b);
        for (double t : {0.3, 0.9, 1.6}) {
            const double trace = p.field->g(t, 0.0) * exact_value(p, t, 1e-6);
            EXPECT_NEAR(trace, b(t), 1e-4 * std::abs(b(t))) << g;
        }
    }
}

TEST(Characteristics, Monotonicity) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> tt(0.0, 2.0), xx(0.0, 2.0);
    const auto f = field("1 + x/2", "-x/3 + 0.1", 2.0, 2.0);
    const auto lo = ibvp(f, "exp(-x)", wavy(2.0));
    BoundarySignal hi_b = wavy(2.0);
    {
        std::vector<double> v = hi_b.values();
        for (auto& x : v) x += 0.05;
        hi_b = BoundarySignal(hi_b.times(), v);
    }
    const auto hi = ibvp(f, "exp(-x) + 0.1*x", hi_b);
    for (int k = 0; k < 1000; ++k) {
        const double t = tt(rng), x = xx(rng);
        ASSERT_LE(exact_value(lo, t, x), exact_value(hi, t, x) + 1e-9) << t << " " << x;
    }
}

TEST(Characteristics, AprioriBoundsOnRandomConstantBoxes) {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> gdist(0.5, 1.0), ddist(-0.8, 0.8), bdist(0.0, 2.0), udist(0.0, 3.0);
    for (int k = 0; k < 20; ++k) {
        const double g = gdist(rng), d = ddist(rng), bc = bdist(rng), u = udist(rng);
        const double L = 3.0, C = 2.0 * std::abs(d);
        const auto p = ibvp(field(detail::format_number(g), detail::format_number(d), L, 2.0),
                            detail::format_number(u) + "*(1 + sin(5*x))/2", BoundarySignal::constant(bc));
        std::vector<double> grid;
        for (int j = 0; j <= 600; ++j) grid.push_back(L * j / 600.0);
        for (double t : {0.5, 1.0, 2.0}) {
            const auto pr = exact_profile(p, t, grid);
            double sup = 0.0;
            for (double v : pr.values) sup = std::max(sup, std::abs(v));
            const double l1 = exact_integral(p, t, 0.0, L);
            const double u0_l1 = exact_integral(p, 0.0, 0.0, L);
            EXPECT_LE(sup, (u + bc / g) * std::exp(C * t) + 1e-12);
            EXPECT_LE(l1, (u0_l1 + bc * t / g) * std::exp(C * t) + 1e-12);
        }
    }
}

namespace {

// L1 gap of two constant-coefficient runs against
// [||u_o' - u_o''|| + k ||b' - b''||_L1] e^{Ct}.
void check_l1_stability(double g_lo, double g_hi, bool unit_factor, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> gdist(g_lo, g_hi), ddist(-0.8, 0.8), small(0.0, 0.5);
    for (int k = 0; k < 20; ++k) {
        const double g = gdist(rng), d = ddist(rng), eps = small(rng), b1 = small(rng), b2 = small(rng);
        const double L = 3.0, C = 2.0 * std::abs(d);
        const auto f = field(detail::format_number(g), detail::format_number(d), L, 2.0);
        const auto p1 = ibvp(f, "exp(-x)", BoundarySignal::constant(b1));
        const auto p2 = ibvp(f, "exp(-x) + " + detail::format_number(eps) + "*sin(x)^2", BoundarySignal::constant(b2));
        const double du0 = oracle::gauss([&](double x) { return eps * std::sin(x) * std::sin(x); }, 0.0, L, 64);
        for (double t : {0.5, 1.5}) {
            const double gam = f->gamma(t);
            const double gap = oracle::integral([&](double x) { return std::abs(exact_value(p1, t, x) - exact_value(p2, t, x)); },
                                                0.0, L, gam);
            const double kb = unit_factor ? std::max(1.0, 1.0 / g) : 1.0 / g;
            EXPECT_LE(gap, (du0 + std::abs(b1 - b2) * t * kb) * std::exp(C * t) + 1e-9) << g << " " << d;
        }
    }
}

}  // namespace

TEST(Characteristics, L1StabilitySlowGrowth) { check_l1_stability(0.5, 1.0, false, 29); }

TEST(Characteristics, L1StabilityFastGrowth) { check_l1_stability(1.0, 3.0, true, 31); }

TEST(Characteristics, InflowMassIsNotDividedByFastGrowth) {
    // g = 2, d = 0, u_o = 0, b = 1: the inflow mass up to t is t, not t / 2
    const auto p = ibvp(field("2", "0", 10.0, 3.0), "0", BoundarySignal::constant(1.0));
    for (double t : {0.5, 1.0, 2.0}) EXPECT_NEAR(exact_integral(p, t, 0.0, 10.0), t, 1e-12);
}

TEST(Characteristics, BoundarySignalBasics) {
    BoundarySignal b({0.0, 1.0, 2.0}, {0.0, 2.0, -2.0});
    EXPECT_EQ(b(0.5), 1.0);
    EXPECT_EQ(b(3.0), -2.0);
    EXPECT_EQ(b(-1.0), 0.0);
    EXPECT_EQ(b.tv(), 6.0);
    EXPECT_EQ(b.sup(), 2.0);
    EXPECT_DOUBLE_EQ(b.l1(0.0, 2.0), 1.0 + 1.0);
    b.truncate_after(1.0);
    EXPECT_EQ(b.times().size(), 2u);
    EXPECT_THROW(BoundarySignal({1.0, 1.0}, {0.0, 0.0}), SolverError);
    EXPECT_EQ(BoundarySignal{}(5.0), 0.0);
}
