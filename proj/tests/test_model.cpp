#include <gtest/gtest.h>

#include <random>
#include <string>

#include "renewnet/builtin.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"

using namespace renewnet;

namespace {

json minimal() {
    return json::parse(R"({
        "horizon": 1,
        "edges": [{"id": "u", "length": 1, "g": "1", "d": "0", "u0": "0"}],
        "couplings": [{"edge": "u", "alpha": "0", "beta": "0"}]
    })");
}

std::string load_error(const json& raw) {
    try {
        build_model(raw);
    } catch (const ModelError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Model, MinimalConfigIsValid) {
    const auto m = build_model(minimal());
    ASSERT_EQ(m.n(), 1u);
    EXPECT_EQ(m.edges[0].id, "u");
    EXPECT_EQ(m.meta.g_min, 1.0);
    EXPECT_EQ(m.meta.g_max, 1.0);
    EXPECT_EQ(m.meta.C, 0.0);
    EXPECT_EQ(m.meta.lip_beta, 0.0);
    EXPECT_TRUE(m.meta.warnings.empty());
}

TEST(Model, AlphaMustVanishAtZeroState) {
    auto raw = minimal();
    raw["couplings"][0]["traces"] = json::array({{{"edge", "u"}, {"x", 0.5}}});
    raw["couplings"][0]["alpha"] = "1+w1";
    EXPECT_NE(load_error(raw).find("alpha(t, 0)"), std::string::npos);
}

TEST(Model, BetaMustVanishAtZeroState) {
    auto raw = minimal();
    raw["couplings"][0]["integrals"] = json::array({{{"edge", "u"}, {"from", 0}, {"to", 1}}});
    raw["couplings"][0]["beta"] = "w1 + 1e-9";
    EXPECT_NE(load_error(raw).find("beta(0)"), std::string::npos);
    raw["couplings"][0]["beta"] = "w1 + 1e-13";
    EXPECT_EQ(load_error(raw), "");
}

TEST(Model, GrowthMustBePositive) {
    auto raw = minimal();
    raw["edges"][0]["g"] = "x - 0.5";
    EXPECT_NE(load_error(raw).find("growth g must be positive"), std::string::npos);
    raw["edges"][0]["g"] = "1 + t";
    EXPECT_EQ(load_error(raw), "");
}

TEST(Model, SchemaErrors) {
    auto raw = minimal();
    raw.erase("horizon");
    EXPECT_NE(load_error(raw), "");

    raw = minimal();
    raw["edges"][0]["length"] = -1;
    EXPECT_NE(load_error(raw).find("length"), std::string::npos);

    raw = minimal();
    raw["couplings"] = json::array();
    EXPECT_NE(load_error(raw).find("no coupling"), std::string::npos);

    raw = minimal();
    raw["couplings"].push_back(raw["couplings"][0]);
    EXPECT_NE(load_error(raw).find("more than one coupling"), std::string::npos);

    raw = minimal();
    raw["couplings"][0]["edge"] = "v";
    EXPECT_NE(load_error(raw).find("'v'"), std::string::npos);

    raw = minimal();
    raw["edges"][0]["d"] = "y";
    EXPECT_NE(load_error(raw).find("y"), std::string::npos);

    raw = minimal();
    raw["parameters"] = {{"x", 1.0}};
    EXPECT_NE(load_error(raw).find("reserved"), std::string::npos);
}

TEST(Model, ProbeGeometry) {
    auto raw = minimal();
    raw["couplings"][0]["traces"] = json::array({{{"edge", "u"}, {"x", 0.0}}});
    raw["couplings"][0]["alpha"] = "w1";
    EXPECT_NE(load_error(raw).find("trace point"), std::string::npos);
    raw["couplings"][0]["traces"][0]["x"] = 1.0;
    EXPECT_EQ(load_error(raw), "");

    raw = minimal();
    raw["couplings"][0]["integrals"] = json::array({{{"edge", "u"}, {"from", 0.5}, {"to", 0.5}}});
    raw["couplings"][0]["beta"] = "w1";
    EXPECT_NE(load_error(raw).find("interval"), std::string::npos);
    raw["couplings"][0]["integrals"][0]["to"] = 1.5;
    EXPECT_NE(load_error(raw).find("interval"), std::string::npos);
}

TEST(Model, ParametersSubstitute) {
    auto raw = minimal();
    raw["parameters"] = {{"c", 2.5}};
    raw["edges"][0]["g"] = "c";
    const auto m = build_model(raw);
    EXPECT_EQ(m.meta.g_max, 2.5);
    const auto family = parameter_family(raw, "c");
    EXPECT_EQ(family(4.0).meta.g_max, 4.0);
    EXPECT_THROW(parameter_family(raw, "nope"), ModelError);
}

TEST(Model, MissingConfigFileIsNamed) {
    try {
        load_config("/nonexistent/dir/model.json");
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/model.json"), std::string::npos);
    }
}

TEST(Builtin, BuiltinsLoadWithoutWarnings) {
    for (const auto& m : {builtin_mating(), builtin_resource(), builtin_juvenile_adult()}) {
        EXPECT_TRUE(m.meta.warnings.empty()) << m.name;
        EXPECT_EQ(m.n(), m.couplings.size());
    }
}

TEST(Builtin, MatingStructure) {
    const auto m = builtin_mating();
    ASSERT_EQ(m.n(), 2u);
    EXPECT_EQ(m.edges[0].length, 80.0);
    EXPECT_EQ(m.edges[1].length, 90.0);
    EXPECT_DOUBLE_EQ(m.edges[0].d({0.0, 5.0}), -0.6 * 0.02);
    EXPECT_DOUBLE_EQ(m.edges[1].d({0.0, 5.0}), -0.4 * 0.02);
    const auto& c = m.couplings[0];
    ASSERT_EQ(c.integrals.size(), 2u);
    EXPECT_EQ(c.integrals[0].from, 18.0);
    EXPECT_EQ(c.integrals[0].to, 60.0);
    EXPECT_EQ(c.integrals[1].from, 16.0);
    EXPECT_EQ(c.integrals[1].to, 55.0);
    EXPECT_EQ(c.beta({0.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(c.beta({1.0, 1.0}), (1 - 0.485) * 3 * 0.23);
    // l1 Lipschitz constant of (1 - eta) nu min(theta w1, (1 - theta) w2)
    EXPECT_NEAR(m.meta.lip_beta, (1 - 0.485) * 3 * 0.77, 1e-9);
}

TEST(Builtin, MatingBetaString) {
    auto raw = minimal();
    raw["edges"].push_back({{"id", "v"}, {"length", 1}, {"g", "1"}});
    raw["couplings"][0]["integrals"] = json::array({{{"edge", "u"}, {"from", 0}, {"to", 1}},
                                                    {{"edge", "v"}, {"from", 0}, {"to", 1}}});
    raw["couplings"][0]["beta"] = "(1-0.485)*3*min(0.77*w1,(1-0.77)*w2)";
    raw["couplings"].push_back({{"edge", "v"}});
    const auto m = build_model(raw);
    EXPECT_EQ(m.couplings[0].beta({0.0, 0.0}), 0.0);
}

TEST(Builtin, MatingNewbornSplit) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0), w(0.0, 1000.0);
    for (int k = 0; k < 1000; ++k) {
        MatingParams p;
        p.theta = unit(rng);
        p.eta = unit(rng);
        const auto m = builtin_mating(p);
        const double w1 = w(rng), w2 = w(rng);
        const double b1 = m.couplings[0].beta({w1, w2});
        const double b2 = m.couplings[1].beta({w1, w2});
        const double total = p.nu * std::min(p.theta * w1, (1 - p.theta) * w2);
        ASSERT_NEAR(b1 + b2, total, 1e-12 * std::max(1.0, total));
        ASSERT_NEAR(p.eta * b1, (1 - p.eta) * b2, 1e-12 * std::max(1.0, total));
    }
}

TEST(Builtin, MatingDegenerateTheta) {
    for (double theta : {0.0, 1.0}) {
        MatingParams p;
        p.theta = theta;
        const auto m = builtin_mating(p);
        for (double w1 : {0.0, 1.0, 400.0})
            for (double w2 : {0.0, 3.0, 390.0}) {
                EXPECT_EQ(m.couplings[0].beta({w1, w2}), 0.0);
                EXPECT_EQ(m.couplings[1].beta({w1, w2}), 0.0);
            }
    }
}

TEST(Builtin, MatingRanges) {
    MatingParams p;
    p.theta = 1.2;
    EXPECT_THROW(builtin_mating(p), ModelError);
    p = {};
    p.m1 = 70;
    EXPECT_THROW(builtin_mating(p), ModelError);
    p = {};
    p.nu = 0;
    EXPECT_THROW(builtin_mating(p), ModelError);
}

TEST(Builtin, ResourceStructure) {
    const auto m = builtin_resource();
    ASSERT_EQ(m.n(), 3u);
    EXPECT_EQ(m.edges[0].id, "J");
    EXPECT_EQ(m.edges[1].origin, 1.0);
    EXPECT_EQ(m.edges[2].length, 1.0);
    // shifted mortality -(a - 1)/2 on a in [1, 2]
    EXPECT_DOUBLE_EQ(m.edges[1].d({0.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(m.edges[1].d({0.0, 1.0}), -0.5);
    EXPECT_EQ(m.couplings[1].traces[0].x, 1.0);
    EXPECT_DOUBLE_EQ(m.couplings[1].alpha({0.0, 2.0}), 0.23 * 2.0);
    EXPECT_DOUBLE_EQ(m.couplings[2].alpha({0.0, 2.0}), 0.77 * 2.0);
    EXPECT_DOUBLE_EQ(m.couplings[0].beta({3.0}), 6.0);
    EXPECT_NEAR(m.meta.lip_beta, 2.0, 1e-9);
    EXPECT_NEAR(m.meta.lip_alpha, 0.77, 1e-9);
}

TEST(Builtin, ResourceExtremeSplits) {
    ResourceParams p;
    p.eta = 1.0;
    auto m = builtin_resource(p);
    EXPECT_EQ(m.couplings[2].alpha({0.3, 7.0}), 0.0);
    p.eta = 0.0;
    m = builtin_resource(p);
    EXPECT_EQ(m.couplings[1].alpha({0.3, 7.0}), 0.0);
    p.eta = 0.5;
    p.abar = 2.5;
    EXPECT_THROW(builtin_resource(p), ModelError);
}

TEST(Builtin, ResourceOutflowUsesJuvenileGrowth) {
    ResourceParams p;
    p.gJ = "1 + a";
    const auto m = builtin_resource(p);
    EXPECT_DOUBLE_EQ(m.couplings[1].alpha({0.0, 3.0}), 0.23 * 3.0 * 2.0);
}

TEST(Builtin, JuvenileAdult) {
    const auto m = builtin_juvenile_adult();
    ASSERT_EQ(m.n(), 2u);
    EXPECT_EQ(m.edges[1].length, 2.0);
    EXPECT_EQ(m.couplings[0].integrals[0].edge, "A");
    EXPECT_EQ(m.couplings[0].integrals[0].to, 2.0);
    EXPECT_EQ(m.couplings[1].traces[0].x, 1.0);
    EXPECT_EQ(m.couplings[1].alpha({0.0, 4.0}), 4.0);

    JuvenileAdultParams p;
    p.weight = "1 + a";
    const auto w = builtin_juvenile_adult(p);
    EXPECT_DOUBLE_EQ(w.couplings[0].integrals[0].weight({0.0}), 2.0);

    p.weight = "a - 2";
    EXPECT_THROW(builtin_juvenile_adult(p), ModelError);
    p = {};
    p.x_min = 3.0;
    EXPECT_THROW(builtin_juvenile_adult(p), ModelError);
}

TEST(Builtin, ZeroStateGivesZeroInflow) {
    for (const auto& m : {builtin_mating(), builtin_resource(), builtin_juvenile_adult()}) {
        const auto mesh = Mesh::uniform(m, 0.05);
        SystemState s;
        for (const auto& em : mesh.edges) s.u.emplace_back(em.N, 0.0);
        for (double t : {0.0, 0.5, 3.0}) {
            s.t = t;
            for (double b : boundary_data(s, m, mesh)) EXPECT_EQ(b, 0.0) << m.name;
        }
    }
}
