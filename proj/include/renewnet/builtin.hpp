#pragma once

// The three reference models as config documents: juvenile-adult,
// two-sex mating and resource management. Edges whose biological domain
// starts at a > 0 are shifted to start at x = 0 and carry that start as
// their `origin`; coefficients written in the biological variable `a` are
// rewritten in x by substituting a = x + origin.

#include <string>
#include <vector>

#include "renewnet/model.hpp"

namespace renewnet {

namespace detail {

// Rewrites `src` over (t, a) as an expression over (t, x) with a = x + origin.
inline std::string shifted(const std::string& src, double origin, const std::string& where) {
    const std::vector<std::string> vars{"t", "a", "x"};
    try {
        auto e = Expression::parse(src, vars);
        if (origin != 0.0) e = e.substitute("a", Expression::parse("x + " + format_number(origin), vars));
        else e = e.substitute("a", Expression::parse("x", vars));
        return e.redeclare({"t", "x"}).to_string();
    } catch (const Error& err) {
        throw ModelError(where + ": " + err.what());
    }
}

// Value of `src` over (t, a) at a fixed a, as an expression over t.
inline std::string frozen_at(const std::string& src, double a, const std::string& where) {
    const std::vector<std::string> vars{"t", "a"};
    try {
        return Expression::parse(src, vars).bind({{"a", a}}).to_string();
    } catch (const Error& err) {
        throw ModelError(where + ": " + err.what());
    }
}

inline void require_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ModelError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace detail

struct JuvenileAdultParams {
    double a_max = 1.0;
    double x_min = 1.0;
    double x_max = 3.0;
    std::string g = "1";    // adult growth over (t, a)
    std::string nu = "0";   // juvenile mortality over (t, a)
    std::string mu = "0";   // adult mortality over (t, a)
    std::string weight;     // optional fertility weight over a, must stay positive
    std::string J_o = "1";
    std::string A_o = "1";
    double horizon = 10.0;
};

/// Juveniles J on [0, a_max] fed by the (weighted) adult total; adults A on
/// [x_min, x_max] fed by the juveniles leaving at a_max.
inline json juvenile_adult_config(const JuvenileAdultParams& p = {}) {
    if (!(p.a_max > 0.0)) throw ModelError("juvenile-adult: a_max must be positive");
    if (!(p.x_min < p.x_max)) throw ModelError("juvenile-adult: x_min must be below x_max");
    const double la = p.x_max - p.x_min;
    json integral = {{"edge", "A"}, {"from", 0.0}, {"to", la}};
    if (!p.weight.empty()) {
        json w = detail::shifted(p.weight, p.x_min, "weight");
        integral["weight"] = w;
    }
    return {
        {"name", "juvenile_adult"},
        {"horizon", p.horizon},
        {"parameters", json::object()},
        {"mesh", {{"da", 0.01}, {"cfl", 0.9}}},
        {"edges",
         {{{"id", "J"},
           {"length", p.a_max},
           {"origin", 0.0},
           {"g", "1"},
           {"d", "-(" + detail::shifted(p.nu, 0.0, "nu") + ")"},
           {"u0", detail::shifted(p.J_o, 0.0, "J_o")}},
          {{"id", "A"},
           {"length", la},
           {"origin", p.x_min},
           {"g", detail::shifted(p.g, p.x_min, "g")},
           {"d", "-(" + detail::shifted(p.mu, p.x_min, "mu") + ")"},
           {"u0", detail::shifted(p.A_o, p.x_min, "A_o")}}}},
        {"couplings",
         {{{"edge", "J"}, {"integrals", {integral}}, {"beta", "w1"}},
          {{"edge", "A"}, {"traces", {{{"edge", "J"}, {"x", p.a_max}}}}, {"alpha", "w1"}}}},
    };
}

inline ModelConfig builtin_juvenile_adult(const JuvenileAdultParams& p = {}) {
    return build_model(juvenile_adult_config(p));
}

struct MatingParams {
    double kappa = 0.6;
    double mu = 0.02;
    double eta = 0.485;
    double nu = 3.0;
    double theta = 0.77;
    double m1 = 18.0, m2 = 60.0;
    double f1 = 16.0, f2 = 55.0;
    double M_length = 80.0;
    double F_length = 90.0;
    std::string M_o = "10";
    std::string F_o = "10";
    double horizon = 500.0;
    double da = 0.04167;
};

/// Males M and females F, both growing with unit speed and mortality split
/// by kappa; newborns min(theta*w1, (1-theta)*w2) times nu are split by eta.
inline json mating_config(const MatingParams& p = {}) {
    detail::require_unit(p.kappa, "kappa");
    detail::require_unit(p.eta, "eta");
    detail::require_unit(p.theta, "theta");
    if (!(p.mu > 0.0) || !(p.nu > 0.0)) throw ModelError("mating: mu and nu must be positive");
    if (!(p.m1 < p.m2) || !(p.f1 < p.f2)) throw ModelError("mating: fertility intervals must be non-empty");
    if (p.m1 < 0.0 || p.f1 < 0.0 || p.m2 > p.M_length || p.f2 > p.F_length)
        throw ModelError("mating: fertility intervals must lie inside the domains");
    const json integrals = {{{"edge", "M"}, {"from", p.m1}, {"to", p.m2}},
                            {{"edge", "F"}, {"from", p.f1}, {"to", p.f2}}};
    const std::string births = "nu*min(theta*w1, (1 - theta)*w2)";
    return {
        {"name", "mating"},
        {"horizon", p.horizon},
        {"parameters", {{"kappa", p.kappa}, {"mu", p.mu}, {"eta", p.eta}, {"nu", p.nu}, {"theta", p.theta}}},
        {"mesh", {{"da", p.da}, {"cfl", 0.9}}},
        {"edges",
         {{{"id", "M"}, {"length", p.M_length}, {"g", "1"}, {"d", "-kappa*mu"}, {"u0", detail::shifted(p.M_o, 0.0, "M_o")}},
          {{"id", "F"},
           {"length", p.F_length},
           {"g", "1"},
           {"d", "-(1 - kappa)*mu"},
           {"u0", detail::shifted(p.F_o, 0.0, "F_o")}}}},
        {"couplings",
         {{{"edge", "M"}, {"integrals", integrals}, {"beta", "(1 - eta)*" + births}},
          {{"edge", "F"}, {"integrals", integrals}, {"beta", "eta*" + births}}}},
        {"objectives",
         {{"utility",
           {{"theta", "theta"},
            {"nu", "nu"},
            {"male", {{"edge", "M"}, {"from", p.m1}, {"to", p.m2}}},
            {"female", {{"edge", "F"}, {"from", p.f1}, {"to", p.f2}}}}}}},
    };
}

inline ModelConfig builtin_mating(const MatingParams& p = {}) { return build_model(mating_config(p)); }

struct ResourceParams {
    double eta = 0.23;
    double abar = 1.0;
    double a_max = 2.0;
    std::string gJ = "1", gS = "1", gR = "1";  // over (t, a)
    std::string dJ = "0";
    std::string dS = "-(a - 1)/2";
    std::string dR = "-(a - 1)/2";
    std::string beta = "2*w1";
    std::string J_o = "5", S_o = "0", R_o = "0";
    std::string C_J = "a", C_S = "0", C_R = "0.5", G = "10";  // over a
    double horizon = 15.0;
    double da = 0.001;
};

/// Juveniles J on [0, abar]; a fraction eta of those reaching abar goes to
/// the sold stock S, the rest to the reproducing stock R; births feed J
/// through beta of the total R.
inline json resource_config(const ResourceParams& p = {}) {
    detail::require_unit(p.eta, "eta");
    if (!(p.abar > 0.0 && p.abar < p.a_max)) throw ModelError("resource: need 0 < abar < a_max");
    const double la = p.a_max - p.abar;
    const std::string gj_bar = detail::frozen_at(p.gJ, p.abar, "gJ");
    const std::string outflow = gj_bar == "1" ? "w1" : "w1*(" + gj_bar + ")";
    return {
        {"name", "resource"},
        {"horizon", p.horizon},
        {"parameters", {{"eta", p.eta}}},
        {"mesh", {{"da", p.da}, {"cfl", 0.9}}},
        {"edges",
         {{{"id", "J"},
           {"length", p.abar},
           {"g", detail::shifted(p.gJ, 0.0, "gJ")},
           {"d", detail::shifted(p.dJ, 0.0, "dJ")},
           {"u0", detail::shifted(p.J_o, 0.0, "J_o")}},
          {{"id", "S"},
           {"length", la},
           {"origin", p.abar},
           {"g", detail::shifted(p.gS, p.abar, "gS")},
           {"d", detail::shifted(p.dS, p.abar, "dS")},
           {"u0", detail::shifted(p.S_o, p.abar, "S_o")}},
          {{"id", "R"},
           {"length", la},
           {"origin", p.abar},
           {"g", detail::shifted(p.gR, p.abar, "gR")},
           {"d", detail::shifted(p.dR, p.abar, "dR")},
           {"u0", detail::shifted(p.R_o, p.abar, "R_o")}}}},
        {"couplings",
         {{{"edge", "J"}, {"integrals", {{{"edge", "R"}, {"from", 0.0}, {"to", la}}}}, {"beta", p.beta}},
          {{"edge", "S"}, {"traces", {{{"edge", "J"}, {"x", p.abar}}}}, {"alpha", "eta*" + outflow}},
          {{"edge", "R"}, {"traces", {{{"edge", "J"}, {"x", p.abar}}}}, {"alpha", "(1 - eta)*" + outflow}}}},
        {"objectives",
         {{"netgain", {{"cost", {{"J", p.C_J}, {"S", p.C_S}, {"R", p.C_R}}}, {"gain", {{"S", p.G}}}}}}},
    };
}

inline ModelConfig builtin_resource(const ResourceParams& p = {}) { return build_model(resource_config(p)); }

}  // namespace renewnet
