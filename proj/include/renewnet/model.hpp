#pragma once

// Coupled system of linear balance laws on a graph of 1-D edges:
//
//   d/dt u_i + d/dx (g_i(t,x) u_i) = d_i(t,x) u_i        on edge i, x in [0, L_i]
//   g_i(t,0) u_i(t,0+) = alpha_i(t, traces) + beta_i(integrals)
//
// where the traces are left limits u_j(t, xbar-) at declared points and the
// integrals are weighted integrals of u_j over declared intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "renewnet/error.hpp"
#include "renewnet/expr.hpp"

namespace renewnet {

using json = nlohmann::json;

struct Edge {
    std::string id;
    double length = 1.0;
    double origin = 0.0;  // biological coordinate of x = 0 (edges may be shifted)
    Expression g;         // over (t, x)
    Expression d;         // over (t, x)
    Expression u0;        // over (x)
    std::optional<Expression> g_dx;  // explicit d/dx g, otherwise central differences

    double g_min = 0.0;
    double g_max = 0.0;
    double d_sup = 0.0;
    double u0_sup = 0.0;

    bool autonomous() const {
        return !g.depends_on("t") && !d.depends_on("t") && !(g_dx && g_dx->depends_on("t"));
    }
};

/// Left trace u(t, x-) of edge `edge` at `x`.
struct TraceProbe {
    std::string edge;
    double x = 0.0;
    std::size_t edge_index = 0;
};

/// Weighted integral over [from, to] of the density on `edge`.
struct IntegralProbe {
    std::string edge;
    double from = 0.0;
    double to = 0.0;
    Expression weight = Expression::constant(1.0, {"x"});
    std::size_t edge_index = 0;
};

/// Inflow of one edge: alpha(t, w1..wm) over the traces plus beta(w1..wk)
/// over the integrals.
struct BoundaryCoupling {
    std::string edge;
    Expression alpha;  // over (t, w1..wm)
    std::vector<TraceProbe> traces;
    Expression beta;   // over (w1..wk)
    std::vector<IntegralProbe> integrals;

    double lip_alpha = 0.0;
    double lip_beta = 0.0;
    bool monotone = true;

    bool decoupled() const { return alpha.is_constant() && beta.is_constant(); }
};

struct ModelMetadata {
    double g_min = 0.0;
    double g_max = 0.0;
    double lip_alpha = 0.0;
    double lip_beta = 0.0;
    double C = 0.0;
    double state_box = 0.0;
    std::vector<std::string> warnings;
};

struct ModelConfig {
    std::string name;
    std::vector<Edge> edges;
    std::vector<BoundaryCoupling> couplings;  // couplings[i] feeds edges[i]
    double horizon = 1.0;
    std::map<std::string, double> parameters;
    ModelMetadata meta;
    json raw;  // validated source document

    std::size_t n() const { return edges.size(); }

    std::size_t edge_index(const std::string& id) const {
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (edges[i].id == id) return i;
        throw ModelError("unknown edge '" + id + "'");
    }
};

namespace detail {

inline std::vector<std::string> numbered(const char* prefix, std::size_t n) {
    std::vector<std::string> v;
    for (std::size_t i = 1; i <= n; ++i) v.push_back(prefix + std::to_string(i));
    return v;
}

inline bool reserved_name(const std::string& s) {
    if (s == "t" || s == "x") return true;
    if (detail::function_op(s)) return true;
    if (s.size() > 1 && s[0] == 'w' && std::all_of(s.begin() + 1, s.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return true;
    return false;
}

inline std::string expr_text(const json& node, const std::string& where) {
    if (node.is_string()) return node.get<std::string>();
    if (node.is_number()) return detail::format_number(node.get<double>());
    throw ModelError(where + ": expected an expression string or number");
}

// Parses an expression over `context` plus the named parameters and binds
// the parameters to their values.
inline Expression parse_in_context(const std::string& src, std::vector<std::string> context,
                                   const std::map<std::string, double>& params, const std::string& where) {
    std::vector<std::string> vars = context;
    for (const auto& [k, v] : params) vars.push_back(k);
    try {
        return Expression::parse(src, vars).bind(params).redeclare(context);
    } catch (const Error& e) {
        throw ModelError(where + ": " + e.what());
    }
}

inline double number_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ModelError(where + ": field '" + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ModelError(where + ": field '" + key + "' must be finite");
    return d;
}

inline double central_dx(const Edge& e, double t, double x) {
    if (e.g_dx) return (*e.g_dx)({t, x});
    const double h = 1e-5 * e.length;
    return (e.g({t, x + h}) - e.g({t, x - h})) / (2.0 * h);
}

// Largest sampled difference quotient of `f` with respect to the state
// variables (all declared variables other than "t"), measured in the l1
// norm of the state increment. `ranges` lists one range per declared variable.
inline double sampled_lipschitz(const Expression& f, const std::vector<VarRange>& ranges, bool* monotone) {
    const auto& vars = f.variables();
    std::vector<std::size_t> state;
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i] != "t") state.push_back(i);
    if (monotone) *monotone = true;
    if (state.empty() || f.is_constant()) return 0.0;

    const std::size_t dim = vars.size();
    std::size_t k = static_cast<std::size_t>(std::floor(std::pow(4096.0, 1.0 / static_cast<double>(dim))));
    k = std::clamp<std::size_t>(k, 3, 17);
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) total *= k;

    double lip = 0.0;
    std::vector<double> p(dim), q(dim);
    auto quotient = [&](double num, double den) {
        double r = std::abs(num) / den;
        if (!std::isfinite(r)) throw ModelError("non-finite Lipschitz quotient for '" + f.source() + "'");
        lip = std::max(lip, r);
    };
    for (std::size_t s = 0; s < total; ++s) {
        std::size_t rem = s;
        for (std::size_t d = 0; d < dim; ++d) {
            std::size_t j = rem % k;
            rem /= k;
            p[d] = ranges[d].lo + (ranges[d].hi - ranges[d].lo) * static_cast<double>(j) / static_cast<double>(k - 1);
        }
        const double f0 = f(p);
        for (std::size_t j : state) {
            const double h = 1e-6 * std::max(1.0, ranges[j].hi - ranges[j].lo);
            q = p;
            q[j] = p[j] + h;
            const double fp = f(q);
            quotient(fp - f0, h);
            if (monotone && fp - f0 < -1e-9 * std::max(1.0, std::abs(f0))) *monotone = false;
            if (p[j] - h >= ranges[j].lo) {
                q[j] = p[j] - h;
                quotient(f0 - f(q), h);
            }
        }
    }
    std::mt19937_64 rng(0x5eed5eedULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < 512; ++s) {
        double dist = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            p[d] = ranges[d].lo + (ranges[d].hi - ranges[d].lo) * unit(rng);
            q[d] = vars[d] == "t" ? p[d] : ranges[d].lo + (ranges[d].hi - ranges[d].lo) * unit(rng);
            if (vars[d] != "t") dist += std::abs(p[d] - q[d]);
        }
        if (dist > 0.0) quotient(f(p) - f(q), dist);
    }
    return lip;
}

}  // namespace detail

/// Constant of the a-priori estimates: twice the largest of |d/dx g|, |d/dt g|,
/// sup_t TV(g), sup_t TV(d/dx g), |d| and sup_t TV(d), each estimated by
/// lattice sampling over [0,T] x [0,L] and maximised over edges.
inline double estimate_C(const std::vector<Edge>& edges, double horizon) {
    double worst = 0.0;
    for (const auto& e : edges) {
        const bool td = e.g.depends_on("t") || e.d.depends_on("t") || (e.g_dx && e.g_dx->depends_on("t"));
        const std::size_t nt = td ? 17 : 1;
        const std::size_t nx = 1025;
        const double ht = 1e-5 * std::max(horizon, 1.0);
        for (std::size_t it = 0; it < nt; ++it) {
            const double t = nt == 1 ? 0.0 : horizon * static_cast<double>(it) / static_cast<double>(nt - 1);
            double tv_g = 0.0, tv_gx = 0.0, tv_d = 0.0;
            double pg = 0.0, pgx = 0.0, pd = 0.0;
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double x = e.length * static_cast<double>(ix) / static_cast<double>(nx - 1);
                const double g = e.g({t, x});
                const double gx = detail::central_dx(e, t, x);
                const double gt = e.g.depends_on("t") ? (e.g({t + ht, x}) - e.g({t - ht, x})) / (2.0 * ht) : 0.0;
                const double d = e.d({t, x});
                if (ix > 0) {
                    tv_g += std::abs(g - pg);
                    tv_gx += std::abs(gx - pgx);
                    tv_d += std::abs(d - pd);
                }
                pg = g;
                pgx = gx;
                pd = d;
                worst = std::max({worst, std::abs(gx), std::abs(gt), std::abs(d)});
            }
            worst = std::max({worst, tv_g, tv_gx, tv_d});
        }
    }
    return 2.0 * worst;
}

inline json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ModelError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

/// Validates a config document and builds the model: parses every
/// expression, checks growth positivity, alpha(t,0) = beta(0) = 0, probe
/// geometry, and attaches the Lipschitz and a-priori constants.
inline ModelConfig build_model(const json& raw) {
    if (!raw.is_object()) throw ModelError("config must be an object");
    ModelConfig m;
    m.raw = raw;
    m.name = raw.value("name", std::string("model"));
    m.horizon = detail::number_field(raw, "horizon", "config");
    if (!(m.horizon > 0.0)) throw ModelError("config: horizon must be positive");

    if (raw.contains("parameters")) {
        const auto& p = raw.at("parameters");
        if (!p.is_object()) throw ModelError("config: parameters must be an object");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (detail::reserved_name(it.key())) throw ModelError("parameter name '" + it.key() + "' is reserved");
            if (!it.value().is_number()) throw ModelError("parameter '" + it.key() + "' must be a number");
            m.parameters[it.key()] = it.value().get<double>();
        }
    }

    if (!raw.contains("edges") || !raw.at("edges").is_array() || raw.at("edges").empty())
        throw ModelError("config: 'edges' must be a non-empty array");
    std::set<std::string> ids;
    for (const auto& je : raw.at("edges")) {
        Edge e;
        if (!je.contains("id") || !je.at("id").is_string()) throw ModelError("edge: missing string 'id'");
        e.id = je.at("id").get<std::string>();
        const std::string where = "edge '" + e.id + "'";
        if (!ids.insert(e.id).second) throw ModelError(where + ": duplicate id");
        e.length = detail::number_field(je, "length", where);
        if (!(e.length > 0.0)) throw ModelError(where + ": length must be positive");
        e.origin = je.contains("origin") ? detail::number_field(je, "origin", where) : 0.0;
        auto text = [&](const char* key, const char* def) {
            return je.contains(key) ? detail::expr_text(je.at(key), where + "." + key) : std::string(def);
        };
        if (!je.contains("g")) throw ModelError(where + ": missing growth 'g'");
        e.g = detail::parse_in_context(text("g", "1"), {"t", "x"}, m.parameters, where + ".g");
        e.d = detail::parse_in_context(text("d", "0"), {"t", "x"}, m.parameters, where + ".d");
        e.u0 = detail::parse_in_context(text("u0", "0"), {"x"}, m.parameters, where + ".u0");
        if (je.contains("g_dx"))
            e.g_dx = detail::parse_in_context(text("g_dx", "0"), {"t", "x"}, m.parameters, where + ".g_dx");

        const VarRange tr{"t", 0.0, m.horizon}, xr{"x", 0.0, e.length};
        try {
            auto gb = check_bounds(e.g, {tr, xr}, 33 * 257);
            e.g_min = gb.min_seen;
            e.g_max = gb.max_seen;
            auto db = check_bounds(e.d, {tr, xr}, 33 * 257);
            e.d_sup = std::max(std::abs(db.min_seen), std::abs(db.max_seen));
            auto ub = check_bounds(e.u0, {xr}, 1025);
            e.u0_sup = std::max(std::abs(ub.min_seen), std::abs(ub.max_seen));
        } catch (const EvalError& err) {
            throw ModelError(where + ": " + err.what());
        }
        if (!(e.g_min > 0.0)) throw ModelError(where + ": growth g must be positive (sampled minimum " +
                                               detail::format_number(e.g_min) + ")");
        m.edges.push_back(std::move(e));
    }

    double u0max = 0.0;
    for (const auto& e : m.edges) u0max = std::max(u0max, e.u0_sup);
    m.meta.state_box = raw.contains("state_box") ? detail::number_field(raw, "state_box", "config")
                                                 : (u0max > 0.0 ? 10.0 * u0max : 1.0);

    if (!raw.contains("couplings") || !raw.at("couplings").is_array())
        throw ModelError("config: 'couplings' must be an array");
    std::vector<std::optional<BoundaryCoupling>> slots(m.edges.size());
    for (const auto& jc : raw.at("couplings")) {
        BoundaryCoupling c;
        if (!jc.contains("edge") || !jc.at("edge").is_string()) throw ModelError("coupling: missing string 'edge'");
        c.edge = jc.at("edge").get<std::string>();
        const std::string where = "coupling of '" + c.edge + "'";
        const std::size_t target = m.edge_index(c.edge);
        if (slots[target]) throw ModelError(where + ": edge has more than one coupling");

        if (jc.contains("traces")) {
            for (const auto& jt : jc.at("traces")) {
                TraceProbe tp;
                tp.edge = jt.at("edge").get<std::string>();
                tp.x = detail::number_field(jt, "x", where + " trace");
                tp.edge_index = m.edge_index(tp.edge);
                const double L = m.edges[tp.edge_index].length;
                if (!(tp.x > 0.0) || tp.x > L * (1.0 + 1e-12))
                    throw ModelError(where + ": trace point must lie in ]0, " + detail::format_number(L) + "]");
                c.traces.push_back(tp);
            }
        }
        if (jc.contains("integrals")) {
            for (const auto& ji : jc.at("integrals")) {
                IntegralProbe ip;
                ip.edge = ji.at("edge").get<std::string>();
                ip.from = detail::number_field(ji, "from", where + " integral");
                ip.to = detail::number_field(ji, "to", where + " integral");
                ip.edge_index = m.edge_index(ip.edge);
                const double L = m.edges[ip.edge_index].length;
                if (!(ip.from < ip.to) || ip.from < 0.0 || ip.to > L * (1.0 + 1e-12))
                    throw ModelError(where + ": integral interval must satisfy 0 <= from < to <= " +
                                     detail::format_number(L));
                if (ji.contains("weight")) {
                    ip.weight = detail::parse_in_context(detail::expr_text(ji.at("weight"), where), {"x"}, m.parameters,
                                                         where + " weight");
                    BoundsReport wb;
                    try {
                        wb = check_bounds(ip.weight, {VarRange{"x", ip.from, ip.to}}, 1025);
                    } catch (const EvalError& err) {
                        throw ModelError(where + " weight: " + err.what());
                    }
                    if (!(wb.min_seen > 0.0)) throw ModelError(where + ": integral weight must be positive");
                }
                c.integrals.push_back(std::move(ip));
            }
        }
        const std::string a_src = jc.contains("alpha") ? detail::expr_text(jc.at("alpha"), where) : "0";
        const std::string b_src = jc.contains("beta") ? detail::expr_text(jc.at("beta"), where) : "0";
        std::vector<std::string> avars{"t"};
        for (auto& w : detail::numbered("w", c.traces.size())) avars.push_back(w);
        c.alpha = detail::parse_in_context(a_src, avars, m.parameters, where + ".alpha");
        c.beta = detail::parse_in_context(b_src, detail::numbered("w", c.integrals.size()), m.parameters, where + ".beta");

        // alpha(t, 0) = 0 and beta(0) = 0
        std::vector<double> zeros(avars.size(), 0.0);
        for (int k = 0; k <= 16; ++k) {
            zeros[0] = m.horizon * k / 16.0;
            double a0 = 0.0;
            try {
                a0 = c.alpha(zeros);
            } catch (const EvalError& err) {
                throw ModelError(where + ".alpha: " + err.what());
            }
            if (std::abs(a0) > 1e-12)
                throw ModelError(where + ": alpha(t, 0) = " + detail::format_number(a0) + " != 0 at t = " +
                                 detail::format_number(zeros[0]));
        }
        std::vector<double> bz(c.integrals.size(), 0.0);
        double b0 = 0.0;
        try {
            b0 = c.beta(bz);
        } catch (const EvalError& err) {
            throw ModelError(where + ".beta: " + err.what());
        }
        if (std::abs(b0) > 1e-12) throw ModelError(where + ": beta(0) = " + detail::format_number(b0) + " != 0");

        std::vector<VarRange> ar{{"t", 0.0, m.horizon}};
        for (std::size_t j = 0; j < c.traces.size(); ++j) ar.push_back({avars[j + 1], 0.0, m.meta.state_box});
        std::vector<VarRange> br;
        for (std::size_t j = 0; j < c.integrals.size(); ++j) {
            const auto& ip = c.integrals[j];
            br.push_back({"w" + std::to_string(j + 1), 0.0, m.meta.state_box * (ip.to - ip.from)});
        }
        bool ma = true, mb = true;
        try {
            c.lip_alpha = detail::sampled_lipschitz(c.alpha, ar, &ma);
            c.lip_beta = detail::sampled_lipschitz(c.beta, br, &mb);
        } catch (const EvalError& err) {
            throw ModelError(where + ": " + err.what());
        }
        c.monotone = ma && mb;
        if (!c.monotone)
            m.meta.warnings.push_back(where + ": boundary map is not monotone; positivity and comparison are not guaranteed");
        slots[target] = std::move(c);
    }
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
        if (!slots[i]) throw ModelError("edge '" + m.edges[i].id + "' has no coupling");
        m.couplings.push_back(std::move(*slots[i]));
    }

    m.meta.g_min = m.edges.front().g_min;
    m.meta.g_max = m.edges.front().g_max;
    for (const auto& e : m.edges) {
        m.meta.g_min = std::min(m.meta.g_min, e.g_min);
        m.meta.g_max = std::max(m.meta.g_max, e.g_max);
    }
    for (const auto& c : m.couplings) {
        m.meta.lip_alpha = std::max(m.meta.lip_alpha, c.lip_alpha);
        m.meta.lip_beta = std::max(m.meta.lip_beta, c.lip_beta);
    }
    m.meta.C = estimate_C(m.edges, m.horizon);
    return m;
}

/// Copy of `raw` with parameters[name] = value.
inline json with_parameter(json raw, const std::string& name, double value) {
    if (!raw.contains("parameters") || !raw["parameters"].contains(name))
        throw ModelError("config has no parameter '" + name + "'");
    raw["parameters"][name] = value;
    return raw;
}

using ModelFamily = std::function<ModelConfig(double)>;

/// One-parameter family of models obtained by overriding a named parameter.
inline ModelFamily parameter_family(json raw, std::string name) {
    with_parameter(raw, name, 0.0);  // validates the parameter exists
    return [raw = std::move(raw), name = std::move(name)](double v) { return build_model(with_parameter(raw, name, v)); };
}

}  // namespace renewnet
