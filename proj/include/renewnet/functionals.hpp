#pragma once

// Norms, total variation and the a-priori bounds of the scalar solution
// (applied edge by edge and summed), the fertility rate and utility of the
// mating model, and the cost/gain pair of the resource model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "renewnet/csv.hpp"
#include "renewnet/error.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"

namespace renewnet {

/// Sum over edges of da * sum |u|.
inline double l1_norm(std::span<const EdgeState> u, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double e = 0.0;
        for (double v : u[i]) e += std::abs(v);
        s += mesh.edges[i].da * e;
    }
    return s;
}

/// Sum over edges of max |u|.
inline double linf_norm(std::span<const EdgeState> u) {
    double s = 0.0;
    for (const auto& e : u) {
        double m = 0.0;
        for (double v : e) m = std::max(m, std::abs(v));
        s += m;
    }
    return s;
}

/// Sum over edges of sum |u_{j+1} - u_j|.
inline double discrete_tv(std::span<const EdgeState> u) {
    double s = 0.0;
    for (const auto& e : u)
        for (std::size_t j = 1; j < e.size(); ++j) s += std::abs(e[j] - e[j - 1]);
    return s;
}

inline double l1_distance(std::span<const EdgeState> a, std::span<const EdgeState> b, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < a[i].size(); ++j) e += std::abs(a[i][j] - b[i][j]);
        s += mesh.edges[i].da * e;
    }
    return s;
}

struct EstimateRow {
    double t = 0.0;
    std::string quantity;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = true;
};

struct EstimateBundle {
    double C = 0.0;
    double g_min = 0.0, g_max = 0.0;
    double lip_alpha = 0.0, lip_beta = 0.0;
    double slack_norm = 0.05;
    double slack_tv = 0.10;
    std::vector<EstimateRow> rows;

    std::size_t violations() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const EstimateRow& r) { return !r.ok; }));
    }

    csv::Writer table() const {
        csv::Writer w({"t", "quantity", "lhs", "rhs", "ok"});
        for (const auto& r : rows) w.row({csv::num(r.t), r.quantity, csv::num(r.lhs), csv::num(r.rhs), r.ok ? "1" : "0"});
        return w;
    }
};

namespace detail {

inline bool within(double lhs, double rhs, double slack) { return lhs <= rhs * (1.0 + slack) + 1e-12; }

// Per-edge inflow statistics over [0, t] from the step log: the scheme
// holds b constant over each step.
struct InflowStats {
    std::vector<double> l1, sup, tv;
};

inline InflowStats inflow_stats(const Trajectory& tr, double t) {
    const std::size_t n = tr.edge_ids.size();
    InflowStats s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t k = 0; k < tr.step_t.size() && tr.step_t[k] < t; ++k) {
        const double dt = std::min(tr.step_dt[k], t - tr.step_t[k]);
        for (std::size_t i = 0; i < n; ++i) {
            const double b = tr.step_b[k][i];
            s.l1[i] += dt * std::abs(b);
            s.sup[i] = std::max(s.sup[i], std::abs(b));
            if (k > 0) s.tv[i] += std::abs(b - tr.step_b[k - 1][i]);
        }
    }
    return s;
}

inline std::vector<EdgeState> initial_cells(const ModelConfig& m, const Mesh& mesh) {
    return LxfScheme(m, mesh).initial_state().u;
}

}  // namespace detail

/// L-infinity, L1 and TV bounds at every snapshot; norms get `slack_norm`,
/// TV gets `slack_tv` relative slack.
inline EstimateBundle apriori_check(const Trajectory& tr, const ModelConfig& m, double slack_norm = 0.05,
                                    double slack_tv = 0.10) {
    EstimateBundle eb;
    eb.C = m.meta.C;
    eb.g_min = m.meta.g_min;
    eb.g_max = m.meta.g_max;
    eb.lip_alpha = m.meta.lip_alpha;
    eb.lip_beta = m.meta.lip_beta;
    eb.slack_norm = slack_norm;
    eb.slack_tv = slack_tv;
    const auto u0 = detail::initial_cells(m, tr.mesh);
    const double gc = m.meta.g_min;
    const double C = m.meta.C;
    for (const auto& snap : tr.snapshots) {
        const auto st = detail::inflow_stats(tr, snap.t);
        const double growth = std::exp(C * snap.t);
        double rhs_inf = 0.0, rhs_l1 = 0.0, rhs_tv = 0.0;
        for (std::size_t i = 0; i < u0.size(); ++i) {
            const std::span<const EdgeState> one(&u0[i], 1);
            const double uinf = linf_norm(one);
            rhs_inf += (uinf + st.sup[i] / gc) * growth;
            Mesh single;
            single.edges = {tr.mesh.edges[i]};
            rhs_l1 += (l1_norm(one, single) + st.l1[i] / gc) * growth;
            rhs_tv += (uinf + discrete_tv(one) + (C + gc) / (gc * gc) * st.sup[i] + st.tv[i] / gc) * growth;
        }
        const double inf = linf_norm(snap.u), l1 = l1_norm(snap.u, tr.mesh), tv = discrete_tv(snap.u);
        eb.rows.push_back({snap.t, "Linf", inf, rhs_inf, detail::within(inf, rhs_inf, slack_norm)});
        eb.rows.push_back({snap.t, "L1", l1, rhs_l1, detail::within(l1, rhs_l1, slack_norm)});
        eb.rows.push_back({snap.t, "TV", tv, rhs_tv, detail::within(tv, rhs_tv, slack_tv)});
    }
    return eb;
}

/// Time variation of the integral of edge `edge` over [a, b] against
/// C int (||u||_inf(I) + TV(u; I)) dt, both from consecutive snapshots.
inline EstimateBundle tvi_check(const Trajectory& tr, const ModelConfig& m, std::size_t edge, double a, double b,
                                double slack = 0.10) {
    EstimateBundle eb;
    eb.C = m.meta.C;
    eb.slack_tv = slack;
    const auto& em = tr.mesh.edges[edge];
    auto local = [&](const EdgeState& u, double& sup, double& tv) {
        sup = 0.0;
        tv = 0.0;
        double prev = 0.0;
        bool first = true;
        for (std::size_t j = 0; j < em.N; ++j) {
            if (em.face(j + 1) <= a || em.face(j) >= b) continue;
            sup = std::max(sup, std::abs(u[j]));
            if (!first) tv += std::abs(u[j] - prev);
            prev = u[j];
            first = false;
        }
    };
    double lhs = 0.0, rhs = 0.0;
    double prev_int = 0.0, prev_rate = 0.0;
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        const auto& u = tr.snapshots[k].u[edge];
        const double in = clipped_integral(em, u, a, b);
        double sup, tv;
        local(u, sup, tv);
        const double rate = sup + tv;
        if (k > 0) {
            lhs += std::abs(in - prev_int);
            rhs += m.meta.C * 0.5 * (rate + prev_rate) * (tr.snapshots[k].t - tr.snapshots[k - 1].t);
            eb.rows.push_back({tr.snapshots[k].t, "TVI(" + tr.edge_ids[edge] + ")", lhs, rhs, detail::within(lhs, rhs, slack)});
        }
        prev_int = in;
        prev_rate = rate;
    }
    return eb;
}

/// L1 stability between two runs on the same mesh:
/// ||u' - u''|| <= [||u_o' - u_o''|| + ||b' - b''||_L1 / g_min] e^{Ct}.
inline EstimateBundle stability_check(const Trajectory& a, const ModelConfig& ma, const Trajectory& b,
                                      const ModelConfig& mb, double slack = 0.05) {
    EstimateBundle eb;
    eb.C = std::max(ma.meta.C, mb.meta.C);
    eb.g_min = std::min(ma.meta.g_min, mb.meta.g_min);
    eb.slack_norm = slack;
    const auto ua = detail::initial_cells(ma, a.mesh), ub = detail::initial_cells(mb, b.mesh);
    const double d0 = l1_distance(ua, ub, a.mesh);

    // piecewise-constant inflow difference on the union of step times
    auto inflow_gap = [&](double t) {
        std::vector<double> pts;
        for (double s : a.step_t)
            if (s < t) pts.push_back(s);
        for (double s : b.step_t)
            if (s < t) pts.push_back(s);
        pts.push_back(t);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        auto value = [](const Trajectory& tr, double s, std::size_t i) {
            auto it = std::upper_bound(tr.step_t.begin(), tr.step_t.end(), s);
            if (it == tr.step_t.begin()) return 0.0;
            return tr.step_b[static_cast<std::size_t>(it - tr.step_t.begin()) - 1][i];
        };
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k)
            for (std::size_t i = 0; i < a.edge_ids.size(); ++i)
                acc += (pts[k + 1] - pts[k]) * std::abs(value(a, pts[k], i) - value(b, pts[k], i));
        return acc;
    };
    for (std::size_t k = 0; k < std::min(a.snapshots.size(), b.snapshots.size()); ++k) {
        const double t = a.snapshots[k].t;
        const double lhs = l1_distance(a.snapshots[k].u, b.snapshots[k].u, a.mesh);
        const double rhs = (d0 + inflow_gap(t) / eb.g_min) * std::exp(eb.C * t);
        eb.rows.push_back({t, "STAB", lhs, rhs, detail::within(lhs, rhs, slack)});
    }
    return eb;
}

struct PerturbationGap {
    double size = 0.0;     // sup distance between the birth maps
    double l1_gap = 0.0;  // sup over snapshots of the L1 distance to the reference run
};

/// L1 gaps of perturbed runs against a reference, ordered by perturbation size.
inline std::vector<PerturbationGap> perturbation_gaps(const Trajectory& ref, const std::vector<Trajectory>& runs,
                                                      const std::vector<double>& sizes) {
    std::vector<PerturbationGap> out;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double g = 0.0;
        for (std::size_t k = 0; k < std::min(ref.snapshots.size(), runs[r].snapshots.size()); ++k)
            g = std::max(g, l1_distance(ref.snapshots[k].u, runs[r].snapshots[k].u, ref.mesh));
        out.push_back({sizes[r], g});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.size < y.size; });
    return out;
}

/// Time variation at one cell over the snapshot sequence.
inline double time_tv_at_cell(const Trajectory& tr, std::size_t edge, std::size_t cell) {
    double tv = 0.0;
    for (std::size_t k = 1; k < tr.snapshots.size(); ++k)
        tv += std::abs(tr.snapshots[k].u[edge][cell] - tr.snapshots[k - 1].u[edge][cell]);
    return tv;
}

// ---------------------------------------------------------------- mating

struct IntervalRef {
    std::size_t edge = 0;
    double from = 0.0, to = 0.0;
};

struct UtilitySpec {
    double theta = 0.5;
    double nu = 1.0;
    IntervalRef male, female;
};

/// nu min(theta I_M, (1 - theta) I_F) / (I_M + I_F); 0 when both integrals vanish.
inline double fertility_R(double I_M, double I_F, double theta, double nu) {
    const double den = I_M + I_F;
    if (den == 0.0) return 0.0;
    return nu * std::min(theta * I_M, (1.0 - theta) * I_F) / den;
}

inline double fertility_R(std::span<const EdgeState> u, const Mesh& mesh, const UtilitySpec& s) {
    const double IM = clipped_integral(mesh.edges[s.male.edge], u[s.male.edge], s.male.from, s.male.to);
    const double IF = clipped_integral(mesh.edges[s.female.edge], u[s.female.edge], s.female.from, s.female.to);
    return fertility_R(IM, IF, s.theta, s.nu);
}

/// The ratio theta = I_F / (I_M + I_F) that maximises R at given integrals.
inline double instantaneous_theta(double I_M, double I_F) { return I_F / (I_M + I_F); }

namespace detail {

inline double param_or_number(const json& v, const ModelConfig& m, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto it = m.parameters.find(v.get<std::string>());
        if (it == m.parameters.end()) throw ModelError(what + ": unknown parameter '" + v.get<std::string>() + "'");
        return it->second;
    }
    throw ModelError(what + ": expected a number or a parameter name");
}

inline IntervalRef interval_ref(const json& v, const ModelConfig& m, const std::string& what) {
    IntervalRef r;
    r.edge = m.edge_index(v.at("edge").get<std::string>());
    r.from = number_field(v, "from", what);
    r.to = number_field(v, "to", what);
    if (!(r.from < r.to)) throw ModelError(what + ": empty interval");
    return r;
}

}  // namespace detail

inline UtilitySpec utility_spec(const ModelConfig& m) {
    if (!m.raw.contains("objectives") || !m.raw["objectives"].contains("utility"))
        throw ModelError("config has no 'utility' objective");
    const auto& u = m.raw["objectives"]["utility"];
    UtilitySpec s;
    s.theta = detail::param_or_number(u.at("theta"), m, "utility.theta");
    s.nu = detail::param_or_number(u.at("nu"), m, "utility.nu");
    s.male = detail::interval_ref(u.at("male"), m, "utility.male");
    s.female = detail::interval_ref(u.at("female"), m, "utility.female");
    return s;
}

inline Monitor fertility_monitor(const Mesh& mesh, const UtilitySpec& s) {
    return {"R", [mesh, s](const SystemState& st) { return fertility_R(st.u, mesh, s); }};
}

namespace detail {

inline double trapezoid(std::span<const double> t, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) acc += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
    return acc;
}

inline const std::vector<double>* monitor(const Trajectory& tr, const std::string& name) {
    for (std::size_t k = 0; k < tr.monitor_names.size(); ++k)
        if (tr.monitor_names[k] == name) return &tr.monitor_values[k];
    return nullptr;
}

}  // namespace detail

/// (1/T) int_0^T R dt by the trapezoid rule, over the per-step "R" monitor
/// when present, otherwise over the snapshots.
inline double utility_mating(const Trajectory& tr, const UtilitySpec& s) {
    std::vector<double> t, r;
    if (const auto* mon = detail::monitor(tr, "R")) {
        t = tr.monitor_t;
        r = *mon;
    } else {
        for (const auto& snap : tr.snapshots) {
            t.push_back(snap.t);
            r.push_back(fertility_R(snap.u, tr.mesh, s));
        }
    }
    if (t.size() < 2 || !(t.back() > t.front())) return r.empty() ? 0.0 : r.front();
    return detail::trapezoid(t, r) / (t.back() - t.front());
}

// -------------------------------------------------------------- resource

struct NetGainSpec {
    std::vector<std::optional<Expression>> cost;  // per edge, over a
    std::vector<std::optional<Expression>> gain;
    std::vector<double> origin;
};

inline NetGainSpec netgain_spec(const ModelConfig& m) {
    if (!m.raw.contains("objectives") || !m.raw["objectives"].contains("netgain"))
        throw ModelError("config has no 'netgain' objective");
    const auto& o = m.raw["objectives"]["netgain"];
    NetGainSpec s;
    s.cost.resize(m.n());
    s.gain.resize(m.n());
    for (const auto& e : m.edges) s.origin.push_back(e.origin);
    auto read = [&](const char* key, std::vector<std::optional<Expression>>& out) {
        if (!o.contains(key)) return;
        for (auto it = o.at(key).begin(); it != o.at(key).end(); ++it) {
            const std::size_t i = m.edge_index(it.key());
            out[i] = detail::parse_in_context(detail::expr_text(it.value(), key), {"a"}, m.parameters,
                                              std::string("netgain.") + key + "." + it.key());
        }
    };
    read("cost", s.cost);
    read("gain", s.gain);
    return s;
}

/// Instantaneous cost and gain densities integrated over every edge, in
/// biological coordinates a = origin + x.
class NetGainRates {
public:
    NetGainRates(const Mesh& mesh, const NetGainSpec& s) {
        for (std::size_t i = 0; i < mesh.edges.size(); ++i) {
            const auto& em = mesh.edges[i];
            std::vector<double> c(em.N, 0.0), g(em.N, 0.0);
            for (std::size_t j = 0; j < em.N; ++j) {
                const double a = s.origin[i] + em.center(j);
                if (s.cost[i]) c[j] = em.da * (*s.cost[i])({a});
                if (s.gain[i]) g[j] = em.da * (*s.gain[i])({a});
            }
            cost_.push_back(std::move(c));
            gain_.push_back(std::move(g));
        }
    }

    double cost(std::span<const EdgeState> u) const { return dot(cost_, u); }
    double gain(std::span<const EdgeState> u) const { return dot(gain_, u); }

private:
    static double dot(const std::vector<std::vector<double>>& w, std::span<const EdgeState> u) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            for (std::size_t j = 0; j < w[i].size(); ++j) acc += w[i][j] * u[i][j];
        return acc;
    }

    std::vector<std::vector<double>> cost_, gain_;
};

inline std::vector<Monitor> netgain_monitors(const Mesh& mesh, const NetGainSpec& s) {
    auto rates = std::make_shared<NetGainRates>(mesh, s);
    return {{"cost", [rates](const SystemState& st) { return rates->cost(st.u); }},
            {"gain", [rates](const SystemState& st) { return rates->gain(st.u); }}};
}

struct CostGain {
    double cost = 0.0;
    double gain = 0.0;
    std::vector<double> t;
    std::vector<double> running;  // G(t) - C(t)

    double net() const { return gain - cost; }
};

/// Time-trapezoid of the cost and gain rates, over the per-step monitors
/// when present, otherwise over the snapshots.
inline CostGain cost_gain(const Trajectory& tr, const NetGainSpec& s) {
    std::vector<double> t, c, g;
    const auto* mc = detail::monitor(tr, "cost");
    const auto* mg = detail::monitor(tr, "gain");
    if (mc && mg) {
        t = tr.monitor_t;
        c = *mc;
        g = *mg;
    } else {
        const NetGainRates rates(tr.mesh, s);
        for (const auto& snap : tr.snapshots) {
            t.push_back(snap.t);
            c.push_back(rates.cost(snap.u));
            g.push_back(rates.gain(snap.u));
        }
    }
    CostGain out;
    out.t = t;
    out.running.assign(t.size(), 0.0);
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double h = t[k] - t[k - 1];
        out.cost += 0.5 * h * (c[k] + c[k - 1]);
        out.gain += 0.5 * h * (g[k] + g[k - 1]);
        out.running[k] = out.gain - out.cost;
    }
    return out;
}

}  // namespace renewnet
