#pragma once

// Cross-checks between the two solvers and the invariant suites run by
// `renewnet verify` and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "renewnet/csv.hpp"
#include "renewnet/functionals.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"
#include "renewnet/picard.hpp"

namespace renewnet {

struct CheckRow {
    std::string suite;
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;
    bool ok = true;
};

struct VerifyReport {
    std::vector<CheckRow> rows;

    std::size_t violations() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.ok; }));
    }

    void add(std::string suite, std::string metric, double value, double threshold, bool ok) {
        rows.push_back({std::move(suite), std::move(metric), value, threshold, ok});
    }

    void append(const std::string& suite, const EstimateBundle& eb) {
        for (const auto& r : eb.rows) add(suite, r.quantity + "@t=" + csv::num(r.t), r.lhs, r.rhs, r.ok);
    }

    csv::Writer table() const {
        csv::Writer w({"suite", "metric", "value", "threshold", "ok"});
        for (const auto& r : rows) w.row({r.suite, r.metric, csv::num(r.value), csv::num(r.threshold), r.ok ? "1" : "0"});
        return w;
    }

    /// One line per suite: checks run and violations.
    std::string summary() const {
        std::vector<std::string> suites;
        for (const auto& r : rows)
            if (std::find(suites.begin(), suites.end(), r.suite) == suites.end()) suites.push_back(r.suite);
        std::ostringstream out;
        for (const auto& s : suites) {
            std::size_t n = 0, bad = 0;
            for (const auto& r : rows)
                if (r.suite == s) {
                    ++n;
                    bad += r.ok ? 0 : 1;
                }
            out << (bad ? "FAIL " : "ok   ") << s << ": " << n << " checks, " << bad << " violations\n";
        }
        return out.str();
    }
};

/// Largest L1 distance over matching snapshots of two runs on one mesh.
inline double sup_l1_distance(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < std::min(a.snapshots.size(), b.snapshots.size()); ++k)
        worst = std::max(worst, l1_distance(a.snapshots[k].u, b.snapshots[k].u, a.mesh));
    return worst;
}

/// Averages cell pairs of a run on a mesh twice as fine as `coarse`.
inline Trajectory coarsen(const Trajectory& fine, const Mesh& coarse) {
    Trajectory out;
    out.mesh = coarse;
    out.edge_ids = fine.edge_ids;
    for (std::size_t i = 0; i < coarse.edges.size(); ++i)
        if (fine.mesh.edges[i].N != 2 * coarse.edges[i].N) throw Error("coarsen: meshes are not nested");
    for (const auto& s : fine.snapshots) {
        Snapshot c;
        c.t = s.t;
        for (std::size_t i = 0; i < coarse.edges.size(); ++i) {
            EdgeState u(coarse.edges[i].N);
            for (std::size_t j = 0; j < u.size(); ++j) u[j] = 0.5 * (s.u[i][2 * j] + s.u[i][2 * j + 1]);
            c.u.push_back(std::move(u));
        }
        out.snapshots.push_back(std::move(c));
    }
    return out;
}

inline std::vector<double> uniform_times(double t_end, std::size_t intervals) {
    std::vector<double> t(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k)
        t[k] = k == intervals ? t_end : t_end * static_cast<double>(k) / static_cast<double>(intervals);
    return t;
}

/// Copy of the model with every initial datum replaced.
inline ModelConfig with_initial_data(const ModelConfig& m, const std::vector<std::string>& u0) {
    json raw = m.raw;
    for (std::size_t i = 0; i < u0.size(); ++i) raw["edges"][i]["u0"] = u0[i];
    return build_model(raw);
}

inline ModelConfig zero_datum(const ModelConfig& m) {
    return with_initial_data(m, std::vector<std::string>(m.n(), "0"));
}

/// Initial data raised by 0.5 exp(-x) on every edge.
inline ModelConfig raised_datum(const ModelConfig& m) {
    std::vector<std::string> u0;
    for (const auto& e : m.edges) u0.push_back("(" + e.u0.to_string() + ") + 0.5*exp(-x)");
    return with_initial_data(m, u0);
}

struct ConvergenceStudy {
    std::vector<double> da;
    std::vector<double> error;  // L1 distance to the exact solution at t_end
    double order = 0.0;         // log2(e_first / e_last) / (levels - 1), mesh halving assumed

    std::vector<double> pairwise() const {
        std::vector<double> p;
        for (std::size_t k = 1; k < error.size(); ++k) p.push_back(std::log(error[k - 1] / error[k]) / std::log(da[k - 1] / da[k]));
        return p;
    }
};

/// L1 error of the LxF scheme against the characteristics solver at t_end.
inline ConvergenceStudy convergence_study(const ModelConfig& m, const std::vector<double>& das, double t_end,
                                          double cfl = 0.9, const PicardSolution* exact = nullptr) {
    PicardSolution own;
    if (!exact) {
        own = picard_solve(m, t_end);
        exact = &own;
    }
    ConvergenceStudy cs;
    cs.da = das;
    for (double da : das) {
        const Mesh mesh = Mesh::uniform(m, da);
        SimulateOptions o;
        o.cfl = cfl;
        o.output_times = {t_end};
        o.record_steps = false;
        const auto tr = simulate(m, mesh, o);
        const std::vector<double> t{t_end};
        cs.error.push_back(l1_distance(tr.snapshots[0].u, exact->to_trajectory(mesh, t).snapshots[0].u, mesh));
    }
    cs.order = std::log(cs.error.front() / cs.error.back()) / std::log(das.front() / das.back());
    return cs;
}

/// Whether g(0, 0) u0(0) matches the inflow at t = 0 on every edge.
inline bool compatible_data(const ModelConfig& m, const PicardSolution& sol) {
    for (std::size_t i = 0; i < m.n(); ++i) {
        const auto& e = m.edges[i];
        const double lhs = e.g({0.0, 0.0}) * e.u0({0.0}), rhs = sol.edges[i].b(0.0);
        if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
}

/// Picard residual ratios against n Lip(beta) T_bar + 0.05.
inline void contraction_check(VerifyReport& rep, const ModelConfig& m, const PicardSolution& sol) {
    const double bound = static_cast<double>(m.n()) * m.meta.lip_beta * sol.T_bar + 0.05;
    double worst = 0.0;
    for (const auto& h : sol.residual_history)
        for (std::size_t k = 1; k < h.size(); ++k)
            if (h[k - 1] > 0.0) worst = std::max(worst, h[k] / h[k - 1]);
    rep.add("contraction", "max residual ratio", worst, bound, worst <= bound);
}

/// Positivity, comparison, zero datum, stability and a-priori bounds on
/// LxF runs at one mesh over [0, t_end].
inline void invariant_suites(VerifyReport& rep, const ModelConfig& m, double da, double t_end, double cfl = 0.9,
                             std::size_t intervals = 10) {
    const Mesh mesh = Mesh::uniform(m, da);
    SimulateOptions o;
    o.cfl = cfl;
    o.output_times = uniform_times(t_end, intervals);
    const auto base = simulate(m, mesh, o);

    const LxfScheme scheme(m, mesh);
    double u0_min = std::numeric_limits<double>::infinity();
    for (const auto& e : scheme.initial_state().u)
        for (double v : e) u0_min = std::min(u0_min, v);
    bool monotone = true;
    for (const auto& c : m.couplings) monotone = monotone && c.monotone;

    if (u0_min >= 0.0 && monotone) {
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& s : base.snapshots)
            for (const auto& e : s.u)
                for (double v : e) lowest = std::min(lowest, v);
        rep.add("positivity", "min u", lowest, -1e-12, lowest >= -1e-12);
    }

    const auto mr = raised_datum(m);
    const auto raised = simulate(mr, mesh, o);
    if (monotone) {
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < base.snapshots.size(); ++k)
            for (std::size_t i = 0; i < m.n(); ++i)
                for (std::size_t j = 0; j < mesh.edges[i].N; ++j)
                    gap = std::min(gap, raised.snapshots[k].u[i][j] - base.snapshots[k].u[i][j]);
        rep.add("comparison", "min (raised - base)", gap, -1e-10, gap >= -1e-10);
    }
    rep.append("stability", stability_check(base, m, raised, mr, 0.05));

    const auto mz = zero_datum(m);
    const auto zero = simulate(mz, mesh, o);
    double zmax = 0.0;
    for (const auto& s : zero.snapshots) zmax = std::max(zmax, linf_norm(s.u));
    rep.add("zero datum", "max |u| (lxf)", zmax, 0.0, zmax == 0.0);

    rep.append("apriori", apriori_check(base, m, 0.05, 0.10));
}

enum class VerifyLevel { fast, full };

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::fast;
    double cfl = 0.9;
    double da = 0.0;  // mesh of the full-horizon invariant runs, 0: config mesh or 0.1
    double window = 1.0;
};

/// Every suite on one model. Convergence and agreement run on
/// [0, min(window, horizon)]; the full level adds the invariant suites
/// over the whole horizon.
inline VerifyReport run_verify(const ModelConfig& m, const VerifyOptions& opt = {}) {
    VerifyReport rep;
    const double t_end = std::min(opt.window, m.horizon);
    std::vector<double> das{1.0 / 50, 1.0 / 100, 1.0 / 200};
    if (opt.level == VerifyLevel::full) das.push_back(1.0 / 400);

    const auto sol = picard_solve(m, t_end);
    contraction_check(rep, m, sol);
    rep.add("contraction", "final residual", sol.final_residual, 1e-8, sol.final_residual <= 1e-8);

    const auto cs = convergence_study(m, das, t_end, opt.cfl, &sol);
    const double e_scale = std::max(1e-300, cs.error.front());
    if (cs.error.front() <= 1e-13) {
        rep.add("convergence", "max L1 error", e_scale, 1e-13, true);
    } else {
        // a jump between datum and inflow caps first-order schemes at one half
        const double need = compatible_data(m, sol) ? 0.8 : 0.4;
        rep.add("convergence", "observed order", cs.order, need, cs.order >= need);
        for (std::size_t k = 0; k < cs.da.size(); ++k)
            rep.add("convergence", "L1 error da=" + csv::num(cs.da[k]), cs.error[k], 0.0, true);
    }

    // Picard against LxF at the finest mesh, measured by LxF self-refinement
    const double da = das.back();
    const Mesh mesh = Mesh::uniform(m, da), fine_mesh = Mesh::uniform(m, da / 2);
    SimulateOptions o;
    o.cfl = opt.cfl;
    o.output_times = uniform_times(t_end, 4);
    const auto lxf = simulate(m, mesh, o);
    const auto lxf_fine = coarsen(simulate(m, fine_mesh, o), mesh);
    const auto pic = sol.to_trajectory(mesh, o.output_times);
    const double self = sup_l1_distance(lxf, lxf_fine), gap = sup_l1_distance(lxf, pic);
    rep.add("agreement", "sup L1(picard, lxf)", gap, 5 * self, gap <= 5 * self || gap <= 1e-13);

    const auto pz = picard_solve(zero_datum(m), t_end).to_trajectory(mesh, o.output_times);
    double zmax = 0.0;
    for (const auto& s : pz.snapshots) zmax = std::max(zmax, linf_norm(s.u));
    rep.add("zero datum", "max |u| (picard)", zmax, 0.0, zmax == 0.0);
    rep.append("apriori picard", apriori_check(sol.to_trajectory(mesh, uniform_times(t_end, 4)), m, 0.05, 0.10));

    if (opt.level == VerifyLevel::full) {
        double run_da = opt.da;
        if (!(run_da > 0.0)) run_da = m.raw.contains("mesh") ? m.raw["mesh"].value("da", 0.1) : 0.1;
        invariant_suites(rep, m, run_da, m.horizon, opt.cfl);
    } else {
        invariant_suites(rep, m, da, t_end, opt.cfl);
    }
    return rep;
}

}  // namespace renewnet
