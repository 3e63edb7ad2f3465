#pragma once

// Lax-Friedrichs finite volumes on every edge. Interior fluxes
//
//   F_{j+1/2} = (g_j u_j + g_{j+1} u_{j+1}) / 2 - da / (2 dt) (u_{j+1} - u_j),
//
// left flux the assembled inflow b_i(t), right flux the upwind outflow. The
// source is applied as the factor (1 + dt d_j) on the transported value,
// which keeps the scheme monotone for cfl <= 1 and dt |d^-| <= 1. Inflows
// are assembled from the state at the start of each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "renewnet/error.hpp"
#include "renewnet/model.hpp"

namespace renewnet {

struct EdgeMesh {
    double length = 1.0;
    double da = 0.1;
    std::size_t N = 10;

    double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * da; }
    double face(std::size_t j) const { return j == N ? length : static_cast<double>(j) * da; }
};

struct Mesh {
    std::vector<EdgeMesh> edges;

    /// N_i = round(L_i / da), at least 4 cells, and da_i = L_i / N_i.
    static Mesh uniform(const ModelConfig& m, double da) {
        if (!(da > 0.0)) throw ModelError("mesh: da must be positive");
        Mesh mesh;
        for (const auto& e : m.edges) {
            EdgeMesh em;
            em.length = e.length;
            const double n = std::round(e.length / da);
            if (!(n >= 4.0)) throw ModelError("mesh: edge '" + e.id + "' needs at least 4 cells");
            em.N = static_cast<std::size_t>(n);
            em.da = e.length / n;
            mesh.edges.push_back(em);
        }
        return mesh;
    }

    double da_min() const {
        double v = edges.front().da;
        for (const auto& e : edges) v = std::min(v, e.da);
        return v;
    }
};

using EdgeState = std::vector<double>;

/// Midpoint quadrature of w(x) u over [a, b], partial cells weighted by their overlap.
inline double clipped_integral(const EdgeMesh& em, std::span<const double> u, double a, double b,
                               const Expression* weight = nullptr) {
    double acc = 0.0;
    const double first = std::max(0.0, std::floor(a / em.da) - 1.0);
    for (auto j = static_cast<std::size_t>(first); j < em.N; ++j) {
        const double lo = std::max(em.face(j), a), hi = std::min(em.face(j + 1), b);
        if (em.face(j) >= b) break;
        if (hi <= lo) continue;
        double w = 1.0;
        if (weight) w = (*weight)({hi - lo >= em.da * (1.0 - 1e-12) ? em.center(j) : 0.5 * (lo + hi)});
        acc += (hi - lo) * w * u[j];
    }
    return acc;
}

struct SystemState {
    double t = 0.0;
    std::vector<EdgeState> u;
};

/// Scalar diagnostic evaluated on the state after every step.
struct Monitor {
    std::string name;
    std::function<double(const SystemState&)> fn;
};

struct Snapshot {
    double t = 0.0;
    std::vector<EdgeState> u;
};

struct Trajectory {
    Mesh mesh;
    std::vector<std::string> edge_ids;
    std::vector<Snapshot> snapshots;

    // per step, at the step start time
    std::vector<double> step_t;
    std::vector<double> step_dt;
    std::vector<std::vector<double>> step_b;       // inflow per edge
    std::vector<std::vector<double>> step_probes;  // traces then integrals, coupling by coupling

    // monitors at t = 0 and after every step
    std::vector<std::string> monitor_names;
    std::vector<double> monitor_t;
    std::vector<std::vector<double>> monitor_values;  // [monitor][sample]

    const Snapshot& at(double t) const {
        for (const auto& s : snapshots)
            if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return s;
        throw SolverError("no snapshot at t = " + detail::format_number(t));
    }
};

/// Non-finite state; carries everything computed up to the failure.
class SimulationError : public SolverError {
public:
    SimulationError(const std::string& what, Trajectory partial) : SolverError(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

inline double cfl_dt(const Mesh& mesh, const ModelConfig& m, double cfl = 0.9) {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ModelError("cfl must lie in ]0, 1]");
    if (!(m.meta.g_max > 0.0)) throw ModelError("growth bound must be positive");
    return cfl * mesh.da_min() / m.meta.g_max;
}

/// Precomputed discretisation of a model on a mesh.
class LxfScheme {
public:
    LxfScheme(const ModelConfig& m, Mesh mesh) : model_(&m), mesh_(std::move(mesh)) {
        if (mesh_.edges.size() != m.n()) throw ModelError("mesh does not match the model");
        const std::size_t n = m.n();
        g_cache_.resize(n);
        d_cache_.resize(n);
        g_static_.assign(n, false);
        d_static_.assign(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = m.edges[i];
            const auto& em = mesh_.edges[i];
            if (!e.g.depends_on("t")) {
                g_static_[i] = true;
                g_cache_[i] = sample(e.g, 0.0, em);
            }
            if (!e.d.depends_on("t")) {
                d_static_[i] = true;
                d_cache_[i] = sample(e.d, 0.0, em);
            }
        }
        for (const auto& c : m.couplings) {
            CouplingPlan plan;
            for (const auto& tp : c.traces) plan.trace_cells.push_back({tp.edge_index, trace_cell(mesh_.edges[tp.edge_index], tp.x)});
            for (const auto& ip : c.integrals) plan.integrals.push_back(integral_plan(ip));
            plans_.push_back(std::move(plan));
        }
    }

    const Mesh& mesh() const { return mesh_; }
    const ModelConfig& model() const { return *model_; }

    SystemState initial_state() const {
        SystemState s;
        for (std::size_t i = 0; i < model_->n(); ++i) {
            const auto& em = mesh_.edges[i];
            EdgeState u(em.N);
            for (std::size_t j = 0; j < em.N; ++j) u[j] = model_->edges[i].u0({em.center(j)});
            s.u.push_back(std::move(u));
        }
        return s;
    }

    /// Cell index read for the left trace at x: the last cell whose right
    /// face is at or before x.
    static std::size_t trace_cell(const EdgeMesh& em, double x) {
        const double k = std::floor(x / em.da + 1e-9);
        if (k < 1.0) return 0;
        return std::min(em.N - 1, static_cast<std::size_t>(k) - 1);
    }

    double trace_value(const SystemState& s, std::size_t coupling, std::size_t k) const {
        const auto& [edge, cell] = plans_[coupling].trace_cells[k];
        return s.u[edge][cell];
    }

    double integral_value(const SystemState& s, std::size_t coupling, std::size_t k) const {
        const auto& p = plans_[coupling].integrals[k];
        const auto& u = s.u[p.edge];
        double acc = 0.0;
        for (std::size_t q = 0; q < p.cells.size(); ++q) acc += p.coef[q] * u[p.cells[q]];
        return acc;
    }

    /// Inflow b_i for every edge; probe values are appended to `probes` if given.
    std::vector<double> boundary_data(const SystemState& s, std::vector<double>* probes = nullptr) const {
        std::vector<double> b(model_->n());
        std::vector<double> args;
        for (std::size_t i = 0; i < model_->n(); ++i) {
            const auto& c = model_->couplings[i];
            try {
                args.assign(1, s.t);
                for (std::size_t k = 0; k < c.traces.size(); ++k) args.push_back(trace_value(s, i, k));
                const double a = c.alpha(args);
                if (probes) probes->insert(probes->end(), args.begin() + 1, args.end());
                args.clear();
                for (std::size_t k = 0; k < c.integrals.size(); ++k) args.push_back(integral_value(s, i, k));
                const double bt = c.beta(args);
                if (probes) probes->insert(probes->end(), args.begin(), args.end());
                b[i] = a + bt;
            } catch (const EvalError& e) {
                throw SolverError("inflow of edge '" + c.edge + "': " + e.what());
            }
        }
        return b;
    }

    /// One step of length dt from s.t with inflows b.
    void step(SystemState& s, double dt, std::span<const double> b) const {
        for (std::size_t i = 0; i < model_->n(); ++i) step_edge(i, s.u[i], s.t, dt, b[i], flux_buf_, g_buf_, d_buf_);
        s.t += dt;
    }

private:
    struct IntegralPlan {
        std::size_t edge = 0;
        std::vector<std::size_t> cells;
        std::vector<double> coef;
    };
    struct CouplingPlan {
        std::vector<std::pair<std::size_t, std::size_t>> trace_cells;
        std::vector<IntegralPlan> integrals;
    };

    static std::vector<double> sample(const Expression& e, double t, const EdgeMesh& em) {
        std::vector<double> v(em.N);
        for (std::size_t j = 0; j < em.N; ++j) v[j] = e({t, em.center(j)});
        return v;
    }

    IntegralPlan integral_plan(const IntegralProbe& ip) const {
        IntegralPlan p;
        p.edge = ip.edge_index;
        const auto& em = mesh_.edges[ip.edge_index];
        for (std::size_t j = 0; j < em.N; ++j) {
            const double lo = std::max(em.face(j), ip.from), hi = std::min(em.face(j + 1), ip.to);
            if (hi <= lo) continue;
            const double xm = hi - lo >= em.da * (1.0 - 1e-12) ? em.center(j) : 0.5 * (lo + hi);
            p.cells.push_back(j);
            p.coef.push_back((hi - lo) * ip.weight({xm}));
        }
        return p;
    }

    void step_edge(std::size_t i, EdgeState& u, double t, double dt, double b, std::vector<double>& F,
                   std::vector<double>& gb, std::vector<double>& db) const {
        const auto& em = mesh_.edges[i];
        const std::size_t N = em.N;
        const std::vector<double>* g = &g_cache_[i];
        const std::vector<double>* d = &d_cache_[i];
        if (!g_static_[i]) {
            gb = sample(model_->edges[i].g, t, em);
            g = &gb;
        }
        if (!d_static_[i]) {
            db = sample(model_->edges[i].d, t, em);
            d = &db;
        }
        const double lam = dt / em.da;
        const double visc = em.da / (2.0 * dt);
        F.resize(N + 1);
        F[0] = b;
        for (std::size_t j = 0; j + 1 < N; ++j)
            F[j + 1] = 0.5 * ((*g)[j] * u[j] + (*g)[j + 1] * u[j + 1]) - visc * (u[j + 1] - u[j]);
        F[N] = (*g)[N - 1] * u[N - 1];
        for (std::size_t j = 0; j < N; ++j) {
            const double v = (1.0 + dt * (*d)[j]) * (u[j] - lam * (F[j + 1] - F[j]));
            u[j] = std::abs(v) < std::numeric_limits<double>::min() ? 0.0 : v;  // flush subnormals
        }
    }

    const ModelConfig* model_;
    Mesh mesh_;
    std::vector<std::vector<double>> g_cache_, d_cache_;
    std::vector<bool> g_static_, d_static_;
    std::vector<CouplingPlan> plans_;
    mutable std::vector<double> flux_buf_, g_buf_, d_buf_;
};

inline std::vector<double> boundary_data(const SystemState& s, const ModelConfig& m, const Mesh& mesh) {
    return LxfScheme(m, mesh).boundary_data(s);
}

inline SystemState lxf_step(SystemState s, double dt, const Mesh& mesh, const ModelConfig& m) {
    LxfScheme scheme(m, mesh);
    const auto b = scheme.boundary_data(s);
    scheme.step(s, dt, b);
    return s;
}

struct SimulateOptions {
    double cfl = 0.9;
    std::vector<double> output_times;  // empty: {0, horizon}
    std::vector<Monitor> monitors;
    bool record_steps = true;
};

inline bool finite_state(const SystemState& s) {
    for (const auto& e : s.u)
        for (double v : e)
            if (!std::isfinite(v)) return false;
    return true;
}

/// Marches from t = 0 to the last output time, landing exactly on every output time.
inline Trajectory simulate(const ModelConfig& m, const Mesh& mesh, const SimulateOptions& opt = {}) {
    std::vector<double> times = opt.output_times;
    if (times.empty()) times = {0.0, m.horizon};
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0.0) || !std::isfinite(times[k])) throw ModelError("output times must be finite and >= 0");
        if (k > 0 && !(times[k] > times[k - 1])) throw ModelError("output times must be strictly increasing");
    }
    const LxfScheme scheme(m, mesh);
    const double dt_max = cfl_dt(mesh, m, opt.cfl);

    Trajectory tr;
    tr.mesh = mesh;
    for (const auto& e : m.edges) tr.edge_ids.push_back(e.id);
    for (const auto& mon : opt.monitors) tr.monitor_names.push_back(mon.name);
    tr.monitor_values.resize(opt.monitors.size());

    SystemState s = scheme.initial_state();
    auto record_monitors = [&] {
        tr.monitor_t.push_back(s.t);
        for (std::size_t k = 0; k < opt.monitors.size(); ++k) tr.monitor_values[k].push_back(opt.monitors[k].fn(s));
    };
    record_monitors();

    std::size_t next = 0;
    auto take_snapshots = [&] {
        while (next < times.size() && std::abs(times[next] - s.t) <= 1e-12 * std::max(1.0, times[next])) {
            tr.snapshots.push_back({times[next], s.u});
            ++next;
        }
    };
    take_snapshots();
    std::size_t steps = 0;
    while (next < times.size()) {
        const double target = times[next];
        double dt = dt_max;
        const double remaining = target - s.t;
        if (remaining <= dt * (1.0 + 1e-10)) dt = remaining;
        std::vector<double> probes;
        const auto b = scheme.boundary_data(s, opt.record_steps ? &probes : nullptr);
        if (opt.record_steps) {
            tr.step_t.push_back(s.t);
            tr.step_dt.push_back(dt);
            tr.step_b.push_back(b);
            tr.step_probes.push_back(std::move(probes));
        }
        scheme.step(s, dt, b);
        ++steps;
        if (dt == remaining) s.t = target;
        if (!finite_state(s))
            throw SimulationError("non-finite state at step " + std::to_string(steps) + ", t = " + detail::format_number(s.t),
                                  std::move(tr));
        record_monitors();
        take_snapshots();
    }
    return tr;
}

inline Trajectory simulate(const ModelConfig& m, double da, const SimulateOptions& opt = {}) {
    return simulate(m, Mesh::uniform(m, da), opt);
}

}  // namespace renewnet
