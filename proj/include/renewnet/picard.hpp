#pragma once

// Fixed-point solution of the coupled system. On each sub-horizon
// [ts, ts + Tbar] the inflows are frozen from the previous iterate, every
// edge is solved exactly along characteristics, and the inflows are
// reassembled until the iterates stop moving in C([ts, te]; L1).
//
// Each edge keeps its original datum and the full inflow history from t = 0,
// so the end state of a sub-horizon is never resampled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "renewnet/characteristics.hpp"
#include "renewnet/error.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"

namespace renewnet {

struct PicardOptions {
    std::size_t samples = 256;  // inflow knots per sub-horizon
    double tol = 1e-8;
    int max_iter = 50;
    double s_geom = 0.9;
    double s_lip = 0.5;
    std::size_t panels_per_length = 0;  // quadrature density for probe integrals, 0 = 512 per edge
    std::size_t residual_panels = 256;
    CharacteristicOptions chars;
};

/// Sub-horizon length: s_geom * Gamma(min trace point), capped by
/// s_lip / (n Lip(beta)) and by the model horizon.
inline double sub_horizon(const ModelConfig& m, const std::vector<std::shared_ptr<const CharacteristicField>>& fields,
                          const PicardOptions& opt = {}) {
    double tb = m.horizon;
    for (const auto& c : m.couplings)
        for (const auto& tp : c.traces) tb = std::min(tb, opt.s_geom * fields[tp.edge_index]->Gamma_inv(tp.x));
    if (m.meta.lip_beta > 0.0) tb = std::min(tb, opt.s_lip / (static_cast<double>(m.n()) * m.meta.lip_beta));
    return tb;
}

inline std::vector<std::shared_ptr<const CharacteristicField>> make_fields(const ModelConfig& m, double horizon,
                                                                           const CharacteristicOptions& opt = {}) {
    std::vector<std::shared_ptr<const CharacteristicField>> out;
    for (const auto& e : m.edges)
        out.push_back(std::make_shared<const CharacteristicField>(CharacteristicField::from_edge(e, horizon, opt)));
    return out;
}

inline double sub_horizon(const ModelConfig& m, const PicardOptions& opt = {}) {
    return sub_horizon(m, make_fields(m, m.horizon, opt.chars), opt);
}

/// Raised when a sub-horizon does not converge within max_iter.
class PicardError : public SolverError {
public:
    PicardError(const std::string& what, std::vector<double> history)
        : SolverError(what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

struct PicardSolution {
    std::vector<std::string> edge_ids;
    std::vector<ScalarIBVP> edges;  // original data and converged inflow history
    double T_bar = 0.0;
    std::vector<double> breaks;                          // sub-horizon end points, starting at 0
    std::vector<std::vector<double>> residual_history;  // per sub-horizon
    std::vector<std::vector<std::vector<double>>> trace_history;  // [sub-horizon][iteration] probe traces at the knots
    int iterations = 0;
    double final_residual = 0.0;

    double value(std::size_t edge, double t, double x) const { return exact_value(edges[edge], t, x); }

    std::vector<double> cell_averages(std::size_t edge, double t, const EdgeMesh& em) const {
        std::vector<double> faces(em.N + 1);
        for (std::size_t j = 0; j <= em.N; ++j) faces[j] = em.face(j);
        return exact_cell_averages(edges[edge], t, faces);
    }

    /// Cell averages on `mesh` at each time, as FV snapshots. The inflow
    /// log holds b at every knot up to the last time.
    Trajectory to_trajectory(const Mesh& mesh, std::span<const double> times) const {
        Trajectory tr;
        tr.mesh = mesh;
        tr.edge_ids = edge_ids;
        const double t_end = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
        std::vector<double> knots;
        for (const auto& e : edges) knots.insert(knots.end(), e.b.knots().begin(), e.b.knots().end());
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
        for (std::size_t k = 0; k < knots.size() && knots[k] < t_end; ++k) {
            const double next = k + 1 < knots.size() ? std::min(knots[k + 1], t_end) : t_end;
            tr.step_t.push_back(knots[k]);
            tr.step_dt.push_back(next - knots[k]);
            std::vector<double> b;
            for (const auto& e : edges) b.push_back(e.b(knots[k]));
            tr.step_b.push_back(std::move(b));
        }
        for (double t : times) {
            Snapshot s;
            s.t = t;
            for (std::size_t i = 0; i < edges.size(); ++i) s.u.push_back(cell_averages(i, t, mesh.edges[i]));
            tr.snapshots.push_back(std::move(s));
        }
        return tr;
    }
};

/// Iteration state of the fixed-point solve.
class PicardSolver {
public:
    PicardSolver(const ModelConfig& m, double horizon, PicardOptions opt = {})
        : model_(&m), horizon_(horizon), opt_(opt), fields_(make_fields(m, horizon, opt.chars)) {
        if (!(opt_.tol > 0.0)) throw SolverError("picard: tolerance must be positive");
        if (opt_.samples < 1) throw SolverError("picard: need at least one sample per sub-horizon");
        for (std::size_t i = 0; i < m.n(); ++i) {
            ScalarIBVP p;
            p.field = fields_[i];
            p.u0 = m.edges[i].u0;
            edges_.push_back(std::move(p));
        }
        T_bar_ = sub_horizon(m, fields_, opt_);
        if (!(T_bar_ > 0.0)) throw SolverError("picard: empty sub-horizon");
    }

    double T_bar() const { return T_bar_; }
    const std::vector<ScalarIBVP>& edges() const { return edges_; }

    /// Starts the sub-horizon [ts, te] with inflows frozen from the state at ts.
    void begin(double ts, double te) {
        ts_ = ts;
        knots_.resize(opt_.samples + 1);
        for (std::size_t k = 0; k <= opt_.samples; ++k)
            knots_[k] = k == opt_.samples ? te : ts + (te - ts) * static_cast<double>(k) / static_cast<double>(opt_.samples);
        reach_.assign(edges_.size(), std::vector<double>(knots_.size()));
        for (std::size_t i = 0; i < edges_.size(); ++i)
            for (std::size_t k = 0; k < knots_.size(); ++k) reach_[i][k] = fields_[i]->flow_X(knots_[k], ts, 0.0);
        integral_cache_.assign(model_->n(), {});

        const auto frozen = probes_at(ts);
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            auto& b = edges_[i].b;
            b.truncate_after(ts);
            if (b.empty()) b.append(ts, assemble(i, ts, frozen[i]));
            for (std::size_t k = 1; k < knots_.size(); ++k) b.append(knots_[k], assemble(i, knots_[k], frozen[i]));
        }
        iteration_ = 1;
        traces_.clear();
        traces_.push_back(trace_values());
    }

    /// One fixed-point update; returns sup_t sum_i ||u^{k+1}(t) - u^k(t)||_L1.
    double step() {
        std::vector<std::vector<double>> next(edges_.size(), std::vector<double>(knots_.size()));
        for (std::size_t k = 1; k < knots_.size(); ++k) {
            const auto pv = probes_at_knot(k);
            for (std::size_t i = 0; i < edges_.size(); ++i) next[i][k] = assemble(i, knots_[k], pv[i]);
        }
        std::vector<BoundarySignal> delta(edges_.size());
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            std::vector<double> dt{ts_}, db{0.0};
            for (std::size_t k = 1; k < knots_.size(); ++k) {
                dt.push_back(knots_[k]);
                db.push_back(next[i][k] - edges_[i].b(knots_[k]));
            }
            delta[i] = BoundarySignal(std::move(dt), std::move(db));
        }
        double residual = 0.0;
        for (std::size_t k = 1; k < knots_.size(); ++k) {
            double sum = 0.0;
            for (std::size_t i = 0; i < edges_.size(); ++i) sum += delta_l1(i, delta[i], k);
            residual = std::max(residual, sum);
        }
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            auto& b = edges_[i].b;
            b.truncate_after(ts_);
            for (std::size_t k = 1; k < knots_.size(); ++k) b.append(knots_[k], next[i][k]);
        }
        ++iteration_;
        traces_.push_back(trace_values());
        return residual;
    }

    /// Trace values u(t, xbar-) at the knots of the current sub-horizon,
    /// coupling by coupling.
    std::vector<double> trace_values() const {
        std::vector<double> out;
        for (std::size_t k = 1; k < knots_.size(); ++k)
            for (const auto& c : model_->couplings)
                for (const auto& tp : c.traces) out.push_back(exact_value_left(edges_[tp.edge_index], knots_[k], tp.x));
        return out;
    }

    const std::vector<std::vector<double>>& trace_history() const { return traces_; }
    int iteration() const { return iteration_; }

private:
    // Probe values of the current iterate at time t, grouped per coupling.
    std::vector<std::vector<double>> probes_at(double t) {
        std::vector<std::vector<double>> out(model_->n());
        for (std::size_t i = 0; i < model_->n(); ++i) {
            const auto& c = model_->couplings[i];
            for (const auto& tp : c.traces) out[i].push_back(exact_value_left(edges_[tp.edge_index], t, tp.x));
            for (const auto& ip : c.integrals) out[i].push_back(integral(ip, t));
        }
        return out;
    }

    // As probes_at for knot k; integrals whose interval the current
    // sub-horizon's inflow has not reached yet are computed once.
    std::vector<std::vector<double>> probes_at_knot(std::size_t k) {
        const double t = knots_[k];
        std::vector<std::vector<double>> out(model_->n());
        for (std::size_t i = 0; i < model_->n(); ++i) {
            const auto& c = model_->couplings[i];
            auto& cache = integral_cache_[i];
            if (cache.empty()) cache.assign(c.integrals.size(), std::vector<double>(knots_.size(), std::numeric_limits<double>::quiet_NaN()));
            for (const auto& tp : c.traces) out[i].push_back(exact_value_left(edges_[tp.edge_index], t, tp.x));
            for (std::size_t q = 0; q < c.integrals.size(); ++q) {
                const auto& ip = c.integrals[q];
                const bool untouched = reach_[ip.edge_index][k] <= ip.from;
                double v;
                if (untouched && !std::isnan(cache[q][k])) {
                    v = cache[q][k];
                } else {
                    v = integral(ip, t);
                    if (untouched) cache[q][k] = v;
                }
                out[i].push_back(v);
            }
        }
        return out;
    }

    double integral(const IntegralProbe& ip, double t) const {
        const Expression* w = ip.weight.is_constant() && ip.weight({0.0}) == 1.0 ? nullptr : &ip.weight;
        return exact_integral(edges_[ip.edge_index], t, ip.from, ip.to, w, opt_.panels_per_length);
    }

    double assemble(std::size_t i, double t, const std::vector<double>& probes) const {
        const auto& c = model_->couplings[i];
        std::vector<double> a{t};
        a.insert(a.end(), probes.begin(), probes.begin() + static_cast<std::ptrdiff_t>(c.traces.size()));
        std::vector<double> w(probes.begin() + static_cast<std::ptrdiff_t>(c.traces.size()), probes.end());
        try {
            return c.alpha(a) + c.beta(w);
        } catch (const EvalError& e) {
            throw SolverError("inflow of edge '" + c.edge + "': " + e.what());
        }
    }

    // L1 norm at knot k of the solution with zero datum and inflow `delta`,
    // which vanishes beyond the characteristic leaving x = 0 at ts.
    double delta_l1(std::size_t i, const BoundarySignal& delta, std::size_t k) const {
        if (delta.sup() == 0.0) return 0.0;
        const double hi = std::min(reach_[i][k], fields_[i]->length());
        if (!(hi > 0.0)) return 0.0;
        ScalarIBVP p{fields_[i], Expression::constant(0.0, {"x"}), delta};
        const double t = knots_[k];
        return detail::simpson([&](double x) { return std::abs(detail::boundary_branch(p, t, x)); }, 0.0, hi,
                               opt_.residual_panels);
    }

    const ModelConfig* model_;
    double horizon_;
    PicardOptions opt_;
    std::vector<std::shared_ptr<const CharacteristicField>> fields_;
    std::vector<ScalarIBVP> edges_;
    double T_bar_ = 0.0;

    double ts_ = 0.0;
    std::vector<double> knots_;
    std::vector<std::vector<double>> reach_;                       // [edge][knot] X(t_k; ts, 0)
    std::vector<std::vector<std::vector<double>>> integral_cache_;  // [coupling][probe][knot]
    int iteration_ = 0;
    std::vector<std::vector<double>> traces_;
};

/// One fixed-point update on the solver's current sub-horizon.
inline double picard_step(PicardSolver& solver) { return solver.step(); }

/// Solves on [0, T] sub-horizon by sub-horizon.
inline PicardSolution picard_solve(const ModelConfig& m, double T, const PicardOptions& opt = {}) {
    if (!(T > 0.0)) throw SolverError("picard: horizon must be positive");
    PicardSolver solver(m, T, opt);
    PicardSolution sol;
    for (const auto& e : m.edges) sol.edge_ids.push_back(e.id);
    sol.T_bar = solver.T_bar();
    sol.breaks.push_back(0.0);
    double ts = 0.0;
    while (ts < T * (1.0 - 1e-14)) {
        const double te = (T - ts) <= sol.T_bar * (1.0 + 1e-9) ? T : ts + sol.T_bar;
        solver.begin(ts, te);
        std::vector<double> history;
        bool done = false;
        for (int k = 0; k < opt.max_iter; ++k) {
            const double r = picard_step(solver);
            history.push_back(r);
            ++sol.iterations;
            if (r <= opt.tol) {
                done = true;
                break;
            }
        }
        if (!done)
            throw PicardError("picard: no convergence on [" + detail::format_number(ts) + ", " + detail::format_number(te) +
                                  "], last residual " + detail::format_number(history.back()),
                              history);
        sol.final_residual = std::max(sol.final_residual, history.back());
        sol.residual_history.push_back(std::move(history));
        sol.trace_history.push_back(solver.trace_history());
        sol.breaks.push_back(te);
        ts = te;
    }
    sol.edges = solver.edges();
    return sol;
}

}  // namespace renewnet
