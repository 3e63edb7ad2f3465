#pragma once

// Scalar maximisation over a control parameter: a grid scan run in
// parallel, then golden-section refinement around the best grid cell.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "renewnet/csv.hpp"
#include "renewnet/error.hpp"
#include "renewnet/functionals.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"
#include "renewnet/picard.hpp"

namespace renewnet {

using Objective = std::function<double(double)>;

struct SweepRow {
    double param = 0.0;
    double objective = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

struct RefineStep {
    double lo = 0.0, hi = 0.0;
    double x1 = 0.0, f1 = 0.0;
    double x2 = 0.0, f2 = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // sorted by param
    std::size_t argmax = 0;      // index into rows
    std::vector<RefineStep> refinement;
    double param_star = 0.0;
    double value_star = 0.0;

    const SweepRow& best() const { return rows[argmax]; }

    csv::Writer table() const {
        csv::Writer w({"param", "objective"});
        for (const auto& r : rows) w.row({csv::num(r.param), r.ok ? csv::num(r.objective) : "nan"});
        return w;
    }

    csv::Writer refinement_table() const {
        csv::Writer w({"step", "lo", "hi", "x1", "f1", "x2", "f2"});
        for (std::size_t k = 0; k < refinement.size(); ++k) {
            const auto& s = refinement[k];
            w.row({std::to_string(k), csv::num(s.lo), csv::num(s.hi), csv::num(s.x1), csv::num(s.f1), csv::num(s.x2),
                   csv::num(s.f2)});
        }
        return w;
    }
};

inline unsigned default_jobs() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : h;
}

/// Evaluates `f` at every grid point, at most `jobs` at a time. Failed
/// points are kept with ok = false; rows come back sorted by parameter and
/// the argmax breaks ties towards the smallest parameter.
inline SweepResult sweep(const Objective& f, std::vector<double> grid, unsigned jobs = 0) {
    if (grid.empty()) throw Error("sweep: empty grid");
    std::sort(grid.begin(), grid.end());
    SweepResult res;
    res.rows.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) res.rows[k].param = grid[k];

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) {
            auto& row = res.rows[k];
            try {
                row.objective = f(row.param);
                row.ok = std::isfinite(row.objective);
                if (!row.ok) row.error = "non-finite objective";
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };
    if (jobs == 0) jobs = default_jobs();
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, grid.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    bool any = false;
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
        if (!res.rows[k].ok) continue;
        if (!any || res.rows[k].objective > res.rows[res.argmax].objective) res.argmax = k;
        any = true;
    }
    if (!any) throw Error("sweep: every grid point failed (first error: " + res.rows.front().error + ")");
    res.param_star = res.best().param;
    res.value_star = res.best().objective;
    return res;
}

struct MaximizeOptions {
    double lo = 0.0, hi = 1.0;
    std::size_t grid_points = 21;
    double tol = 0.005;
    unsigned jobs = 0;
};

/// Grid scan, then golden section on [best - h, best + h] clipped to
/// [lo, hi] until the bracket is at most `tol` wide. Returns the bracket
/// midpoint unless a grid or interior point scored higher.
inline SweepResult maximize(const Objective& f, const MaximizeOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw Error("maximize: tolerance must be positive");
    if (!(opt.hi > opt.lo)) throw Error("maximize: empty parameter range");
    const std::size_t n = std::max<std::size_t>(2, opt.grid_points);
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k)
        grid[k] = k + 1 == n ? opt.hi : opt.lo + (opt.hi - opt.lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    SweepResult res = sweep(f, grid, opt.jobs);
    const double h = (opt.hi - opt.lo) / static_cast<double>(n - 1);

    double a = std::max(opt.lo, res.best().param - h);
    double b = std::min(opt.hi, res.best().param + h);
    double best_x = res.best().param, best_f = res.best().objective;
    auto consider = [&](double x, double fx) {
        if (std::isfinite(fx) && (fx > best_f || (fx == best_f && x < best_x))) {
            best_x = x;
            best_f = fx;
        }
    };
    auto eval = [&](double x) {
        try {
            const double v = f(x);
            return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    consider(x1, f1);
    consider(x2, f2);
    while (b - a > opt.tol) {
        res.refinement.push_back({a, b, x1, f1, x2, f2});
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = eval(x1);
            consider(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = eval(x2);
            consider(x2, f2);
        }
    }
    res.refinement.push_back({a, b, x1, f1, x2, f2});
    const double mid = 0.5 * (a + b);
    const double fm = eval(mid);
    if (std::isfinite(fm) && fm >= best_f) {
        best_x = mid;
        best_f = fm;
    }
    res.param_star = best_x;
    res.value_star = best_f;
    return res;
}

enum class SolverKind { lxf, picard };

struct RunSettings {
    double da = 0.1;
    double cfl = 0.9;
    SolverKind solver = SolverKind::lxf;
    std::size_t picard_snapshots = 200;  // time samples of the Picard solution used by the functionals
};

namespace detail {

// Runs the model with the given monitors; Picard runs are sampled on a
// uniform time grid and exposed as snapshots.
inline Trajectory run_for_objective(const ModelConfig& m, const RunSettings& rs, std::vector<Monitor> monitors) {
    const Mesh mesh = Mesh::uniform(m, rs.da);
    if (rs.solver == SolverKind::lxf) {
        SimulateOptions o;
        o.cfl = rs.cfl;
        o.output_times = {0.0, m.horizon};
        o.monitors = std::move(monitors);
        o.record_steps = false;
        return simulate(m, mesh, o);
    }
    const auto sol = picard_solve(m, m.horizon);
    std::vector<double> times;
    for (std::size_t k = 0; k <= rs.picard_snapshots; ++k)
        times.push_back(m.horizon * static_cast<double>(k) / static_cast<double>(rs.picard_snapshots));
    return sol.to_trajectory(mesh, times);
}

}  // namespace detail

/// Utility of the mating model as a function of the family parameter.
inline Objective utility_objective(ModelFamily family, RunSettings rs) {
    return [family = std::move(family), rs](double p) {
        const ModelConfig m = family(p);
        const UtilitySpec spec = utility_spec(m);
        const Mesh mesh = Mesh::uniform(m, rs.da);
        const auto tr = detail::run_for_objective(m, rs, {fertility_monitor(mesh, spec)});
        return utility_mating(tr, spec);
    };
}

/// Gain minus cost of the resource model as a function of the family parameter.
inline Objective netgain_objective(ModelFamily family, RunSettings rs) {
    return [family = std::move(family), rs](double p) {
        const ModelConfig m = family(p);
        const NetGainSpec spec = netgain_spec(m);
        const Mesh mesh = Mesh::uniform(m, rs.da);
        const auto tr = detail::run_for_objective(m, rs, netgain_monitors(mesh, spec));
        return cost_gain(tr, spec).net();
    };
}

}  // namespace renewnet
