#pragma once

// Exact solution of the scalar problem
//
//   d/dt u + d/dx (g u) = d u,   g(t,0) u(t,0+) = b(t),   u(0,x) = u_o(x)
//
// along characteristics. With X(t; t0, x0) the flow of x' = g(t,x) and
// gamma(t) = X(t; 0, 0):
//
//   x >= gamma(t):  u = u_o(X(0; t, x)) exp(int_0^t (d - g_x)(s, X(s; t, x)) ds)
//   x <  gamma(t):  u = b(tau) / g(tau, 0) exp(int_tau^t (d - g_x)(s, X(s; t, x)) ds)
//
// with tau = T(0; t, x) the time the characteristic leaves x = 0.
//
// When g and d do not depend on t the characteristic maps reduce to the
// travel time Tau(x) = int_0^x 1/g and the integrals to Q(x) = int_0^x d/g,
// which are tabulated once per field. Otherwise RK4 is used on the
// augmented characteristic system.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "renewnet/error.hpp"
#include "renewnet/expr.hpp"
#include "renewnet/model.hpp"

namespace renewnet {

struct CharacteristicOptions {
    double h_ode_rel = 1.0 / 4096.0;  // ODE step as a fraction of the edge length
    int n_quad = 64;                  // minimum number of RK4 steps per characteristic
    double h_fd_rel = 1e-5;           // finite-difference step for d/dx g
    bool force_generic = false;       // skip the tabulated path even for autonomous fields
};

/// Piecewise-linear boundary inflow b(t) through sorted knots, constant
/// beyond the first and last knot. An empty signal is identically zero.
class BoundarySignal {
public:
    BoundarySignal() = default;

    BoundarySignal(std::vector<double> t, std::vector<double> b) : t_(std::move(t)), b_(std::move(b)) {
        if (t_.size() != b_.size()) throw SolverError("boundary signal: size mismatch");
        for (std::size_t i = 1; i < t_.size(); ++i)
            if (!(t_[i] > t_[i - 1])) throw SolverError("boundary signal: knot times must increase");
    }

    static BoundarySignal constant(double c) { return BoundarySignal({0.0}, {c}); }

    /// Appends a knot; a knot at the current last time replaces its value.
    void append(double t, double b) {
        if (!t_.empty()) {
            if (t == t_.back()) {
                b_.back() = b;
                return;
            }
            if (!(t > t_.back())) throw SolverError("boundary signal: knot times must increase");
        }
        t_.push_back(t);
        b_.push_back(b);
    }

    /// Drops every knot later than `t`.
    void truncate_after(double t) {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const auto keep = static_cast<std::size_t>(it - t_.begin());
        t_.resize(keep);
        b_.resize(keep);
    }

    double operator()(double t) const {
        if (t_.empty()) return 0.0;
        if (t <= t_.front()) return b_.front();
        if (t >= t_.back()) return b_.back();
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - t_.begin());
        const double s = (t - t_[j - 1]) / (t_[j] - t_[j - 1]);
        return b_[j - 1] + s * (b_[j] - b_[j - 1]);
    }

    const std::vector<double>& knots() const { return t_; }

    double tv() const {
        double v = 0.0;
        for (std::size_t i = 1; i < b_.size(); ++i) v += std::abs(b_[i] - b_[i - 1]);
        return v;
    }

    double sup() const {
        double s = 0.0;
        for (double v : b_) s = std::max(s, std::abs(v));
        return s;
    }

    /// Exact integral of |b| over [t0, t1].
    double l1(double t0, double t1) const {
        if (t1 <= t0) return 0.0;
        if (t_.empty()) return 0.0;
        std::vector<double> pts{t0};
        for (double k : t_)
            if (k > t0 && k < t1) pts.push_back(k);
        pts.push_back(t1);
        double total = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double a = (*this)(pts[i - 1]), c = (*this)(pts[i]), h = pts[i] - pts[i - 1];
            if ((a >= 0.0) == (c >= 0.0)) {
                total += 0.5 * h * std::abs(a + c);
            } else {
                const double z = h * std::abs(a) / (std::abs(a) + std::abs(c));
                total += 0.5 * (z * std::abs(a) + (h - z) * std::abs(c));
            }
        }
        return total;
    }

    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& values() const { return b_; }
    bool empty() const { return t_.empty(); }

private:
    std::vector<double> t_;
    std::vector<double> b_;
};

/// Growth g, rate d and d/dx g of one edge, with the characteristic maps.
class CharacteristicField {
public:
    /// `t_extent` is the time range sampled for the bounds of g.
    CharacteristicField(Expression g, Expression d, double length, double t_extent = 1.0,
                        std::optional<Expression> g_dx = std::nullopt, CharacteristicOptions opt = {})
        : g_(std::move(g)), d_(std::move(d)), g_dx_(std::move(g_dx)), length_(length), opt_(opt) {
        if (!(length_ > 0.0)) throw SolverError("characteristic field: length must be positive");
        auto gb = check_bounds(g_, {VarRange{"t", 0.0, t_extent}, VarRange{"x", 0.0, length_}}, 33 * 257);
        g_min_ = gb.min_seen;
        g_max_ = gb.max_seen;
        if (!(g_min_ > 0.0)) throw SolverError("characteristic field: g must be positive");
        autonomous_ = !g_.depends_on("t") && !d_.depends_on("t") && !(g_dx_ && g_dx_->depends_on("t"));
        if (autonomous_ && !opt_.force_generic) build_tables();
        exit_time_ = hit_time_T(length_, 0.0, 0.0);
    }

    static CharacteristicField from_edge(const Edge& e, double horizon, CharacteristicOptions opt = {}) {
        return CharacteristicField(e.g, e.d, e.length, horizon, e.g_dx, opt);
    }

    double g(double t, double x) const { return g_({t, x}); }
    double d(double t, double x) const { return d_({t, x}); }

    double g_x(double t, double x) const {
        if (g_dx_) return (*g_dx_)({t, x});
        const double h = opt_.h_fd_rel * length_;
        return (g_({t, x + h}) - g_({t, x - h})) / (2.0 * h);
    }

    double length() const { return length_; }
    double g_min() const { return g_min_; }
    double g_max() const { return g_max_; }
    bool tabulated() const { return !tau_.empty(); }
    const CharacteristicOptions& options() const { return opt_; }

    /// X(t; t0, x0): position at time t of the characteristic through (t0, x0).
    double flow_X(double t, double t0, double x0) const {
        if (tabulated() && x0 >= 0.0 && x0 <= length_) {
            const double s = tau_at(x0) + (t - t0);
            if (s >= 0.0 && s <= tau_.back()) return tau_inverse(s);
        }
        if (t == t0) return x0;
        const double h_t = opt_.h_ode_rel * length_ / g_max_;
        const std::size_t n = steps(std::abs(t - t0) / h_t);
        const double dt = (t - t0) / static_cast<double>(n);
        double x = x0, s = t0;
        for (std::size_t i = 0; i < n; ++i) {
            const double k1 = g(s, x);
            const double k2 = g(s + 0.5 * dt, x + 0.5 * dt * k1);
            const double k3 = g(s + 0.5 * dt, x + 0.5 * dt * k2);
            const double k4 = g(s + dt, x + dt * k3);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s = t0 + static_cast<double>(i + 1) * dt;
        }
        if (!std::isfinite(x)) throw SolverError("characteristic flow diverged");
        return x;
    }

    /// T(x; t0, x0): time at which the characteristic through (t0, x0) is at x.
    double hit_time_T(double x, double t0, double x0) const {
        if (tabulated() && x >= 0.0 && x <= length_ && x0 >= 0.0 && x0 <= length_)
            return t0 + tau_at(x) - tau_at(x0);
        if (x == x0) return t0;
        const std::size_t n = steps(std::abs(x - x0) / (opt_.h_ode_rel * length_));
        const double dx = (x - x0) / static_cast<double>(n);
        double t = t0, y = x0;
        for (std::size_t i = 0; i < n; ++i) {
            const double k1 = 1.0 / g(t, y);
            const double k2 = 1.0 / g(t + 0.5 * dx * k1, y + 0.5 * dx);
            const double k3 = 1.0 / g(t + 0.5 * dx * k2, y + 0.5 * dx);
            const double k4 = 1.0 / g(t + dx * k3, y + dx);
            t += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            y = x0 + static_cast<double>(i + 1) * dx;
        }
        if (!std::isfinite(t)) throw SolverError("characteristic hit time diverged");
        return t;
    }

    double gamma(double t) const { return flow_X(t, 0.0, 0.0); }
    double Gamma_inv(double x) const { return hit_time_T(x, 0.0, 0.0); }

    /// gamma(t), or +infinity once gamma has left the edge.
    double gamma_in_domain(double t) const {
        if (t >= exit_time_) return std::numeric_limits<double>::infinity();
        return gamma(t);
    }

    /// Foot of the characteristic through (t, x) on {t = 0} (or on {x = 0}
    /// when `boundary`) and the integral of d - g_x along it up to (t, x).
    struct Foot {
        double where;  // x0 on the datum axis, tau on the boundary axis
        double log_gain;
    };

    Foot datum_foot(double t, double x) const {
        if (tabulated()) {
            const double s = tau_at(x) - t;
            const double x0 = s <= 0.0 ? 0.0 : tau_inverse(s);
            return {x0, q_at(x) - q_at(x0) - std::log(g(0.0, x)) + std::log(g(0.0, x0))};
        }
        if (t == 0.0) return {x, 0.0};
        const double h_t = opt_.h_ode_rel * length_ / g_max_;
        const std::size_t n = steps(t / h_t);
        const double dt = -t / static_cast<double>(n);
        double y = x, I = 0.0, s = t;
        auto rate = [&](double tt, double yy) { return d(tt, yy) - g_x(tt, yy); };
        for (std::size_t i = 0; i < n; ++i) {
            const double k1 = g(s, y), r1 = rate(s, y);
            const double y2 = y + 0.5 * dt * k1;
            const double k2 = g(s + 0.5 * dt, y2), r2 = rate(s + 0.5 * dt, y2);
            const double y3 = y + 0.5 * dt * k2;
            const double k3 = g(s + 0.5 * dt, y3), r3 = rate(s + 0.5 * dt, y3);
            const double y4 = y + dt * k3;
            const double k4 = g(s + dt, y4), r4 = rate(s + dt, y4);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            I += dt / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
            s = t + static_cast<double>(i + 1) * dt;
        }
        if (!std::isfinite(y) || !std::isfinite(I)) throw SolverError("datum characteristic diverged");
        return {std::max(y, 0.0), -I};
    }

    Foot boundary_foot(double t, double x) const {
        if (tabulated()) {
            return {t - tau_at(x), q_at(x) - std::log(g(0.0, x)) + std::log(g(0.0, 0.0))};
        }
        if (x == 0.0) return {t, 0.0};
        const std::size_t n = steps(x / (opt_.h_ode_rel * length_));
        const double dx = -x / static_cast<double>(n);
        double tau = t, I = 0.0, y = x;
        auto dtau = [&](double tt, double yy) { return 1.0 / g(tt, yy); };
        auto rate = [&](double tt, double yy) { return (d(tt, yy) - g_x(tt, yy)) / g(tt, yy); };
        for (std::size_t i = 0; i < n; ++i) {
            const double k1 = dtau(tau, y), r1 = rate(tau, y);
            const double t2 = tau + 0.5 * dx * k1;
            const double k2 = dtau(t2, y + 0.5 * dx), r2 = rate(t2, y + 0.5 * dx);
            const double t3 = tau + 0.5 * dx * k2;
            const double k3 = dtau(t3, y + 0.5 * dx), r3 = rate(t3, y + 0.5 * dx);
            const double t4 = tau + dx * k3;
            const double k4 = dtau(t4, y + dx), r4 = rate(t4, y + dx);
            tau += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            I += dx / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
            y = x + static_cast<double>(i + 1) * dx;
        }
        if (!std::isfinite(tau) || !std::isfinite(I)) throw SolverError("boundary characteristic diverged");
        return {tau, -I};
    }

private:
    std::size_t steps(double ratio) const {
        const double n = std::ceil(ratio);
        if (!std::isfinite(n) || n > 1e9) throw SolverError("characteristic step count overflow");
        return std::max<std::size_t>(static_cast<std::size_t>(opt_.n_quad), static_cast<std::size_t>(n));
    }

    void build_tables() {
        const std::size_t n = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(1.0 / opt_.h_ode_rel)));
        h_ = length_ / static_cast<double>(n);
        x_.resize(n + 1);
        tau_.assign(n + 1, 0.0);
        q_.assign(n + 1, 0.0);
        inv_g_.resize(n + 1);
        dq_.resize(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            x_[i] = i == n ? length_ : h_ * static_cast<double>(i);
            const double gi = g(0.0, x_[i]);
            inv_g_[i] = 1.0 / gi;
            dq_[i] = d(0.0, x_[i]) / gi;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double xm = 0.5 * (x_[i] + x_[i + 1]);
            const double gm = g(0.0, xm);
            const double hi = x_[i + 1] - x_[i];
            tau_[i + 1] = tau_[i] + hi / 6.0 * (inv_g_[i] + 4.0 / gm + inv_g_[i + 1]);
            q_[i + 1] = q_[i] + hi / 6.0 * (dq_[i] + 4.0 * d(0.0, xm) / gm + dq_[i + 1]);
        }
        for (double v : tau_)
            if (!std::isfinite(v)) throw SolverError("characteristic table is not finite");
        for (double v : q_)
            if (!std::isfinite(v)) throw SolverError("characteristic table is not finite");
    }

    std::size_t panel(double x) const {
        const double p = std::floor(x / h_);
        const std::size_t last = x_.size() - 2;
        if (!(p > 0.0)) return 0;
        return std::min(last, static_cast<std::size_t>(p));
    }

    static double hermite(double s, double h, double f0, double f1, double m0, double m1) {
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * h * m1;
    }

    static double hermite_dx(double s, double h, double f0, double f1, double m0, double m1) {
        const double s2 = s * s;
        return ((6 * s2 - 6 * s) * f0 + (3 * s2 - 4 * s + 1) * h * m0 + (-6 * s2 + 6 * s) * f1 + (3 * s2 - 2 * s) * h * m1) / h;
    }

    double tau_at(double x) const {
        const std::size_t i = panel(x);
        const double h = x_[i + 1] - x_[i];
        return hermite((x - x_[i]) / h, h, tau_[i], tau_[i + 1], inv_g_[i], inv_g_[i + 1]);
    }

    double q_at(double x) const {
        const std::size_t i = panel(x);
        const double h = x_[i + 1] - x_[i];
        return hermite((x - x_[i]) / h, h, q_[i], q_[i + 1], dq_[i], dq_[i + 1]);
    }

    double tau_inverse(double s) const {
        auto it = std::upper_bound(tau_.begin(), tau_.end(), s);
        std::size_t i = it == tau_.begin() ? 0 : static_cast<std::size_t>(it - tau_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        const double span = tau_[i + 1] - tau_[i];
        double u = span > 0.0 ? std::clamp((s - tau_[i]) / span, 0.0, 1.0) : 0.0;
        for (int k = 0; k < 4; ++k) {
            const double f = hermite(u, h, tau_[i], tau_[i + 1], inv_g_[i], inv_g_[i + 1]) - s;
            const double df = hermite_dx(u, h, tau_[i], tau_[i + 1], inv_g_[i], inv_g_[i + 1]) * h;
            if (!(df > 0.0)) break;
            u = std::clamp(u - f / df, 0.0, 1.0);
        }
        return x_[i] + u * h;
    }

    Expression g_, d_;
    std::optional<Expression> g_dx_;
    double length_;
    CharacteristicOptions opt_;
    double g_min_ = 0.0, g_max_ = 0.0;
    bool autonomous_ = false;
    double exit_time_ = 0.0;

    double h_ = 0.0;
    std::vector<double> x_, tau_, q_, inv_g_, dq_;
};

/// Scalar initial-boundary value problem on one edge.
struct ScalarIBVP {
    std::shared_ptr<const CharacteristicField> field;
    Expression u0 = Expression::constant(0.0, {"x"});
    BoundarySignal b;
};

namespace detail {

inline double datum_branch(const ScalarIBVP& p, double t, double x) {
    const auto foot = p.field->datum_foot(t, x);
    return p.u0({foot.where}) * std::exp(foot.log_gain);
}

inline double boundary_branch(const ScalarIBVP& p, double t, double x) {
    const auto foot = p.field->boundary_foot(t, x);
    return p.b(foot.where) / p.field->g(foot.where, 0.0) * std::exp(foot.log_gain);
}

// Composite Simpson rule of f over [a, b] with `panels` panels (rounded up to even).
template <class F>
double simpson(F&& f, double a, double b, std::size_t panels) {
    if (!(b > a)) return 0.0;
    panels += panels % 2;
    panels = std::max<std::size_t>(panels, 2);
    const double h = (b - a) / static_cast<double>(panels);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return s * h / 3.0;
}

}  // namespace detail

/// u(t, x); on x = gamma(t) the datum branch is used (right-continuous).
inline double exact_value(const ScalarIBVP& p, double t, double x) {
    if (t <= 0.0) return p.u0({x});
    return x >= p.field->gamma_in_domain(t) ? detail::datum_branch(p, t, x) : detail::boundary_branch(p, t, x);
}

/// Left limit u(t, x-).
inline double exact_value_left(const ScalarIBVP& p, double t, double x) {
    if (t <= 0.0) return p.u0({x});
    return x > p.field->gamma_in_domain(t) ? detail::datum_branch(p, t, x) : detail::boundary_branch(p, t, x);
}

struct ExactProfile {
    std::vector<double> values;
    std::vector<bool> near_gamma;  // sample within one ODE step of gamma(t)
};

inline ExactProfile exact_profile(const ScalarIBVP& p, double t, std::span<const double> grid) {
    ExactProfile out;
    out.values.resize(grid.size());
    out.near_gamma.assign(grid.size(), false);
    if (t <= 0.0) {
        for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = p.u0({grid[i]});
        return out;
    }
    const double gam = p.field->gamma_in_domain(t);
    const double tol = p.field->options().h_ode_rel * p.field->length();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        out.values[i] = x >= gam ? detail::datum_branch(p, t, x) : detail::boundary_branch(p, t, x);
        out.near_gamma[i] = std::abs(x - gam) <= tol;
    }
    return out;
}

/// Integral of weight(x) u(t, x) over [a, b], split at gamma(t).
inline double exact_integral(const ScalarIBVP& p, double t, double a, double b, const Expression* weight = nullptr,
                             std::size_t panels_per_length = 0) {
    if (!(b > a)) return 0.0;
    const double L = p.field->length();
    if (panels_per_length == 0) panels_per_length = static_cast<std::size_t>(std::ceil(512.0 / L));
    auto panels = [&](double lo, double hi) {
        return std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil((hi - lo) * static_cast<double>(panels_per_length))));
    };
    auto w = [&](double x) { return weight ? (*weight)({x}) : 1.0; };
    if (t <= 0.0) return detail::simpson([&](double x) { return w(x) * p.u0({x}); }, a, b, panels(a, b));
    const double gam = p.field->gamma_in_domain(t);
    double total = 0.0;
    const double mid = std::clamp(gam, a, b);
    if (mid > a)
        total += detail::simpson([&](double x) { return w(x) * detail::boundary_branch(p, t, x); }, a, mid, panels(a, mid));
    if (b > mid)
        total += detail::simpson([&](double x) { return w(x) * detail::datum_branch(p, t, x); }, mid, b, panels(mid, b));
    return total;
}

/// Cell averages of u(t, .) on the cells [edges[j], edges[j+1]].
inline std::vector<double> exact_cell_averages(const ScalarIBVP& p, double t, std::span<const double> faces,
                                               std::size_t panels = 8) {
    std::vector<double> out;
    if (faces.size() < 2) return out;
    out.reserve(faces.size() - 1);
    const double gam = t > 0.0 ? p.field->gamma_in_domain(t) : -1.0;
    for (std::size_t j = 0; j + 1 < faces.size(); ++j) {
        const double a = faces[j], b = faces[j + 1];
        double total = 0.0;
        if (t <= 0.0) {
            total = detail::simpson([&](double x) { return p.u0({x}); }, a, b, panels);
        } else {
            const double mid = std::clamp(gam, a, b);
            if (mid > a) total += detail::simpson([&](double x) { return detail::boundary_branch(p, t, x); }, a, mid, panels);
            if (b > mid) total += detail::simpson([&](double x) { return detail::datum_branch(p, t, x); }, mid, b, panels);
        }
        out.push_back(total / (b - a));
    }
    return out;
}

}  // namespace renewnet
