#pragma once

// Small arithmetic expression language used for every user-supplied scalar
// function: growth and source coefficients, boundary maps, probe weights and
// initial data.
//
// Grammar (EBNF), highest binding last:
//
//   expr    = term , { ("+" | "-") , term } ;
//   term    = unary , { ("*" | "/") , unary } ;
//   unary   = "-" , unary | power ;
//   power   = primary , [ "^" , unary ] ;           (* right associative *)
//   primary = number | name | name , "(" , args , ")" | "(" , expr , ")" ;
//   args    = expr , { "," , expr } ;
//   number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
//           | "." , digits , [ exponent ] ;
//
// Functions: min(a,b), max(a,b), exp(a), abs(a), sin(a), cos(a).
// Unary minus binds looser than ^, so -2^2 == -4 and 2^3^2 == 512.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "renewnet/error.hpp"

namespace renewnet {

enum class Op : std::uint8_t { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Min, Max, Exp, Abs, Sin, Cos };

namespace detail {

struct ExprNode {
    Op op = Op::Num;
    double value = 0.0;
    std::uint32_t var = 0;
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
};

inline int arity(Op op) {
    switch (op) {
        case Op::Num:
        case Op::Var: return 0;
        case Op::Neg:
        case Op::Exp:
        case Op::Abs:
        case Op::Sin:
        case Op::Cos: return 1;
        default: return 2;
    }
}

inline std::optional<Op> function_op(std::string_view name) {
    if (name == "min") return Op::Min;
    if (name == "max") return Op::Max;
    if (name == "exp") return Op::Exp;
    if (name == "abs") return Op::Abs;
    if (name == "sin") return Op::Sin;
    if (name == "cos") return Op::Cos;
    return std::nullopt;
}

inline const char* function_name(Op op) {
    switch (op) {
        case Op::Min: return "min";
        case Op::Max: return "max";
        case Op::Exp: return "exp";
        case Op::Abs: return "abs";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        default: return "?";
    }
}

// Applies one operator. Division by zero and 0^negative are reported here;
// overflow to a non-finite value is caught by the caller on the final result.
inline double apply(Op op, double a, double b) {
    switch (op) {
        case Op::Neg: return -a;
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
            if (b == 0.0) throw EvalError("division by zero");
            return a / b;
        case Op::Pow:
            if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power");
            return std::pow(a, b);
        case Op::Min: return std::min(a, b);
        case Op::Max: return std::max(a, b);
        case Op::Exp: return std::exp(a);
        case Op::Abs: return std::abs(a);
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        default: return 0.0;
    }
}

inline std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace detail

/// Immutable parsed expression over an ordered list of declared variables.
/// Copies share the underlying tree; evaluation is thread safe.
class Expression {
public:
    Expression() : Expression(constant(0.0)) {}

    static Expression constant(double value, std::vector<std::string> vars = {}) {
        Impl impl;
        impl.vars = std::move(vars);
        impl.nodes.push_back({Op::Num, value, 0, -1, -1});
        impl.root = 0;
        impl.source = detail::format_number(value);
        return Expression(std::move(impl));
    }

    /// Parses `src`; every identifier that is not a function must be in `vars`.
    static Expression parse(std::string_view src, std::vector<std::string> vars);

    /// Evaluates with `values[i]` bound to `variables()[i]`.
    double operator()(std::span<const double> values) const {
        if (values.size() < impl_->vars.size())
            throw EvalError("expression expects " + std::to_string(impl_->vars.size()) +
                            " values, got " + std::to_string(values.size()));
        const auto& prog = impl_->program;
        double small[32];
        std::vector<double> large;
        double* stack = small;
        if (impl_->max_depth > 32) {
            large.resize(impl_->max_depth);
            stack = large.data();
        }
        std::size_t sp = 0;
        for (const auto& ins : prog) {
            switch (ins.op) {
                case Op::Num: stack[sp++] = ins.value; break;
                case Op::Var: stack[sp++] = values[ins.var]; break;
                case Op::Neg:
                case Op::Exp:
                case Op::Abs:
                case Op::Sin:
                case Op::Cos: stack[sp - 1] = detail::apply(ins.op, stack[sp - 1], 0.0); break;
                default:
                    stack[sp - 2] = detail::apply(ins.op, stack[sp - 2], stack[sp - 1]);
                    --sp;
            }
        }
        const double r = stack[0];
        if (!std::isfinite(r)) throw EvalError("non-finite result evaluating '" + impl_->source + "'");
        return r;
    }

    double operator()(std::initializer_list<double> values) const {
        return (*this)(std::span<const double>(values.begin(), values.size()));
    }

    /// Evaluates with named bindings; every declared variable must be bound.
    double eval(const std::map<std::string, double>& bindings) const {
        std::vector<double> v(impl_->vars.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto it = bindings.find(impl_->vars[i]);
            if (it == bindings.end()) throw EvalError("unbound variable '" + impl_->vars[i] + "'");
            v[i] = it->second;
        }
        return (*this)(v);
    }

    const std::vector<std::string>& variables() const { return impl_->vars; }

    bool depends_on(std::string_view name) const {
        for (std::size_t i = 0; i < impl_->vars.size(); ++i)
            if (impl_->vars[i] == name) return impl_->used[i];
        return false;
    }

    bool is_constant() const {
        return std::none_of(impl_->used.begin(), impl_->used.end(), [](bool b) { return b; });
    }

    /// Source text as given to parse(), or the printed form for derived expressions.
    const std::string& source() const { return impl_->source; }

    /// Minimal-parenthesis printing; re-parses to a structurally equal tree.
    std::string to_string() const { return print(impl_->root); }

    /// Structural equality of trees (variables compared by name).
    bool structurally_equal(const Expression& other) const {
        return equal_nodes(*impl_, impl_->root, *other.impl_, other.impl_->root);
    }

    /// Replaces the named variables by constants, drops them from the declared
    /// list and folds constant subtrees.
    Expression bind(const std::map<std::string, double>& constants) const {
        Impl out;
        std::vector<std::int32_t> remap(impl_->vars.size(), -1);
        for (std::size_t i = 0; i < impl_->vars.size(); ++i) {
            if (!constants.count(impl_->vars[i])) {
                remap[i] = static_cast<std::int32_t>(out.vars.size());
                out.vars.push_back(impl_->vars[i]);
            }
        }
        out.root = copy_bound(*impl_, impl_->root, constants, remap, out);
        out.source.clear();
        return Expression(std::move(out));
    }

    /// Replaces variable `name` by `replacement`, whose variables must all be
    /// declared in this expression. The declared list is unchanged.
    Expression substitute(std::string_view name, const Expression& replacement) const {
        std::vector<std::uint32_t> repl_map(replacement.impl_->vars.size());
        for (std::size_t i = 0; i < repl_map.size(); ++i) {
            auto it = std::find(impl_->vars.begin(), impl_->vars.end(), replacement.impl_->vars[i]);
            if (it == impl_->vars.end())
                throw EvalError("substitution introduces undeclared variable '" + replacement.impl_->vars[i] + "'");
            repl_map[i] = static_cast<std::uint32_t>(it - impl_->vars.begin());
        }
        Impl out;
        out.vars = impl_->vars;
        out.root = copy_subst(*impl_, impl_->root, name, *replacement.impl_, repl_map, out);
        return Expression(std::move(out));
    }

    /// Same tree with a different declared variable list (a superset of the
    /// variables actually used).
    Expression redeclare(std::vector<std::string> vars) const {
        Impl out = *impl_;
        for (auto& n : out.nodes) {
            if (n.op != Op::Var) continue;
            const std::string& name = impl_->vars[n.var];
            auto it = std::find(vars.begin(), vars.end(), name);
            if (it == vars.end()) throw EvalError("variable '" + name + "' not in new declaration");
            n.var = static_cast<std::uint32_t>(it - vars.begin());
        }
        out.vars = std::move(vars);
        return Expression(std::move(out));
    }

private:
    struct Instr {
        Op op;
        std::uint32_t var;
        double value;
    };

    struct Impl {
        std::vector<detail::ExprNode> nodes;
        std::int32_t root = -1;
        std::vector<std::string> vars;
        std::vector<bool> used;
        std::vector<Instr> program;
        std::size_t max_depth = 0;
        std::string source;
    };

    class Parser;

    explicit Expression(Impl impl) {
        finalize(impl);
        impl_ = std::make_shared<const Impl>(std::move(impl));
    }

    static void finalize(Impl& impl) {
        impl.used.assign(impl.vars.size(), false);
        impl.program.clear();
        std::size_t depth = 0;
        impl.max_depth = 0;
        emit(impl, impl.root, depth);
        if (impl.source.empty()) {
            Expression tmp;
            tmp.impl_ = std::make_shared<const Impl>(impl);
            impl.source = tmp.to_string();
        }
    }

    static void emit(Impl& impl, std::int32_t idx, std::size_t& depth) {
        const auto& n = impl.nodes[static_cast<std::size_t>(idx)];
        if (n.lhs >= 0) emit(impl, n.lhs, depth);
        if (n.rhs >= 0) emit(impl, n.rhs, depth);
        switch (detail::arity(n.op)) {
            case 0:
                ++depth;
                if (n.op == Op::Var) impl.used[n.var] = true;
                break;
            case 2: --depth; break;
            default: break;
        }
        impl.max_depth = std::max(impl.max_depth, depth);
        impl.program.push_back({n.op, n.var, n.value});
    }

    static std::int32_t push(Impl& out, detail::ExprNode node) {
        out.nodes.push_back(node);
        return static_cast<std::int32_t>(out.nodes.size() - 1);
    }

    static std::int32_t copy_bound(const Impl& in, std::int32_t idx, const std::map<std::string, double>& constants,
                                   const std::vector<std::int32_t>& remap, Impl& out) {
        const auto& n = in.nodes[static_cast<std::size_t>(idx)];
        if (n.op == Op::Num) return push(out, n);
        if (n.op == Op::Var) {
            if (remap[n.var] < 0) return push(out, {Op::Num, constants.at(in.vars[n.var]), 0, -1, -1});
            return push(out, {Op::Var, 0.0, static_cast<std::uint32_t>(remap[n.var]), -1, -1});
        }
        std::int32_t l = n.lhs >= 0 ? copy_bound(in, n.lhs, constants, remap, out) : -1;
        std::int32_t r = n.rhs >= 0 ? copy_bound(in, n.rhs, constants, remap, out) : -1;
        const bool lc = l < 0 || out.nodes[static_cast<std::size_t>(l)].op == Op::Num;
        const bool rc = r < 0 || out.nodes[static_cast<std::size_t>(r)].op == Op::Num;
        if (lc && rc) {
            // Leave failing constant subtrees (e.g. 1/0) in place so the error
            // surfaces at evaluation time with context.
            try {
                double a = l >= 0 ? out.nodes[static_cast<std::size_t>(l)].value : 0.0;
                double b = r >= 0 ? out.nodes[static_cast<std::size_t>(r)].value : 0.0;
                double v = detail::apply(n.op, a, b);
                if (std::isfinite(v)) {
                    out.nodes.resize(static_cast<std::size_t>(l >= 0 ? l : static_cast<std::int32_t>(out.nodes.size())));
                    return push(out, {Op::Num, v, 0, -1, -1});
                }
            } catch (const EvalError&) {
            }
        }
        return push(out, {n.op, n.value, n.var, l, r});
    }

    static std::int32_t copy_subst(const Impl& in, std::int32_t idx, std::string_view name, const Impl& repl,
                                   const std::vector<std::uint32_t>& repl_map, Impl& out) {
        const auto& n = in.nodes[static_cast<std::size_t>(idx)];
        if (n.op == Op::Var && in.vars[n.var] == name) return copy_repl(repl, repl.root, repl_map, out);
        if (detail::arity(n.op) == 0) return push(out, n);
        std::int32_t l = n.lhs >= 0 ? copy_subst(in, n.lhs, name, repl, repl_map, out) : -1;
        std::int32_t r = n.rhs >= 0 ? copy_subst(in, n.rhs, name, repl, repl_map, out) : -1;
        return push(out, {n.op, n.value, n.var, l, r});
    }

    static std::int32_t copy_repl(const Impl& in, std::int32_t idx, const std::vector<std::uint32_t>& map, Impl& out) {
        const auto& n = in.nodes[static_cast<std::size_t>(idx)];
        if (n.op == Op::Var) return push(out, {Op::Var, 0.0, map[n.var], -1, -1});
        if (n.op == Op::Num) return push(out, n);
        std::int32_t l = n.lhs >= 0 ? copy_repl(in, n.lhs, map, out) : -1;
        std::int32_t r = n.rhs >= 0 ? copy_repl(in, n.rhs, map, out) : -1;
        return push(out, {n.op, n.value, n.var, l, r});
    }

    static bool equal_nodes(const Impl& a, std::int32_t ia, const Impl& b, std::int32_t ib) {
        const auto& na = a.nodes[static_cast<std::size_t>(ia)];
        const auto& nb = b.nodes[static_cast<std::size_t>(ib)];
        if (na.op != nb.op) return false;
        if (na.op == Op::Num) return na.value == nb.value;
        if (na.op == Op::Var) return a.vars[na.var] == b.vars[nb.var];
        if ((na.lhs >= 0) != (nb.lhs >= 0) || (na.rhs >= 0) != (nb.rhs >= 0)) return false;
        if (na.lhs >= 0 && !equal_nodes(a, na.lhs, b, nb.lhs)) return false;
        if (na.rhs >= 0 && !equal_nodes(a, na.rhs, b, nb.rhs)) return false;
        return true;
    }

    static int precedence(Op op) {
        switch (op) {
            case Op::Add:
            case Op::Sub: return 1;
            case Op::Mul:
            case Op::Div: return 2;
            case Op::Neg: return 3;
            case Op::Pow: return 4;
            default: return 5;
        }
    }

    int node_prec(std::int32_t idx) const {
        const auto& n = impl_->nodes[static_cast<std::size_t>(idx)];
        // Negative literals print as "(-v)" and therefore behave as atoms.
        return precedence(n.op);
    }

    std::string wrap(std::int32_t idx, bool parens) const {
        std::string s = print(idx);
        return parens ? "(" + s + ")" : s;
    }

    std::string print(std::int32_t idx) const {
        const auto& n = impl_->nodes[static_cast<std::size_t>(idx)];
        switch (n.op) {
            case Op::Num: {
                std::string s = detail::format_number(n.value);
                return n.value < 0 ? "(" + s + ")" : s;
            }
            case Op::Var: return impl_->vars[n.var];
            case Op::Neg: return "-" + wrap(n.lhs, node_prec(n.lhs) < 3);
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div: {
                const int p = precedence(n.op);
                const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
                return wrap(n.lhs, node_prec(n.lhs) < p) + sym + wrap(n.rhs, node_prec(n.rhs) <= p);
            }
            case Op::Pow: return wrap(n.lhs, node_prec(n.lhs) <= 4) + "^" + wrap(n.rhs, node_prec(n.rhs) < 3);
            case Op::Min:
            case Op::Max: return std::string(detail::function_name(n.op)) + "(" + print(n.lhs) + ", " + print(n.rhs) + ")";
            default: return std::string(detail::function_name(n.op)) + "(" + print(n.lhs) + ")";
        }
    }

    std::shared_ptr<const Impl> impl_;
};

class Expression::Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars, Impl& out) : src_(src), vars_(vars), out_(out) {}

    std::int32_t run() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
        std::int32_t root = expr();
        skip_ws();
        if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return root;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            skip_ws();
            if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
            throw ParseError(std::string("expected '") + c + "', found '" + src_[pos_] + "'", pos_);
        }
    }

    std::int32_t node(Op op, std::int32_t l, std::int32_t r = -1) { return push(out_, {op, 0.0, 0, l, r}); }

    std::int32_t expr() {
        std::int32_t lhs = term();
        for (;;) {
            if (accept('+')) lhs = node(Op::Add, lhs, term());
            else if (accept('-')) lhs = node(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    std::int32_t term() {
        std::int32_t lhs = unary();
        for (;;) {
            if (accept('*')) lhs = node(Op::Mul, lhs, unary());
            else if (accept('/')) lhs = node(Op::Div, lhs, unary());
            else return lhs;
        }
    }

    std::int32_t unary() {
        if (accept('-')) return node(Op::Neg, unary());
        return power();
    }

    std::int32_t power() {
        std::int32_t base = primary();
        if (accept('^')) return node(Op::Pow, base, unary());
        return base;
    }

    static bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
    static bool digit(char c) { return c >= '0' && c <= '9'; }

    std::int32_t primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            std::int32_t inner = expr();
            expect(')');
            return inner;
        }
        if (digit(c) || c == '.') return number();
        if (ident_start(c)) return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    std::int32_t number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && digit(src_[p])) {
                pos_ = p;
                while (pos_ < src_.size() && digit(src_[pos_])) ++pos_;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
        return push(out_, {Op::Num, v, 0, -1, -1});
    }

    std::int32_t identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            auto op = detail::function_op(name);
            if (!op) throw ParseError("unknown function '" + std::string(name) + "'", start);
            ++pos_;
            std::int32_t a = expr();
            std::int32_t b = -1;
            if (detail::arity(*op) == 2) {
                expect(',');
                b = expr();
            }
            if (accept(',')) throw ParseError(std::string("too many arguments to ") + detail::function_name(*op), pos_ - 1);
            expect(')');
            return node(*op, a, b);
        }
        auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it == vars_.end()) throw ParseError("unknown variable '" + std::string(name) + "'", start);
        return push(out_, {Op::Var, 0.0, static_cast<std::uint32_t>(it - vars_.begin()), -1, -1});
    }

    std::string_view src_;
    const std::vector<std::string>& vars_;
    Impl& out_;
    std::size_t pos_ = 0;
};

inline Expression Expression::parse(std::string_view src, std::vector<std::string> vars) {
    Impl impl;
    impl.vars = std::move(vars);
    Parser p(src, impl.vars, impl);
    impl.root = p.run();
    impl.source = std::string(src);
    return Expression(std::move(impl));
}

/// Parses `src` allowing exactly the variables in `allowed_vars`.
inline Expression parse_expr(std::string_view src, const std::set<std::string>& allowed_vars) {
    return Expression::parse(src, std::vector<std::string>(allowed_vars.begin(), allowed_vars.end()));
}

inline double eval_expr(const Expression& e, const std::map<std::string, double>& bindings) { return e.eval(bindings); }

struct VarRange {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
};

struct BoundsReport {
    double min_seen = 0.0;
    double max_seen = 0.0;
    std::size_t samples_used = 0;
};

/// Deterministic lattice sampling of `e` over `box`. Each dimension gets
/// k = max(2, floor(n_samples^(1/dim))) equally spaced points including both
/// endpoints (a single point at the lower corner when n_samples == 1).
/// Variables of `e` that are not listed in `box` are an error.
inline BoundsReport check_bounds(const Expression& e, std::span<const VarRange> box, std::size_t n_samples) {
    if (n_samples < 1) throw EvalError("check_bounds needs at least one sample");
    const auto& vars = e.variables();
    std::vector<std::int32_t> slot(vars.size(), -1);
    for (std::size_t i = 0; i < vars.size(); ++i) {
        for (std::size_t j = 0; j < box.size(); ++j)
            if (box[j].name == vars[i]) slot[i] = static_cast<std::int32_t>(j);
        if (slot[i] < 0 && e.depends_on(vars[i]))
            throw EvalError("check_bounds: no range for variable '" + vars[i] + "'");
    }
    for (const auto& r : box)
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo)
            throw EvalError("check_bounds: invalid range for '" + r.name + "'");

    const std::size_t dim = std::max<std::size_t>(box.size(), 1);
    std::size_t k = 1;
    if (n_samples > 1) {
        k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n_samples), 1.0 / static_cast<double>(dim)) + 1e-9));
        k = std::max<std::size_t>(k, 2);
    }
    std::size_t total = 1;
    for (std::size_t d = 0; d < box.size(); ++d) total *= k;

    BoundsReport rep{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
    std::vector<std::size_t> idx(box.size(), 0);
    std::vector<double> point(box.size()), values(vars.size(), 0.0);
    for (std::size_t s = 0; s < total; ++s) {
        std::size_t rem = s;
        for (std::size_t d = 0; d < box.size(); ++d) {
            idx[d] = rem % k;
            rem /= k;
            point[d] = k == 1 ? box[d].lo
                              : box[d].lo + (box[d].hi - box[d].lo) * static_cast<double>(idx[d]) / static_cast<double>(k - 1);
        }
        for (std::size_t i = 0; i < vars.size(); ++i) values[i] = slot[i] >= 0 ? point[static_cast<std::size_t>(slot[i])] : 0.0;
        double v = 0.0;
        try {
            v = e(values);
        } catch (const EvalError& err) {
            std::string where;
            for (std::size_t d = 0; d < box.size(); ++d)
                where += (d ? ", " : "") + box[d].name + "=" + detail::format_number(point[d]);
            throw EvalError(std::string(err.what()) + " at (" + where + ")");
        }
        rep.min_seen = std::min(rep.min_seen, v);
        rep.max_seen = std::max(rep.max_seen, v);
        ++rep.samples_used;
    }
    return rep;
}

inline BoundsReport check_bounds(const Expression& e, std::initializer_list<VarRange> box, std::size_t n_samples) {
    return check_bounds(e, std::span<const VarRange>(box.begin(), box.size()), n_samples);
}

}  // namespace renewnet
