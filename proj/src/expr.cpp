#include "falva/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

namespace falva {

struct Expr::Node {
    ExprOp op = ExprOp::Const;
    double value = 0.0;
    VarRef var;
    std::shared_ptr<const Node> lhs, rhs;

    Node(ExprOp o, double v) : op(o), value(v) {}
    Node(ExprOp o, VarRef vr) : op(o), var(vr) {}
    Node(ExprOp o, std::shared_ptr<const Node> l, std::shared_ptr<const Node> r = nullptr)
        : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
};

Expr::Expr() {
    static const auto zero = std::make_shared<const Node>(ExprOp::Const, 0.0);
    node_ = zero;
}

Expr Expr::constant(double value) { return Expr(std::make_shared<const Node>(ExprOp::Const, value)); }
Expr Expr::variable(VarRef v) { return Expr(std::make_shared<const Node>(ExprOp::Var, v)); }

Expr Expr::node(ExprOp op, Expr child) {
    return Expr(std::make_shared<const Node>(op, std::move(child.node_)));
}
Expr Expr::node(ExprOp op, Expr lhs, Expr rhs) {
    return Expr(std::make_shared<const Node>(op, std::move(lhs.node_), std::move(rhs.node_)));
}

ExprOp Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const VarRef& Expr::var() const { return node_->var; }
Expr Expr::lhs() const { return Expr(node_->lhs); }
Expr Expr::rhs() const { return Expr(node_->rhs); }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op()) return false;
    switch (a.op()) {
        case ExprOp::Const: return a.value() == b.value();
        case ExprOp::Var: return a.var() == b.var();
        case ExprOp::Neg:
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Exp:
        case ExprOp::Log:
        case ExprOp::Sqrt: return a.lhs() == b.lhs();
        default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    }
}

namespace {

bool is_unary(ExprOp op) {
    return op == ExprOp::Neg || op == ExprOp::Sin || op == ExprOp::Cos || op == ExprOp::Exp ||
           op == ExprOp::Log || op == ExprOp::Sqrt;
}

double apply_unary(ExprOp op, double x) {
    switch (op) {
        case ExprOp::Neg: return -x;
        case ExprOp::Sin: return std::sin(x);
        case ExprOp::Cos: return std::cos(x);
        case ExprOp::Exp: return std::exp(x);
        case ExprOp::Log: return std::log(x);
        case ExprOp::Sqrt: return std::sqrt(x);
        default: return 0.0;
    }
}

Expr fold_unary(ExprOp op, const Expr& a) {
    if (a.is_const()) {
        const double v = apply_unary(op, a.value());
        if (std::isfinite(v) || std::isinf(v)) return Expr::constant(v);
    }
    return Expr::node(op, a);
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const(0.0)) return b;
    if (b.is_const(0.0)) return a;
    if (a.is_const() && b.is_const()) return Expr::constant(a.value() + b.value());
    return Expr::node(ExprOp::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_const(0.0)) return a;
    if (a.is_const(0.0)) return -b;
    if (a.is_const() && b.is_const()) return Expr::constant(a.value() - b.value());
    return Expr::node(ExprOp::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const(0.0) || b.is_const(0.0)) return Expr::constant(0.0);
    if (a.is_const(1.0)) return b;
    if (b.is_const(1.0)) return a;
    if (a.is_const() && b.is_const()) return Expr::constant(a.value() * b.value());
    // keep constants left and merged, so coefficient chains stay readable
    if (b.is_const()) return b * a;
    if (a.is_const() && b.op() == ExprOp::Mul && b.lhs().is_const())
        return Expr::constant(a.value() * b.lhs().value()) * b.rhs();
    return Expr::node(ExprOp::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_const(1.0)) return a;
    if (a.is_const(0.0)) return Expr::constant(0.0);
    if (a.is_const() && b.is_const() && b.value() != 0.0)
        return Expr::constant(a.value() / b.value());
    return Expr::node(ExprOp::Div, a, b);
}

Expr operator-(const Expr& a) {
    if (a.is_const()) return Expr::constant(-a.value());
    if (a.op() == ExprOp::Neg) return a.lhs();
    return Expr::node(ExprOp::Neg, a);
}

Expr pow(const Expr& base, const Expr& exponent) {
    if (exponent.is_const(1.0)) return base;
    if (exponent.is_const(0.0)) return Expr::constant(1.0);  // 0^0 taken as 1
    if (base.is_const(1.0)) return Expr::constant(1.0);
    if (base.is_const() && exponent.is_const()) {
        const double v = std::pow(base.value(), exponent.value());
        if (std::isfinite(v)) return Expr::constant(v);
    }
    return Expr::node(ExprOp::Pow, base, exponent);
}

Expr sin(const Expr& a) { return fold_unary(ExprOp::Sin, a); }
Expr cos(const Expr& a) { return fold_unary(ExprOp::Cos, a); }
Expr exp(const Expr& a) { return fold_unary(ExprOp::Exp, a); }
Expr log(const Expr& a) { return fold_unary(ExprOp::Log, a); }
Expr sqrt(const Expr& a) { return fold_unary(ExprOp::Sqrt, a); }

// ---------------------------------------------------------------------------
// Evaluation

double eval(const Expr& e, const Jet& jet) {
    switch (e.op()) {
        case ExprOp::Const: return e.value();
        case ExprOp::Var: {
            const VarRef& v = e.var();
            switch (v.kind) {
                case VarKind::Theta: return jet.theta;
                case VarKind::State:
                    if (v.index >= jet.state_dim() || v.deriv > jet.order())
                        throw EvalError("jet does not supply " + var_name(v));
                    return jet.q(v.index, v.deriv);
                case VarKind::Control:
                    if (v.index >= jet.u.size())
                        throw EvalError("jet does not supply " + var_name(v));
                    return jet.u(v.index);
                case VarKind::Costate:
                    if (v.index >= jet.p.size())
                        throw EvalError("jet does not supply " + var_name(v));
                    return jet.p(v.index);
            }
            return 0.0;
        }
        case ExprOp::Add: return eval(e.lhs(), jet) + eval(e.rhs(), jet);
        case ExprOp::Sub: return eval(e.lhs(), jet) - eval(e.rhs(), jet);
        case ExprOp::Mul: return eval(e.lhs(), jet) * eval(e.rhs(), jet);
        case ExprOp::Div: {
            const double den = eval(e.rhs(), jet);
            if (den == 0.0) throw EvalError("division by zero");
            return eval(e.lhs(), jet) / den;
        }
        case ExprOp::Neg: return -eval(e.lhs(), jet);
        case ExprOp::Pow: return std::pow(eval(e.lhs(), jet), eval(e.rhs(), jet));
        case ExprOp::Sin: return std::sin(eval(e.lhs(), jet));
        case ExprOp::Cos: return std::cos(eval(e.lhs(), jet));
        case ExprOp::Exp: return std::exp(eval(e.lhs(), jet));
        case ExprOp::Log: {
            const double x = eval(e.lhs(), jet);
            if (x < 0.0) throw EvalError("log of negative argument");
            return std::log(x);
        }
        case ExprOp::Sqrt: {
            const double x = eval(e.lhs(), jet);
            if (x < 0.0) throw EvalError("sqrt of negative argument");
            return std::sqrt(x);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Differentiation

Expr partial(const Expr& e, const VarRef& v) {
    switch (e.op()) {
        case ExprOp::Const: return Expr::constant(0.0);
        case ExprOp::Var: return Expr::constant(e.var() == v ? 1.0 : 0.0);
        case ExprOp::Add: return partial(e.lhs(), v) + partial(e.rhs(), v);
        case ExprOp::Sub: return partial(e.lhs(), v) - partial(e.rhs(), v);
        case ExprOp::Mul:
            return partial(e.lhs(), v) * e.rhs() + e.lhs() * partial(e.rhs(), v);
        case ExprOp::Div:
            return (partial(e.lhs(), v) * e.rhs() - e.lhs() * partial(e.rhs(), v)) /
                   pow(e.rhs(), Expr::constant(2.0));
        case ExprOp::Neg: return -partial(e.lhs(), v);
        case ExprOp::Pow: {
            const Expr& f = e.lhs();
            const Expr& g = e.rhs();
            const Expr df = partial(f, v);
            if (g.is_const()) {
                const double c = g.value();
                return Expr::constant(c) * pow(f, Expr::constant(c - 1.0)) * df;
            }
            const Expr dg = partial(g, v);
            // f^g * (g' log f + g f'/f)
            return pow(f, g) * (dg * log(f) + g * df / f);
        }
        case ExprOp::Sin: return cos(e.lhs()) * partial(e.lhs(), v);
        case ExprOp::Cos: return -(sin(e.lhs()) * partial(e.lhs(), v));
        case ExprOp::Exp: return exp(e.lhs()) * partial(e.lhs(), v);
        case ExprOp::Log: return partial(e.lhs(), v) / e.lhs();
        case ExprOp::Sqrt:
            return partial(e.lhs(), v) / (Expr::constant(2.0) * sqrt(e.lhs()));
    }
    return Expr::constant(0.0);
}

namespace {

void collect_state_slots(const Expr& e, std::set<std::pair<int, int>>& slots) {
    switch (e.op()) {
        case ExprOp::Const: return;
        case ExprOp::Var:
            if (e.var().kind == VarKind::State)
                slots.insert({e.var().index, e.var().deriv});
            return;
        default:
            collect_state_slots(e.lhs(), slots);
            if (!is_unary(e.op())) collect_state_slots(e.rhs(), slots);
    }
}

}  // namespace

Expr total_derivative(const Expr& e) {
    std::set<std::pair<int, int>> slots;
    collect_state_slots(e, slots);
    Expr d = partial(e, theta_var());
    for (const auto& [i, k] : slots)
        d = d + partial(e, state_var(i, k)) * Expr::variable(state_var(i, k + 1));
    return d;
}

Expr total_derivative(const Expr& e, int k) {
    Expr d = e;
    for (int i = 0; i < k; ++i) d = total_derivative(d);
    return d;
}

Expr simplify(const Expr& e) {
    switch (e.op()) {
        case ExprOp::Const:
        case ExprOp::Var: return e;
        case ExprOp::Add: return simplify(e.lhs()) + simplify(e.rhs());
        case ExprOp::Sub: return simplify(e.lhs()) - simplify(e.rhs());
        case ExprOp::Mul: return simplify(e.lhs()) * simplify(e.rhs());
        case ExprOp::Div: return simplify(e.lhs()) / simplify(e.rhs());
        case ExprOp::Neg: return -simplify(e.lhs());
        case ExprOp::Pow: return pow(simplify(e.lhs()), simplify(e.rhs()));
        case ExprOp::Sin: return sin(simplify(e.lhs()));
        case ExprOp::Cos: return cos(simplify(e.lhs()));
        case ExprOp::Exp: return exp(simplify(e.lhs()));
        case ExprOp::Log: return log(simplify(e.lhs()));
        case ExprOp::Sqrt: return sqrt(simplify(e.lhs()));
    }
    return e;
}

Expr substitute(const Expr& e, const std::function<Expr(const VarRef&)>& rewrite) {
    switch (e.op()) {
        case ExprOp::Const: return e;
        case ExprOp::Var: return rewrite(e.var());
        default:
            if (is_unary(e.op()))
                return Expr::node(e.op(), substitute(e.lhs(), rewrite));
            return Expr::node(e.op(), substitute(e.lhs(), rewrite),
                              substitute(e.rhs(), rewrite));
    }
}

int max_state_derivative(const Expr& e) {
    std::set<std::pair<int, int>> slots;
    collect_state_slots(e, slots);
    int d = -1;
    for (const auto& [i, k] : slots) d = std::max(d, k);
    return d;
}

bool references_kind(const Expr& e, VarKind kind) {
    switch (e.op()) {
        case ExprOp::Const: return false;
        case ExprOp::Var: return e.var().kind == kind;
        default:
            if (references_kind(e.lhs(), kind)) return true;
            return !is_unary(e.op()) && references_kind(e.rhs(), kind);
    }
}

// ---------------------------------------------------------------------------
// Printing

std::string var_name(const VarRef& v) {
    switch (v.kind) {
        case VarKind::Theta: return "theta";
        case VarKind::State:
            if (v.deriv == 0) return "q" + std::to_string(v.index);
            return "q" + std::to_string(v.index) + "d" + std::to_string(v.deriv);
        case VarKind::Control: return "u" + std::to_string(v.index);
        case VarKind::Costate: return "p" + std::to_string(v.index);
    }
    return "?";
}

namespace {

std::string format_number(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

const char* func_name(ExprOp op) {
    switch (op) {
        case ExprOp::Sin: return "sin";
        case ExprOp::Cos: return "cos";
        case ExprOp::Exp: return "exp";
        case ExprOp::Log: return "log";
        case ExprOp::Sqrt: return "sqrt";
        default: return "?";
    }
}

// Precedence contexts: 0 root, 1 additive, 2 multiplicative, 3 power, 4 atom.
std::string print_expr(const Expr& e, int ctx) {
    switch (e.op()) {
        case ExprOp::Const: {
            std::string s = format_number(e.value());
            return (e.value() < 0.0 && ctx > 0) ? "(" + s + ")" : s;
        }
        case ExprOp::Var: return var_name(e.var());
        case ExprOp::Neg: {
            std::string inner;
            if (e.lhs().is_var() || (is_unary(e.lhs().op()) && e.lhs().op() != ExprOp::Neg))
                inner = "-" + print_expr(e.lhs(), 4);
            else
                inner = "-(" + print_expr(e.lhs(), 0) + ")";
            return ctx > 0 ? "(" + inner + ")" : inner;
        }
        case ExprOp::Add:
        case ExprOp::Sub: {
            const char* sep = e.op() == ExprOp::Add ? "+" : "-";
            std::string s = print_expr(e.lhs(), 1) + sep + print_expr(e.rhs(), 2);
            return ctx > 1 ? "(" + s + ")" : s;
        }
        case ExprOp::Mul:
        case ExprOp::Div: {
            const char* sep = e.op() == ExprOp::Mul ? "*" : "/";
            std::string s = print_expr(e.lhs(), 2) + sep + print_expr(e.rhs(), 3);
            return ctx > 2 ? "(" + s + ")" : s;
        }
        case ExprOp::Pow: {
            std::string s = print_expr(e.lhs(), 4) + "^" + print_expr(e.rhs(), 3);
            return ctx > 3 ? "(" + s + ")" : s;
        }
        default:
            return std::string(func_name(e.op())) + "(" + print_expr(e.lhs(), 0) + ")";
    }
}

}  // namespace

std::string to_string(const Expr& e) { return print_expr(e, 0); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    Parser(std::string_view text, const Dims& dims) : text_(text), dims_(dims) {}

    Expr run() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view text_;
    Dims dims_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool number_ahead() {
        skip_ws();
        return pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.');
    }

    Expr parse_sum() {
        Expr e = consume('-') ? parse_negated_term() : parse_term();
        while (true) {
            if (consume('+'))
                e = Expr::node(ExprOp::Add, e, parse_term());
            else if (consume('-'))
                e = Expr::node(ExprOp::Sub, e, parse_term());
            else
                return e;
        }
    }

    // After a unary '-': a plain number literal becomes a negative constant
    // factor (unless it is the base of a '^', which binds tighter), anything
    // else negates the whole term.
    Expr parse_negated_term() {
        if (number_ahead()) {
            const std::size_t save = pos_;
            Expr num = parse_number();
            if (peek() != '^')
                return parse_term_tail(Expr::constant(-num.value()));
            pos_ = save;
        }
        return Expr::node(ExprOp::Neg, parse_term());
    }

    Expr parse_term() { return parse_term_tail(parse_factor()); }

    Expr parse_term_tail(Expr head) {
        while (true) {
            if (consume('*'))
                head = Expr::node(ExprOp::Mul, head, parse_factor());
            else if (consume('/'))
                head = Expr::node(ExprOp::Div, head, parse_factor());
            else
                return head;
        }
    }

    Expr parse_factor() {
        Expr base = parse_base();
        if (consume('^')) return Expr::node(ExprOp::Pow, base, parse_factor());
        return base;
    }

    Expr parse_base() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of formula", pos_);
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!consume(')')) throw ParseError("missing ')'", pos_);
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t exp_pos = pos_ + 1;
            if (exp_pos < text_.size() && (text_[exp_pos] == '+' || text_[exp_pos] == '-')) ++exp_pos;
            if (exp_pos < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp_pos]))) {
                pos_ = exp_pos;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
            throw ParseError("malformed number", start);
        return Expr::constant(v);
    }

    Expr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        if (name == "sin" || name == "cos" || name == "exp" || name == "log" || name == "sqrt") {
            if (!consume('(')) throw ParseError("expected '(' after " + name, pos_);
            Expr arg = parse_sum();
            if (!consume(')')) throw ParseError("missing ')'", pos_);
            if (name == "sin") return Expr::node(ExprOp::Sin, arg);
            if (name == "cos") return Expr::node(ExprOp::Cos, arg);
            if (name == "exp") return Expr::node(ExprOp::Exp, arg);
            if (name == "log") return Expr::node(ExprOp::Log, arg);
            return Expr::node(ExprOp::Sqrt, arg);
        }
        if (name == "theta") return Expr::variable(theta_var());

        if (name.size() >= 2 && (name[0] == 'q' || name[0] == 'u' || name[0] == 'p')) {
            const VarRef v = parse_var_ref(name, start);
            return Expr::variable(v);
        }
        throw ParseError("unknown variable '" + name + "'", start);
    }

    VarRef parse_var_ref(const std::string& name, std::size_t start) {
        auto digits = [&](std::size_t from, std::size_t to, int& out) {
            if (from >= to) return false;
            int v = 0;
            for (std::size_t i = from; i < to; ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
                v = v * 10 + (name[i] - '0');
            }
            out = v;
            return true;
        };
        if (name[0] == 'q') {
            const std::size_t d_pos = name.find('d', 1);
            int idx = 0, der = 0;
            const bool has_d = d_pos != std::string::npos;
            if (!digits(1, has_d ? d_pos : name.size(), idx) ||
                (has_d && !digits(d_pos + 1, name.size(), der)))
                throw ParseError("unknown variable '" + name + "'", start);
            if (idx >= dims_.state_dim)
                throw ParseError("state index out of range in '" + name + "'", start);
            if (der > dims_.max_deriv)
                throw ParseError("derivative order exceeds " + std::to_string(dims_.max_deriv) +
                                     " in '" + name + "'",
                                 start);
            return state_var(idx, der);
        }
        int idx = 0;
        if (!digits(1, name.size(), idx))
            throw ParseError("unknown variable '" + name + "'", start);
        if (name[0] == 'u') {
            if (idx >= dims_.control_dim)
                throw ParseError("control index out of range in '" + name + "'", start);
            return control_var(idx);
        }
        if (idx >= dims_.state_dim)
            throw ParseError("costate index out of range in '" + name + "'", start);
        return costate_var(idx);
    }
};

}  // namespace

Expr parse(std::string_view text, const Dims& dims) { return Parser(text, dims).run(); }

}  // namespace falva
