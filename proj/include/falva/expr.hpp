#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace falva {

/// Identifies one scalar argument of a Lagrangian/Hamiltonian formula.
///
/// Text names: theta, q<i> (= q<i>d0), q<i>d<k>, u<j>, p<i>.
enum class VarKind { Theta, State, Control, Costate };

struct VarRef {
    VarKind kind = VarKind::Theta;
    int index = 0;  // component, 0-based (states/controls/costates)
    int deriv = 0;  // derivative order, states only

    friend bool operator==(const VarRef&, const VarRef&) = default;
};

inline VarRef theta_var() { return {VarKind::Theta, 0, 0}; }
inline VarRef state_var(int i, int d = 0) { return {VarKind::State, i, d}; }
inline VarRef control_var(int j) { return {VarKind::Control, j, 0}; }
inline VarRef costate_var(int i) { return {VarKind::Costate, i, 0}; }

std::string var_name(const VarRef& v);

/// Point evaluation record: theta plus the state derivative columns
/// q(:, d) = q^{(d)}(theta), d = 0..order, and optional control/costate values.
struct Jet {
    double theta = 0.0;
    Eigen::MatrixXd q;  // state_dim x (order+1)
    Eigen::VectorXd u;  // size 0 when absent
    Eigen::VectorXd p;  // size 0 when absent

    Jet() = default;
    Jet(double th, Eigen::MatrixXd states) : theta(th), q(std::move(states)) {}

    int state_dim() const { return static_cast<int>(q.rows()); }
    int order() const { return static_cast<int>(q.cols()) - 1; }
};

enum class ExprOp { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
          pos(position) {}
    std::size_t pos;
};

/// Immutable expression tree. Copies share structure; all operations on
/// expressions are pure, so trees may be used from many threads at once.
class Expr {
public:
    Expr();  // Const 0

    static Expr constant(double value);
    static Expr variable(VarRef v);

    // Structural node constructors: no folding, children kept as given.
    static Expr node(ExprOp op, Expr child);
    static Expr node(ExprOp op, Expr lhs, Expr rhs);

    ExprOp op() const;
    double value() const;       // Const nodes only
    const VarRef& var() const;  // Var nodes only
    Expr lhs() const;           // first child
    Expr rhs() const;           // second child (binary nodes)

    bool is_const() const { return op() == ExprOp::Const; }
    bool is_const(double v) const { return is_const() && value() == v; }
    bool is_var() const { return op() == ExprOp::Var; }

    /// Structural equality (Const payloads compared exactly).
    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Simplifying constructors: constant folding plus 0/1 identities. These are
// value-preserving on the domain where the unfolded tree is defined; they do
// not attempt canonical forms.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }
inline Expr pow(const Expr& base, double e) { return pow(base, Expr::constant(e)); }

/// Declared dimensions a formula is parsed/validated against.
struct Dims {
    int state_dim = 1;
    int control_dim = 0;
    int max_deriv = 0;
};

/// Grammar: expr := ['-'] term (('+'|'-') term)*; term := factor (('*'|'/') factor)*;
/// factor := base ('^' factor)?; base := number | ident | func '(' expr ')' | '(' expr ')'.
/// A '-' directly in front of a number literal yields a negative constant.
Expr parse(std::string_view text, const Dims& dims);

double eval(const Expr& e, const Jet& jet);

/// Exact symbolic partial derivative with every other VarRef held fixed.
Expr partial(const Expr& e, const VarRef& v);

/// d/dtheta along a trajectory: dE/dtheta + sum over referenced state slots
/// of dE/dq_i^{(d)} * q_i^{(d+1)}. Controls and costates are held fixed
/// (their theta-dependence is not representable as a VarRef).
Expr total_derivative(const Expr& e);

/// total_derivative applied k times.
Expr total_derivative(const Expr& e, int k);

/// Rebuilds the tree through the simplifying constructors.
Expr simplify(const Expr& e);

/// Replaces every variable leaf by rewrite(var); other nodes are rebuilt
/// structurally.
Expr substitute(const Expr& e, const std::function<Expr(const VarRef&)>& rewrite);

/// Prints a formula that parses back to a structurally identical tree.
std::string to_string(const Expr& e);

/// Highest state derivative order referenced anywhere in the tree (-1 if none).
int max_state_derivative(const Expr& e);

bool references_kind(const Expr& e, VarKind kind);

}  // namespace falva
