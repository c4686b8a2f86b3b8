#include "falva/variational.hpp"

#include <cmath>
#include <stdexcept>

namespace falva {

void FalvaProblem::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("FalvaProblem: alpha must be in (0, 1]");
    if (!(a < t)) throw std::invalid_argument("FalvaProblem: requires a < t");
    if (m < 1) throw std::invalid_argument("FalvaProblem: m must be >= 1");
    if (state_dim < 1) throw std::invalid_argument("FalvaProblem: state_dim must be >= 1");
    if (references_kind(lagrangian, VarKind::Control) ||
        references_kind(lagrangian, VarKind::Costate))
        throw std::invalid_argument("FalvaProblem: Lagrangian must not reference u/p");
    if (max_state_derivative(lagrangian) > m)
        throw std::invalid_argument("FalvaProblem: Lagrangian references derivatives above m");
    if (initial.size() > 0 && (initial.rows() != m || initial.cols() != state_dim))
        throw std::invalid_argument("FalvaProblem: initial must be m x state_dim");
}

VariationalSystem::VariationalSystem(const FalvaProblem& pb) : pb_(pb) {
    pb_.validate();
    const int m = pb_.m;
    const int n = pb_.state_dim;
    const Expr theta = Expr::variable(theta_var());
    const Expr t_minus_theta = Expr::constant(pb_.t) - theta;

    partials_.assign(m + 1, std::vector<Expr>(n));
    for (int d = 0; d <= m; ++d)
        for (int c = 0; c < n; ++c)
            partials_[d][c] = partial(pb_.lagrangian, state_var(c, d));

    // psi^j = sum_{i=0}^{m-j} (-1)^i D^i dL/dq^(i+j)
    psi_.assign(m + 1, std::vector<Expr>(n));
    for (int j = 0; j <= m; ++j)
        for (int c = 0; c < n; ++c) {
            Expr s = Expr::constant(0.0);
            for (int i = 0; i <= m - j; ++i) {
                const Expr term = total_derivative(partials_[i + j][c], i);
                s = (i % 2 == 0) ? s + term : s - term;
            }
            psi_[j][c] = s;
        }

    // F = (1-alpha)/(t-theta) sum_{k=1}^m k (-1)^(k-1) D^(k-1) dL/dq^(k)
    //   + sum_{k=2}^m sum_{i=2}^k (-1)^(k-1) [prod_{s=1}^i (s-alpha)]
    //     / (t-theta)^i * C(k, k-i) * D^(k-i) dL/dq^(k)
    friction_.resize(n);
    for (int c = 0; c < n; ++c) {
        Expr first = Expr::constant(0.0);
        for (int k = 1; k <= m; ++k) {
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            first = first + Expr::constant(sign * k) * total_derivative(partials_[k][c], k - 1);
        }
        Expr F = Expr::constant(1.0 - pb_.alpha) * first / t_minus_theta;
        for (int k = 2; k <= m; ++k)
            for (int i = 2; i <= k; ++i) {
                const double sign = (k % 2 == 1) ? 1.0 : -1.0;
                const double coeff = sign * gamma_ratio(i, pb_.alpha) *
                                     static_cast<double>(binomial(k, k - i));
                const Expr term = Expr::constant(coeff) *
                                  total_derivative(partials_[k][c], k - i) /
                                  pow(t_minus_theta, Expr::constant(static_cast<double>(i)));
                F = F + term;
            }
        friction_[c] = F;
    }

    el_.resize(n);
    el_alt_.resize(n);
    for (int c = 0; c < n; ++c) {
        el_[c] = psi_[0][c] - friction_[c];
        el_alt_[c] = partials_[0][c] - total_derivative(psi_[1][c]) - friction_[c];
    }

    // DR residual: D{L - sum_j psi^j . q^(j)} - dL/dtheta - F . qdot
    Expr bracket = pb_.lagrangian;
    for (int j = 1; j <= m; ++j)
        for (int c = 0; c < n; ++c)
            bracket = bracket - psi_[j][c] * Expr::variable(state_var(c, j));
    const Expr dbracket = total_derivative(bracket);
    const Expr dL_dtheta = partial(pb_.lagrangian, theta_var());
    Expr f_dot_qdot = Expr::constant(0.0);
    for (int c = 0; c < n; ++c)
        f_dot_qdot = f_dot_qdot + friction_[c] * Expr::variable(state_var(c, 1));
    dr_ = dbracket - dL_dtheta - f_dot_qdot;

    // identity family (i): D psi^j - dL/dq^(j-1) + psi^(j-1), j = 1..m
    psi_recursion_gap_.assign(m, std::vector<Expr>(n));
    for (int j = 1; j <= m; ++j)
        for (int c = 0; c < n; ++c)
            psi_recursion_gap_[j - 1][c] =
                total_derivative(psi_[j][c]) - partials_[j - 1][c] + psi_[j - 1][c];

    // identity family (ii): D{bracket} - dL/dtheta - psi^0 . qdot
    Expr psi0_dot_qdot = Expr::constant(0.0);
    for (int c = 0; c < n; ++c)
        psi0_dot_qdot = psi0_dot_qdot + psi_[0][c] * Expr::variable(state_var(c, 1));
    bracket_identity_gap_ = dbracket - dL_dtheta - psi0_dot_qdot;
}

const Expr& VariationalSystem::partial_expr(int order, int component) const {
    return partials_.at(order).at(component);
}
const Expr& VariationalSystem::psi_expr(int j, int component) const {
    return psi_.at(j).at(component);
}
const Expr& VariationalSystem::friction_expr(int component) const {
    return friction_.at(component);
}
const Expr& VariationalSystem::el_expr(int component) const { return el_.at(component); }
const Expr& VariationalSystem::el_alt_expr(int component) const { return el_alt_.at(component); }
const Expr& VariationalSystem::dr_expr() const { return dr_; }

Eigen::VectorXd VariationalSystem::eval_vector(const std::vector<Expr>& exprs,
                                               const Jet& jet) const {
    Eigen::VectorXd out(exprs.size());
    for (std::size_t c = 0; c < exprs.size(); ++c) out(c) = eval(exprs[c], jet);
    return out;
}

Eigen::VectorXd VariationalSystem::psi(const Jet& jet, int j) const {
    return eval_vector(psi_.at(j), jet);
}
Eigen::VectorXd VariationalSystem::friction_force(const Jet& jet) const {
    return eval_vector(friction_, jet);
}
Eigen::VectorXd VariationalSystem::el_residual(const Jet& jet) const {
    return eval_vector(el_, jet);
}
Eigen::VectorXd VariationalSystem::el_residual_alt(const Jet& jet) const {
    return eval_vector(el_alt_, jet);
}
double VariationalSystem::dr_residual(const Jet& jet) const { return eval(dr_, jet); }

double VariationalSystem::identity_gap(const Jet& jet) const {
    double gap = 0.0;
    for (const auto& row : psi_recursion_gap_)
        for (const Expr& e : row) gap = std::max(gap, std::abs(eval(e, jet)));
    gap = std::max(gap, std::abs(eval(bracket_identity_gap_, jet)));
    const Eigen::VectorXd el = el_residual(jet);
    const Eigen::VectorXd qdot = jet.q.col(1);
    gap = std::max(gap, std::abs(dr_residual(jet) - el.dot(qdot)));
    return gap;
}

namespace {

void check_interior(const FalvaProblem& pb, double theta) {
    if (!(theta >= pb.a && theta < pb.t))
        throw std::domain_error("theta must lie in [a, t): the friction force is singular at t");
}

Jet jet_for(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    return tr.jet_at(theta, 2 * pb.m);
}

}  // namespace

double action(const FalvaProblem& pb, const Trajectory& tr, int quad_points) {
    pb.validate();
    if (tr.state_dim() != pb.state_dim)
        throw std::invalid_argument("action: trajectory state_dim mismatch");
    const QuadratureRule rule = jacobi_rule(pb.alpha, pb.a, pb.t, quad_points);
    JetFamily jets(tr, pb.m);
    const double integral =
        integrate([&](double th) { return eval(pb.lagrangian, jets.at(th)); }, rule);
    return integral / gamma(pb.alpha);
}

Eigen::VectorXd psi(const FalvaProblem& pb, const Trajectory& tr, int j, double theta) {
    check_interior(pb, theta);
    VariationalSystem sys(pb);
    return sys.psi(jet_for(pb, tr, theta), j);
}

Eigen::VectorXd friction_force(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    check_interior(pb, theta);
    VariationalSystem sys(pb);
    return sys.friction_force(jet_for(pb, tr, theta));
}

Eigen::VectorXd friction_force_expanded(const FalvaProblem& pb, const Trajectory& tr,
                                        double theta) {
    check_interior(pb, theta);
    pb.validate();
    if (pb.m > 2)
        throw std::invalid_argument("friction_force_expanded: implemented for m = 1, 2 only");
    const Jet jet = jet_for(pb, tr, theta);
    const double c1 = (1.0 - pb.alpha) / (pb.t - theta);
    Eigen::VectorXd F(pb.state_dim);
    for (int c = 0; c < pb.state_dim; ++c) {
        const Expr d3 = partial(pb.lagrangian, state_var(c, 1));
        if (pb.m == 1) {
            F(c) = c1 * eval(d3, jet);
        } else {
            const Expr d4 = partial(pb.lagrangian, state_var(c, 2));
            const double c2 =
                (1.0 - pb.alpha) * (2.0 - pb.alpha) / ((pb.t - theta) * (pb.t - theta));
            F(c) = c1 * (eval(d3, jet) - 2.0 * eval(total_derivative(d4), jet)) -
                   c2 * eval(d4, jet);
        }
    }
    return F;
}

Eigen::VectorXd el_residual(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    check_interior(pb, theta);
    VariationalSystem sys(pb);
    return sys.el_residual(jet_for(pb, tr, theta));
}

Eigen::VectorXd el_residual_alt(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    check_interior(pb, theta);
    VariationalSystem sys(pb);
    return sys.el_residual_alt(jet_for(pb, tr, theta));
}

double dr_residual(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    check_interior(pb, theta);
    VariationalSystem sys(pb);
    return sys.dr_residual(jet_for(pb, tr, theta));
}

ResidualReport make_report(const VariationalSystem& sys, const Trajectory& tr,
                           const Eigen::VectorXd& nodes, const Eigen::VectorXd& weights) {
    const FalvaProblem& pb = sys.problem();
    const int n = static_cast<int>(nodes.size());
    ResidualReport rep;
    rep.nodes = nodes;
    rep.el_residual.resize(n, pb.state_dim);
    rep.dr_residual.resize(n);
    rep.identity_gap.resize(n);

    JetFamily jets(tr, sys.jet_order());
    for (int i = 0; i < n; ++i) {
        check_interior(pb, nodes(i));
        const Jet jet = jets.at(nodes(i));
        rep.el_residual.row(i) = sys.el_residual(jet).transpose();
        rep.dr_residual(i) = sys.dr_residual(jet);
        rep.identity_gap(i) = sys.identity_gap(jet);
    }

    rep.sup = n > 0 ? rep.el_residual.cwiseAbs().maxCoeff() : 0.0;
    double l2 = 0.0, wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = weights.size() == n ? weights(i) : (pb.t - pb.a) / std::max(n, 1);
        l2 += w * rep.el_residual.row(i).squaredNorm();
        wsum += w;
    }
    rep.l2w = wsum > 0.0 ? std::sqrt(l2 / wsum) : 0.0;
    return rep;
}

ResidualReport verify_identities(const FalvaProblem& pb, const Trajectory& tr,
                                 const Eigen::VectorXd& grid) {
    VariationalSystem sys(pb);
    return make_report(sys, tr, grid);
}

Eigen::VectorXd interior_grid(const FalvaProblem& pb, int count, double epsilon_rel) {
    const double margin = epsilon_rel * (pb.t - pb.a);
    return Eigen::VectorXd::LinSpaced(count, pb.a + margin, pb.t - margin);
}

}  // namespace falva
