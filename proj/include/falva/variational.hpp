#pragma once

#include <Eigen/Dense>

#include <vector>

#include "falva/expr.hpp"
#include "falva/quadrature.hpp"
#include "falva/trajectory.hpp"

namespace falva {

/// Variational problem data: stationary points of
///   (1/Gamma(alpha)) * integral_a^t L(theta, q, ..., q^(m)) (t-theta)^(alpha-1) dtheta
/// with q^(i)(a) given for i = 0..m-1. theta is the intrinsic time, t the
/// observer time (fixed, equal to the upper integration limit).
struct FalvaProblem {
    double alpha = 1.0;
    double a = 0.0;
    double t = 1.0;
    int m = 1;
    int state_dim = 1;
    Expr lagrangian;         // over theta and q<i>d<k>, k <= m
    Eigen::MatrixXd initial; // m x state_dim, row i = q^(i)(a)

    void validate() const;  // throws std::invalid_argument on bad data
};

/// Per-node residual values for EL / DR / identity checks. All rows are
/// evaluated at interior nodes (theta strictly below t).
struct ResidualReport {
    Eigen::VectorXd nodes;
    Eigen::MatrixXd el_residual;   // nodes x state_dim
    Eigen::VectorXd dr_residual;   // nodes
    Eigen::VectorXd identity_gap;  // nodes, max over the identity families
    double sup = 0.0;   // max |el_residual|
    double l2w = 0.0;   // weighted L2 norm of the EL residual rows
};

/// Symbolic machinery for one problem, built once and evaluated at many
/// jets. psi^j is the alternating momentum stack
///   psi^j = sum_{i=0}^{m-j} (-1)^i d^i/dtheta^i dL/dq^(i+j),
/// psi^0 the Euler-Lagrange operator and psi^m the top momentum. F is the
/// singular friction force; the Euler-Lagrange residual is psi^0 - F and the
/// DuBois-Reymond residual is
///   d/dtheta { L - sum_j psi^j . q^(j) } - dL/dtheta - F . qdot.
class VariationalSystem {
public:
    explicit VariationalSystem(const FalvaProblem& pb);

    const FalvaProblem& problem() const { return pb_; }
    int jet_order() const { return 2 * pb_.m; }

    const Expr& partial_expr(int order, int component) const;  // dL/dq_c^(order)
    const Expr& psi_expr(int j, int component) const;
    const Expr& friction_expr(int component) const;
    const Expr& el_expr(int component) const;      // psi^0 - F
    const Expr& el_alt_expr(int component) const;  // dL/dq - d(psi^1)/dtheta - F
    const Expr& dr_expr() const;

    Eigen::VectorXd psi(const Jet& jet, int j) const;
    Eigen::VectorXd friction_force(const Jet& jet) const;
    Eigen::VectorXd el_residual(const Jet& jet) const;
    Eigen::VectorXd el_residual_alt(const Jet& jet) const;
    double dr_residual(const Jet& jet) const;

    /// Max gap over: the psi recursion d(psi^j)/dtheta = dL/dq^(j-1) - psi^(j-1)
    /// (j = 1..m), the bracket identity
    /// d/dtheta{L - sum psi^j q^(j)} = dL/dtheta + psi^0 . qdot, and the
    /// coupling dr = el . qdot. These hold on arbitrary trajectories.
    double identity_gap(const Jet& jet) const;

private:
    FalvaProblem pb_;
    std::vector<std::vector<Expr>> partials_;  // [order][component]
    std::vector<std::vector<Expr>> psi_;       // [j][component]
    std::vector<Expr> friction_;
    std::vector<Expr> el_;
    std::vector<Expr> el_alt_;
    Expr dr_;
    std::vector<std::vector<Expr>> psi_recursion_gap_;  // [j-1][component]
    Expr bracket_identity_gap_;

    Eigen::VectorXd eval_vector(const std::vector<Expr>& exprs, const Jet& jet) const;
};

/// Gauss-Jacobi approximation of the weighted action integral, divided by
/// Gamma(alpha). Exact (up to roundoff) when L along the trajectory is a
/// polynomial in theta of degree <= 2n-1.
double action(const FalvaProblem& pb, const Trajectory& tr, int quad_points);

Eigen::VectorXd psi(const FalvaProblem& pb, const Trajectory& tr, int j, double theta);
Eigen::VectorXd friction_force(const FalvaProblem& pb, const Trajectory& tr, double theta);

/// Hand-expanded friction force for m = 1 and m = 2; second code path kept
/// as a standing cross-check of the general double sum.
Eigen::VectorXd friction_force_expanded(const FalvaProblem& pb, const Trajectory& tr,
                                        double theta);

Eigen::VectorXd el_residual(const FalvaProblem& pb, const Trajectory& tr, double theta);
Eigen::VectorXd el_residual_alt(const FalvaProblem& pb, const Trajectory& tr, double theta);
double dr_residual(const FalvaProblem& pb, const Trajectory& tr, double theta);

ResidualReport verify_identities(const FalvaProblem& pb, const Trajectory& tr,
                                 const Eigen::VectorXd& grid);

/// Report over the given interior nodes; weights (if provided) feed the
/// weighted L2 norm, otherwise uniform spacing is assumed.
ResidualReport make_report(const VariationalSystem& sys, const Trajectory& tr,
                           const Eigen::VectorXd& nodes,
                           const Eigen::VectorXd& weights = Eigen::VectorXd());

/// Uniform interior grid [a + margin, t - margin], margin = epsilon_rel*(t-a).
Eigen::VectorXd interior_grid(const FalvaProblem& pb, int count, double epsilon_rel = 1e-3);

}  // namespace falva
