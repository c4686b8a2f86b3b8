#pragma once

#include <string>
#include <vector>

#include "falva/solvers.hpp"
#include "falva/variational.hpp"

namespace falva {

/// Two-time optimal control problem: stationary points of
///   (1/Gamma(alpha)) * integral_a^t L(theta, q, u) (t-theta)^(alpha-1) dtheta
/// subject to qdot = phi(theta, q, u), q(a) = q_a. Controls range over an
/// open set (no control constraints).
struct ControlProblem {
    double alpha = 1.0;
    double a = 0.0;
    double t = 1.0;
    int state_dim = 1;
    int control_dim = 1;
    Expr lagrangian;            // over theta, q<i> (order 0), u<j>
    std::vector<Expr> velocity; // phi_i, same variables
    Eigen::VectorXd q_a;

    void validate() const;
};

/// Candidate tuple (q, u, p) on a common interval [a, theta_f]; the costate
/// carries the singular weight for alpha < 1, so extremals live strictly
/// inside [a, t).
struct Extremal {
    Trajectory q;
    Trajectory u;
    Trajectory p;
};

/// H = L(theta,q,u) * (t-theta)^(alpha-1) + p . phi(theta,q,u). The weight
/// sits on the L term only; the costate multiplies phi unweighted.
Expr hamiltonian(const ControlProblem& cp);

/// Cached Hamiltonian partials: argument groups theta / q / u / p.
class ControlSystem {
public:
    explicit ControlSystem(const ControlProblem& cp);

    const ControlProblem& problem() const { return cp_; }
    const Expr& H() const { return H_; }
    const Expr& H_theta() const { return H_theta_; }
    const Expr& H_q(int i) const { return H_q_.at(i); }
    const Expr& H_u(int j) const { return H_u_.at(j); }
    const Expr& H_p(int i) const { return H_p_.at(i); }
    const Expr& H_uu(int j, int k) const { return H_uu_.at(j * cp_.control_dim + k); }

    Jet jet(double theta, const Eigen::VectorXd& q, const Eigen::VectorXd& u,
            const Eigen::VectorXd& p) const;

private:
    ControlProblem cp_;
    Expr H_, H_theta_;
    std::vector<Expr> H_q_, H_u_, H_p_, H_uu_;
};

struct PontryaginGaps {
    Eigen::VectorXd dynamics;      // qdot - dH/dp
    Eigen::VectorXd adjoint;       // pdot + dH/dq
    Eigen::VectorXd stationarity;  // dH/du
    double max_abs() const;
};

PontryaginGaps pontryagin_residuals(const ControlProblem& cp, const Extremal& ex, double theta);
PontryaginGaps pontryagin_residuals(const ControlSystem& sys, const Extremal& ex, double theta);

/// |dH/dtheta - dH_partial/dtheta| with the total derivative taken along
/// (q, u, p); vanishes along Pontryagin extremals.
double energy_rate_gap(const ControlProblem& cp, const Extremal& ex, double theta);
double energy_rate_gap(const ControlSystem& sys, const Extremal& ex, double theta);

/// Order-m variational problem as a control problem: state stack
/// (q, qdot, ..., q^(m-1)) with block s = d*n+i, control u = q^(m),
/// chain velocity phi.
ControlProblem embed_variational(const FalvaProblem& pb);

/// Costates induced on the embedded problem by a trajectory of the original
/// one: p_{d*n+i} = -sum_{j=0}^{m-1-d} (-1)^j d^j/dtheta^j [ w * dL/dq_i^(j+d+1) ]
/// with w = (t-theta)^(alpha-1). Along these, every embedded Pontryagin gap
/// vanishes except the first adjoint block, which equals w times the
/// Euler-Lagrange residual.
std::vector<Expr> induced_costate_exprs(const FalvaProblem& pb);

/// Evaluates the induced (q-stack, u, p) tuple pointwise on a trajectory.
struct InducedTuple {
    Eigen::VectorXd q;
    Eigen::VectorXd u;
    Eigen::VectorXd p;
};
InducedTuple induced_tuple(const FalvaProblem& pb, const Trajectory& tr, double theta);

struct ShootingResult {
    Extremal extremal;
    Eigen::VectorXd p_initial;
    bool converged = false;
    int iterations = 0;
    std::string message;
};

/// Indirect shooting: integrates the Hamiltonian system with u eliminated
/// through the stationarity condition (inner Newton per evaluation), outer
/// Newton on p(a) matching q(theta_f) = q_f. Integration is adaptive
/// Dormand-Prince with tolerance 1e-10, stopping at theta_f.
ShootingResult solve_shooting(const ControlProblem& cp, const Eigen::VectorXd& q_f,
                              double theta_f, const SolveConfig& cfg);

}  // namespace falva
