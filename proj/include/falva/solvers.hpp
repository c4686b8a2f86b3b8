#pragma once

#include <limits>
#include <string>

#include "falva/variational.hpp"

namespace falva {

/// How the 2m-condition closure of the order-2m Euler-Lagrange system is
/// supplied. The problem data fixes only q^(i)(a), i < m; the remaining m
/// conditions are an explicit user choice.
enum class BoundaryMode {
    InitialJet,  // q^(i)(a) for i = m..2m-1 in addition to the problem data
    FixedEnds,   // q^(i)(theta_f) for i = 0..m-1 at theta_f <= t
};

struct SolveConfig {
    int degree = 32;
    int quad_points = 64;
    double newton_tol = 1e-10;
    int max_iters = 50;
    BoundaryMode boundary_mode = BoundaryMode::FixedEnds;
    /// NaN resolves to t - epsilon_rel*(t-a) for alpha < 1, else t.
    double theta_f = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd final_values;  // m x state_dim (FixedEnds)
    Eigen::MatrixXd initial_jet;   // m x state_dim, rows are q^(m..2m-1)(a) (InitialJet)
    double epsilon_rel = 1e-3;
};

struct SolveResult {
    Trajectory trajectory;
    ResidualReport report;
    bool converged = false;
    int iterations = 0;
    double action_value = 0.0;
    /// Trailing-coefficient indicator of the basis truncation error.
    double discretization_estimate = 0.0;
    std::string message;
};

double resolve_theta_f(const FalvaProblem& pb, const SolveConfig& cfg);

/// Ritz stationarization: Newton (with line search) on the gradient of the
/// quadrature-discretized action over the Chebyshev coefficients that respect
/// the FixedEnds boundary data. Reports a singular Hessian instead of
/// regularizing it.
SolveResult solve_direct(const FalvaProblem& pb, const SolveConfig& cfg);

/// Chebyshev collocation of the Euler-Lagrange system (general friction-force
/// path) at interior nodes, Newton on the collocation residuals.
SolveResult solve_indirect(const FalvaProblem& pb, const SolveConfig& cfg);

/// Sup distance between two trajectories' values on [lo, hi].
double trajectory_distance(const Trajectory& x, const Trajectory& y, double lo, double hi,
                           int samples = 201);

struct CrossValidation {
    SolveResult direct;
    SolveResult indirect;
    double trajectory_gap = 0.0;
    double action_gap = 0.0;
    double threshold = 0.0;
    bool flagged = false;  // disagreement above the threshold
};

/// Runs both solvers as mutual oracles and flags disagreement above
/// 10 * max(newton_tol, discretization estimates).
CrossValidation cross_validate(const FalvaProblem& pb, const SolveConfig& cfg);

}  // namespace falva
