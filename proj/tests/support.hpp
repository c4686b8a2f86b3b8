#pragma once

// Shared helpers for the test suites: random polynomial problems, random
// trajectories, closed-form solutions, and an independent divergence-form
// oracle for the Euler-Lagrange residual.

#include <random>
#include <vector>

#include "falva/expr.hpp"
#include "falva/trajectory.hpp"
#include "falva/variational.hpp"

namespace testsup {

using falva::Expr;
using falva::FalvaProblem;
using falva::Trajectory;

// Random multivariate polynomial in theta and q<i>d<k> (k <= m): a sum of a
// few monomials with small exponents, coefficients in [-1, 1].
inline Expr random_poly_lagrangian(std::mt19937& rng, int state_dim, int m) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<int> n_terms(2, 4);
    std::uniform_int_distribution<int> pick_exp(0, 2);
    std::uniform_int_distribution<int> pick_var(0, state_dim * (m + 1));
    Expr L = Expr::constant(0.0);
    const int terms = n_terms(rng);
    for (int t = 0; t < terms; ++t) {
        Expr mono = Expr::constant(coeff(rng));
        int factors = 0;
        for (int attempt = 0; attempt < 3 && factors < 2; ++attempt) {
            const int v = pick_var(rng);
            const int e = pick_exp(rng);
            if (e == 0) continue;
            Expr var = (v == 0) ? Expr::variable(falva::theta_var())
                                : Expr::variable(falva::state_var((v - 1) % state_dim,
                                                                  (v - 1) / state_dim));
            mono = mono * (e == 1 ? var : falva::pow(var, Expr::constant(double(e))));
            ++factors;
        }
        L = L + mono;
    }
    // keep the top-derivative slot present so the problem is genuinely order m
    L = L + Expr::constant(0.5) * falva::pow(Expr::variable(falva::state_var(0, m)),
                                             Expr::constant(2.0));
    return L;
}

// Random trajectory with geometrically decaying Chebyshev coefficients, so
// high-order jet values stay at sane magnitudes.
inline Trajectory random_trajectory(std::mt19937& rng, int state_dim, int degree, double a,
                                    double t, double decay = 0.4) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd coeffs(state_dim, degree + 1);
    for (int c = 0; c < state_dim; ++c) {
        double scale = 1.0;
        for (int j = 0; j <= degree; ++j) {
            coeffs(c, j) = dist(rng) * scale;
            scale *= decay;
        }
    }
    return Trajectory(a, t, coeffs);
}

// Independent route to the Euler-Lagrange residual: expand
//   (1/w) sum_i (-1)^i d^i/dtheta^i ( w * dL/dq^(i) ),  w = (t-theta)^(alpha-1),
// entirely through the symbolic engine. This is the integration-by-parts
// (divergence) form of the weighted EL operator and never references the
// friction-force code path.
inline std::vector<Expr> divergence_el_exprs(const FalvaProblem& pb) {
    const Expr theta = Expr::variable(falva::theta_var());
    const Expr w = falva::pow(Expr::constant(pb.t) - theta, Expr::constant(pb.alpha - 1.0));
    std::vector<Expr> out;
    for (int c = 0; c < pb.state_dim; ++c) {
        Expr sum = Expr::constant(0.0);
        for (int i = 0; i <= pb.m; ++i) {
            const Expr gi = falva::partial(pb.lagrangian, falva::state_var(c, i));
            const Expr term = falva::total_derivative(w * gi, i);
            sum = (i % 2 == 0) ? sum + term : sum - term;
        }
        out.push_back(sum / w);
    }
    return out;
}

// Closed-form FALVA free particle (m=1, L = qdot^2/2, q(0)=0, qdot(0)=1 on
// [0,1]): qdot(theta) = (t-theta)^(1-alpha) / (t-a)^(1-alpha) normalized so
// qdot(a)=1, and q its antiderivative.
struct FreeParticle {
    double alpha, a = 0.0, t = 1.0;
    double qdot(double th) const { return std::pow(t - th, 1.0 - alpha) / std::pow(t - a, 1.0 - alpha); }
    double q(double th) const {
        const double e = 2.0 - alpha;
        return (std::pow(t - a, e) - std::pow(t - th, e)) / (e * std::pow(t - a, 1.0 - alpha));
    }
};

}  // namespace testsup
