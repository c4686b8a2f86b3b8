#pragma once

#include <Eigen/Dense>

#include <utility>

namespace falva {

/// Euler Gamma via a 13-term Lanczos rational approximation, reflection for
/// x < 0.5. Relative accuracy is a few ulp on [0.1, 30].
double gamma(double x);

/// Gamma(i - alpha + 1) / Gamma(1 - alpha) computed as the finite product
/// prod_{s=1}^{i} (s - alpha). The product form is exact at alpha = 1, where
/// the quotient of gammas would be 0 * inf.
double gamma_ratio(int i, double alpha);

/// Standard binomial coefficient; 0 when k < 0 or k > n. Exact for n <= 62.
long long binomial(int n, int k);

/// Nodes/weights for integrals against the weight (t - theta)^(alpha - 1)
/// on (a, t). Nodes are strictly increasing and strictly interior.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    double alpha = 1.0;
    double a = 0.0;
    double t = 1.0;

    int size() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Jacobi rule, exact for polynomial integrands of degree
/// <= 2n-1 against (t - theta)^(alpha - 1). Built from the three-term
/// recurrence of the Jacobi weight (1-x)^(alpha-1) via the symmetric
/// tridiagonal eigenvalue problem, then mapped to (a, t).
QuadratureRule jacobi_rule(double alpha, double a, double t, int n);

template <class F>
double integrate(F&& f, const QuadratureRule& rule) {
    double s = 0.0;
    for (int i = 0; i < rule.size(); ++i) s += rule.weights(i) * f(rule.nodes(i));
    return s;
}

}  // namespace falva
