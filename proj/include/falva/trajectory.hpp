#pragma once

#include <Eigen/Dense>

#include "falva/expr.hpp"

namespace falva {

/// Vector-valued curve on [a, t], one Chebyshev series per state component.
/// Differentiation is exact in coefficient space. Immutable after
/// construction; all operations are pure.
class Trajectory {
public:
    Trajectory() = default;

    /// coeffs: state_dim x (degree+1), row i holds the Chebyshev coefficients
    /// of component i on [a, t] (T_0 coefficient first).
    Trajectory(double a, double t, Eigen::MatrixXd coeffs);

    /// Least-squares Chebyshev fit of the samples. Interpolates exactly when
    /// the sample count is degree+1; reproduces polynomial data of degree
    /// <= `degree` exactly either way.
    static Trajectory fit(const Eigen::VectorXd& thetas, const Eigen::MatrixXd& values,
                          int degree, double a, double t);

    /// Fit sampling f at the Chebyshev-Lobatto points of [a, t].
    template <class F>
    static Trajectory from_function(F&& f, int state_dim, int degree, double a, double t);

    double a() const { return a_; }
    double t() const { return t_; }
    int state_dim() const { return static_cast<int>(coeffs_.rows()); }
    int degree() const { return static_cast<int>(coeffs_.cols()) - 1; }
    const Eigen::MatrixXd& coefficients() const { return coeffs_; }

    Eigen::VectorXd operator()(double theta) const;
    double value(double theta, int component) const;

    /// Exact polynomial derivative of the given order; orders beyond the
    /// degree yield the zero trajectory.
    Trajectory derivative(int order = 1) const;

    /// Jet columns 0..K at theta (theta must lie in [a, t]).
    Jet jet_at(double theta, int K) const;

    /// Same curve refit on [lo, hi] (subinterval), exactly.
    Trajectory restricted(double lo, double hi) const;

private:
    double a_ = 0.0, t_ = 1.0;
    Eigen::MatrixXd coeffs_;
};

/// Precomputed derivative family 0..K for repeated jet extraction.
class JetFamily {
public:
    JetFamily(const Trajectory& tr, int K);
    Jet at(double theta) const;
    int order() const { return static_cast<int>(derivs_.size()) - 1; }

private:
    std::vector<Trajectory> derivs_;
};

// Chebyshev helpers shared with the solvers.

/// n+1 Chebyshev-Lobatto points of [a, t], ascending.
Eigen::VectorXd chebyshev_lobatto_points(int n, double a, double t);

/// n Chebyshev (Gauss root) points of [a, t], ascending, strictly interior.
Eigen::VectorXd chebyshev_root_points(int n, double a, double t);

/// V(i, j) = T_j(x(thetas_i)) for j = 0..degree on [a, t].
Eigen::MatrixXd chebyshev_values(const Eigen::VectorXd& thetas, int degree, double a, double t);

/// Coefficient-space differentiation matrix: if c holds Chebyshev
/// coefficients on [a, t], D*c holds those of the derivative (same length,
/// top entry zero).
Eigen::MatrixXd chebyshev_diff_matrix(int degree, double a, double t);

template <class F>
Trajectory Trajectory::from_function(F&& f, int state_dim, int degree, double a, double t) {
    const Eigen::VectorXd pts = chebyshev_lobatto_points(degree, a, t);
    Eigen::MatrixXd values(pts.size(), state_dim);
    for (int i = 0; i < pts.size(); ++i) {
        Eigen::VectorXd v = f(pts(i));
        values.row(i) = v.transpose();
    }
    return fit(pts, values, degree, a, t);
}

}  // namespace falva
