#include "falva/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace falva {

namespace {

double clenshaw(const Eigen::RowVectorXd& c, double x) {
    const int n = static_cast<int>(c.size());
    if (n == 1) return c(0);
    double b1 = 0.0, b2 = 0.0;
    for (int k = n - 1; k >= 1; --k) {
        const double b = 2.0 * x * b1 - b2 + c(k);
        b2 = b1;
        b1 = b;
    }
    return x * b1 - b2 + c(0);
}

// Derivative coefficients on [-1, 1]; output has the same length with the
// last entry zero, so the matrix form stays square.
Eigen::RowVectorXd cheb_derivative_coeffs(const Eigen::RowVectorXd& c) {
    const int N = static_cast<int>(c.size()) - 1;
    Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(N + 1);
    if (N == 0) return d;
    Eigen::RowVectorXd tmp = Eigen::RowVectorXd::Zero(N + 3);
    for (int j = N - 1; j >= 1; --j) tmp(j) = tmp(j + 2) + 2.0 * (j + 1) * c(j + 1);
    tmp(0) = tmp(2) / 2.0 + c(1);
    d.head(N) = tmp.head(N);
    return d;
}

}  // namespace

Trajectory::Trajectory(double a, double t, Eigen::MatrixXd coeffs)
    : a_(a), t_(t), coeffs_(std::move(coeffs)) {
    if (!(a_ < t_)) throw std::invalid_argument("Trajectory requires a < t");
    if (coeffs_.rows() < 1 || coeffs_.cols() < 1)
        throw std::invalid_argument("Trajectory requires at least one component/coefficient");
}

Trajectory Trajectory::fit(const Eigen::VectorXd& thetas, const Eigen::MatrixXd& values,
                           int degree, double a, double t) {
    if (degree < 0) throw std::invalid_argument("fit: degree must be >= 0");
    if (thetas.size() != values.rows())
        throw std::invalid_argument("fit: sample count mismatch");
    if (thetas.size() < degree + 1)
        throw std::invalid_argument("fit: need at least degree+1 samples");

    const Eigen::MatrixXd V = chebyshev_values(thetas, degree, a, t);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    if (qr.rank() < degree + 1)
        throw std::runtime_error("fit: rank-deficient sample set");
    Eigen::MatrixXd coeffs(values.cols(), degree + 1);
    for (int c = 0; c < values.cols(); ++c)
        coeffs.row(c) = qr.solve(values.col(c)).transpose();
    return Trajectory(a, t, std::move(coeffs));
}

Eigen::VectorXd Trajectory::operator()(double theta) const {
    const double x = (2.0 * theta - (a_ + t_)) / (t_ - a_);
    Eigen::VectorXd out(state_dim());
    for (int c = 0; c < state_dim(); ++c) out(c) = clenshaw(coeffs_.row(c), x);
    return out;
}

double Trajectory::value(double theta, int component) const {
    const double x = (2.0 * theta - (a_ + t_)) / (t_ - a_);
    return clenshaw(coeffs_.row(component), x);
}

Trajectory Trajectory::derivative(int order) const {
    if (order < 0) throw std::invalid_argument("derivative: order must be >= 0");
    if (order == 0) return *this;
    const double scale = 2.0 / (t_ - a_);
    Eigen::MatrixXd c = coeffs_;
    for (int k = 0; k < order; ++k) {
        const int cols = std::max<int>(1, static_cast<int>(c.cols()) - 1);
        Eigen::MatrixXd d(c.rows(), cols);
        for (int r = 0; r < c.rows(); ++r)
            d.row(r) = (cheb_derivative_coeffs(c.row(r)) * scale).head(cols);
        c = std::move(d);
    }
    return Trajectory(a_, t_, std::move(c));
}

Jet Trajectory::jet_at(double theta, int K) const {
    const double slack = 1e-12 * (t_ - a_);
    if (theta < a_ - slack || theta > t_ + slack)
        throw std::domain_error("jet_at: theta outside trajectory interval");
    Jet jet;
    jet.theta = theta;
    jet.q.resize(state_dim(), K + 1);
    Trajectory d = *this;
    for (int k = 0; k <= K; ++k) {
        jet.q.col(k) = d(theta);
        if (k < K) d = d.derivative(1);
    }
    return jet;
}

Trajectory Trajectory::restricted(double lo, double hi) const {
    const Eigen::VectorXd pts = chebyshev_lobatto_points(degree(), lo, hi);
    Eigen::MatrixXd values(pts.size(), state_dim());
    for (int i = 0; i < pts.size(); ++i) values.row(i) = (*this)(pts(i)).transpose();
    return fit(pts, values, degree(), lo, hi);
}

JetFamily::JetFamily(const Trajectory& tr, int K) {
    derivs_.reserve(K + 1);
    derivs_.push_back(tr);
    for (int k = 1; k <= K; ++k) derivs_.push_back(derivs_.back().derivative(1));
}

Jet JetFamily::at(double theta) const {
    Jet jet;
    jet.theta = theta;
    const int K = order();
    jet.q.resize(derivs_[0].state_dim(), K + 1);
    for (int k = 0; k <= K; ++k) jet.q.col(k) = derivs_[k](theta);
    return jet;
}

Eigen::VectorXd chebyshev_lobatto_points(int n, double a, double t) {
    Eigen::VectorXd pts(n + 1);
    if (n == 0) {
        pts(0) = 0.5 * (a + t);
        return pts;
    }
    for (int k = 0; k <= n; ++k) {
        const double x = -std::cos(M_PI * k / n);
        pts(k) = 0.5 * (a + t) + 0.5 * (t - a) * x;
    }
    return pts;
}

Eigen::VectorXd chebyshev_root_points(int n, double a, double t) {
    Eigen::VectorXd pts(n);
    for (int k = 0; k < n; ++k) {
        const double x = -std::cos(M_PI * (k + 0.5) / n);
        pts(k) = 0.5 * (a + t) + 0.5 * (t - a) * x;
    }
    return pts;
}

Eigen::MatrixXd chebyshev_values(const Eigen::VectorXd& thetas, int degree, double a, double t) {
    Eigen::MatrixXd V(thetas.size(), degree + 1);
    for (int i = 0; i < thetas.size(); ++i) {
        const double x = (2.0 * thetas(i) - (a + t)) / (t - a);
        V(i, 0) = 1.0;
        if (degree >= 1) V(i, 1) = x;
        for (int j = 2; j <= degree; ++j) V(i, j) = 2.0 * x * V(i, j - 1) - V(i, j - 2);
    }
    return V;
}

Eigen::MatrixXd chebyshev_diff_matrix(int degree, double a, double t) {
    const int n = degree + 1;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    const double scale = 2.0 / (t - a);
    for (int j = 0; j < n; ++j) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        e(j) = 1.0;
        D.col(j) = (cheb_derivative_coeffs(e) * scale).transpose();
    }
    return D;
}

}  // namespace falva
