#include "falva/solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace falva {

namespace {

struct BoundaryRow {
    double point;
    int order;
    Eigen::VectorXd rhs;  // per component
};

std::vector<BoundaryRow> boundary_rows(const FalvaProblem& pb, const SolveConfig& cfg,
                                       double theta_f) {
    const int m = pb.m;
    if (pb.initial.rows() != m || pb.initial.cols() != pb.state_dim)
        throw std::invalid_argument("solve: problem.initial must be m x state_dim");
    std::vector<BoundaryRow> rows;
    for (int i = 0; i < m; ++i) rows.push_back({pb.a, i, pb.initial.row(i).transpose()});
    if (cfg.boundary_mode == BoundaryMode::FixedEnds) {
        if (cfg.final_values.rows() != m || cfg.final_values.cols() != pb.state_dim)
            throw std::invalid_argument("solve: final_values must be m x state_dim");
        for (int i = 0; i < m; ++i)
            rows.push_back({theta_f, i, cfg.final_values.row(i).transpose()});
    } else {
        if (cfg.initial_jet.rows() != m || cfg.initial_jet.cols() != pb.state_dim)
            throw std::invalid_argument("solve: initial_jet must be m x state_dim");
        for (int i = 0; i < m; ++i)
            rows.push_back({pb.a, m + i, cfg.initial_jet.row(i).transpose()});
    }
    return rows;
}

void validate_config(const FalvaProblem& pb, const SolveConfig& cfg, double theta_f) {
    if (cfg.degree < 2 * pb.m + 2)
        throw std::invalid_argument("solve: degree must be at least 2m+2");
    if (!(cfg.newton_tol > 0.0)) throw std::invalid_argument("solve: newton_tol must be > 0");
    if (!(theta_f > pb.a && theta_f <= pb.t))
        throw std::invalid_argument("solve: theta_f must lie in (a, t]");
    if (cfg.quad_points < 1) throw std::invalid_argument("solve: quad_points must be >= 1");
}

// Powers of the coefficient-space differentiation matrix, D^0..D^kmax.
std::vector<Eigen::MatrixXd> diff_powers(int degree, double a, double t, int kmax) {
    std::vector<Eigen::MatrixXd> P;
    P.reserve(kmax + 1);
    P.push_back(Eigen::MatrixXd::Identity(degree + 1, degree + 1));
    const Eigen::MatrixXd D = chebyshev_diff_matrix(degree, a, t);
    for (int k = 1; k <= kmax; ++k) P.push_back(D * P.back());
    return P;
}

Eigen::RowVectorXd basis_row(double theta, int order, int degree, double a, double t,
                             const std::vector<Eigen::MatrixXd>& dpow) {
    Eigen::VectorXd pt(1);
    pt(0) = theta;
    const Eigen::MatrixXd V = chebyshev_values(pt, degree, a, t);
    return V.row(0) * dpow[order];
}

double trailing_coefficient_estimate(const Eigen::MatrixXd& coeffs) {
    const int n = static_cast<int>(coeffs.cols());
    const int start = (3 * n) / 4;
    double est = 0.0;
    for (int c = 0; c < coeffs.rows(); ++c)
        est = std::max(est, coeffs.row(c).segment(start, n - start).cwiseAbs().sum());
    return 2.0 * est;
}

}  // namespace

double resolve_theta_f(const FalvaProblem& pb, const SolveConfig& cfg) {
    if (!std::isnan(cfg.theta_f)) return cfg.theta_f;
    return pb.alpha < 1.0 ? pb.t - cfg.epsilon_rel * (pb.t - pb.a) : pb.t;
}

SolveResult solve_indirect(const FalvaProblem& pb, const SolveConfig& cfg) {
    pb.validate();
    const double theta_f = resolve_theta_f(pb, cfg);
    validate_config(pb, cfg, theta_f);

    const int N = cfg.degree;
    const int m = pb.m;
    const int sd = pb.state_dim;
    const int ncoef = N + 1;
    const int nbc = 2 * m;
    const int ncol = ncoef - nbc;
    const int total = sd * ncoef;

    const auto rows = boundary_rows(pb, cfg, theta_f);
    const auto dpow = diff_powers(N, pb.a, pb.t, 2 * m);

    // collocate strictly inside the pole-free part of the interval
    const double col_hi = pb.alpha < 1.0 ? pb.t - cfg.epsilon_rel * (pb.t - pb.a) : pb.t;
    const Eigen::VectorXd pts = chebyshev_root_points(ncol, pb.a, col_hi);
    std::vector<Eigen::MatrixXd> V(2 * m + 1);
    {
        const Eigen::MatrixXd V0 = chebyshev_values(pts, N, pb.a, pb.t);
        for (int d = 0; d <= 2 * m; ++d) V[d] = V0 * dpow[d];
    }

    VariationalSystem sys(pb);
    std::vector<std::vector<std::vector<Expr>>> jac(sd);  // [c0][c1][d]
    for (int c0 = 0; c0 < sd; ++c0) {
        jac[c0].assign(sd, std::vector<Expr>(2 * m + 1));
        for (int c1 = 0; c1 < sd; ++c1)
            for (int d = 0; d <= 2 * m; ++d)
                jac[c0][c1][d] = partial(sys.el_expr(c0), state_var(c1, d));
    }

    Eigen::MatrixXd B(nbc, ncoef);
    Eigen::MatrixXd rhs(nbc, sd);
    for (int r = 0; r < nbc; ++r) {
        B.row(r) = basis_row(rows[r].point, rows[r].order, N, pb.a, pb.t, dpow);
        rhs.row(r) = rows[r].rhs.transpose();
    }
    // initial guess: minimum-norm coefficients matching the boundary data
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    Eigen::MatrixXd coeffs(sd, ncoef);
    for (int c = 0; c < sd; ++c) coeffs.row(c) = cod.solve(rhs.col(c)).transpose();

    auto residual = [&](const Eigen::MatrixXd& C) {
        Eigen::VectorXd R(sd * ncol + sd * nbc);
        std::vector<Eigen::MatrixXd> vals(2 * m + 1);
        for (int d = 0; d <= 2 * m; ++d) vals[d] = V[d] * C.transpose();  // ncol x sd
        Jet jet;
        jet.q.resize(sd, 2 * m + 1);
        for (int k = 0; k < ncol; ++k) {
            jet.theta = pts(k);
            for (int d = 0; d <= 2 * m; ++d) jet.q.col(d) = vals[d].row(k).transpose();
            for (int c0 = 0; c0 < sd; ++c0) R(c0 * ncol + k) = eval(sys.el_expr(c0), jet);
        }
        const int base = sd * ncol;
        for (int r = 0; r < nbc; ++r)
            for (int c = 0; c < sd; ++c)
                R(base + r * sd + c) = B.row(r).dot(C.row(c)) - rhs(r, c);
        return R;
    };

    SolveResult out;
    out.message = "did not converge within max_iters";
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        const Eigen::VectorXd R = residual(coeffs);
        if (R.lpNorm<Eigen::Infinity>() <= cfg.newton_tol) {
            out.converged = true;
            out.message.clear();
            break;
        }
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(R.size(), total);
        std::vector<Eigen::MatrixXd> vals(2 * m + 1);
        for (int d = 0; d <= 2 * m; ++d) vals[d] = V[d] * coeffs.transpose();
        Jet jet;
        jet.q.resize(sd, 2 * m + 1);
        for (int k = 0; k < ncol; ++k) {
            jet.theta = pts(k);
            for (int d = 0; d <= 2 * m; ++d) jet.q.col(d) = vals[d].row(k).transpose();
            for (int c0 = 0; c0 < sd; ++c0)
                for (int c1 = 0; c1 < sd; ++c1)
                    for (int d = 0; d <= 2 * m; ++d) {
                        const double g = eval(jac[c0][c1][d], jet);
                        if (g != 0.0)
                            J.row(c0 * ncol + k).segment(c1 * ncoef, ncoef) += g * V[d].row(k);
                    }
        }
        const int base = sd * ncol;
        for (int r = 0; r < nbc; ++r)
            for (int c = 0; c < sd; ++c)
                J.row(base + r * sd + c).segment(c * ncoef, ncoef) = B.row(r);

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
        if (qr.rank() < total) {
            out.message = "singular collocation Jacobian (Legendre-type condition violated)";
            break;
        }
        const Eigen::VectorXd delta = qr.solve(-R);
        const double r0 = R.norm();
        double step = 1.0;
        Eigen::MatrixXd trial;
        double rt = r0;
        while (true) {
            trial = coeffs;
            for (int c = 0; c < sd; ++c)
                trial.row(c) += step * delta.segment(c * ncoef, ncoef).transpose();
            rt = residual(trial).norm();
            if (rt <= (1.0 - 1e-4 * step) * r0 || step < 1e-6) break;
            step *= 0.5;
        }
        coeffs = trial;
        if (step < 1e-6 && rt >= r0) {
            out.message = "line search stalled";
            ++iter;
            break;
        }
    }
    if (!out.converged &&
        residual(coeffs).lpNorm<Eigen::Infinity>() <= cfg.newton_tol) {
        out.converged = true;
        out.message.clear();
    }

    out.iterations = iter;
    out.trajectory = Trajectory(pb.a, pb.t, coeffs);
    out.report = make_report(sys, out.trajectory, pts);
    out.action_value = action(pb, out.trajectory, cfg.quad_points);
    out.discretization_estimate = trailing_coefficient_estimate(coeffs);
    if (out.converged && out.report.sup > 10.0 * cfg.newton_tol) {
        out.converged = false;
        out.message = "interior residual exceeds 10*newton_tol";
    }
    return out;
}

SolveResult solve_direct(const FalvaProblem& pb, const SolveConfig& cfg) {
    pb.validate();
    if (cfg.boundary_mode != BoundaryMode::FixedEnds)
        throw std::invalid_argument("solve_direct requires FixedEnds boundary data");
    const double theta_f = resolve_theta_f(pb, cfg);
    validate_config(pb, cfg, theta_f);

    const int N = cfg.degree;
    const int m = pb.m;
    const int sd = pb.state_dim;
    const int ncoef = N + 1;
    const int nbc = 2 * m;
    const int nred = ncoef - nbc;

    const auto rows = boundary_rows(pb, cfg, theta_f);
    const auto dpow = diff_powers(N, pb.a, pb.t, m);

    Eigen::MatrixXd B(nbc, ncoef);
    Eigen::MatrixXd rhs(nbc, sd);
    for (int r = 0; r < nbc; ++r) {
        B.row(r) = basis_row(rows[r].point, rows[r].order, N, pb.a, pb.t, dpow);
        rhs.row(r) = rows[r].rhs.transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::MatrixXd Z = lu.kernel();  // ncoef x nred
    if (Z.cols() != nred) throw std::runtime_error("solve_direct: degenerate boundary rows");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    Eigen::MatrixXd particular(sd, ncoef);
    for (int c = 0; c < sd; ++c) particular.row(c) = cod.solve(rhs.col(c)).transpose();

    const QuadratureRule rule = jacobi_rule(pb.alpha, pb.a, pb.t, cfg.quad_points);
    const int nq = rule.size();
    std::vector<Eigen::MatrixXd> V(m + 1);
    {
        const Eigen::MatrixXd V0 = chebyshev_values(rule.nodes, N, pb.a, pb.t);
        for (int d = 0; d <= m; ++d) V[d] = V0 * dpow[d];
    }
    const Eigen::VectorXd w = rule.weights / gamma(pb.alpha);

    std::vector<std::vector<Expr>> gL(m + 1, std::vector<Expr>(sd));
    for (int d = 0; d <= m; ++d)
        for (int c = 0; c < sd; ++c) gL[d][c] = partial(pb.lagrangian, state_var(c, d));
    std::vector<std::vector<std::vector<std::vector<Expr>>>> hess(m + 1);
    for (int d = 0; d <= m; ++d) {
        hess[d].assign(sd, std::vector<std::vector<Expr>>(m + 1, std::vector<Expr>(sd)));
        for (int c0 = 0; c0 < sd; ++c0)
            for (int d1 = 0; d1 <= m; ++d1)
                for (int c1 = 0; c1 < sd; ++c1)
                    hess[d][c0][d1][c1] = partial(gL[d][c0], state_var(c1, d1));
    }

    // gradient (and optionally Hessian) of the discretized action
    auto gradient = [&](const Eigen::MatrixXd& C, Eigen::MatrixXd* H) {
        Eigen::VectorXd G = Eigen::VectorXd::Zero(sd * ncoef);
        if (H) H->setZero();
        std::vector<Eigen::MatrixXd> vals(m + 1);
        for (int d = 0; d <= m; ++d) vals[d] = V[d] * C.transpose();  // nq x sd
        Jet jet;
        jet.q.resize(sd, m + 1);
        for (int k = 0; k < nq; ++k) {
            jet.theta = rule.nodes(k);
            for (int d = 0; d <= m; ++d) jet.q.col(d) = vals[d].row(k).transpose();
            for (int d = 0; d <= m; ++d)
                for (int c = 0; c < sd; ++c) {
                    const double gval = eval(gL[d][c], jet);
                    if (gval != 0.0)
                        G.segment(c * ncoef, ncoef) += (w(k) * gval) * V[d].row(k).transpose();
                }
            if (H) {
                for (int d = 0; d <= m; ++d)
                    for (int c0 = 0; c0 < sd; ++c0)
                        for (int d1 = 0; d1 <= m; ++d1)
                            for (int c1 = 0; c1 < sd; ++c1) {
                                const double hval = eval(hess[d][c0][d1][c1], jet);
                                if (hval != 0.0)
                                    H->block(c0 * ncoef, c1 * ncoef, ncoef, ncoef) +=
                                        (w(k) * hval) * (V[d].row(k).transpose() * V[d1].row(k));
                            }
            }
        }
        return G;
    };

    auto reduce = [&](const Eigen::VectorXd& G) {
        Eigen::VectorXd g(sd * nred);
        for (int c = 0; c < sd; ++c)
            g.segment(c * nred, nred) = Z.transpose() * G.segment(c * ncoef, ncoef);
        return g;
    };

    Eigen::MatrixXd coeffs = particular;
    SolveResult out;
    out.message = "did not converge within max_iters";
    int iter = 0;
    Eigen::MatrixXd H(sd * ncoef, sd * ncoef);
    for (; iter < cfg.max_iters; ++iter) {
        const Eigen::VectorXd g = reduce(gradient(coeffs, &H));
        if (g.lpNorm<Eigen::Infinity>() <= cfg.newton_tol) {
            out.converged = true;
            out.message.clear();
            break;
        }
        Eigen::MatrixXd Hy(sd * nred, sd * nred);
        for (int c0 = 0; c0 < sd; ++c0)
            for (int c1 = 0; c1 < sd; ++c1)
                Hy.block(c0 * nred, c1 * nred, nred, nred) =
                    Z.transpose() * H.block(c0 * ncoef, c1 * ncoef, ncoef, ncoef) * Z;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Hy);
        if (qr.rank() < Hy.rows()) {
            out.message = "singular Hessian of the discretized action";
            break;
        }
        const Eigen::VectorXd dy = qr.solve(-g);
        const double g0 = g.norm();
        double step = 1.0;
        Eigen::MatrixXd trial;
        double gt = g0;
        while (true) {
            trial = coeffs;
            for (int c = 0; c < sd; ++c)
                trial.row(c) += (Z * (step * dy.segment(c * nred, nred))).transpose();
            gt = reduce(gradient(trial, nullptr)).norm();
            if (gt <= (1.0 - 1e-4 * step) * g0 || step < 1e-6) break;
            step *= 0.5;
        }
        coeffs = trial;
        if (step < 1e-6 && gt >= g0) {
            out.message = "line search stalled";
            ++iter;
            break;
        }
    }
    if (!out.converged &&
        reduce(gradient(coeffs, nullptr)).lpNorm<Eigen::Infinity>() <= cfg.newton_tol) {
        out.converged = true;
        out.message.clear();
    }

    out.iterations = iter;
    out.trajectory = Trajectory(pb.a, pb.t, coeffs);
    VariationalSystem sys(pb);
    const double rep_hi = pb.alpha < 1.0 ? pb.t - cfg.epsilon_rel * (pb.t - pb.a) : pb.t;
    out.report = make_report(sys, out.trajectory, chebyshev_root_points(nred, pb.a, rep_hi));
    out.action_value = action(pb, out.trajectory, cfg.quad_points);
    out.discretization_estimate = trailing_coefficient_estimate(coeffs);
    return out;
}

double trajectory_distance(const Trajectory& x, const Trajectory& y, double lo, double hi,
                           int samples) {
    double sup = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double th = lo + (hi - lo) * i / (samples - 1);
        sup = std::max(sup, (x(th) - y(th)).cwiseAbs().maxCoeff());
    }
    return sup;
}

CrossValidation cross_validate(const FalvaProblem& pb, const SolveConfig& cfg) {
    CrossValidation cv;
    cv.direct = solve_direct(pb, cfg);
    cv.indirect = solve_indirect(pb, cfg);
    if (!cv.direct.converged || !cv.indirect.converged)
        throw std::runtime_error(
            "cross_validate: a solver failed: " +
            (cv.direct.converged ? cv.indirect.message : cv.direct.message));
    const double theta_f = resolve_theta_f(pb, cfg);
    cv.trajectory_gap =
        trajectory_distance(cv.direct.trajectory, cv.indirect.trajectory, pb.a, theta_f);
    cv.action_gap = std::abs(cv.direct.action_value - cv.indirect.action_value);
    cv.threshold = 10.0 * std::max({cfg.newton_tol, cv.direct.discretization_estimate,
                                    cv.indirect.discretization_estimate});
    cv.flagged = cv.trajectory_gap > cv.threshold;
    return cv;
}

}  // namespace falva
