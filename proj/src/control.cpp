#include "falva/control.hpp"

#include <cmath>
#include <stdexcept>

namespace falva {

void ControlProblem::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("ControlProblem: alpha must be in (0, 1]");
    if (!(a < t)) throw std::invalid_argument("ControlProblem: requires a < t");
    if (state_dim < 1 || control_dim < 1)
        throw std::invalid_argument("ControlProblem: dimensions must be >= 1");
    if (static_cast<int>(velocity.size()) != state_dim)
        throw std::invalid_argument("ControlProblem: velocity needs state_dim components");
    if (q_a.size() != state_dim)
        throw std::invalid_argument("ControlProblem: q_a needs state_dim entries");
    auto check_expr = [&](const Expr& e, const char* what) {
        if (references_kind(e, VarKind::Costate))
            throw std::invalid_argument(std::string("ControlProblem: ") + what +
                                        " must not reference costates");
        if (max_state_derivative(e) > 0)
            throw std::invalid_argument(std::string("ControlProblem: ") + what +
                                        " must reference states at order 0 only");
    };
    check_expr(lagrangian, "Lagrangian");
    for (const Expr& phi : velocity) check_expr(phi, "velocity");
}

Expr hamiltonian(const ControlProblem& cp) {
    cp.validate();
    const Expr theta = Expr::variable(theta_var());
    const Expr weight = pow(Expr::constant(cp.t) - theta, Expr::constant(cp.alpha - 1.0));
    Expr H = cp.lagrangian * weight;
    for (int i = 0; i < cp.state_dim; ++i)
        H = H + Expr::variable(costate_var(i)) * cp.velocity[i];
    return H;
}

ControlSystem::ControlSystem(const ControlProblem& cp) : cp_(cp), H_(hamiltonian(cp)) {
    H_theta_ = partial(H_, theta_var());
    for (int i = 0; i < cp_.state_dim; ++i) {
        H_q_.push_back(partial(H_, state_var(i, 0)));
        H_p_.push_back(partial(H_, costate_var(i)));
    }
    for (int j = 0; j < cp_.control_dim; ++j) H_u_.push_back(partial(H_, control_var(j)));
    for (int j = 0; j < cp_.control_dim; ++j)
        for (int k = 0; k < cp_.control_dim; ++k)
            H_uu_.push_back(partial(H_u_[j], control_var(k)));
}

Jet ControlSystem::jet(double theta, const Eigen::VectorXd& q, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& p) const {
    Jet jet;
    jet.theta = theta;
    jet.q.resize(cp_.state_dim, 1);
    jet.q.col(0) = q;
    jet.u = u;
    jet.p = p;
    return jet;
}

double PontryaginGaps::max_abs() const {
    double m = 0.0;
    if (dynamics.size()) m = std::max(m, dynamics.cwiseAbs().maxCoeff());
    if (adjoint.size()) m = std::max(m, adjoint.cwiseAbs().maxCoeff());
    if (stationarity.size()) m = std::max(m, stationarity.cwiseAbs().maxCoeff());
    return m;
}

PontryaginGaps pontryagin_residuals(const ControlSystem& sys, const Extremal& ex,
                                    double theta) {
    const ControlProblem& cp = sys.problem();
    if (!(theta >= ex.q.a() && theta < cp.t))
        throw std::domain_error("pontryagin_residuals: theta must lie in [a, t)");
    const Eigen::VectorXd q = ex.q(theta), u = ex.u(theta), p = ex.p(theta);
    const Eigen::VectorXd qdot = ex.q.derivative(1)(theta);
    const Eigen::VectorXd pdot = ex.p.derivative(1)(theta);
    const Jet jet = sys.jet(theta, q, u, p);

    PontryaginGaps g;
    g.dynamics.resize(cp.state_dim);
    g.adjoint.resize(cp.state_dim);
    g.stationarity.resize(cp.control_dim);
    for (int i = 0; i < cp.state_dim; ++i) {
        g.dynamics(i) = qdot(i) - eval(sys.H_p(i), jet);
        g.adjoint(i) = pdot(i) + eval(sys.H_q(i), jet);
    }
    for (int j = 0; j < cp.control_dim; ++j) g.stationarity(j) = eval(sys.H_u(j), jet);
    return g;
}

PontryaginGaps pontryagin_residuals(const ControlProblem& cp, const Extremal& ex,
                                    double theta) {
    return pontryagin_residuals(ControlSystem(cp), ex, theta);
}

double energy_rate_gap(const ControlSystem& sys, const Extremal& ex, double theta) {
    const ControlProblem& cp = sys.problem();
    const Eigen::VectorXd q = ex.q(theta), u = ex.u(theta), p = ex.p(theta);
    const Eigen::VectorXd qdot = ex.q.derivative(1)(theta);
    const Eigen::VectorXd udot = ex.u.derivative(1)(theta);
    const Eigen::VectorXd pdot = ex.p.derivative(1)(theta);
    const Jet jet = sys.jet(theta, q, u, p);

    const double d1 = eval(sys.H_theta(), jet);
    double total = d1;
    for (int i = 0; i < cp.state_dim; ++i) total += eval(sys.H_q(i), jet) * qdot(i);
    for (int j = 0; j < cp.control_dim; ++j) total += eval(sys.H_u(j), jet) * udot(j);
    for (int i = 0; i < cp.state_dim; ++i) total += eval(sys.H_p(i), jet) * pdot(i);
    return std::abs(total - d1);
}

double energy_rate_gap(const ControlProblem& cp, const Extremal& ex, double theta) {
    return energy_rate_gap(ControlSystem(cp), ex, theta);
}

ControlProblem embed_variational(const FalvaProblem& pb) {
    pb.validate();
    const int n = pb.state_dim;
    const int m = pb.m;
    ControlProblem cp;
    cp.alpha = pb.alpha;
    cp.a = pb.a;
    cp.t = pb.t;
    cp.state_dim = n * m;
    cp.control_dim = n;
    cp.lagrangian = substitute(pb.lagrangian, [&](const VarRef& v) {
        if (v.kind != VarKind::State) return Expr::variable(v);
        if (v.deriv == m) return Expr::variable(control_var(v.index));
        return Expr::variable(state_var(v.deriv * n + v.index, 0));
    });
    cp.velocity.resize(cp.state_dim);
    for (int d = 0; d < m; ++d)
        for (int i = 0; i < n; ++i)
            cp.velocity[d * n + i] = (d + 1 == m)
                                         ? Expr::variable(control_var(i))
                                         : Expr::variable(state_var((d + 1) * n + i, 0));
    cp.q_a = Eigen::VectorXd::Zero(cp.state_dim);
    if (pb.initial.size())
        for (int d = 0; d < m; ++d)
            for (int i = 0; i < n; ++i) cp.q_a(d * n + i) = pb.initial(d, i);
    return cp;
}

std::vector<Expr> induced_costate_exprs(const FalvaProblem& pb) {
    pb.validate();
    const int n = pb.state_dim;
    const int m = pb.m;
    const Expr theta = Expr::variable(theta_var());
    const Expr w = pow(Expr::constant(pb.t) - theta, Expr::constant(pb.alpha - 1.0));
    std::vector<Expr> out(n * m);
    for (int d = 0; d < m; ++d)
        for (int i = 0; i < n; ++i) {
            Expr s = Expr::constant(0.0);
            for (int j = 0; j <= m - 1 - d; ++j) {
                const Expr g = partial(pb.lagrangian, state_var(i, j + d + 1));
                const Expr term = total_derivative(w * g, j);
                s = (j % 2 == 0) ? s + term : s - term;
            }
            out[d * n + i] = -s;
        }
    return out;
}

InducedTuple induced_tuple(const FalvaProblem& pb, const Trajectory& tr, double theta) {
    const int n = pb.state_dim;
    const int m = pb.m;
    const Jet jet = tr.jet_at(theta, 2 * m);
    InducedTuple tuple;
    tuple.q.resize(n * m);
    for (int d = 0; d < m; ++d)
        for (int i = 0; i < n; ++i) tuple.q(d * n + i) = jet.q(i, d);
    tuple.u = jet.q.col(m);
    const auto p_exprs = induced_costate_exprs(pb);
    tuple.p.resize(n * m);
    for (int s = 0; s < n * m; ++s) tuple.p(s) = eval(p_exprs[s], jet);
    return tuple;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,     0.0,       500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

class HamiltonianFlow {
public:
    explicit HamiltonianFlow(const ControlSystem& sys)
        : sys_(sys), n_(sys.problem().state_dim), r_(sys.problem().control_dim) {
        u_guess_ = Eigen::VectorXd::Zero(r_);
    }

    // eliminate u through dH/du = 0, then evaluate the Hamiltonian system
    Eigen::VectorXd rhs(double theta, const Eigen::VectorXd& y) {
        const Eigen::VectorXd q = y.head(n_), p = y.tail(n_);
        const Eigen::VectorXd u = eliminate_control(theta, q, p);
        const Jet jet = sys_.jet(theta, q, u, p);
        Eigen::VectorXd dy(2 * n_);
        for (int i = 0; i < n_; ++i) {
            dy(i) = eval(sys_.H_p(i), jet);
            dy(n_ + i) = -eval(sys_.H_q(i), jet);
        }
        return dy;
    }

    // inner Newton on the stationarity condition, warm-started from the
    // previous node (requires local convexity in u)
    Eigen::VectorXd eliminate_control(double theta, const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& p) {
        Eigen::VectorXd u = u_guess_;
        for (int iter = 0; iter < 50; ++iter) {
            const Jet jet = sys_.jet(theta, q, u, p);
            Eigen::VectorXd g(r_);
            for (int j = 0; j < r_; ++j) g(j) = eval(sys_.H_u(j), jet);
            if (g.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, u.norm())) {
                u_guess_ = u;
                return u;
            }
            Eigen::MatrixXd Huu(r_, r_);
            for (int j = 0; j < r_; ++j)
                for (int k = 0; k < r_; ++k) Huu(j, k) = eval(sys_.H_uu(j, k), jet);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Huu);
            if (!lu.isInvertible())
                throw std::runtime_error(
                    "solve_shooting: d2H/du2 is singular (cannot eliminate the control)");
            u -= lu.solve(g);
        }
        throw std::runtime_error("solve_shooting: control elimination did not converge");
    }

private:
    const ControlSystem& sys_;
    int n_, r_;
    Eigen::VectorXd u_guess_;
};

// Adaptive stepping that lands exactly on each requested output theta.
std::vector<Eigen::VectorXd> integrate_to(HamiltonianFlow& flow, double a,
                                          const Eigen::VectorXd& y0,
                                          const Eigen::VectorXd& out_thetas, double tol) {
    std::vector<Eigen::VectorXd> out;
    double theta = a;
    Eigen::VectorXd y = y0;
    double h = (out_thetas(out_thetas.size() - 1) - a) / 64.0;
    int idx = 0;
    if (out_thetas(0) <= a + 1e-15) {
        out.push_back(y);
        ++idx;
    }
    int steps = 0;
    while (idx < out_thetas.size()) {
        if (++steps > 2000000)
            throw std::runtime_error("solve_shooting: integrator exceeded step budget");
        const double target = out_thetas(idx);
        bool hit = false;
        if (theta + h >= target - 1e-14) {
            h = target - theta;
            hit = true;
        }
        Eigen::VectorXd k[7];
        k[0] = flow.rhs(theta, y);
        for (int s = 1; s < 7; ++s) {
            Eigen::VectorXd ys = y;
            for (int j = 0; j < s; ++j) ys += h * kA[s][j] * k[j];
            k[s] = flow.rhs(theta + kC[s] * h, ys);
        }
        Eigen::VectorXd y5 = y, err = Eigen::VectorXd::Zero(y.size());
        for (int s = 0; s < 7; ++s) {
            y5 += h * kB5[s] * k[s];
            err += h * (kB5[s] - kB4[s]) * k[s];
        }
        const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
        const double enorm = err.cwiseAbs().maxCoeff() / scale;
        if (enorm <= tol) {
            theta += h;
            y = y5;
            if (hit) {
                out.push_back(y);
                ++idx;
            }
        }
        const double factor = enorm > 0.0 ? 0.9 * std::pow(tol / enorm, 0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < 1e-15) throw std::runtime_error("solve_shooting: step size underflow");
    }
    return out;
}

}  // namespace

ShootingResult solve_shooting(const ControlProblem& cp, const Eigen::VectorXd& q_f,
                              double theta_f, const SolveConfig& cfg) {
    cp.validate();
    if (q_f.size() != cp.state_dim)
        throw std::invalid_argument("solve_shooting: q_f needs state_dim entries");
    if (!(theta_f > cp.a && theta_f <= cp.t))
        throw std::invalid_argument("solve_shooting: theta_f must lie in (a, t]");
    if (cp.alpha < 1.0 && theta_f >= cp.t)
        throw std::invalid_argument(
            "solve_shooting: theta_f must stay below t when the weight is singular");

    const ControlSystem sys(cp);
    const int n = cp.state_dim;
    const double ode_tol = 1e-10;

    Eigen::VectorXd probe(1);
    probe(0) = theta_f;
    auto shoot = [&](const Eigen::VectorXd& p0) {
        HamiltonianFlow flow(sys);
        Eigen::VectorXd y0(2 * n);
        y0 << cp.q_a, p0;
        const auto states = integrate_to(flow, cp.a, y0, probe, ode_tol);
        return Eigen::VectorXd(states.back().head(n) - q_f);
    };

    ShootingResult out;
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd miss = shoot(p0);
    const double match_tol = std::max(cfg.newton_tol, 1e-12);
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        if (miss.lpNorm<Eigen::Infinity>() <= match_tol) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd Jm(n, n);
        const double fd = 1e-6 * std::max(1.0, p0.norm());
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd pj = p0;
            pj(j) += fd;
            Jm.col(j) = (shoot(pj) - miss) / fd;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Jm);
        if (!lu.isInvertible()) {
            out.message = "singular shooting Jacobian";
            break;
        }
        const Eigen::VectorXd dp = lu.solve(-miss);
        double step = 1.0;
        Eigen::VectorXd trial_p, trial_miss;
        while (true) {
            trial_p = p0 + step * dp;
            trial_miss = shoot(trial_p);
            if (trial_miss.norm() <= (1.0 - 1e-4 * step) * miss.norm() || step < 1e-4) break;
            step *= 0.5;
        }
        p0 = trial_p;
        miss = trial_miss;
    }
    if (!out.converged && miss.lpNorm<Eigen::Infinity>() <= match_tol) out.converged = true;
    if (!out.converged && out.message.empty())
        out.message = "shooting did not converge within max_iters";
    out.iterations = iter;
    out.p_initial = p0;

    // final pass: sample the flow at Chebyshev-Lobatto nodes and interpolate
    const Eigen::VectorXd nodes = chebyshev_lobatto_points(cfg.degree, cp.a, theta_f);
    HamiltonianFlow flow(sys);
    Eigen::VectorXd y0(2 * n);
    y0 << cp.q_a, p0;
    const auto states = integrate_to(flow, cp.a, y0, nodes, ode_tol);
    Eigen::MatrixXd qv(nodes.size(), n), pv(nodes.size(), n), uv(nodes.size(), cp.control_dim);
    for (int k = 0; k < nodes.size(); ++k) {
        const Eigen::VectorXd q = states[k].head(n), p = states[k].tail(n);
        qv.row(k) = q.transpose();
        pv.row(k) = p.transpose();
        uv.row(k) = flow.eliminate_control(nodes(k), q, p).transpose();
    }
    out.extremal.q = Trajectory::fit(nodes, qv, cfg.degree, cp.a, theta_f);
    out.extremal.u = Trajectory::fit(nodes, uv, cfg.degree, cp.a, theta_f);
    out.extremal.p = Trajectory::fit(nodes, pv, cfg.degree, cp.a, theta_f);
    return out;
}

}  // namespace falva
