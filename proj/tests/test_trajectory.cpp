#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "falva/trajectory.hpp"

using namespace falva;

namespace {

Trajectory fit_scalar(const std::function<double(double)>& f, int degree, double a, double t,
                      int samples = -1) {
    if (samples < 0) samples = degree + 1;
    Eigen::VectorXd thetas = Eigen::VectorXd::LinSpaced(samples, a, t);
    if (samples == degree + 1) thetas = chebyshev_lobatto_points(degree, a, t);
    Eigen::MatrixXd values(thetas.size(), 1);
    for (int i = 0; i < thetas.size(); ++i) values(i, 0) = f(thetas(i));
    return Trajectory::fit(thetas, values, degree, a, t);
}

}  // namespace

TEST_CASE("fit reproduces polynomials exactly") {
    Trajectory tr = fit_scalar([](double th) { return th * th; }, 2, 0.0, 1.0, 7);
    for (double th : {0.0, 0.25, 0.5, 0.77, 1.0})
        CHECK(std::abs(tr.value(th, 0) - th * th) < 1e-13);
}

TEST_CASE("constant samples give a constant trajectory with zero derivative") {
    Trajectory tr = fit_scalar([](double) { return 4.5; }, 3, 0.0, 2.0, 9);
    Trajectory d = tr.derivative(1);
    for (double th : {0.0, 0.7, 1.9}) {
        CHECK(tr.value(th, 0) == doctest::Approx(4.5).epsilon(1e-14));
        CHECK(std::abs(d.value(th, 0)) < 1e-12);
    }
}

TEST_CASE("fit of sin to degree 12 is accurate to 1e-9") {
    Trajectory tr = fit_scalar([](double th) { return std::sin(th); }, 12, 0.0, 1.0);
    double max_err = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double th = i / 400.0;
        max_err = std::max(max_err, std::abs(tr.value(th, 0) - std::sin(th)));
    }
    CHECK(max_err <= 1e-9);
}

TEST_CASE("fit input validation") {
    Eigen::VectorXd thetas = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(3, 1);
    CHECK_THROWS_AS(Trajectory::fit(thetas, values, 5, 0.0, 1.0), std::invalid_argument);

    // duplicated samples -> rank-deficient basis
    Eigen::VectorXd dup = Eigen::VectorXd::Constant(5, 0.5);
    Eigen::MatrixXd dval = Eigen::MatrixXd::Zero(5, 1);
    CHECK_THROWS(Trajectory::fit(dup, dval, 4, 0.0, 1.0));
}

TEST_CASE("derivatives are exact polynomial calculus") {
    Trajectory tr = fit_scalar([](double th) { return th * th; }, 2, 0.0, 1.0);
    Trajectory d = tr.derivative(1);
    for (double th : {0.1, 0.5, 0.9})
        CHECK(d.value(th, 0) == doctest::Approx(2.0 * th).epsilon(1e-13));

    // derivative(tr, 0) is the identity
    Trajectory same = tr.derivative(0);
    CHECK(same.coefficients() == tr.coefficients());

    // theta^5 third derivative at 0.5 -> 60 * 0.25 = 15
    Trajectory t5 = fit_scalar([](double th) { return std::pow(th, 5); }, 5, 0.0, 1.0);
    CHECK(std::abs(t5.derivative(3).value(0.5, 0) - 15.0) < 1e-12);
}

TEST_CASE("differentiation drops the degree, then hits zero") {
    Trajectory tr = fit_scalar([](double th) { return 1 + th + th * th * th; }, 3, 0.0, 1.0);
    CHECK(tr.derivative(1).degree() == 2);
    CHECK(tr.derivative(3).degree() == 0);
    Trajectory zero = tr.derivative(4);
    for (double th : {0.0, 0.5, 1.0}) CHECK(std::abs(zero.value(th, 0)) < 1e-11);
}

TEST_CASE("jet_at examples") {
    Trajectory tr = fit_scalar([](double th) { return th * th; }, 2, 0.0, 1.0);
    Jet jet = tr.jet_at(0.5, 2);
    CHECK(jet.theta == 0.5);
    CHECK(jet.q(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(jet.q(0, 1) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(jet.q(0, 2) == doctest::Approx(2.0).epsilon(1e-13));

    // K beyond the degree yields zero columns
    Jet deep = tr.jet_at(0.5, 5);
    for (int k = 3; k <= 5; ++k) CHECK(std::abs(deep.q(0, k)) < 1e-12);

    CHECK_THROWS_AS(tr.jet_at(1.5, 2), std::domain_error);
}

TEST_CASE("jet columns agree with explicit derivative trajectories") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd coeffs(2, 9);
    for (int i = 0; i < coeffs.size(); ++i) coeffs(i / 9, i % 9) = dist(rng);
    Trajectory tr(0.0, 1.0, coeffs);
    for (double th : {0.1, 0.45, 0.92}) {
        Jet jet = tr.jet_at(th, 4);
        for (int d = 0; d <= 4; ++d) {
            Eigen::VectorXd v = tr.derivative(d)(th);
            CHECK((jet.q.col(d) - v).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}

TEST_CASE("jets are linear in the trajectory") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd c1(1, 7), c2(1, 7);
    for (int j = 0; j < 7; ++j) {
        c1(0, j) = dist(rng);
        c2(0, j) = dist(rng);
    }
    const double s = 1.7;
    Trajectory tr1(0.0, 1.0, c1), tr2(0.0, 1.0, c2), combo(0.0, 1.0, s * c1 + c2);
    for (double th : {0.2, 0.6, 0.95}) {
        Jet a = tr1.jet_at(th, 3), b = tr2.jet_at(th, 3), c = combo.jet_at(th, 3);
        const Eigen::MatrixXd expected = s * a.q + b.q;
        const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
        CHECK((c.q - expected).cwiseAbs().maxCoeff() / scale < 1e-12);
    }
}

TEST_CASE("restricted refit reproduces the curve on the subinterval") {
    Trajectory tr = fit_scalar([](double th) { return 1 + 2 * th - th * th * th; }, 6, 0.0, 1.0);
    Trajectory sub = tr.restricted(0.0, 0.9);
    for (double th : {0.0, 0.3, 0.6, 0.9})
        CHECK(sub.value(th, 0) == doctest::Approx(tr.value(th, 0)).epsilon(1e-13));
}

TEST_CASE("chebyshev_diff_matrix matches Trajectory::derivative") {
    Eigen::MatrixXd coeffs(1, 6);
    coeffs << 0.3, -1.2, 0.7, 0.05, -0.4, 0.9;
    Trajectory tr(0.0, 2.0, coeffs);
    const Eigen::MatrixXd D = chebyshev_diff_matrix(5, 0.0, 2.0);
    const Eigen::VectorXd dc = D * coeffs.row(0).transpose();
    const Trajectory d = tr.derivative(1);
    for (double th : {0.1, 1.0, 1.9}) {
        Trajectory via_matrix(0.0, 2.0, dc.transpose());
        CHECK(via_matrix.value(th, 0) == doctest::Approx(d.value(th, 0)).epsilon(1e-12));
    }
}
