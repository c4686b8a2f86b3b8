#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "falva/quadrature.hpp"

using namespace falva;

namespace {

// Reference integrator for int_a^t f(theta) (t-theta)^(alpha-1) dtheta.
// The substitution u = (t-theta)^alpha removes the endpoint singularity:
// the integral becomes (1/alpha) int_0^{(t-a)^alpha} f(t - u^(1/alpha)) du,
// which composite Simpson handles at full accuracy.
double reference_weighted_integral(const std::function<double(double)>& f, double alpha,
                                   double a, double t, int panels = 200000) {
    const double upper = std::pow(t - a, alpha);
    const double h = upper / panels;
    auto g = [&](double u) { return f(t - std::pow(u, 1.0 / alpha)); };
    double s = g(0.0) + g(upper);
    for (int i = 1; i < panels; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
    return s * h / 3.0 / alpha;
}

}  // namespace

TEST_CASE("gamma at fixed points") {
    CHECK(falva::gamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(falva::gamma(0.5) == doctest::Approx(1.7724538509055160273).epsilon(1e-14));

    // reference values to 18 digits
    const struct { double x, value; } table[] = {
        {0.1, 9.51350769866873184}, {0.3, 2.99156898768759063},
        {0.9, 1.06862870211931935}, {1.7, 0.90863873285329045},
        {2.5, 1.32934038817913702}, {5.2, 32.5780960503313461},
        {7.5, 1871.25430579778835}, {10.0, 362880.0},
        {15.5, 334838609873.556457}, {22.25, 1.10177269872910029e+20},
        {30.0, 8.84176199373970195e+30},
    };
    for (const auto& row : table)
        CHECK(std::abs(falva::gamma(row.x) - row.value) / row.value < 1e-13);
}

TEST_CASE("gamma recurrence x*gamma(x) = gamma(x+1)") {
    for (double x : {0.3, 1.7, 5.2})
        CHECK(std::abs(x * falva::gamma(x) - falva::gamma(x + 1.0)) / falva::gamma(x + 1.0) < 1e-13);
}

TEST_CASE("gamma poles") {
    CHECK_THROWS_AS(falva::gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(falva::gamma(-3.0), std::domain_error);
}

TEST_CASE("gamma_ratio product form") {
    const double alpha = 0.5;
    CHECK(gamma_ratio(2, alpha) == doctest::Approx((1 - alpha) * (2 - alpha)).epsilon(1e-15));
    CHECK(gamma_ratio(2, 0.5) == doctest::Approx(0.75));
    CHECK(gamma_ratio(3, 0.25) == doctest::Approx(3.609375).epsilon(1e-15));
    for (int i = 1; i <= 5; ++i) CHECK(gamma_ratio(i, 1.0) == 0.0);
}

TEST_CASE("gamma_ratio ties back to the gamma quotient") {
    for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (int i = 1; i <= 6; ++i) {
            const double lhs = gamma_ratio(i, alpha) * falva::gamma(1.0 - alpha);
            const double rhs = falva::gamma(i - alpha + 1.0);
            CHECK(std::abs(lhs - rhs) / rhs < 1e-11);
        }
}

TEST_CASE("binomial") {
    CHECK(binomial(2, 0) == 1);
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(4, -1) == 0);
    CHECK(binomial(4, 5) == 0);
    for (int n = 1; n <= 12; ++n)
        for (int k = 0; k <= n; ++k)
            CHECK(binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k));
}

TEST_CASE("jacobi rule basic integrals") {
    const QuadratureRule rule = jacobi_rule(0.5, 0.0, 1.0, 8);
    CHECK(integrate([](double) { return 1.0; }, rule) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(integrate([](double th) { return 1.0 - th; }, rule) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("jacobi rule invariants") {
    for (double alpha : {0.1, 0.25, 0.5, 0.75, 1.0})
        for (int n : {1, 2, 4, 8, 20}) {
            const double a = -0.5, t = 2.0;
            const QuadratureRule rule = jacobi_rule(alpha, a, t, n);
            REQUIRE(rule.size() == n);
            for (int i = 0; i < n; ++i) {
                CHECK(rule.nodes(i) > a);
                CHECK(rule.nodes(i) < t);
                CHECK(rule.weights(i) > 0.0);
                if (i > 0) CHECK(rule.nodes(i) > rule.nodes(i - 1));
            }
            const double wsum = rule.weights.sum();
            const double expected = std::pow(t - a, alpha) / alpha;
            CHECK(std::abs(wsum - expected) / expected < 1e-12);
        }
}

TEST_CASE("jacobi rule exactness to degree 2n-1") {
    for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
        for (int n : {2, 4, 8}) {
            const QuadratureRule rule = jacobi_rule(alpha, 0.0, 1.0, n);
            for (int deg = 0; deg <= 2 * n - 1; ++deg) {
                // exact: int_0^1 theta^deg (1-theta)^(alpha-1) = B(deg+1, alpha)
                const double exact =
                    falva::gamma(deg + 1.0) * falva::gamma(alpha) / falva::gamma(deg + 1.0 + alpha);
                const double got =
                    integrate([deg](double th) { return std::pow(th, deg); }, rule);
                CHECK(std::abs(got - exact) / exact < 1e-12);
            }
        }
    }
}

TEST_CASE("n=8 rule reproduces the Beta integral of theta^15") {
    const QuadratureRule rule = jacobi_rule(0.5, 0.0, 1.0, 8);
    const double got = integrate([](double th) { return std::pow(th, 15); }, rule);
    // oracle: singularity-removing composite quadrature
    const double oracle = reference_weighted_integral(
        [](double th) { return std::pow(th, 15); }, 0.5, 0.0, 1.0);
    const double beta_16_half = 0.446588277484813637;  // B(16, 1/2)
    CHECK(std::abs(oracle - beta_16_half) < 1e-13);
    CHECK(std::abs(got - beta_16_half) / beta_16_half < 1e-12);
}

TEST_CASE("n=20 rule integrates exp against the singular weight") {
    const QuadratureRule rule = jacobi_rule(0.5, 0.0, 1.0, 20);
    const double got = integrate([](double th) { return std::exp(th); }, rule);
    const double oracle =
        reference_weighted_integral([](double th) { return std::exp(th); }, 0.5, 0.0, 1.0);
    CHECK(std::abs(oracle - 4.06015693855740991) < 1e-12);  // cross-check of the oracle
    CHECK(std::abs(got - oracle) < 1e-10);
}

TEST_CASE("rule error decreases as n doubles") {
    auto f = [](double th) { return std::cos(3.0 * th) * std::exp(th); };
    const double ref = reference_weighted_integral(f, 0.35, 0.0, 1.0);
    double prev_err = 1e300;
    for (int n = 4; n <= 64; n *= 2) {
        const QuadratureRule rule = jacobi_rule(0.35, 0.0, 1.0, n);
        const double err = std::abs(integrate(f, rule) - ref);
        CHECK(err <= prev_err * 1.05 + 1e-12);  // 1e-12: roundoff floor of the reference
        prev_err = err;
    }
}

TEST_CASE("jacobi rule input validation") {
    CHECK_THROWS_AS(jacobi_rule(0.0, 0.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(jacobi_rule(1.5, 0.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(jacobi_rule(0.5, 1.0, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(jacobi_rule(0.5, 0.0, 1.0, 0), std::invalid_argument);
}
