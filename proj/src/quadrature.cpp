#include "falva/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace falva {

namespace {

// Lanczos rational approximation, g = 6.024680040776729583740234375.
// Coefficients are the standard double-precision set (partial-fraction
// numerator/denominator form); the sqrt(2*pi) factor is folded in.
double lanczos_sum(double z) {
    static const double num[13] = {
        23531376880.410759688572007674451636754734846804940,
        42919803642.649098768957899047001988850926355848959,
        35711959237.355668049440185451547166705960488635843,
        17921034426.037209699919755754458931112671403265390,
        6039542586.3520280050642916443072979210699388420708,
        1439720407.3117216736632230727949123939715485786772,
        248874557.86205415651146038641322942321632125127801,
        31426415.585400194380614231628318205362874684987640,
        2876370.6289353724412254090516208496135991145378768,
        186056.26539522349504029498971604569928220784236328,
        8071.6720023658162106380029022722506138218516325024,
        210.82427775157934587250973392071336271166969580291,
        2.5066282746310002701649081771338373386264310793408,
    };
    static const double den[13] = {
        0.0, 39916800.0, 120543840.0, 150917976.0, 105258076.0, 45995730.0,
        13339535.0, 2637558.0, 357423.0, 32670.0, 1925.0, 66.0, 1.0,
    };
    double p = num[12], q = den[12];
    for (int i = 11; i >= 0; --i) {
        p = p * z + num[i];
        q = q * z + den[i];
    }
    return p / q;
}

constexpr double kLanczosG = 6.024680040776729583740234375;

}  // namespace

double gamma(double x) {
    if (x <= 0.0 && x == std::floor(x))
        throw std::domain_error("gamma pole at non-positive integer " + std::to_string(x));
    if (x < 0.5) {
        // reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
        return M_PI / (std::sin(M_PI * x) * gamma(1.0 - x));
    }
    const double zgh = x + kLanczosG - 0.5;
    return lanczos_sum(x) * std::pow(zgh, x - 0.5) * std::exp(-zgh);
}

double gamma_ratio(int i, double alpha) {
    if (i < 1) throw std::invalid_argument("gamma_ratio requires i >= 1");
    double prod = 1.0;
    for (int s = 1; s <= i; ++s) prod *= static_cast<double>(s) - alpha;
    return prod;
}

long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long long c = 1;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    return c;
}

QuadratureRule jacobi_rule(double alpha, double a, double t, int n) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("jacobi_rule requires 0 < alpha <= 1");
    if (!(a < t)) throw std::invalid_argument("jacobi_rule requires a < t");
    if (n < 1) throw std::invalid_argument("jacobi_rule requires n >= 1");

    // Monic three-term recurrence for the Jacobi weight (1-x)^A (1+x)^0,
    // A = alpha - 1: p_{k+1} = (x - a_k) p_k - c_k p_{k-1}.
    const double A = alpha - 1.0;
    Eigen::VectorXd diag(n), offdiag(std::max(n - 1, 0));
    diag(0) = -A / (A + 2.0);
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + A;
        diag(k) = -A * A / (s * (s + 2.0));
        double ck;
        if (k == 1)
            ck = 4.0 * (A + 1.0) / ((A + 2.0) * (A + 2.0) * (A + 3.0));
        else
            ck = 4.0 * k * k * (k + A) * (k + A) / (s * s * (s + 1.0) * (s - 1.0));
        offdiag(k - 1) = std::sqrt(ck);
    }

    const double mu0 = std::pow(2.0, alpha) / alpha;  // integral of the weight on (-1,1)

    QuadratureRule rule;
    rule.alpha = alpha;
    rule.a = a;
    rule.t = t;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    const double half = 0.5 * (t - a);
    const double scale = std::pow(half, alpha);
    if (n == 1) {
        rule.nodes(0) = t - half * (1.0 - diag(0));
        rule.weights(0) = scale * mu0;
        return rule;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("jacobi_rule: tridiagonal eigensolve failed");

    for (int i = 0; i < n; ++i) {
        const double x = es.eigenvalues()(i);  // ascending in (-1, 1)
        const double v0 = es.eigenvectors()(0, i);
        rule.nodes(i) = t - half * (1.0 - x);
        rule.weights(i) = scale * mu0 * v0 * v0;
    }
    return rule;
}

}  // namespace falva
