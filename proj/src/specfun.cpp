#include "isac/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace isac {

namespace {

// Rational approximations from W. J. Cody's CALERF scheme (TOMS 1969).
// Region 1: erf(x) for |x| <= 0.46875.
constexpr double kA[5] = {3.16112374387056560e0, 1.13864154151050156e2,
                          3.77485237685302021e2, 3.20937758913846947e3,
                          1.85777706184603153e-1};
constexpr double kB[4] = {2.36012909523441209e1, 2.44024637934444173e2,
                          1.28261652607737228e3, 2.84423683343917062e3};
// Region 2: erfcx(x) for 0.46875 < x <= 4.
constexpr double kC[9] = {5.64188496988670089e-1, 8.88314979438837594e0,
                          6.61191906371416295e1,  2.98635138197400131e2,
                          8.81952221241769090e2,  1.71204761263407058e3,
                          2.05107837782607147e3,  1.23033935479799725e3,
                          2.15311535474403846e-8};
constexpr double kD[8] = {1.57449261107098347e1, 1.17693950891312499e2,
                          5.37181101862009858e2, 1.62138957456669019e3,
                          3.29079923573345963e3, 4.36261909014324716e3,
                          3.43936767414372164e3, 1.23033935480374942e3};
// Region 3: erfcx(x) for x > 4.
constexpr double kP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                          1.25781726111229246e-1, 1.60837851487422766e-2,
                          6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kQ[5] = {2.56852019228982242e0,  1.87295284992346047e0,
                          5.27905102951428412e-1, 6.05183413124413191e-2,
                          2.33520497626869185e-3};

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)

double erf_small(double x) {
    const double z = x * x;
    double num = kA[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
        num = (num + kA[i]) * z;
        den = (den + kB[i]) * z;
    }
    return x * (num + kA[3]) / (den + kB[3]);
}

// exp(x^2) * erfc(x) on 0.46875 < x <= 4
double erfcx_mid(double x) {
    double num = kC[8] * x;
    double den = x;
    for (int i = 0; i < 7; ++i) {
        num = (num + kC[i]) * x;
        den = (den + kD[i]) * x;
    }
    return (num + kC[7]) / (den + kD[7]);
}

// exp(x^2) * erfc(x) on x > 4
double erfcx_tail(double x) {
    const double z = 1.0 / (x * x);
    double num = kP[5] * z;
    double den = z;
    for (int i = 0; i < 4; ++i) {
        num = (num + kP[i]) * z;
        den = (den + kQ[i]) * z;
    }
    const double r = z * (num + kP[4]) / (den + kQ[4]);
    return (kInvSqrtPi - r) / x;
}

// exp(-x^2) evaluated with a split of x^2 into a rounded part and a remainder,
// which keeps the product exp(-x^2)*erfcx(x) accurate to ~1 ulp for large x.
double exp_neg_sq(double x) {
    const double xsq = std::floor(x * 16.0) / 16.0;
    const double del = (x - xsq) * (x + xsq);
    return std::exp(-xsq * xsq) * std::exp(-del);
}

}  // namespace

double erfcx(double x) {
    if (x < 0.0) throw std::domain_error("erfcx: requires x >= 0");
    if (x <= 0.46875) return std::exp(x * x) * (1.0 - erf_small(x));
    if (x <= 4.0) return erfcx_mid(x);
    return erfcx_tail(x);
}

double erfc(double x) {
    const double ax = std::fabs(x);
    double r;
    if (ax <= 0.46875) {
        return 1.0 - erf_small(x);
    } else if (ax <= 4.0) {
        r = exp_neg_sq(ax) * erfcx_mid(ax);
    } else {
        r = (ax >= 26.7) ? 0.0 : exp_neg_sq(ax) * erfcx_tail(ax);
    }
    return x < 0.0 ? 2.0 - r : r;
}

double erfc_inv(double y) {
    if (!(y > 0.0) || !(y < 2.0)) throw std::domain_error("erfc_inv: requires 0 < y < 2");
    if (y == 1.0) return 0.0;
    if (y > 1.0) return -erfc_inv(2.0 - y);

    // Initial guess: asymptotic inversion of erfc(x) ~ exp(-x^2)/(x sqrt(pi)).
    double x;
    if (y > 0.1) {
        // Series around 0 is adequate as a seed here.
        const double s = 1.0 - y;                          // erf(x)
        const double t = 0.88622692545275801 * s;          // sqrt(pi)/2 * erf
        x = t + t * t * t / 3.0;
    } else {
        const double l = -std::log(y);
        x = std::sqrt(l - 0.5 * std::log(std::max(l, 1e-300) * M_PI));
    }

    // Newton on f(x) = log(erfc(x)) - log(y); f' = erfc'/erfc, and
    // erfc/erfc' = -sqrt(pi)/2 * erfcx(x), which is stable for all x >= 0.
    const double log_y = std::log(y);
    for (int it = 0; it < 60; ++it) {
        if (x < 0.0) x = 0.0;
        const double ex = erfcx(x);
        const double log_f = -x * x + std::log(ex);
        const double step = (log_f - log_y) * (0.88622692545275801 * ex);
        x += step;
        if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(x))) break;
    }
    return x;
}

void DiscretizedPrior::validate() const {
    if (nodes.empty() || nodes.size() != weights.size())
        throw std::invalid_argument("DiscretizedPrior: empty or mismatched grids");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("DiscretizedPrior: negative weight");
        if (i > 0 && !(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("DiscretizedPrior: nodes not strictly increasing");
        sum += weights[i];
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("DiscretizedPrior: weights do not sum to one");
}

DiscretizedPrior discretize_gaussian(double mean, double std, int m, double trunc) {
    if (m < 1) throw std::invalid_argument("discretize_gaussian: m >= 1 required");
    if (std < 0.0) throw std::invalid_argument("discretize_gaussian: std >= 0 required");
    if (!(trunc > 0.0)) throw std::invalid_argument("discretize_gaussian: trunc > 0 required");

    DiscretizedPrior p;
    if (std == 0.0 || m == 1) {
        p.nodes = {mean};
        p.weights = {1.0};
        return p;
    }
    const double lo = mean - trunc * std;
    const double hi = mean + trunc * std;
    const double h = (hi - lo) / (m - 1);
    p.nodes.resize(m);
    p.weights.resize(m);
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = lo + h * i;
        const double u = (x - mean) / std;
        p.nodes[i] = x;
        p.weights[i] = std::exp(-0.5 * u * u);
        sum += p.weights[i];
    }
    for (double& w : p.weights) w /= sum;
    return p;
}

DiscretizedPrior discretize_rayleigh(double sigma, int n, double trunc) {
    if (n < 1) throw std::invalid_argument("discretize_rayleigh: n >= 1 required");
    if (!(sigma > 0.0)) throw std::invalid_argument("discretize_rayleigh: sigma > 0 required");
    if (!(trunc > 0.0)) throw std::invalid_argument("discretize_rayleigh: trunc > 0 required");

    DiscretizedPrior p;
    p.nodes.resize(n);
    p.weights.resize(n);
    const double hi = trunc * sigma;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = hi * (i + 1) / n;  // nodes on (0, trunc*sigma]
        const double u = x / sigma;
        p.nodes[i] = x;
        p.weights[i] = u * std::exp(-0.5 * u * u);
        sum += p.weights[i];
    }
    for (double& w : p.weights) w /= sum;
    return p;
}

}  // namespace isac
