#pragma once

#include <vector>

namespace isac {

/// Complementary error function erfc(x) = (2/sqrt(pi)) * integral_x^inf exp(-t^2) dt.
/// Rational-approximation implementation (three-region scheme), absolute error
/// below 1e-14 on |x| <= 6.
double erfc(double x);

/// Scaled complement erfcx(x) = exp(x^2) * erfc(x), valid for x >= 0.
/// Stays representable where erfc itself underflows.
double erfcx(double x);

/// Inverse of erfc on (0, 2): returns x with erfc(x) == y, relative error <= 1e-12.
/// Throws std::domain_error for y <= 0 or y >= 2.
double erfc_inv(double y);

/// Probability-weighted quadrature grid for a scalar prior.
/// Nodes are strictly increasing, weights are nonnegative and sum to one.
struct DiscretizedPrior {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
    void validate() const;  // throws std::invalid_argument on broken invariants
};

/// Equally spaced nodes on [mean - trunc*std, mean + trunc*std], weights
/// proportional to the Gaussian pdf and renormalized. std == 0 collapses to a
/// single point mass at the mean.
DiscretizedPrior discretize_gaussian(double mean, double std, int m, double trunc);

/// Equally spaced nodes on (0, trunc*sigma], weights proportional to the
/// Rayleigh pdf (x/sigma^2) exp(-x^2 / (2 sigma^2)) and renormalized.
DiscretizedPrior discretize_rayleigh(double sigma, int n, double trunc);

}  // namespace isac
