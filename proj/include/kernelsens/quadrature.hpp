#pragma once

#include <vector>

namespace kernelsens {

// Gauss-Hermite rule for the weight exp(-x^2). Nodes come in exact +/- pairs:
// nodes[i] > 0 pairs with -nodes[i] and shares weights[i]. For odd orders the
// zero node is stored separately.
struct GaussHermiteRule {
    std::vector<double> nodes;    // positive nodes, descending
    std::vector<double> weights;  // matching weights
    double center_weight = 0.0;   // weight of x = 0 (odd order only)
    int order = 0;
};

GaussHermiteRule gauss_hermite(int order);

// E[f(rho)] for rho ~ N(0,1) using the symmetric rule. Each pair is summed as
// w * (f(a) + f(-a)) so odd integrands cancel exactly.
template <class F>
double gaussian_expectation(const GaussHermiteRule& rule, F&& f) {
    constexpr double kInvSqrtPi = 0.56418958354775628695;
    constexpr double kSqrt2 = 1.41421356237309504880;
    double acc = 0.0;
    // smallest weights first
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double a = kSqrt2 * rule.nodes[i];
        acc += rule.weights[i] * (f(a) + f(-a));
    }
    if (rule.order % 2 == 1) acc += rule.center_weight * f(0.0);
    return acc * kInvSqrtPi;
}

}  // namespace kernelsens
