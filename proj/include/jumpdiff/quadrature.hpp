#pragma once

#include <cstddef>
#include <vector>

namespace jumpdiff {

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule of the given order. Nodes are computed once by Newton
// iteration on the Legendre recurrence and cached per order.
const QuadratureRule& gauss_legendre(int order);

template <typename F>
double integrate(const QuadratureRule& rule, double a, double b, F&& f) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return acc * half;
}

} // namespace jumpdiff
