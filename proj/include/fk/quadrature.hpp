#pragma once

// Gauss-Legendre and Gauss-Hermite rules, computed by Newton iteration on
// the orthogonal-polynomial recurrences. Used by the quadrature oracles.

#include <vector>

namespace fk::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes/weights on [-1, 1] with weight 1.
Rule gauss_legendre(int n);

// Physicists' Gauss-Hermite: integral f(x) exp(-x^2) dx = sum w_i f(x_i).
Rule gauss_hermite(int n);

} // namespace fk::quad
