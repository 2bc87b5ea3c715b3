#pragma once

#include <vector>

namespace lrtk {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Jacobi rule on [0,1] for the weight x^alpha (1-x)^beta; the rule
// integrates f against the weight:  sum w_i f(x_i) ~ int_0^1 x^a (1-x)^b f.
// Endpoint exponents are built into the rule, which is what makes the
// half-integer profile integrals behave for even spatial dimension.
QuadratureRule gauss_jacobi01(int order, double alpha, double beta);

// Plain Gauss-Legendre on [a,b].
QuadratureRule gauss_legendre(int order, double a, double b);

} // namespace lrtk
