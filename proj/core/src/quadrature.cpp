#include "lrtk/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <memory>

#include "lrtk/errors.hpp"

namespace lrtk {

namespace {

struct FixedWorkspaceDeleter {
  void operator()(gsl_integration_fixed_workspace* w) const {
    gsl_integration_fixed_free(w);
  }
};

QuadratureRule from_fixed(const gsl_integration_fixed_type* type, int order,
                          double a, double b, double alpha, double beta) {
  std::unique_ptr<gsl_integration_fixed_workspace, FixedWorkspaceDeleter> ws(
      gsl_integration_fixed_alloc(type, static_cast<size_t>(order), a, b, alpha, beta));
  if (!ws) throw numerical_error("quadrature: workspace allocation failed");
  QuadratureRule rule;
  rule.nodes.assign(gsl_integration_fixed_nodes(ws.get()),
                    gsl_integration_fixed_nodes(ws.get()) + order);
  rule.weights.assign(gsl_integration_fixed_weights(ws.get()),
                      gsl_integration_fixed_weights(ws.get()) + order);
  return rule;
}

} // namespace

QuadratureRule gauss_jacobi01(int order, double alpha, double beta) {
  if (order < 1) throw invalid_input_error("gauss_jacobi01: order must be positive");
  if (alpha <= -1.0 || beta <= -1.0)
    throw invalid_input_error("gauss_jacobi01: exponents must exceed -1");
  // GSL's Jacobi rule uses weight (b-x)^alpha (x-a)^beta on [a,b]; with
  // a=0, b=1 that is (1-x)^alpha x^beta, so swap to match our convention.
  return from_fixed(gsl_integration_fixed_jacobi, order, 0.0, 1.0, beta, alpha);
}

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw invalid_input_error("gauss_legendre: order must be positive");
  return from_fixed(gsl_integration_fixed_legendre, order, a, b, 0.0, 0.0);
}

} // namespace lrtk
