#pragma once

#include <functional>

#include "perturba/common.hpp"

namespace perturba {

// Adaptive Gauss–Kronrod (7,15) quadrature over [a, b].
// abs_tol is an absolute target for the whole interval; subdivision stops
// when the local Kronrod error estimate meets its share of the budget.
// Throws numeric_error when the subdivision depth limit is hit, with
// `what_name` in the message.
cx adaptive_quadrature(const std::function<cx(double)>& f, double a, double b, double abs_tol,
                       const char* what_name = "integrand");

double adaptive_quadrature_real(const std::function<double(double)>& f, double a, double b,
                                double abs_tol, const char* what_name = "integrand");

// Cumulative integral of f from nodes.front() to each node, one adaptive
// quadrature per subinterval.
std::vector<cx> cumulative_integral(const std::function<cx(double)>& f,
                                    const std::vector<double>& nodes, double abs_tol,
                                    const char* what_name = "integrand");

}  // namespace perturba
