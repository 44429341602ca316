#include "perturba/quadrature.hpp"

#include <cmath>

namespace perturba {

namespace {

// Kronrod-15 abscissae on [0,1] (positive half) and weights; Gauss-7 weights
// sit on the odd Kronrod nodes.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.000000000000000};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct GkResult {
  cx integral;
  double err;
};

GkResult gk15(const std::function<cx(double)>& f, double a, double b) {
  const double hlgth = 0.5 * (b - a);
  const double centr = 0.5 * (a + b);
  cx resg(0.0, 0.0), resk(0.0, 0.0);
  const cx fc = f(centr);
  resk = kWgk[7] * fc;
  resg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double absc = hlgth * kXgk[j];
    const cx f1 = f(centr - absc);
    const cx f2 = f(centr + absc);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  GkResult r;
  r.integral = resk * hlgth;
  r.err = std::abs((resk - resg) * hlgth);
  return r;
}

void adapt(const std::function<cx(double)>& f, double a, double b, double tol, int depth,
           cx& acc, const char* what_name) {
  if (depth > 48)
    throw numeric_error(std::string("quadrature did not converge for ") + what_name);
  const GkResult r = gk15(f, a, b);
  if (r.err <= tol || (b - a) < 1e-300) {
    acc += r.integral;
    return;
  }
  const double m = 0.5 * (a + b);
  adapt(f, a, m, 0.5 * tol, depth + 1, acc, what_name);
  adapt(f, m, b, 0.5 * tol, depth + 1, acc, what_name);
}

}  // namespace

cx adaptive_quadrature(const std::function<cx(double)>& f, double a, double b, double abs_tol,
                       const char* what_name) {
  if (a == b) return cx(0.0, 0.0);
  cx acc(0.0, 0.0);
  adapt(f, a, b, abs_tol, 0, acc, what_name);
  return acc;
}

double adaptive_quadrature_real(const std::function<double(double)>& f, double a, double b,
                                double abs_tol, const char* what_name) {
  return adaptive_quadrature([&](double q) { return cx(f(q), 0.0); }, a, b, abs_tol, what_name)
      .real();
}

std::vector<cx> cumulative_integral(const std::function<cx(double)>& f,
                                    const std::vector<double>& nodes, double abs_tol,
                                    const char* what_name) {
  std::vector<cx> out(nodes.size(), cx(0.0, 0.0));
  const double per =
      abs_tol / static_cast<double>(nodes.size() > 1 ? nodes.size() - 1 : 1);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    out[i] = out[i - 1] + adaptive_quadrature(f, nodes[i - 1], nodes[i], per, what_name);
  return out;
}

}  // namespace perturba
