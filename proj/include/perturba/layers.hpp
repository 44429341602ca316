#pragma once

#include <functional>
#include <memory>

#include "perturba/common.hpp"

namespace perturba {

// Self-similar solution of the half-line heat problem with unit boundary
// data: erfc(xi / (2 sqrt(tau))), continuously extended by 0 at tau = 0 for
// xi > 0 (and 1 at xi = 0).
double erfc_profile(double xi, double tau);

// Derivatives of the erfc profile (tau > 0).
double erfc_profile_dxi(double xi, double tau);
double erfc_profile_dtau(double xi, double tau);

// Complex-argument complementary error function. Power series with
// exp(-z^2) prefactor for small |z|, Lentz continued fraction beyond;
// accurate in the sector |arg z| <~ pi/4 that stretched layer coordinates
// occupy (Re lambda > 0), reflection formula for Re z < 0.
cx erfc_cx(cx z);

// ln(erfc(x)) for x >= 0 without underflow.
double log_erfc(double x);

// Dirichlet half-line heat convolution
//   I(xi,tau) = (1/(2 sqrt(pi))) int_0^tau int_0^inf h(eta,s)/sqrt(tau-s)
//               [exp(-(xi-eta)^2/(4(tau-s))) - exp(-(xi+eta)^2/(4(tau-s)))] deta ds
// via the substitution sigma = sqrt(tau-s) (removes the endpoint
// singularity) and nested adaptive quadrature; the eta window follows the
// Gaussian kernel support.
double heat_convolution(double xi, double tau, const std::function<double(double, double)>& source,
                        double tol = 1e-9);

// For the separable sources arising in the iteration the profile factor is
// erfc(scale * eta / (2 sqrt(s))), which is self-similar of degree zero; the
// response is then exactly I(xi,tau) = tau * g(xi/(2 sqrt(tau))) with a
// one-dimensional profile g per scale.
class SimilarProfile {
 public:
  SimilarProfile(double scale, double tol);

  double scale() const { return scale_; }
  double eval(double xi, double tau) const;
  double dxi(double xi, double tau) const;
  double dtau(double xi, double tau) const;

  double g(double zeta) const;
  double dg(double zeta) const;
  static double zeta_max() { return 10.0; }

 private:
  double scale_;
  CubicTable g_;
};

// Shared cache keyed by source scale.
std::shared_ptr<const SimilarProfile> similar_profile(double scale, double tol = 1e-8);

// Decay-bound fit: the smallest c with |p(xi,tau)| <= c exp(-xi^2/(8 tau))
// over the grid, computed in log space; pass requires a finite fit that is
// stable (< 10% drift) under grid doubling. The profile is supplied as
// log|p| to keep underflowing tails meaningful.
struct DecayCheck {
  double c_fit = 0.0;
  double drift = 0.0;
  bool pass = false;
};

DecayCheck check_decay_bound(const std::function<double(double, double)>& log_abs_profile,
                             double xi_max, double tau_max, std::size_t base_resolution);

}  // namespace perturba
