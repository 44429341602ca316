#pragma once

#include "perturba/layers.hpp"
#include "perturba/regularization.hpp"

namespace perturba {

// One separable convolution component of a layer function: coefficient
// field times the half-line heat response to an erfc-type source in the
// matching stretched variable.
struct ConvTerm {
  Field2 coeff;  // hbar(x,t)
  double scale = 1.0;
  std::shared_ptr<const SimilarProfile> profile;
};

// One iteration term u_k in class-U form. Layer amplitudes are separable:
// d_i^{k,l}(x,t) = d_bt(t) * gx_{i,l}(x) with the transport factor gx shared
// by all orders (stored on the Expansion).
struct AsymptoticTerm {
  int k = 0;
  bool zero = true;

  std::vector<Field2> v;     // n interior coefficients v_{k,i}(x,t)
  std::vector<Field2> c;     // n*n coefficients c_{ij}(x,t), index [i*n+j]
  std::vector<Table1> p;     // n coefficients p_i(x)

  std::vector<Table1> d_bt;  // [l*n+i] boundary factor of d_i^{k,l}
  std::vector<Table1> w_bt;  // [l*n*n+i*n+j] boundary factor of omega_{ij}^{k,l}

  std::vector<std::vector<ConvTerm>> yconv;  // [l*n+i]
  std::vector<std::vector<ConvTerm>> zconv;  // [l*n*n+i*n+j]

  // p_i could not be pinned by the next-order regularity condition and the
  // condition is not trivially satisfied: order k+2 does not exist in class U.
  std::vector<std::uint8_t> p_unresolved;

  double max_component_norm = 0.0;
};

struct Expansion {
  ProblemSpec spec;
  SpectralData spectral;
  std::shared_ptr<const StretchGeometry> stretch;
  Grid2Ptr grid;             // interior tabulation grid
  std::vector<Table1> gx;    // [l*n+i] transport spatial factors
  std::vector<AsymptoticTerm> terms;

  int dim() const { return spec.n; }
  int max_order() const { return static_cast<int>(terms.size()) - 1; }

  StretchMap stretch_map(double eps) const { return StretchMap{stretch, eps}; }
};

// erfc(xi / (2 sqrt(tau))) continuously extended to tau = 0; complex xi
// supported through the sector-valid complex erfc.
cx layer_profile_value(cx xi, double tau);

// Scalar layer functions assembled from amplitude, transport factor and
// convolution components.
cx evaluate_y_component(const Expansion& e, const AsymptoticTerm& term, int i, int l,
                        const RegularizedPoint& M);
cx evaluate_z_component(const Expansion& e, const AsymptoticTerm& term, int i, int j, int l,
                        const RegularizedPoint& M);

// Full class-U value of u_k at a regularized point. basis_x / psi_t carry
// the eigenvector data at (x, t) so callers can cache them per node.
Vec evaluate_term(const Expansion& e, const AsymptoticTerm& term, const RegularizedPoint& M,
                  const Mat& basis_x, const Mat& psi_t);

// Interior-only part (V + (C + P) exp(mu)); used by boundary-condition checks.
Vec evaluate_term_interior(const Expansion& e, const AsymptoticTerm& term,
                           const RegularizedPoint& M, const Mat& psi_t);

}  // namespace perturba
