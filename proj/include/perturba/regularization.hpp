#pragma once

#include "perturba/spectral.hpp"

namespace perturba {

// epsilon-independent stretch geometry shared between StretchMaps:
// phi_{i,1}(x) = int_0^x ds / sqrt(lambda_i(s)) with the principal branch,
// phi_{i,2}(x) = phi_{i,1}(1) - phi_{i,1}(x).
struct StretchGeometry {
  int n = 0;
  double quad_tol = 1e-10;
  std::vector<double> xs;  // dense uniform nodes on [0,1]
  // per i: cubic tables of Re/Im of phi_{i,1} (exact slopes 1/sqrt(lambda))
  std::vector<CubicTable> phi_re, phi_im;
  // per i: cubic tables of Re/Im of 1/sqrt(lambda_i) (phi'_{i,1})
  std::vector<CubicTable> dphi_re, dphi_im;
  std::vector<cx> phi_total;  // phi_{i,1}(1)

  cx phi1(int i, double x) const { return cx(phi_re[i].eval(x), phi_im[i].eval(x)); }
  cx dphi1(int i, double x) const { return cx(dphi_re[i].eval(x), dphi_im[i].eval(x)); }
  cx ddphi1(int i, double x) const { return cx(dphi_re[i].deriv(x), dphi_im[i].deriv(x)); }
};

// Current-epsilon view over the shared geometry. Layer side l uses the
// 0-based convention l = 0 <-> boundary x = 0, l = 1 <-> boundary x = 1.
struct StretchMap {
  std::shared_ptr<const StretchGeometry> geometry;
  double epsilon = 0.0;

  int dim() const { return geometry->n; }

  cx phi(int i, int l, double x) const {
    return l == 0 ? geometry->phi1(i, x) : geometry->phi_total[i] - geometry->phi1(i, x);
  }
  cx dphi(int i, int l, double x) const {
    return l == 0 ? geometry->dphi1(i, x) : -geometry->dphi1(i, x);
  }
  cx ddphi(int i, int l, double x) const {
    return l == 0 ? geometry->ddphi1(i, x) : -geometry->ddphi1(i, x);
  }

  // xi_{i,l} = phi_{i,l}(x) / eps^{3/2}
  cx xi(int i, int l, double x) const {
    return phi(i, l, x) / (epsilon * std::sqrt(epsilon));
  }
};

StretchMap build_stretch_map(const SpectralData& spectral, double epsilon,
                             double quad_tol = 1e-10);

// Builds only the shared geometry (reused across epsilons).
std::shared_ptr<const StretchGeometry> build_stretch_geometry(const SpectralData& spectral,
                                                              double quad_tol = 1e-10);

inline StretchMap with_epsilon(const std::shared_ptr<const StretchGeometry>& geo, double eps) {
  return StretchMap{geo, eps};
}

// All stretched coordinates of one physical point.
struct RegularizedPoint {
  int n = 0;
  double x = 0.0, t = 0.0;
  double epsilon = 0.0;
  std::vector<cx> xi;      // [l * n + i]
  double tau = 0.0;        // (1/eps) ln((t+eps)/eps)
  std::vector<cx> mu;      // beta_j(0) ln((t+eps)/eps)
  std::vector<cx> exp_mu;  // ((t+eps)/eps)^{beta_j(0)}

  cx xi_at(int i, int l) const { return xi[static_cast<std::size_t>(l) * n + i]; }
};

RegularizedPoint regularize(double x, double t, const StretchMap& map,
                            const SpectralData& spectral);

}  // namespace perturba
