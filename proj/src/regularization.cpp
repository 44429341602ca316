#include "perturba/regularization.hpp"

#include <cmath>

#include "perturba/quadrature.hpp"

namespace perturba {

namespace {

constexpr std::size_t kPhiNodes = 1025;

}  // namespace

std::shared_ptr<const StretchGeometry> build_stretch_geometry(const SpectralData& spectral,
                                                              double quad_tol) {
  if (!(quad_tol > 0.0 && quad_tol <= 1e-4))
    throw spec_error("build_stretch_map: quad_tol must lie in (0, 1e-4]");
  auto geo = std::make_shared<StretchGeometry>();
  const int n = spectral.spec.n;
  geo->n = n;
  geo->quad_tol = quad_tol;
  geo->xs = uniform_nodes(0.0, 1.0, kPhiNodes);
  geo->phi_re.resize(n);
  geo->phi_im.resize(n);
  geo->dphi_re.resize(n);
  geo->dphi_im.resize(n);
  geo->phi_total.resize(n);

  for (int i = 0; i < n; ++i) {
    // Principal branch: Re lambda > 0 keeps 1/sqrt(lambda) in the right
    // half plane, so Re phi increases away from the boundary.
    auto integrand = [&](double s) -> cx {
      const cx lam = spectral.spatial.value_at(i, s);
      if (lam.real() <= 0.0)
        throw numeric_error("build_stretch_map: Re(lambda) <= 0 encountered for i=" +
                            std::to_string(i + 1));
      return 1.0 / principal_sqrt(lam);
    };
    std::vector<cx> cumulative;
    try {
      cumulative = cumulative_integral(integrand, geo->xs, quad_tol, "1/sqrt(lambda)");
    } catch (const numeric_error&) {
      throw numeric_error("build_stretch_map: quadrature failed for phi_{" +
                          std::to_string(i + 1) + ",l}");
    }
    std::vector<double> vre(kPhiNodes), vim(kPhiNodes), sre(kPhiNodes), sim(kPhiNodes);
    for (std::size_t m = 0; m < kPhiNodes; ++m) {
      vre[m] = cumulative[m].real();
      vim[m] = cumulative[m].imag();
      const cx d = integrand(geo->xs[m]);
      sre[m] = d.real();
      sim[m] = d.imag();
    }
    geo->phi_re[i] = CubicTable(0.0, 1.0, vre, sre);
    geo->phi_im[i] = CubicTable(0.0, 1.0, vim, sim);
    geo->dphi_re[i] = CubicTable(0.0, 1.0, sre);
    geo->dphi_im[i] = CubicTable(0.0, 1.0, sim);
    geo->phi_total[i] = cumulative.back();
  }
  return geo;
}

StretchMap build_stretch_map(const SpectralData& spectral, double epsilon, double quad_tol) {
  if (!(epsilon > 0.0)) throw spec_error("build_stretch_map: epsilon must be positive");
  return StretchMap{build_stretch_geometry(spectral, quad_tol), epsilon};
}

RegularizedPoint regularize(double x, double t, const StretchMap& map,
                            const SpectralData& spectral) {
  const int n = map.dim();
  const double eps = map.epsilon;
  RegularizedPoint pt;
  pt.n = n;
  pt.x = x;
  pt.t = t;
  pt.epsilon = eps;
  pt.xi.resize(2 * static_cast<std::size_t>(n));
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < n; ++i) pt.xi[static_cast<std::size_t>(l) * n + i] = map.xi(i, l, x);
  const double ratio = (t + eps) / eps;
  const double log_ratio = std::log(ratio);
  pt.tau = log_ratio / eps;
  pt.mu.resize(n);
  pt.exp_mu.resize(n);
  const Vec beta0 = spectral.beta0();
  for (int j = 0; j < n; ++j) {
    pt.mu[j] = beta0[j] * log_ratio;
    // ((t+eps)/eps)^{beta_j(0)} via the principal power; avoids composing
    // exp with a large log.
    pt.exp_mu[j] = principal_pow(cx(ratio, 0.0), beta0[j]);
  }
  return pt;
}

}  // namespace perturba
