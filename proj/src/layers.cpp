#include "perturba/layers.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "perturba/quadrature.hpp"

namespace perturba {

double erfc_profile(double xi, double tau) {
  if (xi < 0.0 || tau < 0.0) throw spec_error("erfc_profile: xi and tau must be nonnegative");
  if (tau == 0.0) return xi > 0.0 ? 0.0 : 1.0;
  return std::erfc(xi / (2.0 * std::sqrt(tau)));
}

double erfc_profile_dxi(double xi, double tau) {
  if (tau <= 0.0) return 0.0;
  const double z = xi / (2.0 * std::sqrt(tau));
  return -std::exp(-z * z) / std::sqrt(M_PI * tau);
}

double erfc_profile_dtau(double xi, double tau) {
  if (tau <= 0.0) return 0.0;
  const double z = xi / (2.0 * std::sqrt(tau));
  return xi * std::exp(-z * z) / (2.0 * std::sqrt(M_PI) * std::pow(tau, 1.5));
}

// ---------------------------------------------------------------------------
// Complex erfc
// ---------------------------------------------------------------------------

namespace {

// erf(z) = (2/sqrt(pi)) e^{-z^2} sum_{n>=0} 2^n z^{2n+1} / (2n+1)!!
cx erf_series(cx z) {
  const cx z2 = z * z;
  cx term = z;
  cx sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * z2 / static_cast<double>(2 * n + 1);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
  }
  return 2.0 / std::sqrt(M_PI) * std::exp(-z2) * sum;
}

// erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + (2/2)/(z + (3/2)/(z + ...))))
// evaluated by the modified Lentz method; valid for Re(z^2) > 0.
cx erfc_cfrac(cx z) {
  const double tiny = 1e-290;
  cx f(tiny, 0.0), C = f, D(0.0, 0.0);
  for (int k = 0; k < 120; ++k) {
    const cx a = (k == 0) ? cx(1.0, 0.0) : cx(0.5 * k, 0.0);
    const cx b = z;
    D = b + a * D;
    if (std::abs(D) < tiny) D = tiny;
    C = b + a / C;
    if (std::abs(C) < tiny) C = tiny;
    D = 1.0 / D;
    const cx delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-z * z) / std::sqrt(M_PI) * f;
}

}  // namespace

cx erfc_cx(cx z) {
  if (z.imag() == 0.0) return cx(std::erfc(z.real()), 0.0);
  if (z.real() < 0.0) return 2.0 - erfc_cx(-z);
  const cx z2 = z * z;
  if (z2.real() > 709.0) return cx(0.0, 0.0);  // e^{-z^2} underflows
  if (std::abs(z) < 4.0) return 1.0 - erf_series(z);
  return erfc_cfrac(z);
}

double log_erfc(double x) {
  if (x < 0.0) throw spec_error("log_erfc: negative argument");
  if (x < 25.0) return std::log(std::erfc(x));
  // asymptotic: erfc(x) ~ e^{-x^2}/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
  return -x * x - std::log(x * std::sqrt(M_PI)) +
         std::log1p(-0.5 / (x * x) + 0.75 / (x * x * x * x));
}

// ---------------------------------------------------------------------------
// Heat convolution
// ---------------------------------------------------------------------------

double heat_convolution(double xi, double tau,
                        const std::function<double(double, double)>& source, double tol) {
  if (xi < 0.0 || tau < 0.0)
    throw spec_error("heat_convolution: xi and tau must be nonnegative");
  if (tau == 0.0 || xi == 0.0) return 0.0;  // images cancel exactly at xi = 0

  const double sqrt_tau = std::sqrt(tau);
  // After sigma = sqrt(tau - s):
  // I = (1/sqrt(pi)) int_0^{sqrt(tau)} int h(eta, tau - sigma^2)
  //       [e^{-(xi-eta)^2/(4 sigma^2)} - e^{-(xi+eta)^2/(4 sigma^2)}] deta dsigma
  auto outer = [&](double sigma) -> cx {
    if (sigma <= 0.0) return cx(0.0, 0.0);
    const double s = std::max(tau - sigma * sigma, 0.0);
    const double window = 14.0 * sigma;
    const double lo = std::max(0.0, xi - window);
    const double hi = xi + window;
    auto inner = [&](double eta) -> cx {
      const double dm = (xi - eta) / (2.0 * sigma);
      const double dp = (xi + eta) / (2.0 * sigma);
      const double kernel = std::exp(-dm * dm) - std::exp(-dp * dp);
      return cx(source(eta, s) * kernel, 0.0);
    };
    const double inner_tol = tol / (4.0 * std::max(sqrt_tau, 1.0));
    return adaptive_quadrature(inner, lo, hi, inner_tol, "heat convolution (inner)");
  };
  const cx value =
      adaptive_quadrature(outer, 0.0, sqrt_tau, tol, "heat convolution (outer)");
  return value.real() / std::sqrt(M_PI);
}

// ---------------------------------------------------------------------------
// Self-similar profile tables
// ---------------------------------------------------------------------------

SimilarProfile::SimilarProfile(double scale, double tol) : scale_(scale) {
  if (!(scale > 0.0)) throw spec_error("SimilarProfile: scale must be positive");
  const std::size_t nodes = 1025;
  auto source = [scale](double eta, double s) {
    if (s <= 0.0) return eta > 0.0 ? 0.0 : 1.0;
    return std::erfc(scale * eta / (2.0 * std::sqrt(s)));
  };
  std::vector<double> g(nodes, 0.0);
  const double zmax = zeta_max();
  parallel_for(nodes, [&](std::size_t m) {
    const double zeta = zmax * static_cast<double>(m) / static_cast<double>(nodes - 1);
    // I(xi, 1) at xi = 2 zeta; beyond zeta ~ 8 the response is below 1e-16.
    if (zeta > 8.5) return;
    g[m] = heat_convolution(2.0 * zeta, 1.0, source, tol);
  });
  g_ = CubicTable(0.0, zmax, std::move(g));
}

double SimilarProfile::g(double zeta) const {
  if (zeta < 0.0 || zeta >= zeta_max()) return 0.0;
  return g_.eval(zeta);
}

double SimilarProfile::dg(double zeta) const {
  if (zeta < 0.0 || zeta >= zeta_max()) return 0.0;
  return g_.deriv(zeta);
}

double SimilarProfile::eval(double xi, double tau) const {
  if (tau <= 0.0 || xi < 0.0) return 0.0;
  return tau * g(xi / (2.0 * std::sqrt(tau)));
}

double SimilarProfile::dxi(double xi, double tau) const {
  if (tau <= 0.0) return 0.0;
  return 0.5 * std::sqrt(tau) * dg(xi / (2.0 * std::sqrt(tau)));
}

double SimilarProfile::dtau(double xi, double tau) const {
  if (tau <= 0.0) return 0.0;
  const double zeta = xi / (2.0 * std::sqrt(tau));
  return g(zeta) - 0.5 * zeta * dg(zeta);
}

std::shared_ptr<const SimilarProfile> similar_profile(double scale, double tol) {
  static std::mutex guard;
  static std::map<long long, std::shared_ptr<const SimilarProfile>> cache;
  const long long key = std::llround(scale * 1e12);
  {
    std::lock_guard<std::mutex> lk(guard);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto made = std::make_shared<const SimilarProfile>(scale, tol);
  std::lock_guard<std::mutex> lk(guard);
  auto [it, inserted] = cache.emplace(key, made);
  return it->second;
}

// ---------------------------------------------------------------------------
// Decay bound
// ---------------------------------------------------------------------------

namespace {

double log_c_on_grid(const std::function<double(double, double)>& log_abs_profile,
                     double xi_max, double tau_max, std::size_t res) {
  double worst = -1e300;
  for (std::size_t a = 0; a <= res; ++a) {
    const double xi = xi_max * static_cast<double>(a) / static_cast<double>(res);
    for (std::size_t b = 1; b <= res; ++b) {
      const double tau = tau_max * static_cast<double>(b) / static_cast<double>(res);
      const double lp = log_abs_profile(xi, tau);
      if (!std::isfinite(lp)) continue;  // exact zeros impose no constraint
      worst = std::max(worst, lp + xi * xi / (8.0 * tau));
    }
  }
  return worst;
}

}  // namespace

DecayCheck check_decay_bound(const std::function<double(double, double)>& log_abs_profile,
                             double xi_max, double tau_max, std::size_t base_resolution) {
  if (xi_max < 8.0) throw spec_error("check_decay_bound: grid must cover xi in [0,8]");
  DecayCheck out;
  const double lc1 = log_c_on_grid(log_abs_profile, xi_max, tau_max, base_resolution);
  const double lc2 = log_c_on_grid(log_abs_profile, xi_max, tau_max, 2 * base_resolution);
  if (lc1 <= -1e299 && lc2 <= -1e299) {  // identically zero profile
    out.c_fit = 0.0;
    out.drift = 0.0;
    out.pass = true;
    return out;
  }
  const double c1 = std::exp(std::min(lc1, 700.0));
  const double c2 = std::exp(std::min(lc2, 700.0));
  out.c_fit = c2;
  out.drift = std::abs(c2 - c1) / std::max(std::abs(c1), 1e-300);
  out.pass = std::isfinite(c2) && lc2 < 690.0 && out.drift < 0.10;
  return out;
}

}  // namespace perturba
