#include <doctest.h>

#include <cmath>

#include "perturba/layers.hpp"

using namespace perturba;

TEST_CASE("erfc profile values") {
  CHECK(erfc_profile(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(erfc_profile(3.0, 0.0) == 0.0);
  CHECK(erfc_profile(0.0, 0.0) == 1.0);
  // erfc(1), series/continued-fraction reference value
  CHECK(erfc_profile(2.0, 1.0) == doctest::Approx(0.15729920705028513).epsilon(1e-12));
  CHECK_THROWS_AS(erfc_profile(-0.1, 1.0), spec_error);
  CHECK_THROWS_AS(erfc_profile(1.0, -0.1), spec_error);
}

TEST_CASE("erfc profile monotonicity") {
  for (double tau : {0.3, 1.0, 4.0}) {
    double prev = 2.0;
    for (double xi = 0.0; xi <= 6.0; xi += 0.25) {
      const double v = erfc_profile(xi, tau);
      CHECK(v < prev + 1e-15);
      prev = v;
    }
  }
  for (double xi : {0.5, 2.0}) {
    double prev = -1.0;
    for (double tau = 0.1; tau <= 5.0; tau += 0.2) {
      const double v = erfc_profile(xi, tau);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("erfc profile satisfies the heat equation at second order under refinement") {
  // residual of d_tau p - d_xi^2 p by central differences, three refinements
  auto residual = [](double h) {
    double worst = 0.0;
    for (double xi = 0.5; xi <= 4.0; xi += 0.5)
      for (double tau = 0.4; tau <= 2.0; tau += 0.2) {
        const double pt =
            (erfc_profile(xi, tau + h) - erfc_profile(xi, tau - h)) / (2.0 * h);
        const double pxx = (erfc_profile(xi + h, tau) - 2.0 * erfc_profile(xi, tau) +
                            erfc_profile(xi - h, tau)) /
                           (h * h);
        worst = std::max(worst, std::abs(pt - pxx));
      }
    return worst;
  };
  double h = 0.1;
  double prev = residual(h);
  for (int r = 0; r < 3; ++r) {
    h *= 0.5;
    const double cur = residual(h);
    const double ratio = prev / cur;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.5);
    prev = cur;
  }
}

TEST_CASE("complex erfc agrees with the real function and reference values") {
  for (double x : {-2.0, -0.5, 0.0, 0.3, 1.0, 3.7, 6.0})
    CHECK(std::abs(erfc_cx(cx(x, 0.0)) - cx(std::erfc(x), 0.0)) < 1e-14);

  // Frozen reference values (Faddeeva-function evaluation).
  struct Ref {
    double re, im, vre, vim;
  };
  const Ref refs[] = {
      {0.5, 0.3, 0.43843481147578683, -0.2676058649576036},
      {2.0, 1.0, -0.00360634272565175, 0.011259006028815024},
      {3.5, 2.0, -1.2585981940830654e-05, -3.369461013273331e-05},
      {0.1, 0.05, 0.887257449010308, -0.05590323090214488},
      {5.0, 1.5, -1.2776048090702605e-11, -5.796102376763689e-12},
      {1.0, 0.9, -0.2193324381187436, -0.22387320903729063},
      {4.2, 0.3, -2.6515461916376412e-09, -1.6396666003925226e-09},
  };
  for (const auto& r : refs) {
    const cx got = erfc_cx(cx(r.re, r.im));
    CHECK(std::abs(got - cx(r.vre, r.vim)) < 1e-11);
  }
  // conjugate symmetry and reflection
  const cx z(1.3, 0.4);
  CHECK(std::abs(erfc_cx(std::conj(z)) - std::conj(erfc_cx(z))) < 1e-13);
  CHECK(std::abs(erfc_cx(-z) - (2.0 - erfc_cx(z))) < 1e-12);
}

TEST_CASE("log_erfc spans the underflow range") {
  CHECK(log_erfc(1.0) == doctest::Approx(std::log(std::erfc(1.0))).epsilon(1e-12));
  CHECK(log_erfc(24.0) == doctest::Approx(std::log(std::erfc(24.0))).epsilon(1e-10));
  // smooth across the asymptotic switch
  CHECK(std::abs(log_erfc(25.0 - 1e-9) - log_erfc(25.0 + 1e-9)) < 1e-6);
  CHECK(log_erfc(40.0) < -1600.0);
}

TEST_CASE("heat convolution basics") {
  auto zero = [](double, double) { return 0.0; };
  CHECK(heat_convolution(1.0, 1.0, zero) == doctest::Approx(0.0));
  auto src = [](double eta, double s) {
    if (s <= 0.0) return eta > 0.0 ? 0.0 : 1.0;
    return std::erfc(eta / (2.0 * std::sqrt(s)));
  };
  CHECK(heat_convolution(0.0, 2.0, src) == 0.0);
  CHECK(heat_convolution(1.0, 0.0, src) == 0.0);
  CHECK(heat_convolution(1.0, 1.0, src) > 0.0);
}

TEST_CASE("heat convolution matches a brute-force Riemann sum oracle") {
  auto src = [](double eta, double s) {
    if (s <= 0.0) return eta > 0.0 ? 0.0 : 1.0;
    return std::erfc(eta / (2.0 * std::sqrt(s)));
  };
  // midpoint rule in the substituted variables (sigma, eta), 400 x 400
  const double xi = 1.0, tau = 1.0;
  const int n = 400;
  const double sig_hi = std::sqrt(tau), eta_hi = 16.0;
  double sum = 0.0;
  for (int a = 0; a < n; ++a) {
    const double sigma = sig_hi * (a + 0.5) / n;
    const double s = tau - sigma * sigma;
    for (int b = 0; b < n; ++b) {
      const double eta = eta_hi * (b + 0.5) / n;
      const double dm = (xi - eta) / (2.0 * sigma);
      const double dp = (xi + eta) / (2.0 * sigma);
      sum += src(eta, s) * (std::exp(-dm * dm) - std::exp(-dp * dp));
    }
  }
  const double oracle = sum * (sig_hi / n) * (eta_hi / n) / std::sqrt(M_PI);
  const double value = heat_convolution(xi, tau, src, 1e-9);
  CHECK(std::abs(value - oracle) < 1e-4);
}

TEST_CASE("similar profile reproduces the direct convolution (self-similarity)") {
  auto prof = similar_profile(1.0);
  auto src = [](double eta, double s) {
    if (s <= 0.0) return eta > 0.0 ? 0.0 : 1.0;
    return std::erfc(eta / (2.0 * std::sqrt(s)));
  };
  for (double tau : {0.25, 1.0, 4.0})
    for (double xi : {0.0, 0.5, 1.5, 3.0}) {
      const double direct = heat_convolution(xi, tau, src, 1e-9);
      CHECK(std::abs(prof->eval(xi, tau) - direct) < 5e-6);
    }
  CHECK(prof->eval(0.0, 3.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("similar profile satisfies the similarity ODE of the forced heat equation") {
  // d_tau I - d_xi^2 I = erfc(scale * zeta) in similarity variables reads
  // g - (zeta/2) g' - g''/4 = erfc(scale * zeta). Differences are taken at
  // the table spacing so only quadrature values (no interpolation) enter.
  const double h = SimilarProfile::zeta_max() / 1024.0;
  for (double scale : {1.0, 0.8164965809277261}) {  // 1, sqrt(2/3)
    auto prof = similar_profile(scale);
    for (int node = 24; node <= 512; node += 40) {
      const double zeta = node * h;
      const double g = prof->g(zeta);
      const double dg = (prof->g(zeta + h) - prof->g(zeta - h)) / (2.0 * h);
      const double ddg = (prof->g(zeta + h) - 2.0 * g + prof->g(zeta - h)) / (h * h);
      const double lhs = g - 0.5 * zeta * dg - 0.25 * ddg;
      CHECK(std::abs(lhs - std::erfc(scale * zeta)) < 5e-4);
    }
  }
}

TEST_CASE("decay bound: erfc profile passes with c <= 2") {
  auto log_abs = [](double xi, double tau) {
    return log_erfc(xi / (2.0 * std::sqrt(tau)));
  };
  auto check = check_decay_bound(log_abs, 8.0, 4.0, 64);
  CHECK(check.pass);
  CHECK(check.c_fit <= 2.0);
  CHECK(check.c_fit >= 0.99);  // attained at xi = 0
}

TEST_CASE("decay bound: zero profile passes with c = 0") {
  auto log_abs = [](double, double) { return -1e301; };
  auto check = check_decay_bound(log_abs, 8.0, 4.0, 32);
  CHECK(check.pass);
  CHECK(check.c_fit == 0.0);
}

TEST_CASE("decay bound: synthetic violation fails under refinement") {
  // p = tau * exp(-xi/tau): beyond xi = 8 the ratio exp(xi^2/(8 tau) - xi/tau)
  // blows up as the refined grid reaches small tau.
  auto log_abs = [](double xi, double tau) { return std::log(tau) - xi / tau; };
  auto check = check_decay_bound(log_abs, 12.0, 4.0, 64);
  CHECK_FALSE(check.pass);
}

TEST_CASE("decay bound: convolution profile is finite and stable") {
  auto prof = similar_profile(1.0);
  auto log_abs = [&](double xi, double tau) {
    const double v = std::abs(prof->eval(xi, tau));
    return v > 0.0 ? std::log(v) : -1e301;
  };
  auto check = check_decay_bound(log_abs, 8.0, 4.0, 64);
  CHECK(check.pass);
  CHECK(check.c_fit > 0.0);
}
