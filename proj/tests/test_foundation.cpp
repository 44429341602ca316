#include <doctest.h>

#include <cmath>

#include "perturba/polynomial.hpp"
#include "perturba/problem.hpp"
#include "perturba/quadrature.hpp"

using namespace perturba;

TEST_CASE("polynomial evaluation and derivatives") {
  Poly p({1.0, 2.0, 1.0});  // (1+x)^2
  CHECK(p.eval(0.0) == doctest::Approx(1.0));
  CHECK(p.eval(1.0) == doctest::Approx(4.0));
  CHECK(p.derivative().eval(0.5) == doctest::Approx(3.0));

  Poly2 q({{0.0, 0.0}, {1.0, 0.5}, {-1.0, -0.5}});  // x(1-x)(1+t/2)
  CHECK(q.eval(0.0, 0.3) == doctest::Approx(0.0));
  CHECK(q.eval(1.0, 0.7) == doctest::Approx(0.0));
  CHECK(q.eval(0.5, 1.0) == doctest::Approx(0.25 * 1.5));
  CHECK(q.dt().eval(0.5, 0.2) == doctest::Approx(0.125));
  CHECK(q.dx().eval(0.25, 0.0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(Poly(std::vector<double>(11, 1.0)), spec_error);
}

TEST_CASE("adaptive quadrature on smooth and peaked integrands") {
  const double s1 = adaptive_quadrature_real([](double q) { return std::sin(q); }, 0.0, M_PI,
                                             1e-12, "sin");
  CHECK(s1 == doctest::Approx(2.0).epsilon(1e-12));
  // Narrow Gaussian: exercises subdivision.
  const double s2 = adaptive_quadrature_real(
      [](double q) { return std::exp(-400.0 * (q - 0.3) * (q - 0.3)); }, 0.0, 1.0, 1e-12,
      "gauss");
  CHECK(s2 == doctest::Approx(std::sqrt(M_PI / 400.0)).epsilon(1e-10));
  const cx s3 = adaptive_quadrature(
      [](double q) { return cx(std::cos(q), std::sin(q)); }, 0.0, 1.0, 1e-12, "expi");
  CHECK(std::abs(s3 - cx(std::sin(1.0), 1.0 - std::cos(1.0))) < 1e-12);
}

TEST_CASE("cumulative integral matches antiderivative") {
  auto nodes = uniform_nodes(0.0, 1.0, 65);
  auto cumulative = cumulative_integral(
      [](double q) { return cx(1.0 / (1.0 + q), 0.0); }, nodes, 1e-12, "1/(1+x)");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    CHECK(std::abs(cumulative[i] - cx(std::log(1.0 + nodes[i]), 0.0)) < 1e-11);
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("1/16") == doctest::Approx(0.0625));
  CHECK(parse_rational("0.25") == doctest::Approx(0.25));
  CHECK_THROWS_AS(parse_rational("1/0"), spec_error);
  CHECK_THROWS_AS(parse_rational("abc"), spec_error);
  auto eps = parse_epsilon_list("1/16,1/32,1/64");
  CHECK(eps.size() == 3);
  CHECK(eps[2] == doctest::Approx(1.0 / 64));
}

TEST_CASE("problem JSON round trip") {
  const ProblemSpec original = preset("coupled-2x2");
  const std::string text = problem_to_json(original);
  const ProblemSpec back = parse_problem_json(text);
  CHECK(back.n == original.n);
  CHECK(back.T == doctest::Approx(original.T));
  CHECK(back.epsilons == original.epsilons);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(back.D.at(i, j).eval(0.37) == doctest::Approx(original.D.at(i, j).eval(0.37)));
  CHECK(back.f[1].eval(0.3, 0.8) == doctest::Approx(original.f[1].eval(0.3, 0.8)));
}

TEST_CASE("problem JSON schema violations raise spec_error") {
  CHECK_THROWS_AS(parse_problem_json("{\"n\": 1}"), spec_error);
  CHECK_THROWS_AS(parse_problem_json("not json"), spec_error);
  // wrong matrix shape
  CHECK_THROWS_AS(
      parse_problem_json("{\"n\":2,\"T\":1.0,\"A\":[[[1]]],\"D\":[[[1],[0]],[[0],[1]]],"
                         "\"f\":[[[0]],[[0]]],\"h\":[[0],[0]],\"epsilons\":[0.1]}"),
      spec_error);
}

TEST_CASE("presets are registered and valid") {
  auto list = preset_list();
  CHECK(list.size() >= 4);
  for (const auto& info : list) {
    const ProblemSpec spec = preset(info.name);
    CHECK_NOTHROW(spec.basic_checks());
    // bundled problems satisfy condition 4 and lateral compatibility
    for (const auto& comp : spec.h) {
      CHECK(std::abs(comp.eval(0.0)) < 1e-14);
      CHECK(std::abs(comp.eval(1.0)) < 1e-14);
    }
    for (const auto& comp : spec.f) {
      CHECK(std::abs(comp.eval(0.0, spec.T * 0.5)) < 1e-14);
      CHECK(std::abs(comp.eval(1.0, spec.T * 0.5)) < 1e-14);
    }
  }
  CHECK_THROWS_AS(preset("no-such"), spec_error);
}

TEST_CASE("field tabulation, interpolation, derivatives") {
  auto grid = make_grid(uniform_nodes(0.0, 1.0, 33), uniform_nodes(0.0, 2.0, 65));
  Field2 f = tabulate(grid, [](double x, double t) { return cx(x * x * t + t * t, x); });
  CHECK(std::abs(f.eval(0.5, 1.0) - cx(0.25 + 1.0, 0.5)) < 2e-3);
  Field2 ft = dt_field(f);
  // d/dt (x^2 t + t^2) = x^2 + 2t, exact for the quadratic in t
  CHECK(std::abs(ft.at(16, 32) - cx(0.25 + 2.0, 0.0)) < 1e-10);
  CHECK(std::abs(ft.at(16, 0) - cx(0.25, 0.0)) < 1e-10);
  Field2 fxx = dxx_field(f);
  CHECK(std::abs(fxx.at(10, 11) - cx(2.0 * grid->ts[11], 0.0)) < 1e-9);
}

TEST_CASE("cubic table reproduces smooth functions to high order") {
  const std::size_t n = 257;
  std::vector<double> vals(n), slopes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = static_cast<double>(i) / (n - 1);
    vals[i] = std::exp(q);
    slopes[i] = std::exp(q);
  }
  CubicTable tab(0.0, 1.0, vals, slopes);
  CHECK(std::abs(tab.eval(0.123456) - std::exp(0.123456)) < 1e-11);
  CHECK(std::abs(tab.deriv(0.77) - std::exp(0.77)) < 1e-8);
}

TEST_CASE("unwrapped log is continuous across the branch cut") {
  std::vector<cx> path;
  for (int k = 0; k <= 100; ++k) {
    const double th = 2.0 * M_PI * k / 100.0;  // full loop around the origin
    path.push_back(std::polar(2.0, th));
  }
  auto logs = unwrapped_log(path);
  CHECK(std::abs(logs.back().imag() - 2.0 * M_PI) < 1e-12);
  for (std::size_t i = 1; i < logs.size(); ++i)
    CHECK(std::abs(logs[i].imag() - logs[i - 1].imag()) < 0.1);
}
