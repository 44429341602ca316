#pragma once

#include <vector>

#include "perturba/common.hpp"

namespace perturba {

// Real-coefficient polynomial, coefficients in ascending degree.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs);
  static Poly constant(double c) { return Poly({c}); }

  double eval(double q) const;
  Poly derivative() const;
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coefficients() const { return c_; }

  Poly operator*(double s) const;
  Poly operator+(const Poly& other) const;

 private:
  std::vector<double> c_;
};

// Bivariate polynomial in (x, t); coefficient c[dx][dt].
class Poly2 {
 public:
  Poly2() = default;
  explicit Poly2(std::vector<std::vector<double>> coeffs);
  static Poly2 constant(double c) {
    return Poly2(std::vector<std::vector<double>>{{c}});
  }

  double eval(double x, double t) const;
  Poly2 dx() const;
  Poly2 dt() const;
  int degree_x() const { return static_cast<int>(c_.size()) - 1; }
  int degree_t() const;
  const std::vector<std::vector<double>>& coefficients() const { return c_; }

  Poly2 operator*(double s) const;

 private:
  std::vector<std::vector<double>> c_;
};

// Entrywise polynomial square matrix field over one variable.
struct PolyMatrix {
  int n = 0;
  std::vector<Poly> entries;  // row-major, n*n

  const Poly& at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
  Poly& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }

  // Dense complex evaluation (real entries promoted).
  void eval_into(double q, cx* out) const;
};

constexpr int kMaxPolyDegree = 8;

}  // namespace perturba
