#include "perturba/polynomial.hpp"

namespace perturba {

Poly::Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) c_.push_back(0.0);
  if (static_cast<int>(c_.size()) - 1 > kMaxPolyDegree)
    throw spec_error("polynomial degree exceeds the supported maximum (8)");
}

double Poly::eval(double q) const {
  double acc = 0.0;
  for (std::size_t i = c_.size(); i-- > 0;) acc = acc * q + c_[i];
  return acc;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly({0.0});
  std::vector<double> d(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
  return Poly(std::move(d));
}

Poly Poly::operator*(double s) const {
  std::vector<double> d = c_;
  for (double& v : d) v *= s;
  return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& other) const {
  std::vector<double> d(std::max(c_.size(), other.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) d[i] += c_[i];
  for (std::size_t i = 0; i < other.c_.size(); ++i) d[i] += other.c_[i];
  return Poly(std::move(d));
}

Poly2::Poly2(std::vector<std::vector<double>> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) c_.push_back({0.0});
  std::size_t width = 0;
  for (auto& row : c_) width = std::max(width, row.size());
  if (width == 0) width = 1;
  for (auto& row : c_) row.resize(width, 0.0);
  if (static_cast<int>(c_.size()) - 1 > kMaxPolyDegree ||
      static_cast<int>(width) - 1 > kMaxPolyDegree)
    throw spec_error("polynomial degree exceeds the supported maximum (8)");
}

double Poly2::eval(double x, double t) const {
  double acc = 0.0;
  for (std::size_t i = c_.size(); i-- > 0;) {
    double row = 0.0;
    for (std::size_t j = c_[i].size(); j-- > 0;) row = row * t + c_[i][j];
    acc = acc * x + row;
  }
  return acc;
}

Poly2 Poly2::dx() const {
  if (c_.size() <= 1) return Poly2::constant(0.0);
  std::vector<std::vector<double>> d(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) {
    d[i - 1] = c_[i];
    for (double& v : d[i - 1]) v *= static_cast<double>(i);
  }
  return Poly2(std::move(d));
}

Poly2 Poly2::dt() const {
  std::vector<std::vector<double>> d(c_.size());
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (c_[i].size() <= 1) {
      d[i] = {0.0};
      continue;
    }
    d[i].resize(c_[i].size() - 1);
    for (std::size_t j = 1; j < c_[i].size(); ++j)
      d[i][j - 1] = c_[i][j] * static_cast<double>(j);
  }
  return Poly2(std::move(d));
}

int Poly2::degree_t() const {
  return c_.empty() ? 0 : static_cast<int>(c_[0].size()) - 1;
}

Poly2 Poly2::operator*(double s) const {
  std::vector<std::vector<double>> d = c_;
  for (auto& row : d)
    for (double& v : row) v *= s;
  return Poly2(std::move(d));
}

void PolyMatrix::eval_into(double q, cx* out) const {
  for (std::size_t k = 0; k < entries.size(); ++k) out[k] = cx(entries[k].eval(q), 0.0);
}

}  // namespace perturba
