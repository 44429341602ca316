#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace perturba {

using cx = std::complex<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto distinct exit codes:
// spec_error -> 2, assumption_error -> 3, numeric_error -> 4.
// ---------------------------------------------------------------------------

class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed configuration, schema violations, domain mismatches,
// unsupported structure requests.
class spec_error : public error {
 public:
  using error::error;
};

// A standing assumption of the problem class fails on the given data.
class assumption_error : public error {
 public:
  using error::error;
};

// Numerical breakdown: quadrature non-convergence, linear-solve failure.
class numeric_error : public error {
 public:
  using error::error;
};

// Spectral or algebraic degeneracy (eigenvalue collision, vanishing pivot
// quantities the construction divides by).
class degeneracy_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// ---------------------------------------------------------------------------
// Grids and tabulated fields
// ---------------------------------------------------------------------------

std::vector<double> uniform_nodes(double a, double b, std::size_t count);

// Index of the grid interval containing q (clamped), for sorted nodes.
std::size_t locate(const std::vector<double>& nodes, double q);

struct Grid2 {
  std::vector<double> xs;
  std::vector<double> ts;

  std::size_t nx() const { return xs.size(); }
  std::size_t nt() const { return ts.size(); }
};

using Grid2Ptr = std::shared_ptr<const Grid2>;

Grid2Ptr make_grid(std::vector<double> xs, std::vector<double> ts);

// Complex scalar field tabulated on a tensor grid, bilinear evaluation.
// Storage is row-major in x: v[ix * nt + it].
struct Field2 {
  Grid2Ptr grid;
  std::vector<cx> values;

  Field2() = default;
  explicit Field2(Grid2Ptr g) : grid(std::move(g)) {
    values.assign(grid->nx() * grid->nt(), cx(0.0, 0.0));
  }

  cx& at(std::size_t ix, std::size_t it) { return values[ix * grid->nt() + it]; }
  cx at(std::size_t ix, std::size_t it) const { return values[ix * grid->nt() + it]; }

  cx eval(double x, double t) const;
  double max_abs() const;
  bool nearly_zero(double tol = 1e-13) const { return max_abs() <= tol; }
};

// Tabulate fn(x, t) on the grid.
Field2 tabulate(const Grid2Ptr& g, const std::function<cx(double, double)>& fn);

// Second-order finite-difference derivative in t (central inside,
// one-sided three-point at the ends).
Field2 dt_field(const Field2& f);

// Second-order second derivative in x on the (uniform) x grid.
Field2 dxx_field(const Field2& f);

std::vector<cx> slice_t(const Field2& f, std::size_t it);
std::vector<cx> slice_x(const Field2& f, std::size_t ix);

// 1D complex tabulation with linear evaluation.
struct Table1 {
  std::vector<double> nodes;
  std::vector<cx> values;

  cx eval(double q) const;
  double max_abs() const;
  bool nearly_zero(double tol = 1e-13) const { return max_abs() <= tol; }
};

// Cubic Hermite table on uniform nodes with finite-difference slopes.
// Used where fourth-order interpolation matters (stretch maps, layer
// profile tables).
class CubicTable {
 public:
  CubicTable() = default;
  CubicTable(double a, double b, std::vector<double> vals);
  // With externally supplied exact derivatives.
  CubicTable(double a, double b, std::vector<double> vals, std::vector<double> slopes);

  double eval(double q) const;
  double deriv(double q) const;
  double a() const { return a_; }
  double b() const { return b_; }
  bool empty() const { return v_.empty(); }

 private:
  double a_ = 0.0, b_ = 1.0, h_ = 1.0;
  std::vector<double> v_, s_;
};

// ---------------------------------------------------------------------------
// Complex helpers
// ---------------------------------------------------------------------------

// Principal square root (branch cut along the negative real axis).
cx principal_sqrt(cx z);

// Principal power base^expo via exp(expo * Log base).
cx principal_pow(cx base, cx expo);

// Continuous argument unwrap: given samples of a nowhere-zero continuous
// complex path, returns log values whose imaginary parts vary continuously.
std::vector<cx> unwrapped_log(const std::vector<cx>& path);

// ---------------------------------------------------------------------------
// Deterministic number formatting (pinned across platforms)
// ---------------------------------------------------------------------------

std::string format_double(double v);

// ---------------------------------------------------------------------------
// Bounded parallel loop. Thread count from PERTURBA_THREADS (>=1), default
// hardware concurrency. Work items write disjoint outputs, so results do not
// depend on the thread count.
// ---------------------------------------------------------------------------

std::size_t thread_limit();
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace perturba
