#pragma once

#include <Eigen/Dense>

#include "perturba/problem.hpp"

namespace perturba {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Pairing used for all biorthogonality relations: (u, v) = sum_k u_k conj(v_k).
inline cx inner(const Vec& u, const Vec& v) { return v.dot(u); }

// Smoothly continued eigendecomposition of a polynomial matrix field over one
// variable. Eigenpairs are matched across neighbouring samples by maximal
// eigenvector overlap and phase-fixed so the largest-magnitude component is
// real positive; the dual (adjoint) system is normalized to (b_i, b*_j) =
// delta_ij exactly.
class EigenSystem1D {
 public:
  struct PointEigen {
    Vec values;  // lambda_i(q)
    Mat basis;   // columns b_i(q)
    Mat dual;    // columns b*_i(q)
  };

  EigenSystem1D() = default;
  EigenSystem1D(PolyMatrix field, std::vector<double> grid, const char* label);

  int dim() const { return n_; }
  const std::vector<double>& grid() const { return grid_; }

  cx value(int i, std::size_t node) const { return values_[node * n_ + i]; }
  const Mat& basis(std::size_t node) const { return basis_[node]; }
  const Mat& dual(std::size_t node) const { return dual_[node]; }

  // Exact decomposition at an arbitrary point of the domain, ordered and
  // phased consistently with the stored samples.
  PointEigen at(double q) const;

  cx value_at(int i, double q) const;
  Vec basis_vector_at(int i, double q) const;

  double max_eigen_residual() const;   // ||A b - lambda b|| / ||A|| over samples
  double max_biorth_residual() const;  // |(b_i, b*_j) - delta_ij| over samples
  double max_vector_jump() const;      // max ||b_i(x_{m+1}) - b_i(x_m)||

 private:
  PointEigen decompose_raw(double q) const;
  static void order_and_phase(PointEigen& pe, const Mat* reference, const char* label,
                              double q);

  int n_ = 0;
  std::vector<double> grid_;
  std::vector<cx> values_;
  std::vector<Mat> basis_, dual_;
  PolyMatrix field_;
  const char* label_ = "field";
};

// Tabulated coupling field with bilinear evaluation, one Field2 per (i,r).
struct CouplingField {
  int n = 0;
  std::vector<Field2> entries;  // [i*n + r]

  const Field2& at(int i, int r) const { return entries[static_cast<std::size_t>(i) * n + r]; }
  cx eval(int i, int r, double x, double t) const { return at(i, r).eval(x, t); }
};

struct SpectralData {
  ProblemSpec spec;
  EigenSystem1D spatial;   // lambda_i(x), b_i(x), b*_i(x)
  EigenSystem1D temporal;  // beta_j(t), psi_j(t), psi*_j(t)

  // alpha_{ir}(t) = (psi'_i(t), psi*_r(t)), psi' by second-order finite
  // differences on the temporal grid; tabulated row-major [it][i*n + r].
  std::vector<std::vector<cx>> alpha;

  Mat alpha_at(double t) const;
  Mat alpha0() const { return alpha_at(temporal.grid().front()); }
  Vec beta0() const;

  // gamma_{ir}(x,t) = (D(t) b_i(x), b*_r(x)) evaluated exactly.
  cx gamma_exact(int i, int r, double x, double t) const;
  // kappa_{ir}(x,t) = (A(x) psi_i(t), psi*_r(t)) evaluated exactly.
  cx kappa_exact(int i, int r, double x, double t) const;
};

EigenSystem1D decompose_spatial(const ProblemSpec& spec, const std::vector<double>& x_grid);

// Returns the temporal system and fills alpha.
EigenSystem1D decompose_temporal(const ProblemSpec& spec, const std::vector<double>& t_grid,
                                 std::vector<std::vector<cx>>* alpha_out);

SpectralData build_spectral(const ProblemSpec& spec, std::size_t x_nodes, std::size_t t_nodes);

CouplingField coupling_gamma(const SpectralData& sd, const Grid2Ptr& grid);
CouplingField coupling_kappa(const SpectralData& sd, const Grid2Ptr& grid);

// ---------------------------------------------------------------------------
// Standing-assumption validation
// ---------------------------------------------------------------------------

struct ConditionReport {
  bool pass = false;
  double margin = 0.0;     // worst margin in the condition's natural units
  double where = 0.0;      // offending sample point
  std::string detail;
};

struct AssumptionReport {
  ConditionReport smoothness;      // condition 1 (by construction for polynomials)
  ConditionReport spectrum_a;      // condition 2: Re lambda > 0, distinctness
  ConditionReport spectrum_d;      // condition 3: Re beta <= 0, beta_i(0) != beta_j(t)
  ConditionReport boundary_match;  // condition 4: h(0) = h(1) = 0

  bool all_pass() const {
    return smoothness.pass && spectrum_a.pass && spectrum_d.pass && boundary_match.pass;
  }
  std::string to_json() const;
};

AssumptionReport validate_assumptions(const ProblemSpec& spec, int grid_density);

}  // namespace perturba
