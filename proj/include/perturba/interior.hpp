#pragma once

#include "perturba/spectral.hpp"

namespace perturba {

// Shared coefficient data for the degenerate interior ODE systems
//   t [w' + M(t) w] + (shift I - diag(beta(t))) w = g(t),
// with M(t) = alpha(t)^T (the transpose of the coupling matrix), solved for
// the bounded (smooth) branch through the regular singular point t = 0.
struct InteriorContext {
  Grid2Ptr grid;  // interior (x, t) tabulation grid
  int n = 0;
  std::vector<Mat> M;     // M(t_m), per t node
  std::vector<Vec> beta;  // beta(t_m)
  Vec beta0;
  Mat alpha0;             // alpha_{ir}(0)
};

InteriorContext make_interior_context(const SpectralData& sd, const Grid2Ptr& grid);

// Batched implicit-midpoint sweep over the t grid for every x node, the bounded
// branch selected by the caller-supplied startup values w(x, 0).
// g_fields may be empty (zero forcing); g_extra, when present, adds an
// x-independent forcing tabulated per t node.
std::vector<Field2> degenerate_sweep(const InteriorContext& ctx, cx shift,
                                     const std::vector<const Field2*>& g_fields,
                                     const std::vector<Vec>* g_extra,
                                     const std::function<Vec(std::size_t)>& initial_value);

// Interior V solve: t [v' + M v] - diag(beta) v = rhs with the algebraic
// startup v_i(x,0) = -rhs_i(x,0)/beta_i(0) (bounded-solution selection).
// Throws degeneracy_error when beta_i(0) = 0.
std::vector<Field2> solve_interior_v(const InteriorContext& ctx,
                                     const std::vector<Field2>& rhs);

struct CPInputs {
  // rhs fields c_rhs_{ij}; empty vector means the homogeneous system.
  std::vector<Field2> c_rhs;
  // diagonal initial-condition base per j: (k==0 ? h_j(x) : 0) - v_j(x, 0).
  std::vector<std::vector<cx>> diag_ic_base;  // [j][ix]
  // q^{(k+2)}_{ii}(x, 0) entering the regularity condition for p_i.
  std::vector<std::vector<cx>> q_reg;  // [i][ix], may be empty
};

struct CPResult {
  std::vector<Field2> c;           // n*n fields [i*n+j]
  std::vector<std::vector<cx>> p;  // [i][ix]
  std::vector<std::uint8_t> p_defaulted;   // regularity degenerate & satisfied -> p = 0
  std::vector<std::uint8_t> p_unresolved;  // regularity degenerate & violated
  double consistency_residual = 0.0;       // |c_rhs_{jj}(x,0)| worst case
};

// Coupled solve of the C columns and P via the two-probe linearity method:
// each column j is affine in p_j, and the next-order regularity condition
//   [d_t c_ii + sum_r alpha_{ri} c_ri + alpha_ii p_i - q_ii]_{t=0} = 0
// is a scalar affine equation per i.
CPResult solve_interior_cp(const InteriorContext& ctx, const CPInputs& in);

}  // namespace perturba
