#pragma once

#include "perturba/interior.hpp"
#include "perturba/terms.hpp"

namespace perturba {

struct ExpandOptions {
  int kmax = 3;
  std::size_t interior_nx = 193;
  std::size_t interior_nt = 385;
  std::size_t spectral_x_nodes = 513;
  std::size_t spectral_t_nodes = 385;
  double quad_tol = 1e-10;
  double conv_tol = 1e-8;
  bool validate = true;  // run the standing-assumption checks up front
};

// Precomputed spectral tabulations shared by the builder, the rhs
// decomposition and the structural tests.
struct BuilderTables {
  Grid2Ptr grid;
  std::vector<Mat> psi, psi_dual;      // per t node
  std::vector<Mat> bx, bx_dual;        // per x node
  std::vector<Vec> lambda_x;           // per x node
  std::vector<Mat> alpha_m;            // alpha_{ir}(t_m)
  CouplingField gamma, kappa;
  std::vector<Field2> fproj;           // (f, psi*_i)
  std::vector<std::vector<cx>> hproj;  // (h, psi*_i(0)) per x node
  InteriorContext ctx;
  // boundary projection weights w^l_{ri}(t_m) = (psi_r(t_m), b*_i(l-1))
  std::vector<Mat> edge_weight[2];
};

// One separable layer source h_bar(x,t) * erfc(scale * xi / (2 sqrt(tau))).
struct LayerSourceTerm {
  Field2 coeff;
  double scale = 1.0;
};

// Decomposition of the order-k iterative equation's right-hand side: the
// interior parts are the coefficient equations for V_{k-2} and C^{k-2}
// (solvability makes them vanish), the layer parts source the order-k
// profiles.
struct RhsDecomposition {
  int k = 0;
  std::vector<Field2> v_rhs;                            // n, for V_{k-2}
  std::vector<Field2> c_rhs;                            // n*n, for C^{k-2}
  std::vector<std::vector<LayerSourceTerm>> y_sources;  // [l*n+i]
  std::vector<std::vector<LayerSourceTerm>> z_sources;  // [l*n*n+i*n+j]

  bool has_layer_sources() const;
};

class ExpansionBuilder {
 public:
  ExpansionBuilder(ProblemSpec spec, ExpandOptions opt);

  // Builds terms u_0..u_kmax and returns the finished expansion; the builder
  // stays usable afterwards (build_rhs, tables).
  Expansion build();

  // Right-hand side of T_0 u_k = h_k from the already-built lower orders.
  RhsDecomposition build_rhs(int k) const;

  const BuilderTables& tables() const { return *tables_; }
  const SpectralData& spectral() const { return sd_; }

 private:
  void build_tables();
  void build_transport_factors();
  std::vector<Field2> interior_rhs_v(int k) const;
  std::vector<Field2> interior_rhs_c(int k) const;
  std::vector<std::vector<cx>> regularity_q_slice(int k) const;
  void layer_sources(int k, RhsDecomposition& out) const;
  void append_t1_layer_sources(int k, const AsymptoticTerm& src, RhsDecomposition& out) const;
  double fold_scale(int target_i, int source_r, int l) const;
  AsymptoticTerm build_term(int k);
  void check_term(const AsymptoticTerm& term) const;
  const AsymptoticTerm& term(int k) const { return terms_.at(static_cast<std::size_t>(k)); }

  ProblemSpec spec_;
  ExpandOptions opt_;
  SpectralData sd_;
  std::shared_ptr<const StretchGeometry> geometry_;
  std::shared_ptr<BuilderTables> tables_;
  std::vector<Table1> gx_;
  std::vector<AsymptoticTerm> terms_;
  double data_scale_ = 1.0;
};

Expansion build_expansion(const ProblemSpec& spec, const ExpandOptions& opt = {});

// ---------------------------------------------------------------------------
// Operator evaluators (structural verification)
// ---------------------------------------------------------------------------

// f(x,t) as a complex vector.
Vec f_value(const ProblemSpec& spec, double x, double t);

// T_1 u_k = t d_t u_k + sum_j beta_j(0) d_{mu_j} u_k - D(t) u_k at an
// extended-space point; d_t is taken at frozen (xi, tau, mu) by finite
// differences on the physical t coordinate.
Vec apply_T1(const Expansion& e, const AsymptoticTerm& term, const RegularizedPoint& M);

// Value of a decomposed right-hand side's layer part at an extended point.
Vec evaluate_layer_sources(const Expansion& e, const RhsDecomposition& rhs,
                           const RegularizedPoint& M, const Mat& basis_x);

// Full reassembly residual of the order-k equation (k <= 3):
//   delta_{k,2} f - T_1 u_{k-2} - [decomposed layer sources](M),
// which vanishes up to solver error once the interior coefficients solve
// their equations and the layer decomposition is faithful.
Vec rhs_reassembly_residual(const Expansion& e, const RhsDecomposition& rhs,
                            const RegularizedPoint& M);

}  // namespace perturba
