#pragma once

#include "perturba/refsolver.hpp"

namespace perturba {

// Discrete max over the common grid of the Euclidean vector norm of the
// difference; the reference is interpolated bilinearly onto the asymptotic
// grid when the grids differ.
double error_norm(const GridField& asym, const GridField& ref);

struct OrderFit {
  double slope = 0.0;
  double constant = 0.0;  // E ~= constant * eps^slope
};

// Least-squares fit on (ln eps, ln E); exact for noise-free power laws.
OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& errors);

struct StudyOptions {
  std::size_t n_x = 512;
  std::size_t n_t = 512;
  Scheme scheme = Scheme::crank_nicolson;
  MeshOptions mesh;
  double order_tolerance = 0.3;   // pass needs slope >= (n+1)/2 - tolerance
  double floor_factor = 4.0;      // discretization floor must sit this far below min E
  bool check_floor = true;
  ExpandOptions expand;
};

struct ConvergenceReport {
  std::string problem;
  int order_n = 0;
  std::vector<double> epsilons;
  std::vector<double> errors;
  std::vector<double> local_orders;  // ln(E_i/E_{i-1}) / ln(eps_i/eps_{i-1}); NaN for i = 0
  double slope = 0.0;
  double constant = 0.0;
  double target = 0.0;
  double order_tolerance = 0.3;
  bool decreasing = false;
  bool slope_pass = false;
  // reference self-consistency at the smallest epsilon
  double floor_estimate = 0.0;
  double floor_ratio = 0.0;  // min E / floor
  bool floor_pass = false;
  bool pass = false;
  // the epsilon below which E(eps, n) improved on E(eps, n-1), when known
  double improvement_threshold = -1.0;
  std::vector<double> runtimes_ms;
  std::size_t mesh_nx = 0, mesh_nt = 0;
  std::string scheme;

  std::string to_json() const;
  static ConvergenceReport from_json(const std::string& text);
  std::string to_csv() const;      // header: epsilon,error,local_order
  std::string to_svg() const;      // log-log polyline plus target-slope guide
};

// Builds the expansion once (terms are epsilon-independent), then for each
// epsilon evaluates the partial sum on the reference mesh, solves the
// reference problem and measures the max-norm error; fits the empirical
// order and verifies the discretization floor at the smallest epsilon.
ConvergenceReport convergence_study(const ProblemSpec& spec, int order_n,
                                    const std::vector<double>& epsilons,
                                    const StudyOptions& opt = {});

// Fit + pass/fail wiring on externally supplied (eps, E) data: the test seam
// for synthetic error laws.
ConvergenceReport analyze_errors(int order_n, const std::vector<double>& epsilons,
                                 const std::vector<double>& errors, double order_tolerance);

void write_text(const std::string& path, const std::string& content);

}  // namespace perturba
