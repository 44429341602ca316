#pragma once

#include <string>

#include "perturba/iteration.hpp"

namespace perturba {

// n-vector-valued samples on a tensor (x,t) grid; used both for assembled
// partial sums and for reference solutions.
struct GridField {
  std::vector<double> xs, ts;
  int dim = 0;
  double epsilon = 0.0;
  int order = -1;  // expansion order; -1 for reference solutions
  std::string provenance;  // "asymptotic" or "reference"
  std::vector<cx> values;  // [(ix*nt + it)*dim + comp]

  std::size_t nx() const { return xs.size(); }
  std::size_t nt() const { return ts.size(); }
  cx& at(std::size_t ix, std::size_t it, int comp) {
    return values[(ix * ts.size() + it) * dim + comp];
  }
  cx at(std::size_t ix, std::size_t it, int comp) const {
    return values[(ix * ts.size() + it) * dim + comp];
  }
  Vec vec_at(std::size_t ix, std::size_t it) const;
  Vec interp(double x, double t) const;  // bilinear per component
  void check_finite() const;
};

// u_{eps,n} = sum_{k=0}^n eps^{k/2} u_k evaluated on the tensor grid.
GridField evaluate_partial_sum(const Expansion& e, int order_n, double epsilon,
                               const std::vector<double>& x_nodes,
                               const std::vector<double>& t_nodes);

struct BoundaryResiduals {
  double init_res = 0.0;   // max ||u(x, 0) - h(x)||
  double left_res = 0.0;   // max ||u(0, t)||
  double right_res = 0.0;  // max ||u(1, t)||
};

BoundaryResiduals boundary_residuals(const GridField& field, const ProblemSpec& spec);

// Default evaluation grid with Chebyshev-style clustering near x in {0,1}
// and geometric clustering near t = 0 so the layer structure is visible.
std::vector<double> clustered_x_nodes(std::size_t count);
std::vector<double> clustered_t_nodes(std::size_t count, double T, double epsilon);

// CSV data (x, t, Re/Im of each component) plus a JSON meta header.
void write_gridfield(const GridField& field, const std::string& csv_path,
                     const std::string& meta_path);
GridField read_gridfield(const std::string& csv_path, const std::string& meta_path);

}  // namespace perturba
