#pragma once

#include <functional>

#include "perturba/assembly.hpp"

namespace perturba {

// Layer-adapted mesh: Shishkin-type piecewise-uniform in x with transition
// width sigma_x at both ends, graded in t (uniform in ln((t+eps)/eps), i.e.
// clustering scale ~eps near t = 0).
struct LayerMesh {
  std::vector<double> x_nodes, t_nodes;
  double sigma_x = 0.0;
  double sigma_t = 0.0;  // documented clustering scale min(T/2, c1 eps ln(1/eps))
};

struct MeshOptions {
  double c0 = 4.0;  // sigma_x = min(1/4, c0 * eps * ln(1/eps))
  double c1 = 2.0;
};

LayerMesh build_mesh(double epsilon, std::size_t n_x, std::size_t n_t, double T,
                     const MeshOptions& opt = {});

enum class Scheme { implicit_euler, crank_nicolson };

// Functional coefficient interface; the ProblemSpec overload wraps the
// polynomial fields. Used directly by manufactured-solution tests.
struct CoeffFields {
  int n = 0;
  std::function<Mat(double)> A;            // A(x)
  std::function<Mat(double)> D;            // D(t)
  std::function<Vec(double, double)> f;    // f(x,t)
  std::function<Vec(double)> h;            // h(x)
};

CoeffFields coeff_fields(const ProblemSpec& spec);

// Implicit finite differences for (eps+t) u_t - eps^2 A(x) u_xx - D(t) u = f
// on the layer mesh: second-order central differences in x, implicit Euler
// or Crank-Nicolson in t (the first step of Crank-Nicolson is smoothed by
// two implicit-Euler half steps), Dirichlet rows pinned to zero, block
// tridiagonal solves per step.
GridField solve_reference(const CoeffFields& coeffs, double epsilon, const LayerMesh& mesh,
                          Scheme scheme = Scheme::implicit_euler, bool rannacher = true);

GridField solve_reference(const ProblemSpec& spec, double epsilon, const LayerMesh& mesh,
                          Scheme scheme = Scheme::implicit_euler, bool rannacher = true);

}  // namespace perturba
