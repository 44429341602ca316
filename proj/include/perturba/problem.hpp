#pragma once

#include <string>
#include <vector>

#include "perturba/polynomial.hpp"

namespace perturba {

// The problem quintuple (A(x), D(t), f(x,t), h(x), T) plus the epsilon sweep.
// Coefficient fields are polynomial-entry (degree <= 8), which realizes the
// smoothness assumption with an exactly reproducible on-disk format.
struct ProblemSpec {
  std::string name;
  int n = 0;
  double T = 0.0;
  PolyMatrix A;              // over x in [0,1]
  PolyMatrix D;              // over t in [0,T]
  std::vector<Poly2> f;      // n components over (x,t)
  std::vector<Poly> h;       // n components over x
  std::vector<double> epsilons;  // finite, decreasing, in (0,1)

  void basic_checks() const;  // sizes/domains; throws spec_error
};

// "1/16" or "0.0625" -> double. Throws spec_error on malformed input.
double parse_rational(const std::string& text);
std::vector<double> parse_epsilon_list(const std::string& csv);

// JSON problem files: {n, T, A: [[poly]], D: [[poly]], f: [poly2], h: [poly],
// epsilons: [real or "p/q"]}; poly = ascending-degree coefficient list,
// poly2 = coefficient matrix indexed [x-degree][t-degree].
ProblemSpec load_problem_json(const std::string& path);
ProblemSpec parse_problem_json(const std::string& text);
std::string problem_to_json(const ProblemSpec& spec);

struct PresetInfo {
  std::string name;
  std::string summary;
};

std::vector<PresetInfo> preset_list();
ProblemSpec preset(const std::string& name);
bool is_preset(const std::string& name);

}  // namespace perturba
