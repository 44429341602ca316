#include "perturba/problem.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace perturba {

using nlohmann::json;

void ProblemSpec::basic_checks() const {
  if (n < 1) throw spec_error("problem: dimension n must be >= 1");
  if (!(T > 0.0)) throw spec_error("problem: time horizon T must be positive");
  if (A.n != n || D.n != n || static_cast<int>(A.entries.size()) != n * n ||
      static_cast<int>(D.entries.size()) != n * n)
    throw spec_error("problem: A and D must be n-by-n polynomial matrices");
  if (static_cast<int>(f.size()) != n || static_cast<int>(h.size()) != n)
    throw spec_error("problem: f and h must have n components");
  if (epsilons.empty()) throw spec_error("problem: epsilon list must be nonempty");
  for (double e : epsilons)
    if (!(e > 0.0 && e < 1.0)) throw spec_error("problem: epsilons must lie in (0,1)");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1]))
      throw spec_error("problem: epsilons must be strictly decreasing");
}

double parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return std::stod(text);
    const double p = std::stod(text.substr(0, slash));
    const double q = std::stod(text.substr(slash + 1));
    if (q == 0.0) throw spec_error("rational with zero denominator: " + text);
    return p / q;
  } catch (const spec_error&) {
    throw;
  } catch (const std::exception&) {
    throw spec_error("malformed number: " + text);
  }
}

std::vector<double> parse_epsilon_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_rational(item));
  }
  if (out.empty()) throw spec_error("empty epsilon list");
  return out;
}

namespace {

Poly poly_from_json(const json& j) {
  if (!j.is_array()) throw spec_error("problem JSON: poly must be a coefficient array");
  std::vector<double> c;
  for (const auto& v : j) c.push_back(v.get<double>());
  return Poly(std::move(c));
}

Poly2 poly2_from_json(const json& j) {
  if (!j.is_array()) throw spec_error("problem JSON: poly2 must be a coefficient matrix");
  std::vector<std::vector<double>> c;
  for (const auto& row : j) {
    if (!row.is_array()) throw spec_error("problem JSON: poly2 rows must be arrays");
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.get<double>());
    c.push_back(std::move(r));
  }
  return Poly2(std::move(c));
}

PolyMatrix matrix_from_json(const json& j, int n, const char* which) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw spec_error(std::string("problem JSON: ") + which + " must be an n-by-n matrix");
  PolyMatrix m;
  m.n = n;
  m.entries.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw spec_error(std::string("problem JSON: ") + which + " must be an n-by-n matrix");
    for (const auto& e : row) m.entries.push_back(poly_from_json(e));
  }
  return m;
}

json poly_to_json(const Poly& p) { return json(p.coefficients()); }

json poly2_to_json(const Poly2& p) { return json(p.coefficients()); }

json matrix_to_json(const PolyMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.n; ++i) {
    json row = json::array();
    for (int j = 0; j < m.n; ++j) row.push_back(poly_to_json(m.at(i, j)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ProblemSpec parse_problem_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw spec_error(std::string("problem JSON parse failure: ") + e.what());
  }
  ProblemSpec spec;
  try {
    spec.n = j.at("n").get<int>();
    spec.T = j.at("T").get<double>();
    spec.A = matrix_from_json(j.at("A"), spec.n, "A");
    spec.D = matrix_from_json(j.at("D"), spec.n, "D");
    for (const auto& comp : j.at("f")) spec.f.push_back(poly2_from_json(comp));
    for (const auto& comp : j.at("h")) spec.h.push_back(poly_from_json(comp));
    for (const auto& e : j.at("epsilons")) {
      if (e.is_string())
        spec.epsilons.push_back(parse_rational(e.get<std::string>()));
      else
        spec.epsilons.push_back(e.get<double>());
    }
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
  } catch (const spec_error&) {
    throw;
  } catch (const std::exception& e) {
    throw spec_error(std::string("problem JSON schema violation: ") + e.what());
  }
  spec.basic_checks();
  return spec;
}

ProblemSpec load_problem_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw spec_error("cannot open problem file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_json(buf.str());
}

std::string problem_to_json(const ProblemSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["n"] = spec.n;
  j["T"] = spec.T;
  j["A"] = matrix_to_json(spec.A);
  j["D"] = matrix_to_json(spec.D);
  json f = json::array();
  for (const auto& comp : spec.f) f.push_back(poly2_to_json(comp));
  j["f"] = f;
  json h = json::array();
  for (const auto& comp : spec.h) h.push_back(poly_to_json(comp));
  j["h"] = h;
  j["epsilons"] = spec.epsilons;
  return j.dump(2);
}

namespace {

std::vector<double> default_epsilons() {
  return {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
}

PolyMatrix scalar_matrix(const Poly& p) {
  PolyMatrix m;
  m.n = 1;
  m.entries = {p};
  return m;
}

PolyMatrix matrix2(const Poly& a00, const Poly& a01, const Poly& a10, const Poly& a11) {
  PolyMatrix m;
  m.n = 2;
  m.entries = {a00, a01, a10, a11};
  return m;
}

// x(1-x)*(c0 + c1*t): lateral values vanish, keeping the data compatible
// with the homogeneous side conditions.
Poly2 bump_xt(double c0, double c1) {
  return Poly2({{0.0, 0.0}, {c0, c1}, {-c0, -c1}});
}

ProblemSpec make_scalar_const() {
  ProblemSpec s;
  s.name = "scalar-const";
  s.n = 1;
  s.T = 1.0;
  s.A = scalar_matrix(Poly({1.0}));
  s.D = scalar_matrix(Poly({-1.0}));
  s.f = {bump_xt(1.0, 0.5)};
  s.h = {Poly({0.0, 2.0, -2.0})};  // 2x(1-x)
  s.epsilons = default_epsilons();
  return s;
}

ProblemSpec make_scalar_varlambda() {
  ProblemSpec s;
  s.name = "scalar-varlambda";
  s.n = 1;
  s.T = 1.0;
  s.A = scalar_matrix(Poly({1.0, 2.0, 1.0}));   // (1+x)^2
  s.D = scalar_matrix(Poly({-1.0, -0.5}));      // -1 - t/2
  s.f = {bump_xt(1.0, 1.0)};
  s.h = {Poly({0.0, 1.0, 0.0, -1.0})};  // x(1-x)(1+x)
  s.epsilons = default_epsilons();
  return s;
}

ProblemSpec make_coupled_2x2() {
  ProblemSpec s;
  s.name = "coupled-2x2";
  s.n = 2;
  s.T = 1.0;
  // Similarity R = [[1,1],[0,1]] applied to diag(2,3) and diag(-1,-2-t):
  // both fields share the constant eigenbasis formed by R's columns.
  s.A = matrix2(Poly({2.0}), Poly({1.0}), Poly({0.0}), Poly({3.0}));
  s.D = matrix2(Poly({-1.0}), Poly({-1.0, -1.0}), Poly({0.0}), Poly({-2.0, -1.0}));
  s.f = {bump_xt(1.0, 0.5),
         Poly2({{0.0, 0.0}, {2.0, 0.25}, {-3.0, -0.25}, {1.0, 0.0}})};  // x(1-x)(2-x) + x(1-x)t/4
  s.h = {Poly({0.0, 2.0, -2.0}), Poly({0.0, 1.0, 0.0, -1.0})};
  s.epsilons = default_epsilons();
  return s;
}

ProblemSpec make_complex_2x2() {
  ProblemSpec s;
  s.name = "complex-2x2";
  s.n = 2;
  s.T = 1.0;
  // A = 2I + J, D = -I + J with J the rotation generator: eigenvalues
  // 2 -+ i and -1 -+ i on a common complex eigenbasis.
  s.A = matrix2(Poly({2.0}), Poly({1.0}), Poly({-1.0}), Poly({2.0}));
  s.D = matrix2(Poly({-1.0}), Poly({1.0}), Poly({-1.0}), Poly({-1.0}));
  s.f = {bump_xt(1.0, 0.5), bump_xt(2.0, -0.25)};
  s.h = {Poly({0.0, 2.0, -2.0}), Poly({0.0, 1.0, -1.0})};
  s.epsilons = default_epsilons();
  return s;
}

ProblemSpec make_coupled_2x2_dynamic() {
  ProblemSpec s;
  s.name = "coupled-2x2-dynamic";
  s.n = 2;
  s.T = 0.8;
  // Constant diagonal A with a genuinely time-rotating D eigenbasis:
  // alpha_ii(0) != 0, so the full p-determination path is active.
  s.A = matrix2(Poly({2.0}), Poly({0.0}), Poly({0.0}), Poly({3.0}));
  s.D = matrix2(Poly({-1.0}), Poly({1.0}), Poly({0.0, 0.5}), Poly({-2.0}));
  s.f = {bump_xt(1.0, 0.5), bump_xt(1.5, -0.5)};
  s.h = {Poly({0.0, 2.0, -2.0}), Poly({0.0, 1.0, 0.0, -1.0})};
  s.epsilons = default_epsilons();
  return s;
}

}  // namespace

std::vector<PresetInfo> preset_list() {
  return {
      {"scalar-const", "n=1, A=1, D=-1; constant coefficients"},
      {"scalar-varlambda", "n=1, A=(1+x)^2, D=-1-t/2; variable eigenvalue fields"},
      {"coupled-2x2", "n=2 upper-triangular pair sharing a constant eigenbasis"},
      {"complex-2x2", "n=2 with complex eigenvalues 2-+i / -1-+i"},
      {"coupled-2x2-dynamic", "n=2, diagonal A, time-rotating D eigenbasis"},
  };
}

ProblemSpec preset(const std::string& name) {
  if (name == "scalar-const") return make_scalar_const();
  if (name == "scalar-varlambda") return make_scalar_varlambda();
  if (name == "coupled-2x2") return make_coupled_2x2();
  if (name == "complex-2x2") return make_complex_2x2();
  if (name == "coupled-2x2-dynamic") return make_coupled_2x2_dynamic();
  throw spec_error("unknown preset: " + name);
}

bool is_preset(const std::string& name) {
  for (const auto& p : preset_list())
    if (p.name == name) return true;
  return false;
}

}  // namespace perturba
