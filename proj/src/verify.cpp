#include "perturba/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace perturba {

double error_norm(const GridField& asym, const GridField& ref) {
  if (asym.dim != ref.dim) throw spec_error("error_norm: dimension mismatch");
  const bool same_grid = asym.xs == ref.xs && asym.ts == ref.ts;
  if (!same_grid) {
    if (asym.xs.front() < ref.xs.front() - 1e-12 || asym.xs.back() > ref.xs.back() + 1e-12 ||
        asym.ts.front() < ref.ts.front() - 1e-12 || asym.ts.back() > ref.ts.back() + 1e-12)
      throw spec_error("error_norm: grid domains do not match");
  }
  double worst = 0.0;
  for (std::size_t ix = 0; ix < asym.nx(); ++ix)
    for (std::size_t it = 0; it < asym.nt(); ++it) {
      const Vec a = asym.vec_at(ix, it);
      const Vec r = same_grid ? ref.vec_at(ix, it) : ref.interp(asym.xs[ix], asym.ts[it]);
      worst = std::max(worst, (a - r).norm());
    }
  return worst;
}

OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& errors) {
  if (epsilons.size() != errors.size() || epsilons.size() < 2)
    throw spec_error("fit_order: need matching lists with at least 2 samples");
  const std::size_t m = epsilons.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(errors[i] > 0.0)) throw spec_error("fit_order: errors must be positive");
    sx += std::log(epsilons[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / m, my = sy / m;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(epsilons[i]) - mx;
    num += dx * (std::log(errors[i]) - my);
    den += dx * dx;
  }
  OrderFit fit;
  fit.slope = num / den;
  fit.constant = std::exp(my - fit.slope * mx);
  return fit;
}

ConvergenceReport analyze_errors(int order_n, const std::vector<double>& epsilons,
                                 const std::vector<double>& errors, double order_tolerance) {
  if (epsilons.size() < 4)
    throw spec_error("convergence analysis needs at least 4 epsilon samples");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] <= 0.5 * epsilons[i - 1] + 1e-15))
      throw spec_error("epsilons must be geometrically spaced with ratio <= 1/2");
  ConvergenceReport rep;
  rep.order_n = order_n;
  rep.epsilons = epsilons;
  rep.errors = errors;
  rep.order_tolerance = order_tolerance;
  rep.target = 0.5 * (order_n + 1);
  rep.local_orders.assign(errors.size(), std::nan(""));
  rep.decreasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    rep.local_orders[i] =
        std::log(errors[i] / errors[i - 1]) / std::log(epsilons[i] / epsilons[i - 1]);
    if (!(errors[i] < errors[i - 1])) rep.decreasing = false;
  }
  const OrderFit fit = fit_order(epsilons, errors);
  rep.slope = fit.slope;
  rep.constant = fit.constant;
  rep.slope_pass = rep.slope >= rep.target - order_tolerance;
  rep.pass = rep.slope_pass && rep.decreasing;
  return rep;
}

ConvergenceReport convergence_study(const ProblemSpec& spec, int order_n,
                                    const std::vector<double>& epsilons,
                                    const StudyOptions& opt) {
  using clock = std::chrono::steady_clock;
  if (order_n < 0) throw spec_error("convergence_study: negative order");

  ExpandOptions eopt = opt.expand;
  eopt.kmax = order_n;  // terms are epsilon independent; build once
  Expansion expansion = build_expansion(spec, eopt);

  // scale the Shishkin constant by the widest eigenvalue magnitude
  double lambda_max = 1.0;
  for (std::size_t m = 0; m < expansion.spectral.spatial.grid().size(); ++m)
    for (int i = 0; i < spec.n; ++i)
      lambda_max = std::max(lambda_max, std::abs(expansion.spectral.spatial.value(i, m)));
  MeshOptions mopt = opt.mesh;
  mopt.c0 *= std::sqrt(lambda_max);

  std::vector<double> errors;
  std::vector<double> runtimes;
  for (double eps : epsilons) {
    const auto t_start = clock::now();
    const LayerMesh mesh = build_mesh(eps, opt.n_x, opt.n_t, spec.T, mopt);
    GridField ref;
    try {
      ref = solve_reference(spec, eps, mesh, opt.scheme);
    } catch (const numeric_error& e) {
      throw numeric_error(std::string(e.what()) + " (epsilon = " + format_double(eps) + ")");
    }
    const GridField asym =
        evaluate_partial_sum(expansion, order_n, eps, mesh.x_nodes, mesh.t_nodes);
    errors.push_back(error_norm(asym, ref));
    runtimes.push_back(std::chrono::duration<double, std::milli>(clock::now() - t_start).count());
  }

  ConvergenceReport rep = analyze_errors(order_n, epsilons, errors, opt.order_tolerance);
  rep.problem = spec.name;
  rep.runtimes_ms = runtimes;
  rep.mesh_nx = opt.n_x;
  rep.mesh_nt = opt.n_t;
  rep.scheme = opt.scheme == Scheme::implicit_euler ? "implicit_euler" : "crank_nicolson";

  // discretization floor: reference-vs-reference at the smallest epsilon
  if (opt.check_floor) {
    const double eps = epsilons.back();
    const LayerMesh lo = build_mesh(eps, opt.n_x, opt.n_t, spec.T, mopt);
    const LayerMesh hi = build_mesh(eps, 2 * opt.n_x, 2 * opt.n_t, spec.T, mopt);
    const GridField ref_lo = solve_reference(spec, eps, lo, opt.scheme);
    const GridField ref_hi = solve_reference(spec, eps, hi, opt.scheme);
    rep.floor_estimate = error_norm(ref_lo, ref_hi);
    const double min_e = *std::min_element(rep.errors.begin(), rep.errors.end());
    rep.floor_ratio = rep.floor_estimate > 0.0 ? min_e / rep.floor_estimate : 1e300;
    rep.floor_pass = rep.floor_ratio >= opt.floor_factor;
    rep.pass = rep.pass && rep.floor_pass;
  } else {
    rep.floor_pass = true;
  }

  // improvement threshold against the previous order (diagnostic, not a gate)
  if (order_n >= 1) {
    for (double eps : epsilons) {
      const LayerMesh mesh = build_mesh(eps, opt.n_x / 2, opt.n_t / 2, spec.T, mopt);
      const GridField ref = solve_reference(spec, eps, mesh, opt.scheme);
      const GridField lo =
          evaluate_partial_sum(expansion, order_n - 1, eps, mesh.x_nodes, mesh.t_nodes);
      const GridField hi =
          evaluate_partial_sum(expansion, order_n, eps, mesh.x_nodes, mesh.t_nodes);
      if (error_norm(hi, ref) <= error_norm(lo, ref)) {
        rep.improvement_threshold = eps;
        break;
      }
    }
  }
  return rep;
}

std::string ConvergenceReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "perturba.convergence/1";
  j["problem"] = problem;
  j["order_n"] = order_n;
  j["epsilons"] = epsilons;
  j["errors"] = errors;
  nlohmann::json lo = nlohmann::json::array();
  for (double v : local_orders) {
    if (std::isnan(v))
      lo.push_back(nullptr);
    else
      lo.push_back(v);
  }
  j["local_orders"] = lo;
  j["slope"] = slope;
  j["constant"] = constant;
  j["target"] = target;
  j["order_tolerance"] = order_tolerance;
  j["decreasing"] = decreasing;
  j["slope_pass"] = slope_pass;
  j["floor_estimate"] = floor_estimate;
  j["floor_ratio"] = floor_ratio;
  j["floor_pass"] = floor_pass;
  j["pass"] = pass;
  j["improvement_threshold"] = improvement_threshold;
  j["runtimes_ms"] = runtimes_ms;
  j["mesh_nx"] = mesh_nx;
  j["mesh_nt"] = mesh_nt;
  j["scheme"] = scheme;
  return j.dump(2);
}

ConvergenceReport ConvergenceReport::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw spec_error(std::string("convergence report parse failure: ") + e.what());
  }
  ConvergenceReport rep;
  rep.problem = j.at("problem").get<std::string>();
  rep.order_n = j.at("order_n").get<int>();
  rep.epsilons = j.at("epsilons").get<std::vector<double>>();
  rep.errors = j.at("errors").get<std::vector<double>>();
  for (const auto& v : j.at("local_orders"))
    rep.local_orders.push_back(v.is_null() ? std::nan("") : v.get<double>());
  rep.slope = j.at("slope").get<double>();
  rep.constant = j.at("constant").get<double>();
  rep.target = j.at("target").get<double>();
  rep.order_tolerance = j.at("order_tolerance").get<double>();
  rep.decreasing = j.at("decreasing").get<bool>();
  rep.slope_pass = j.at("slope_pass").get<bool>();
  rep.floor_estimate = j.at("floor_estimate").get<double>();
  rep.floor_ratio = j.at("floor_ratio").get<double>();
  rep.floor_pass = j.at("floor_pass").get<bool>();
  rep.pass = j.at("pass").get<bool>();
  rep.improvement_threshold = j.at("improvement_threshold").get<double>();
  rep.runtimes_ms = j.at("runtimes_ms").get<std::vector<double>>();
  rep.mesh_nx = j.at("mesh_nx").get<std::size_t>();
  rep.mesh_nt = j.at("mesh_nt").get<std::size_t>();
  rep.scheme = j.at("scheme").get<std::string>();
  return rep;
}

std::string ConvergenceReport::to_csv() const {
  std::string out = "epsilon,error,local_order\n";
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    out += format_double(epsilons[i]);
    out += ',';
    out += format_double(errors[i]);
    out += ',';
    out += std::isnan(local_orders[i]) ? "nan" : format_double(local_orders[i]);
    out += '\n';
  }
  return out;
}

std::string ConvergenceReport::to_svg() const {
  // log-log polyline of E(eps) plus a guide line of slope (n+1)/2 through
  // the last data point
  const double width = 480, height = 360, margin = 50;
  double lx_min = 1e300, lx_max = -1e300, ly_min = 1e300, ly_max = -1e300;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    lx_min = std::min(lx_min, std::log10(epsilons[i]));
    lx_max = std::max(lx_max, std::log10(epsilons[i]));
    ly_min = std::min(ly_min, std::log10(errors[i]));
    ly_max = std::max(ly_max, std::log10(errors[i]));
  }
  // include the guide line extent
  const double guide_y0 = std::log10(errors.back());
  const double guide_y1 = guide_y0 + target * (lx_max - std::log10(epsilons.back()));
  ly_min = std::min(ly_min, std::min(guide_y0, guide_y1)) - 0.2;
  ly_max = std::max(ly_max, std::max(guide_y0, guide_y1)) + 0.2;
  lx_min -= 0.1;
  lx_max += 0.1;

  auto px = [&](double lx) {
    return margin + (lx - lx_min) / (lx_max - lx_min) * (width - 2 * margin);
  };
  auto py = [&](double ly) {
    return height - margin - (ly - ly_min) / (ly_max - ly_min) * (height - 2 * margin);
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << problem
      << " n=" << order_n << " slope=" << format_double(slope) << "</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    svg << format_double(px(std::log10(epsilons[i]))) << ','
        << format_double(py(std::log10(errors[i]))) << ' ';
  svg << "\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"6 4\" points=\""
      << format_double(px(std::log10(epsilons.back()))) << ',' << format_double(py(guide_y0))
      << ' ' << format_double(px(lx_max)) << ',' << format_double(py(guide_y1)) << "\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">log10(epsilon)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw spec_error("cannot open for writing: " + path);
  out << content;
}

}  // namespace perturba
