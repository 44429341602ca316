#include "perturba/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

namespace perturba {

namespace {

ProblemSpec resolve_problem(const RunConfig& config) {
  if (config.problem.empty()) throw spec_error("no problem or preset given");
  ProblemSpec spec =
      is_preset(config.problem) ? preset(config.problem) : load_problem_json(config.problem);
  if (!config.epsilons.empty()) spec.epsilons = config.epsilons;
  spec.basic_checks();
  return spec;
}

std::filesystem::path out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out_dir);
  return std::filesystem::path(config.out_dir) / name;
}

Scheme scheme_from(const std::string& name) {
  if (name == "implicit_euler") return Scheme::implicit_euler;
  if (name == "crank_nicolson") return Scheme::crank_nicolson;
  throw spec_error("unknown scheme: " + name);
}

int cmd_presets() {
  for (const auto& info : preset_list())
    std::cout << info.name << "  -  " << info.summary << "\n";
  return kOk;
}

int cmd_validate(const RunConfig& config) {
  const ProblemSpec spec = resolve_problem(config);
  const AssumptionReport rep = validate_assumptions(spec, config.grid_density);
  const std::string text = rep.to_json();
  write_text(out_path(config, "assumptions.json").string(), text + "\n");
  std::cout << text << "\n";
  return rep.all_pass() ? kOk : kAssumptionError;
}

int cmd_expand(const RunConfig& config) {
  const ProblemSpec spec = resolve_problem(config);
  ExpandOptions opt;
  opt.kmax = config.order;
  Expansion e = build_expansion(spec, opt);

  nlohmann::json summary;
  summary["schema"] = "perturba.expansion/1";
  summary["problem"] = spec.name;
  summary["kmax"] = config.order;
  nlohmann::json orders = nlohmann::json::array();
  for (const auto& term : e.terms) {
    nlohmann::json o;
    o["k"] = term.k;
    o["zero"] = term.zero;
    o["max_component_norm"] = term.max_component_norm;
    std::size_t conv_terms = 0;
    for (const auto& list : term.yconv) conv_terms += list.size();
    for (const auto& list : term.zconv) conv_terms += list.size();
    o["convolution_terms"] = conv_terms;
    bool unresolved = false;
    for (auto f : term.p_unresolved) unresolved |= (f != 0);
    o["p_unresolved"] = unresolved;
    orders.push_back(o);
  }
  summary["orders"] = orders;
  write_text(out_path(config, "expansion.json").string(), summary.dump(2) + "\n");

  for (double eps : spec.epsilons) {
    const auto xs = clustered_x_nodes(129);
    const auto ts = clustered_t_nodes(129, spec.T, eps);
    const GridField field = evaluate_partial_sum(e, config.order, eps, xs, ts);
    std::ostringstream base;
    base << "u_eps_" << format_double(eps) << "_n" << config.order;
    write_gridfield(field, out_path(config, base.str() + ".csv").string(),
                    out_path(config, base.str() + ".meta.json").string());
  }
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_solve_ref(const RunConfig& config) {
  const ProblemSpec spec = resolve_problem(config);
  for (double eps : spec.epsilons) {
    const LayerMesh mesh = build_mesh(eps, config.n_x, config.n_t, spec.T);
    const GridField field = solve_reference(spec, eps, mesh, scheme_from(config.scheme));
    std::ostringstream base;
    base << "ref_eps_" << format_double(eps);
    write_gridfield(field, out_path(config, base.str() + ".csv").string(),
                    out_path(config, base.str() + ".meta.json").string());
  }
  std::cout << "reference solves written to " << config.out_dir << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& config) {
  const ProblemSpec spec = resolve_problem(config);
  StudyOptions opt;
  opt.n_x = config.n_x;
  opt.n_t = config.n_t;
  opt.scheme = scheme_from(config.scheme);
  const ConvergenceReport rep = convergence_study(spec, config.order, spec.epsilons, opt);
  for (const std::string& fmt : config.formats) {
    if (fmt == "json")
      write_text(out_path(config, "convergence.json").string(), rep.to_json() + "\n");
    else if (fmt == "csv")
      write_text(out_path(config, "convergence.csv").string(), rep.to_csv());
    else if (fmt == "svg")
      write_text(out_path(config, "convergence.svg").string(), rep.to_svg());
    else
      throw spec_error("unknown report format: " + fmt);
  }
  std::cout << rep.to_json() << "\n";
  return kOk;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    if (config.command == "presets") return cmd_presets();
    if (config.command == "validate") return cmd_validate(config);
    if (config.command == "expand") return cmd_expand(config);
    if (config.command == "solve-ref") return cmd_solve_ref(config);
    if (config.command == "verify") return cmd_verify(config);
    std::cerr << "unknown command: " << config.command << "\n";
    return kConfigError;
  } catch (const assumption_error& e) {
    std::cerr << "assumption failure: " << e.what() << "\n";
    return kAssumptionError;
  } catch (const spec_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumericError;
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"perturba: regularized asymptotics for singularly perturbed "
               "parabolic systems, with a finite-difference verification harness"};
  app.require_subcommand(1);

  RunConfig config;
  std::string epsilons_csv;
  std::string formats_csv = "csv,json";

  auto add_problem_flags = [&](CLI::App* cmd, bool with_order) {
    cmd->add_option("--preset,--problem", config.problem,
                    "preset name or problem JSON path");
    cmd->add_option("--epsilons", epsilons_csv, "comma-separated epsilons (e.g. 1/16,1/32)");
    if (with_order) cmd->add_option("--order,-n", config.order, "expansion order n");
  };

  CLI::App* presets = app.add_subcommand("presets", "list bundled problems");
  (void)presets;
  CLI::App* validate = app.add_subcommand("validate", "check the standing assumptions");
  add_problem_flags(validate, false);
  validate->add_option("--grid-density", config.grid_density, "validation grid density");
  validate->add_option("--out", config.out_dir, "output directory");

  CLI::App* expand = app.add_subcommand("expand", "build the expansion and write fields");
  add_problem_flags(expand, true);
  expand->add_option("--out", config.out_dir, "output directory");

  CLI::App* solve_ref = app.add_subcommand("solve-ref", "reference finite-difference solve");
  add_problem_flags(solve_ref, false);
  solve_ref->add_option("--nx", config.n_x, "spatial cells");
  solve_ref->add_option("--nt", config.n_t, "time steps");
  solve_ref->add_option("--scheme", config.scheme, "implicit_euler | crank_nicolson");
  solve_ref->add_option("--out", config.out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "empirical convergence study");
  add_problem_flags(verify, true);
  verify->add_option("--nx", config.n_x, "spatial cells");
  verify->add_option("--nt", config.n_t, "time steps");
  verify->add_option("--scheme", config.scheme, "implicit_euler | crank_nicolson");
  verify->add_option("--format", formats_csv, "csv,json,svg");
  verify->add_option("--out", config.out_dir, "output directory");
  config.scheme = "crank_nicolson";  // order-study default

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (!epsilons_csv.empty()) config.epsilons = parse_epsilon_list(epsilons_csv);
    std::stringstream fmts(formats_csv);
    config.formats.clear();
    std::string fmt;
    while (std::getline(fmts, fmt, ','))
      if (!fmt.empty()) config.formats.push_back(fmt);
  } catch (const spec_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  }

  for (const std::string& name : {"presets", "validate", "expand", "solve-ref", "verify"})
    if (app.get_subcommand(name)->parsed()) config.command = name;
  if (app.get_subcommand("solve-ref")->parsed() && config.scheme == "crank_nicolson" &&
      !app.get_subcommand("solve-ref")->count("--scheme"))
    config.scheme = "implicit_euler";
  return run(config);
}

}  // namespace perturba
