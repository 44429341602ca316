#include "perturba/assembly.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace perturba {

Vec GridField::vec_at(std::size_t ix, std::size_t it) const {
  Vec v(dim);
  for (int comp = 0; comp < dim; ++comp) v[comp] = at(ix, it, comp);
  return v;
}

Vec GridField::interp(double x, double t) const {
  const std::size_t ix = locate(xs, x);
  const std::size_t it = locate(ts, t);
  const double wx = (x - xs[ix]) / (xs[ix + 1] - xs[ix]);
  const double wt = (t - ts[it]) / (ts[it + 1] - ts[it]);
  Vec v(dim);
  for (int comp = 0; comp < dim; ++comp) {
    v[comp] = (1.0 - wx) * ((1.0 - wt) * at(ix, it, comp) + wt * at(ix, it + 1, comp)) +
              wx * ((1.0 - wt) * at(ix + 1, it, comp) + wt * at(ix + 1, it + 1, comp));
  }
  return v;
}

void GridField::check_finite() const {
  for (const cx& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw numeric_error("grid field contains non-finite values");
}

GridField evaluate_partial_sum(const Expansion& e, int order_n, double epsilon,
                               const std::vector<double>& x_nodes,
                               const std::vector<double>& t_nodes) {
  if (order_n < 0 || order_n > e.max_order())
    throw spec_error("evaluate_partial_sum: order exceeds the built expansion");
  if (!(epsilon > 0.0)) throw spec_error("evaluate_partial_sum: epsilon must be positive");
  const int n = e.dim();
  GridField out;
  out.xs = x_nodes;
  out.ts = t_nodes;
  out.dim = n;
  out.epsilon = epsilon;
  out.order = order_n;
  out.provenance = "asymptotic";
  out.values.assign(x_nodes.size() * t_nodes.size() * static_cast<std::size_t>(n), cx(0, 0));

  const StretchMap map = e.stretch_map(epsilon);

  // eigenvector data cached once per coordinate
  std::vector<Mat> basis_x(x_nodes.size()), psi_t(t_nodes.size());
  for (std::size_t ix = 0; ix < x_nodes.size(); ++ix)
    basis_x[ix] = e.spectral.spatial.at(x_nodes[ix]).basis;
  for (std::size_t it = 0; it < t_nodes.size(); ++it)
    psi_t[it] = e.spectral.temporal.at(t_nodes[it]).basis;

  std::vector<double> weight(static_cast<std::size_t>(order_n) + 1);
  for (int k = 0; k <= order_n; ++k) weight[k] = std::pow(epsilon, 0.5 * k);

  parallel_for(x_nodes.size(), [&](std::size_t ix) {
    for (std::size_t it = 0; it < t_nodes.size(); ++it) {
      const RegularizedPoint M = regularize(x_nodes[ix], t_nodes[it], map, e.spectral);
      Vec acc = Vec::Zero(n);
      for (int k = 0; k <= order_n; ++k) {
        if (e.terms[k].zero) continue;
        acc += weight[k] * evaluate_term(e, e.terms[k], M, basis_x[ix], psi_t[it]);
      }
      for (int comp = 0; comp < n; ++comp) out.at(ix, it, comp) = acc[comp];
    }
  });
  out.check_finite();
  return out;
}

BoundaryResiduals boundary_residuals(const GridField& field, const ProblemSpec& spec) {
  BoundaryResiduals out;
  const int n = field.dim;
  for (std::size_t ix = 0; ix < field.nx(); ++ix) {
    Vec diff(n);
    for (int comp = 0; comp < n; ++comp)
      diff[comp] = field.at(ix, 0, comp) - cx(spec.h[comp].eval(field.xs[ix]), 0.0);
    out.init_res = std::max(out.init_res, diff.norm());
  }
  for (std::size_t it = 0; it < field.nt(); ++it) {
    out.left_res = std::max(out.left_res, field.vec_at(0, it).norm());
    out.right_res = std::max(out.right_res, field.vec_at(field.nx() - 1, it).norm());
  }
  return out;
}

std::vector<double> clustered_x_nodes(std::size_t count) {
  if (count < 3) throw spec_error("clustered_x_nodes: need at least 3 nodes");
  std::vector<double> xs(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = M_PI * static_cast<double>(i) / static_cast<double>(count - 1);
    xs[i] = 0.5 * (1.0 - std::cos(theta));
  }
  xs.front() = 0.0;
  xs.back() = 1.0;
  return xs;
}

std::vector<double> clustered_t_nodes(std::size_t count, double T, double epsilon) {
  if (count < 3) throw spec_error("clustered_t_nodes: need at least 3 nodes");
  // uniform in s = ln((t+eps)/eps): geometric clustering at scale eps
  const double S = std::log((T + epsilon) / epsilon);
  std::vector<double> ts(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = S * static_cast<double>(i) / static_cast<double>(count - 1);
    ts[i] = epsilon * (std::exp(s) - 1.0);
  }
  ts.front() = 0.0;
  ts.back() = T;
  return ts;
}

void write_gridfield(const GridField& field, const std::string& csv_path,
                     const std::string& meta_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw spec_error("cannot open for writing: " + csv_path);
  csv << "x,t";
  for (int comp = 0; comp < field.dim; ++comp)
    csv << ",re_u" << comp + 1 << ",im_u" << comp + 1;
  csv << "\n";
  for (std::size_t ix = 0; ix < field.nx(); ++ix)
    for (std::size_t it = 0; it < field.nt(); ++it) {
      csv << format_double(field.xs[ix]) << ',' << format_double(field.ts[it]);
      for (int comp = 0; comp < field.dim; ++comp) {
        const cx v = field.at(ix, it, comp);
        csv << ',' << format_double(v.real()) << ',' << format_double(v.imag());
      }
      csv << "\n";
    }
  nlohmann::json meta;
  meta["schema"] = "perturba.gridfield/1";
  meta["dim"] = field.dim;
  meta["epsilon"] = field.epsilon;
  meta["order"] = field.order;
  meta["provenance"] = field.provenance;
  meta["nx"] = field.nx();
  meta["nt"] = field.nt();
  std::ofstream mf(meta_path);
  if (!mf) throw spec_error("cannot open for writing: " + meta_path);
  mf << meta.dump(2) << "\n";
}

GridField read_gridfield(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream mf(meta_path);
  if (!mf) throw spec_error("cannot open: " + meta_path);
  nlohmann::json meta;
  try {
    mf >> meta;
  } catch (const std::exception& e) {
    throw spec_error(std::string("grid field meta parse failure: ") + e.what());
  }
  GridField field;
  field.dim = meta.at("dim").get<int>();
  field.epsilon = meta.at("epsilon").get<double>();
  field.order = meta.at("order").get<int>();
  field.provenance = meta.at("provenance").get<std::string>();
  const std::size_t nx = meta.at("nx").get<std::size_t>();
  const std::size_t nt = meta.at("nt").get<std::size_t>();

  std::ifstream csv(csv_path);
  if (!csv) throw spec_error("cannot open: " + csv_path);
  std::string line;
  std::getline(csv, line);  // header
  field.values.assign(nx * nt * static_cast<std::size_t>(field.dim), cx(0, 0));
  field.xs.assign(nx, 0.0);
  field.ts.assign(nt, 0.0);
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 2 + 2 * static_cast<std::size_t>(field.dim))
      throw spec_error("grid field CSV row has the wrong arity");
    const std::size_t ix = row / nt, it = row % nt;
    if (ix >= nx) throw spec_error("grid field CSV has too many rows");
    field.xs[ix] = cells[0];
    field.ts[it] = cells[1];
    for (int comp = 0; comp < field.dim; ++comp)
      field.at(ix, it, comp) = cx(cells[2 + 2 * comp], cells[3 + 2 * comp]);
    ++row;
  }
  if (row != nx * nt) throw spec_error("grid field CSV row count mismatch");
  return field;
}

}  // namespace perturba
