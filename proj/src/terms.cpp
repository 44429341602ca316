#include "perturba/terms.hpp"

#include <cmath>

namespace perturba {

cx layer_profile_value(cx xi, double tau) {
  if (tau <= 0.0) return std::abs(xi) == 0.0 ? cx(1.0, 0.0) : cx(0.0, 0.0);
  const cx z = xi / (2.0 * std::sqrt(tau));
  if (z.imag() == 0.0) {
    if (z.real() < 0.0) throw spec_error("layer profile: negative real stretched coordinate");
    return cx(std::erfc(z.real()), 0.0);
  }
  return erfc_cx(z);
}

namespace {

cx conv_value(const ConvTerm& term, double x, double t, cx xi, double tau) {
  if (tau <= 0.0) return cx(0.0, 0.0);
  if (std::abs(xi.imag()) > 1e-9 * (1.0 + std::abs(xi)))
    throw spec_error("convolution layer component requires a real stretched coordinate");
  const double v = term.profile->eval(std::max(xi.real(), 0.0), tau);
  if (v == 0.0) return cx(0.0, 0.0);
  return term.coeff.eval(x, t) * v;
}

}  // namespace

cx evaluate_y_component(const Expansion& e, const AsymptoticTerm& term, int i, int l,
                        const RegularizedPoint& M) {
  const int n = e.dim();
  const std::size_t li = static_cast<std::size_t>(l) * n + i;
  cx value(0.0, 0.0);
  const cx xi = M.xi_at(i, l);
  if (!term.d_bt.empty() && !term.d_bt[li].values.empty()) {
    const cx prof = layer_profile_value(xi, M.tau);
    if (prof != cx(0.0, 0.0))
      value += term.d_bt[li].eval(M.t) * e.gx[li].eval(M.x) * prof;
  }
  if (!term.yconv.empty())
    for (const ConvTerm& cterm : term.yconv[li]) value += conv_value(cterm, M.x, M.t, xi, M.tau);
  return value;
}

cx evaluate_z_component(const Expansion& e, const AsymptoticTerm& term, int i, int j, int l,
                        const RegularizedPoint& M) {
  const int n = e.dim();
  const std::size_t li = static_cast<std::size_t>(l) * n + i;
  const std::size_t lij = static_cast<std::size_t>(l) * n * n + static_cast<std::size_t>(i) * n + j;
  cx value(0.0, 0.0);
  const cx xi = M.xi_at(i, l);
  if (!term.w_bt.empty() && !term.w_bt[lij].values.empty()) {
    const cx prof = layer_profile_value(xi, M.tau);
    if (prof != cx(0.0, 0.0))
      value += term.w_bt[lij].eval(M.t) * e.gx[li].eval(M.x) * prof;
  }
  if (!term.zconv.empty())
    for (const ConvTerm& cterm : term.zconv[lij]) value += conv_value(cterm, M.x, M.t, xi, M.tau);
  return value;
}

Vec evaluate_term_interior(const Expansion& e, const AsymptoticTerm& term,
                           const RegularizedPoint& M, const Mat& psi_t) {
  const int n = e.dim();
  Vec u = Vec::Zero(n);
  if (term.zero) return u;
  for (int i = 0; i < n; ++i) {
    cx coeff(0.0, 0.0);
    if (!term.v.empty()) coeff += term.v[i].eval(M.x, M.t);
    cx mu_coeff(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      cx cij(0.0, 0.0);
      if (!term.c.empty()) cij = term.c[static_cast<std::size_t>(i) * n + j].eval(M.x, M.t);
      if (i == j && !term.p.empty() && !term.p[i].values.empty()) cij += term.p[i].eval(M.x);
      mu_coeff += cij * M.exp_mu[j];
    }
    u += (coeff + mu_coeff) * psi_t.col(i);
  }
  return u;
}

Vec evaluate_term(const Expansion& e, const AsymptoticTerm& term, const RegularizedPoint& M,
                  const Mat& basis_x, const Mat& psi_t) {
  const int n = e.dim();
  if (term.zero) return Vec::Zero(n);
  Vec u = evaluate_term_interior(e, term, M, psi_t);
  for (int l = 0; l < 2; ++l) {
    for (int i = 0; i < n; ++i) {
      cx layer = evaluate_y_component(e, term, i, l, M);
      for (int j = 0; j < n; ++j) {
        const cx z = evaluate_z_component(e, term, i, j, l, M);
        if (z != cx(0.0, 0.0)) layer += z * M.exp_mu[j];
      }
      if (layer != cx(0.0, 0.0)) u += layer * basis_x.col(i);
    }
  }
  return u;
}

}  // namespace perturba
