#include "perturba/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace perturba {

namespace {

constexpr double kCollisionTol = 1e-8;

// Greedy assignment maximizing eigenvector overlap with the reference basis.
std::vector<int> match_by_overlap(const Mat& reference, const Mat& candidate) {
  const int n = static_cast<int>(reference.cols());
  Eigen::MatrixXd overlap(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      overlap(i, j) = std::abs(reference.col(i).dot(candidate.col(j)));
  std::vector<int> perm(n, -1);
  std::vector<bool> row_used(n, false), col_used(n, false);
  for (int pick = 0; pick < n; ++pick) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (row_used[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (col_used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    perm[bi] = bj;
    row_used[bi] = true;
    col_used[bj] = true;
  }
  return perm;
}

void phase_fix(Vec& v) {
  v.normalize();
  int arg = 0;
  double best = -1.0;
  for (int k = 0; k < v.size(); ++k) {
    if (std::abs(v[k]) > best) {
      best = std::abs(v[k]);
      arg = k;
    }
  }
  const cx c = v[arg];
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

}  // namespace

EigenSystem1D::PointEigen EigenSystem1D::decompose_raw(double q) const {
  Mat m(n_, n_);
  field_.eval_into(q, m.data());
  // PolyMatrix::eval_into writes row-major order; Eigen default is
  // column-major, so transpose in place.
  m.transposeInPlace();
  Eigen::ComplexEigenSolver<Mat> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw numeric_error(std::string("eigendecomposition failed for ") + label_);
  PointEigen pe;
  pe.values = solver.eigenvalues();
  pe.basis = solver.eigenvectors();
  return pe;
}

void EigenSystem1D::order_and_phase(PointEigen& pe, const Mat* reference, const char* label,
                                    double q) {
  const int n = static_cast<int>(pe.values.size());
  std::vector<int> perm(n);
  if (reference == nullptr) {
    // Deterministic initial order: lexicographic by (Re, Im).
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](int a, int b) {
      const cx la = pe.values[a], lb = pe.values[b];
      if (la.real() != lb.real()) return la.real() < lb.real();
      return la.imag() < lb.imag();
    });
  } else {
    perm = match_by_overlap(*reference, pe.basis);
  }
  Vec values(n);
  Mat basis(n, n);
  for (int i = 0; i < n; ++i) {
    values[i] = pe.values[perm[i]];
    basis.col(i) = pe.basis.col(perm[i]);
  }
  for (int i = 0; i < n; ++i) {
    Vec col = basis.col(i);
    phase_fix(col);
    basis.col(i) = col;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(values[i] - values[j]) < kCollisionTol) {
        std::ostringstream os;
        os << "eigenvalue collision for " << label << " at sample " << q << " (indices " << i
           << "," << j << ")";
        throw degeneracy_error(os.str());
      }
  pe.values = values;
  pe.basis = basis;
  // Dual system from the inverse: rows of B^{-1} give exactly biorthonormal
  // adjoint eigenvectors for distinct eigenvalues.
  Eigen::FullPivLU<Mat> lu(basis);
  if (!lu.isInvertible())
    throw degeneracy_error(std::string("eigenvector basis is singular for ") + label);
  pe.dual = lu.inverse().adjoint();
}

EigenSystem1D::EigenSystem1D(PolyMatrix field, std::vector<double> grid, const char* label)
    : n_(field.n), grid_(std::move(grid)), field_(std::move(field)), label_(label) {
  if (grid_.size() < 2) throw spec_error("eigendecomposition grid too small");
  values_.resize(grid_.size() * n_);
  basis_.resize(grid_.size());
  dual_.resize(grid_.size());
  const Mat* reference = nullptr;
  for (std::size_t m = 0; m < grid_.size(); ++m) {
    PointEigen pe = decompose_raw(grid_[m]);
    order_and_phase(pe, reference, label_, grid_[m]);
    for (int i = 0; i < n_; ++i) values_[m * n_ + i] = pe.values[i];
    basis_[m] = pe.basis;
    dual_[m] = pe.dual;
    reference = &basis_[m];
  }
}

EigenSystem1D::PointEigen EigenSystem1D::at(double q) const {
  const std::size_t seg = locate(grid_, q);
  const std::size_t nearest =
      (std::abs(q - grid_[seg]) <= std::abs(grid_[seg + 1] - q)) ? seg : seg + 1;
  PointEigen pe = decompose_raw(q);
  order_and_phase(pe, &basis_[nearest], label_, q);
  return pe;
}

cx EigenSystem1D::value_at(int i, double q) const { return at(q).values[i]; }

Vec EigenSystem1D::basis_vector_at(int i, double q) const { return at(q).basis.col(i); }

double EigenSystem1D::max_eigen_residual() const {
  double worst = 0.0;
  Mat m(n_, n_);
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    field_.eval_into(grid_[k], m.data());
    m.transposeInPlace();
    const double scale = std::max(m.norm(), 1e-30);
    for (int i = 0; i < n_; ++i) {
      const double r = (m * basis_[k].col(i) - values_[k * n_ + i] * basis_[k].col(i)).norm();
      worst = std::max(worst, r / scale);
    }
  }
  return worst;
}

double EigenSystem1D::max_biorth_residual() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    const Mat gram = dual_[k].adjoint() * basis_[k];
    worst = std::max(worst, (gram - Mat::Identity(n_, n_)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double EigenSystem1D::max_vector_jump() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < grid_.size(); ++k)
    for (int i = 0; i < n_; ++i)
      worst = std::max(worst, (basis_[k].col(i) - basis_[k - 1].col(i)).norm());
  return worst;
}

EigenSystem1D decompose_spatial(const ProblemSpec& spec, const std::vector<double>& x_grid) {
  spec.basic_checks();
  return EigenSystem1D(spec.A, x_grid, "A(x)");
}

EigenSystem1D decompose_temporal(const ProblemSpec& spec, const std::vector<double>& t_grid,
                                 std::vector<std::vector<cx>>* alpha_out) {
  spec.basic_checks();
  EigenSystem1D tp(spec.D, t_grid, "D(t)");
  if (alpha_out != nullptr) {
    const int n = spec.n;
    const std::size_t nt = t_grid.size();
    if (nt < 3) throw spec_error("temporal grid too small for alpha");
    alpha_out->assign(nt, std::vector<cx>(static_cast<std::size_t>(n) * n, cx(0, 0)));
    for (std::size_t m = 0; m < nt; ++m) {
      Mat dpsi(n, n);
      for (int i = 0; i < n; ++i) {
        Vec der(n);
        if (m == 0) {
          const double h1 = t_grid[1] - t_grid[0], h2 = t_grid[2] - t_grid[1];
          const double d0 = -(2 * h1 + h2) / (h1 * (h1 + h2));
          const double d1 = (h1 + h2) / (h1 * h2);
          const double d2 = -h1 / (h2 * (h1 + h2));
          der = d0 * tp.basis(0).col(i) + d1 * tp.basis(1).col(i) + d2 * tp.basis(2).col(i);
        } else if (m == nt - 1) {
          const double h1 = t_grid[nt - 1] - t_grid[nt - 2],
                       h2 = t_grid[nt - 2] - t_grid[nt - 3];
          const double d0 = (2 * h1 + h2) / (h1 * (h1 + h2));
          const double d1 = -(h1 + h2) / (h1 * h2);
          const double d2 = h1 / (h2 * (h1 + h2));
          der = d0 * tp.basis(nt - 1).col(i) + d1 * tp.basis(nt - 2).col(i) +
                d2 * tp.basis(nt - 3).col(i);
        } else {
          const double hm = t_grid[m] - t_grid[m - 1], hp = t_grid[m + 1] - t_grid[m];
          const double dm = -hp / (hm * (hm + hp));
          const double dc = (hp - hm) / (hm * hp);
          const double dp = hm / (hp * (hm + hp));
          der = dm * tp.basis(m - 1).col(i) + dc * tp.basis(m).col(i) +
                dp * tp.basis(m + 1).col(i);
        }
        dpsi.col(i) = der;
      }
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < n; ++r)
          (*alpha_out)[m][static_cast<std::size_t>(i) * n + r] =
              inner(dpsi.col(i), tp.dual(m).col(r));
    }
  }
  return tp;
}

SpectralData build_spectral(const ProblemSpec& spec, std::size_t x_nodes, std::size_t t_nodes) {
  SpectralData sd;
  sd.spec = spec;
  sd.spatial = decompose_spatial(spec, uniform_nodes(0.0, 1.0, x_nodes));
  sd.temporal = decompose_temporal(spec, uniform_nodes(0.0, spec.T, t_nodes), &sd.alpha);
  return sd;
}

Mat SpectralData::alpha_at(double t) const {
  const int n = spec.n;
  const auto& grid = temporal.grid();
  const std::size_t seg = locate(grid, t);
  const double w = (t - grid[seg]) / (grid[seg + 1] - grid[seg]);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < n; ++r) {
      const std::size_t idx = static_cast<std::size_t>(i) * n + r;
      a(i, r) = (1.0 - w) * alpha[seg][idx] + w * alpha[seg + 1][idx];
    }
  return a;
}

Vec SpectralData::beta0() const {
  Vec b(spec.n);
  for (int j = 0; j < spec.n; ++j) b[j] = temporal.value(j, 0);
  return b;
}

cx SpectralData::gamma_exact(int i, int r, double x, double t) const {
  const int n = spec.n;
  Mat d(n, n);
  spec.D.eval_into(t, d.data());
  d.transposeInPlace();
  const auto px = spatial.at(x);
  return inner(d * px.basis.col(i), px.dual.col(r));
}

cx SpectralData::kappa_exact(int i, int r, double x, double t) const {
  const int n = spec.n;
  Mat a(n, n);
  spec.A.eval_into(x, a.data());
  a.transposeInPlace();
  const auto pt = temporal.at(t);
  return inner(a * pt.basis.col(i), pt.dual.col(r));
}

namespace {

CouplingField tabulate_coupling(const SpectralData& sd, const Grid2Ptr& grid, bool gamma) {
  const int n = sd.spec.n;
  CouplingField cf;
  cf.n = n;
  cf.entries.assign(static_cast<std::size_t>(n) * n, Field2(grid));
  const std::size_t nx = grid->nx(), nt = grid->nt();
  // Cache the pointwise eigen data once per coordinate; only the family the
  // coupling projects onto is needed.
  std::vector<EigenSystem1D::PointEigen> px, pt;
  if (gamma) {
    px.resize(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) px[ix] = sd.spatial.at(grid->xs[ix]);
  } else {
    pt.resize(nt);
    for (std::size_t it = 0; it < nt; ++it) pt[it] = sd.temporal.at(grid->ts[it]);
  }
  Mat m(n, n);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t it = 0; it < nt; ++it) {
      if (gamma)
        sd.spec.D.eval_into(grid->ts[it], m.data());
      else
        sd.spec.A.eval_into(grid->xs[ix], m.data());
      m.transposeInPlace();
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < n; ++r) {
          const cx v = gamma ? inner(m * px[ix].basis.col(i), px[ix].dual.col(r))
                             : inner(m * pt[it].basis.col(i), pt[it].dual.col(r));
          cf.entries[static_cast<std::size_t>(i) * n + r].at(ix, it) = v;
        }
    }
  }
  return cf;
}

}  // namespace

CouplingField coupling_gamma(const SpectralData& sd, const Grid2Ptr& grid) {
  return tabulate_coupling(sd, grid, /*gamma=*/true);
}

CouplingField coupling_kappa(const SpectralData& sd, const Grid2Ptr& grid) {
  return tabulate_coupling(sd, grid, /*gamma=*/false);
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

namespace {

nlohmann::json condition_json(const ConditionReport& c) {
  nlohmann::json j;
  j["pass"] = c.pass;
  j["margin"] = c.margin;
  j["where"] = c.where;
  j["detail"] = c.detail;
  return j;
}

}  // namespace

std::string AssumptionReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "perturba.assumptions/1";
  j["condition1_smoothness"] = condition_json(smoothness);
  j["condition2_spectrum_A"] = condition_json(spectrum_a);
  j["condition3_spectrum_D"] = condition_json(spectrum_d);
  j["condition4_boundary_match"] = condition_json(boundary_match);
  j["all_pass"] = all_pass();
  return j.dump(2);
}

AssumptionReport validate_assumptions(const ProblemSpec& spec, int grid_density) {
  spec.basic_checks();
  if (grid_density < 16) throw spec_error("validate_assumptions: grid_density must be >= 16");
  AssumptionReport rep;

  rep.smoothness.pass = true;
  rep.smoothness.margin = 0.0;
  rep.smoothness.detail = "polynomial coefficient fields are smooth by construction";

  const auto xs = uniform_nodes(0.0, 1.0, static_cast<std::size_t>(grid_density) + 1);
  const auto ts = uniform_nodes(0.0, spec.T, static_cast<std::size_t>(grid_density) + 1);
  const int n = spec.n;

  // Condition 2: Re lambda_i(x) > 0 and lambda distinct on [0,1]. Margins do
  // not need branch tracking, only the pointwise spectra.
  {
    double min_re = 1e300, min_gap = 1e300;
    double where_re = 0.0, where_gap = 0.0;
    Mat m(n, n);
    for (double x : xs) {
      spec.A.eval_into(x, m.data());
      m.transposeInPlace();
      Eigen::ComplexEigenSolver<Mat> es(m, false);
      const Vec lam = es.eigenvalues();
      for (int i = 0; i < n; ++i) {
        if (lam[i].real() < min_re) {
          min_re = lam[i].real();
          where_re = x;
        }
        for (int j = i + 1; j < n; ++j) {
          const double gap = std::abs(lam[i] - lam[j]);
          if (gap < min_gap) {
            min_gap = gap;
            where_gap = x;
          }
        }
      }
    }
    std::ostringstream os;
    os << "min Re(lambda) = " << min_re << " at x = " << where_re;
    if (n > 1) os << "; min pairwise gap = " << min_gap << " at x = " << where_gap;
    rep.spectrum_a.detail = os.str();
    rep.spectrum_a.margin = (n > 1) ? std::min(min_re, min_gap) : min_re;
    rep.spectrum_a.where = (n > 1 && min_gap < min_re) ? where_gap : where_re;
    rep.spectrum_a.pass = min_re > 0.0 && (n == 1 || min_gap > kCollisionTol);
  }

  // Condition 3: Re beta_j(t) <= 0 and beta_i(0) != beta_j(t) for i != j
  // (branch-tracked), plus the strengthened beta_j(0) != 0 required by the
  // degenerate-ODE startup.
  {
    double max_re = -1e300, where_re = 0.0;
    Mat m(n, n);
    for (double t : ts) {
      spec.D.eval_into(t, m.data());
      m.transposeInPlace();
      Eigen::ComplexEigenSolver<Mat> es(m, false);
      const Vec beta = es.eigenvalues();
      for (int j = 0; j < n; ++j)
        if (beta[j].real() > max_re) {
          max_re = beta[j].real();
          where_re = t;
        }
    }
    double min_cross = 1e300, where_cross = 0.0;
    double min_beta0 = 1e300;
    std::string track_note;
    bool track_ok = true;
    if (n > 1 || true) {
      try {
        EigenSystem1D tp(spec.D, ts, "D(t)");
        for (int j = 0; j < n; ++j)
          min_beta0 = std::min(min_beta0, std::abs(tp.value(j, 0)));
        for (std::size_t m2 = 0; m2 < ts.size(); ++m2)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              if (i == j) continue;
              const double gap = std::abs(tp.value(i, 0) - tp.value(j, m2));
              if (gap < min_cross) {
                min_cross = gap;
                where_cross = ts[m2];
              }
            }
      } catch (const degeneracy_error& e) {
        track_ok = false;
        track_note = e.what();
      }
    }
    std::ostringstream os;
    os << "max Re(beta) = " << max_re << " at t = " << where_re;
    if (track_ok) {
      if (n > 1) os << "; min |beta_i(0)-beta_j(t)| = " << min_cross << " at t = " << where_cross;
      os << "; min |beta_j(0)| = " << min_beta0;
    } else {
      os << "; branch tracking failed: " << track_note;
    }
    rep.spectrum_d.detail = os.str();
    rep.spectrum_d.margin = -max_re;
    rep.spectrum_d.where = where_re;
    rep.spectrum_d.pass = max_re <= 1e-12 && track_ok && min_beta0 > kCollisionTol &&
                          (n == 1 || min_cross > kCollisionTol);
  }

  // Condition 4: h(0) = h(1) = 0.
  {
    double s = 0.0;
    for (const Poly& comp : spec.h) s += std::abs(comp.eval(0.0)) + std::abs(comp.eval(1.0));
    rep.boundary_match.margin = s;
    rep.boundary_match.where = s > 0.0 ? (std::abs(spec.h[0].eval(0.0)) > 0 ? 0.0 : 1.0) : 0.0;
    rep.boundary_match.pass = s <= 1e-12;
    std::ostringstream os;
    os << "|h(0)| + |h(1)| = " << s;
    rep.boundary_match.detail = os.str();
  }

  return rep;
}

}  // namespace perturba
