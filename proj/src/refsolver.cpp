#include "perturba/refsolver.hpp"

#include <cmath>

namespace perturba {

LayerMesh build_mesh(double epsilon, std::size_t n_x, std::size_t n_t, double T,
                     const MeshOptions& opt) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw spec_error("build_mesh: epsilon must be in (0,1)");
  if (n_x < 16 || n_t < 16 || n_x % 4 != 0 || n_t % 4 != 0)
    throw spec_error("build_mesh: N_x and N_t must be >= 16 and divisible by 4");
  if (!(T > 0.0)) throw spec_error("build_mesh: T must be positive");

  LayerMesh mesh;
  const double log_inv = std::log(1.0 / epsilon);
  mesh.sigma_x = std::min(0.25, opt.c0 * epsilon * log_inv);
  mesh.sigma_t = std::min(0.5 * T, opt.c1 * epsilon * log_inv);

  // piecewise uniform: N/4 cells in each layer zone, N/2 in the interior
  const std::size_t quarter = n_x / 4;
  mesh.x_nodes.reserve(n_x + 1);
  for (std::size_t i = 0; i <= quarter; ++i)
    mesh.x_nodes.push_back(mesh.sigma_x * static_cast<double>(i) / quarter);
  for (std::size_t i = 1; i <= n_x / 2; ++i)
    mesh.x_nodes.push_back(mesh.sigma_x +
                           (1.0 - 2.0 * mesh.sigma_x) * static_cast<double>(i) / (n_x / 2));
  for (std::size_t i = 1; i <= quarter; ++i)
    mesh.x_nodes.push_back(1.0 - mesh.sigma_x +
                           mesh.sigma_x * static_cast<double>(i) / quarter);
  mesh.x_nodes.front() = 0.0;
  mesh.x_nodes.back() = 1.0;

  // graded time nodes: uniform in s = ln((t+eps)/eps)
  const double S = std::log((T + epsilon) / epsilon);
  mesh.t_nodes.resize(n_t + 1);
  for (std::size_t m = 0; m <= n_t; ++m) {
    const double s = S * static_cast<double>(m) / n_t;
    mesh.t_nodes[m] = epsilon * (std::exp(s) - 1.0);
  }
  mesh.t_nodes.front() = 0.0;
  mesh.t_nodes.back() = T;
  return mesh;
}

CoeffFields coeff_fields(const ProblemSpec& spec) {
  CoeffFields cf;
  cf.n = spec.n;
  const PolyMatrix A = spec.A, D = spec.D;
  const std::vector<Poly2> f = spec.f;
  const std::vector<Poly> h = spec.h;
  const int n = spec.n;
  cf.A = [A, n](double x) {
    Mat m(n, n);
    A.eval_into(x, m.data());
    m.transposeInPlace();
    return m;
  };
  cf.D = [D, n](double t) {
    Mat m(n, n);
    D.eval_into(t, m.data());
    m.transposeInPlace();
    return m;
  };
  cf.f = [f, n](double x, double t) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = cx(f[i].eval(x, t), 0.0);
    return v;
  };
  cf.h = [h, n](double x) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = cx(h[i].eval(x), 0.0);
    return v;
  };
  return cf;
}

namespace {

// Block tridiagonal Thomas solve; blocks are overwritten.
void block_thomas(std::vector<Mat>& lower, std::vector<Mat>& diag, std::vector<Mat>& upper,
                  std::vector<Vec>& rhs, std::size_t count, std::size_t step_index) {
  for (std::size_t i = 1; i < count; ++i) {
    Eigen::PartialPivLU<Mat> lu(diag[i - 1]);
    const Mat factor = lower[i] * lu.inverse();
    if (!factor.allFinite())
      throw numeric_error("reference solver: block elimination broke down at time step " +
                          std::to_string(step_index));
    diag[i] -= factor * upper[i - 1];
    rhs[i] -= factor * rhs[i - 1];
  }
  Eigen::PartialPivLU<Mat> lu(diag[count - 1]);
  rhs[count - 1] = lu.solve(rhs[count - 1]);
  for (std::size_t i = count - 1; i-- > 0;) {
    Eigen::PartialPivLU<Mat> lui(diag[i]);
    rhs[i] = lui.solve(rhs[i] - upper[i] * rhs[i + 1]);
  }
}

struct SpaceOperator {
  // second-order central second difference weights on the nonuniform mesh
  std::vector<double> wm, wc, wp;  // per interior node
  std::vector<Mat> A_at;           // eps^2 A(x_i)
};

}  // namespace

GridField solve_reference(const CoeffFields& coeffs, double epsilon, const LayerMesh& mesh,
                          Scheme scheme, bool rannacher) {
  const int n = coeffs.n;
  const std::size_t nx = mesh.x_nodes.size(), nt = mesh.t_nodes.size();
  if (nx < 3 || nt < 2) throw spec_error("reference solver: mesh too small");
  const std::size_t ni = nx - 2;  // interior unknowns

  GridField out;
  out.xs = mesh.x_nodes;
  out.ts = mesh.t_nodes;
  out.dim = n;
  out.epsilon = epsilon;
  out.order = -1;
  out.provenance = "reference";
  out.values.assign(nx * nt * static_cast<std::size_t>(n), cx(0, 0));

  SpaceOperator op;
  op.wm.resize(ni);
  op.wc.resize(ni);
  op.wp.resize(ni);
  op.A_at.resize(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    const double hm = mesh.x_nodes[i + 1] - mesh.x_nodes[i];
    const double hp = mesh.x_nodes[i + 2] - mesh.x_nodes[i + 1];
    op.wm[i] = 2.0 / (hm * (hm + hp));
    op.wc[i] = -2.0 / (hm * hp);
    op.wp[i] = 2.0 / (hp * (hm + hp));
    op.A_at[i] = (epsilon * epsilon) * coeffs.A(mesh.x_nodes[i + 1]);
  }

  // initial row
  std::vector<Vec> u(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    u[i] = coeffs.h(mesh.x_nodes[i + 1]);
    for (int comp = 0; comp < n; ++comp) out.at(i + 1, 0, comp) = u[i][comp];
  }

  std::vector<Mat> lower(ni), diag(ni), upper(ni);
  std::vector<Vec> rhs(ni);

  // one implicit step t0 -> t1 with weight theta in [1/2, 1]:
  // (eps+tc)(u1-u0)/dt = theta [L u1 + f1] + (1-theta)[L u0 + f0],
  // tc = t1 for implicit Euler (theta = 1), midpoint for Crank-Nicolson.
  auto advance = [&](double t0, double t1, double theta, std::size_t step_index) {
    const double dt = t1 - t0;
    const double tc = (theta == 1.0) ? t1 : 0.5 * (t0 + t1);
    const double lead = (epsilon + tc) / dt;
    const Mat D0 = coeffs.D(t0), D1 = coeffs.D(t1);
    for (std::size_t i = 0; i < ni; ++i) {
      lower[i] = -theta * op.wm[i] * op.A_at[i];
      upper[i] = -theta * op.wp[i] * op.A_at[i];
      diag[i] = lead * Mat::Identity(n, n) - theta * (op.wc[i] * op.A_at[i] + D1);
      // explicit part
      Vec expl = lead * u[i];
      if (theta != 1.0) {
        Vec lu0 = op.wc[i] * (op.A_at[i] * u[i]) + D0 * u[i];
        if (i > 0) lu0 += op.wm[i] * (op.A_at[i] * u[i - 1]);
        if (i + 1 < ni) lu0 += op.wp[i] * (op.A_at[i] * u[i + 1]);
        expl += (1.0 - theta) * (lu0 + coeffs.f(mesh.x_nodes[i + 1], t0));
      }
      expl += theta * coeffs.f(mesh.x_nodes[i + 1], t1);
      rhs[i] = expl;
    }
    block_thomas(lower, diag, upper, rhs, ni, step_index);
    for (std::size_t i = 0; i < ni; ++i) u[i] = rhs[i];
  };

  for (std::size_t m = 0; m + 1 < nt; ++m) {
    const double t0 = mesh.t_nodes[m], t1 = mesh.t_nodes[m + 1];
    if (scheme == Scheme::implicit_euler) {
      advance(t0, t1, 1.0, m);
    } else if (m == 0 && rannacher) {
      // two implicit-Euler half steps damp the startup transient without
      // losing the global second order
      const double tm = 0.5 * (t0 + t1);
      advance(t0, tm, 1.0, m);
      advance(tm, t1, 1.0, m);
    } else {
      advance(t0, t1, 0.5, m);
    }
    for (std::size_t i = 0; i < ni; ++i)
      for (int comp = 0; comp < n; ++comp) out.at(i + 1, m + 1, comp) = u[i][comp];
  }
  out.check_finite();
  return out;
}

GridField solve_reference(const ProblemSpec& spec, double epsilon, const LayerMesh& mesh,
                          Scheme scheme, bool rannacher) {
  spec.basic_checks();
  return solve_reference(coeff_fields(spec), epsilon, mesh, scheme, rannacher);
}

}  // namespace perturba
