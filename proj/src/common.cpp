#include "perturba/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace perturba {

std::vector<double> uniform_nodes(double a, double b, std::size_t count) {
  if (count < 2) throw spec_error("uniform_nodes: need at least 2 nodes");
  std::vector<double> xs(count);
  for (std::size_t i = 0; i < count; ++i)
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  xs.front() = a;
  xs.back() = b;
  return xs;
}

std::size_t locate(const std::vector<double>& nodes, double q) {
  if (nodes.size() < 2) return 0;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), q);
  std::size_t idx = (it == nodes.begin()) ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(idx, nodes.size() - 2);
}

Grid2Ptr make_grid(std::vector<double> xs, std::vector<double> ts) {
  auto g = std::make_shared<Grid2>();
  g->xs = std::move(xs);
  g->ts = std::move(ts);
  return g;
}

cx Field2::eval(double x, double t) const {
  const auto& xs = grid->xs;
  const auto& ts = grid->ts;
  const std::size_t ix = locate(xs, x);
  const std::size_t it = locate(ts, t);
  const double wx = (x - xs[ix]) / (xs[ix + 1] - xs[ix]);
  const double wt = (t - ts[it]) / (ts[it + 1] - ts[it]);
  const cx f00 = at(ix, it), f01 = at(ix, it + 1);
  const cx f10 = at(ix + 1, it), f11 = at(ix + 1, it + 1);
  return (1.0 - wx) * ((1.0 - wt) * f00 + wt * f01) + wx * ((1.0 - wt) * f10 + wt * f11);
}

double Field2::max_abs() const {
  double m = 0.0;
  for (const cx& v : values) m = std::max(m, std::abs(v));
  return m;
}

Field2 tabulate(const Grid2Ptr& g, const std::function<cx(double, double)>& fn) {
  Field2 f(g);
  for (std::size_t ix = 0; ix < g->nx(); ++ix)
    for (std::size_t it = 0; it < g->nt(); ++it) f.at(ix, it) = fn(g->xs[ix], g->ts[it]);
  return f;
}

Field2 dt_field(const Field2& f) {
  const auto& ts = f.grid->ts;
  const std::size_t nx = f.grid->nx(), nt = f.grid->nt();
  Field2 out(f.grid);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t it = 0; it < nt; ++it) {
      if (it == 0) {
        const double h1 = ts[1] - ts[0], h2 = ts[2] - ts[1];
        // three-point one-sided, second order on (possibly) nonuniform nodes
        const double d0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
        const double d1 = (h1 + h2) / (h1 * h2);
        const double d2 = -h1 / (h2 * (h1 + h2));
        out.at(ix, 0) = d0 * f.at(ix, 0) + d1 * f.at(ix, 1) + d2 * f.at(ix, 2);
      } else if (it == nt - 1) {
        const double h1 = ts[nt - 1] - ts[nt - 2], h2 = ts[nt - 2] - ts[nt - 3];
        const double d0 = (2.0 * h1 + h2) / (h1 * (h1 + h2));
        const double d1 = -(h1 + h2) / (h1 * h2);
        const double d2 = h1 / (h2 * (h1 + h2));
        out.at(ix, nt - 1) =
            d0 * f.at(ix, nt - 1) + d1 * f.at(ix, nt - 2) + d2 * f.at(ix, nt - 3);
      } else {
        const double hm = ts[it] - ts[it - 1], hp = ts[it + 1] - ts[it];
        const double dm = -hp / (hm * (hm + hp));
        const double dc = (hp - hm) / (hm * hp);
        const double dp = hm / (hp * (hm + hp));
        out.at(ix, it) = dm * f.at(ix, it - 1) + dc * f.at(ix, it) + dp * f.at(ix, it + 1);
      }
    }
  }
  return out;
}

Field2 dxx_field(const Field2& f) {
  const auto& xs = f.grid->xs;
  const std::size_t nx = f.grid->nx(), nt = f.grid->nt();
  if (nx < 4) throw spec_error("dxx_field: grid too coarse");
  Field2 out(f.grid);
  auto second = [&](std::size_t i0, std::size_t ix, std::size_t it) {
    // second derivative from the quadratic through nodes i0, i0+1, i0+2
    const double h1 = xs[i0 + 1] - xs[i0], h2 = xs[i0 + 2] - xs[i0 + 1];
    (void)ix;
    const cx a = f.at(i0, it), b = f.at(i0 + 1, it), c = f.at(i0 + 2, it);
    return 2.0 * (h2 * a - (h1 + h2) * b + h1 * c) / (h1 * h2 * (h1 + h2));
  };
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const std::size_t i0 = (ix == 0) ? 0 : (ix == nx - 1 ? nx - 3 : ix - 1);
    for (std::size_t it = 0; it < nt; ++it) out.at(ix, it) = second(i0, ix, it);
  }
  return out;
}

std::vector<cx> slice_t(const Field2& f, std::size_t it) {
  std::vector<cx> out(f.grid->nx());
  for (std::size_t ix = 0; ix < out.size(); ++ix) out[ix] = f.at(ix, it);
  return out;
}

std::vector<cx> slice_x(const Field2& f, std::size_t ix) {
  std::vector<cx> out(f.grid->nt());
  for (std::size_t it = 0; it < out.size(); ++it) out[it] = f.at(ix, it);
  return out;
}

cx Table1::eval(double q) const {
  const std::size_t i = locate(nodes, q);
  const double w = (q - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double Table1::max_abs() const {
  double m = 0.0;
  for (const cx& v : values) m = std::max(m, std::abs(v));
  return m;
}

CubicTable::CubicTable(double a, double b, std::vector<double> vals)
    : a_(a), b_(b), v_(std::move(vals)) {
  const std::size_t n = v_.size();
  if (n < 4) throw spec_error("CubicTable: need at least 4 nodes");
  h_ = (b_ - a_) / static_cast<double>(n - 1);
  s_.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) s_[i] = (v_[i + 1] - v_[i - 1]) / (2.0 * h_);
  s_[0] = (-3.0 * v_[0] + 4.0 * v_[1] - v_[2]) / (2.0 * h_);
  s_[n - 1] = (3.0 * v_[n - 1] - 4.0 * v_[n - 2] + v_[n - 3]) / (2.0 * h_);
}

CubicTable::CubicTable(double a, double b, std::vector<double> vals, std::vector<double> slopes)
    : a_(a), b_(b), v_(std::move(vals)), s_(std::move(slopes)) {
  if (v_.size() < 2 || v_.size() != s_.size()) throw spec_error("CubicTable: bad node data");
  h_ = (b_ - a_) / static_cast<double>(v_.size() - 1);
}

double CubicTable::eval(double q) const {
  const std::size_t n = v_.size();
  double u = (q - a_) / h_;
  std::size_t i = (u <= 0.0) ? 0 : std::min(static_cast<std::size_t>(u), n - 2);
  const double w = u - static_cast<double>(i);
  const double w2 = w * w, w3 = w2 * w;
  const double h00 = 2 * w3 - 3 * w2 + 1, h10 = w3 - 2 * w2 + w;
  const double h01 = -2 * w3 + 3 * w2, h11 = w3 - w2;
  return h00 * v_[i] + h10 * h_ * s_[i] + h01 * v_[i + 1] + h11 * h_ * s_[i + 1];
}

double CubicTable::deriv(double q) const {
  const std::size_t n = v_.size();
  double u = (q - a_) / h_;
  std::size_t i = (u <= 0.0) ? 0 : std::min(static_cast<std::size_t>(u), n - 2);
  const double w = u - static_cast<double>(i);
  const double d00 = (6 * w * w - 6 * w) / h_, d10 = 3 * w * w - 4 * w + 1;
  const double d01 = (-6 * w * w + 6 * w) / h_, d11 = 3 * w * w - 2 * w;
  return d00 * v_[i] + d10 * s_[i] + d01 * v_[i + 1] + d11 * s_[i + 1];
}

cx principal_sqrt(cx z) { return std::sqrt(z); }

cx principal_pow(cx base, cx expo) {
  if (base == cx(0.0, 0.0)) return cx(0.0, 0.0);
  return std::exp(expo * std::log(base));
}

std::vector<cx> unwrapped_log(const std::vector<cx>& path) {
  std::vector<cx> out(path.size());
  double prev_arg = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double mag = std::abs(path[i]);
    if (mag == 0.0) throw numeric_error("unwrapped_log: path passes through zero");
    double arg = std::arg(path[i]);
    if (i > 0) {
      const double two_pi = 2.0 * M_PI;
      while (arg - prev_arg > M_PI) arg -= two_pi;
      while (arg - prev_arg < -M_PI) arg += two_pi;
    }
    out[i] = cx(std::log(mag), arg);
    prev_arg = arg;
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::size_t thread_limit() {
  if (const char* env = std::getenv("PERTURBA_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t nthreads = std::min(thread_limit(), std::max<std::size_t>(count, 1));
  if (nthreads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex guard;
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < count; i += nthreads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace perturba
