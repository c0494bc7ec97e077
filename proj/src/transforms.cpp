#include "llab/transforms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>

namespace llab {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place 2-D DFT of an M x M array; sign = FFTW_FORWARD or FFTW_BACKWARD (unnormalized).
void fft2(std::vector<cplx>& a, int M, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan = fftw_plan_dft_2d(M, M, p, p, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(planner_mutex());
  fftw_destroy_plan(plan);
}

std::vector<cplx> padded(const GridField& f) {
  const int N = f.grid.N, M = N * f.grid.padding;
  std::vector<cplx> a(std::size_t(M) * M, cplx(0));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) a[std::size_t(i) * M + j] = f(i, j);
  return a;
}

double wavenumber(int a, int M, double h) {
  const int f = a < M / 2 ? a : a - M;
  return 2 * kPi * f / (M * h);
}

// Applies a multiplier in frequency space; returns the full period and the mean of the input.
std::vector<cplx> apply_multiplier(const GridField& f, const std::function<cplx(cplx)>& m, cplx* mean = nullptr) {
  const int M = f.grid.N * f.grid.padding;
  auto a = padded(f);
  fft2(a, M, FFTW_FORWARD);
  if (mean) *mean = a[0] / double(M) / double(M);
  for (int p = 0; p < M; ++p)
    for (int q = 0; q < M; ++q) {
      const cplx kappa(wavenumber(p, M, f.grid.h), wavenumber(q, M, f.grid.h));
      a[std::size_t(p) * M + q] *= m(kappa);
    }
  fft2(a, M, FFTW_BACKWARD);
  for (auto& x : a) x /= double(M) * double(M);
  return a;
}

GridField restrict_to_box(const UniformComplexGrid& g, const std::vector<cplx>& a) {
  const int M = g.N * g.padding;
  GridField out = grid_zero(g);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) out(i, j) = a[std::size_t(i) * M + j];
  return out;
}

std::pair<int, int> nearest_origin(const UniformComplexGrid& g) { return {g.N / 2, g.N / 2}; }

}  // namespace

UniformComplexGrid make_grid(int N, double mask_radius, double margin, int padding) {
  if (N < 4 || (N & (N - 1)) != 0) throw PreconditionError("make_grid: N must be a power of two >= 4");
  if (!(mask_radius > 0) || !(margin >= 1) || padding < 1) throw PreconditionError("make_grid: bad geometry");
  UniformComplexGrid g;
  g.N = N;
  g.half_width = margin * mask_radius;
  g.h = 2 * g.half_width / N;
  g.mask_radius = mask_radius;
  g.padding = padding;
  return g;
}

GridField grid_zero(const UniformComplexGrid& g) { return {g, Eigen::VectorXcd::Zero(Eigen::Index(g.size()))}; }

GridField sample(const UniformComplexGrid& g, const ComplexFn& f) {
  GridField out = grid_zero(g);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j)
      if (g.in_mask(i, j)) out(i, j) = f(g.point(i, j));
  return out;
}

GridField sample(const UniformComplexGrid& g, const ComplexField& f) {
  PointLocator loc(f.mesh);
  GridField out = grid_zero(g);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      if (!g.in_mask(i, j)) continue;
      std::array<double, 3> b;
      const int t = loc.locate(g.point(i, j), b);
      if (t < 0) continue;
      const auto& T = f.mesh->tris[std::size_t(t)];
      out(i, j) = b[0] * f.values[T[0]] + b[1] * f.values[T[1]] + b[2] * f.values[T[2]];
    }
  return out;
}

namespace {

GridField partial(const GridField& f, int dir) {
  const auto& g = f.grid;
  GridField out = grid_zero(g);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      int i0 = i, i1 = i, j0 = j, j1 = j;
      if (dir == 0) {
        i0 = std::max(i - 1, 0);
        i1 = std::min(i + 1, g.N - 1);
      } else {
        j0 = std::max(j - 1, 0);
        j1 = std::min(j + 1, g.N - 1);
      }
      const double span = g.h * (dir == 0 ? i1 - i0 : j1 - j0);
      out(i, j) = (f(i1, j1) - f(i0, j0)) / span;
    }
  return out;
}

}  // namespace

GridField grid_dbar(const GridField& f) {
  GridField fx = partial(f, 0), fy = partial(f, 1);
  fx.v = 0.5 * (fx.v + cplx(0, 1) * fy.v);
  return fx;
}

GridField grid_d(const GridField& f) {
  GridField fx = partial(f, 0), fy = partial(f, 1);
  fx.v = 0.5 * (fx.v - cplx(0, 1) * fy.v);
  return fx;
}

double grid_norm(const GridField& f, double s, bool mask_only) {
  const auto& g = f.grid;
  double acc = 0;
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      if (mask_only && !g.in_mask(i, j)) continue;
      const double a = std::abs(f(i, j));
      if (s == kInf)
        acc = std::max(acc, a);
      else
        acc += std::pow(a, s) * g.h * g.h;
    }
  return s == kInf ? acc : std::pow(acc, 1.0 / s);
}

cplx cauchy_direct(const GridField& omega, const Vec2& z) {
  const auto& g = omega.grid;
  const cplx zz(z[0], z[1]);
  cplx acc = 0;
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      const cplx w = omega(i, j);
      if (w == cplx(0)) continue;
      const Vec2 p = g.point(i, j);
      const cplx d = zz - cplx(p[0], p[1]);
      if (std::abs(d) < 1e-9 * g.h) continue;  // principal value over the self cell vanishes
      acc += w / d;
    }
  return acc * g.h * g.h / kPi;
}

GridField cauchy_transform(const GridField& omega) {
  const auto& g = omega.grid;
  cplx mean;
  const auto a = apply_multiplier(
      omega, [](cplx k) { return std::abs(k) > 0 ? 1.0 / (cplx(0, 0.5) * k) : cplx(0); }, &mean);
  GridField out = restrict_to_box(g, a);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) out(i, j) += mean * (2.0 * g.point(i, j)[0]);
  const auto [i0, j0] = nearest_origin(g);
  const cplx shift = cauchy_direct(omega, g.point(i0, j0)) - out(i0, j0);
  out.v.array() += shift;
  return out;
}

GridField beurling_transform(const GridField& omega) {
  const auto a = apply_multiplier(omega, [](cplx k) { return std::abs(k) > 0 ? std::conj(k) / k : cplx(1); });
  return restrict_to_box(omega.grid, a);
}

double beurling_isometry_ratio(const GridField& omega) {
  const auto a = apply_multiplier(omega, [](cplx k) { return std::abs(k) > 0 ? std::conj(k) / k : cplx(1); });
  double s2 = 0;
  for (const auto& x : a) s2 += std::norm(x);
  const double w2 = omega.v.squaredNorm();
  return w2 > 0 ? std::sqrt(s2 / w2) : 1.0;
}

double working_exponent(double t) {
  if (!(t >= 2)) throw PreconditionError("working_exponent: t must be >= 2");
  // Unbounded t is capped; S is not bounded on L^inf.
  return std::min({t, 2 + (t - 2) / 2, 4.0});
}

double estimate_Cp(const UniformComplexGrid& g, double p) {
  if (p == 2) return 1.0;
  std::mt19937 rng(20240917u);
  std::normal_distribution<double> N01;
  std::vector<GridField> probes;
  probes.push_back(sample(g, [](const Vec2&) { return cplx(1); }));
  probes.push_back(sample(g, [&g](const Vec2& x) { return cplx(x[0] / g.mask_radius, 0); }));
  probes.push_back(sample(g, [&g](const Vec2& x) {
    const double r = x.norm() / g.mask_radius;
    return cplx(std::exp(-1 / std::max(1e-12, 1 - r * r)), 0);
  }));
  for (int k = 0; k < 4; ++k) probes.push_back(sample(g, [&](const Vec2&) { return cplx(N01(rng), N01(rng)); }));
  double best = 1.0;
  for (const auto& w : probes) {
    const double nw = grid_norm(w, p);
    if (nw > 0) best = std::max(best, grid_norm(beurling_transform(w), p) / nw);
  }
  return best;
}

namespace {

double full_norm(const Eigen::VectorXcd& v) { return v.norm(); }

}  // namespace

SimilarityFactorization solve_integral_equation(const GridField& w, const GridField& q0, const GridField& h, double t,
                                                const SimilarityOptions& opt) {
  const auto& g = w.grid;
  SimilarityFactorization out;
  out.q0 = q0;
  out.h_rhs = h;
  out.p = working_exponent(t);
  out.Cp = estimate_Cp(g, out.p);
  const double qsup = grid_norm(q0, kInf, false);
  out.contraction = qsup * out.Cp;
  if (!(out.contraction < 1)) {
    throw PreconditionError("solve_similarity: contraction factor " + std::to_string(out.contraction) + " >= 1");
  }

  const double hn = full_norm(h.v);
  out.omega = h;
  auto residual_of = [&](const GridField& om, GridField* Sout) {
    GridField S = beurling_transform(om);
    const Eigen::VectorXcd r = om.v + q0.v.cwiseProduct(S.v) - h.v;
    if (Sout) *Sout = std::move(S);
    return hn > 0 ? full_norm(r) / hn : full_norm(r);
  };
  GridField S;
  double res = residual_of(out.omega, &S);
  out.history.push_back(res);
  while (res > opt.tol && out.iterations < opt.max_iter) {
    out.omega.v = h.v - q0.v.cwiseProduct(S.v);
    ++out.iterations;
    res = residual_of(out.omega, &S);
    out.history.push_back(res);
  }
  if (out.iterations == 0) out.iterations = 1;  // omega = h is the first iterate
  out.residual = res;
  if (res > opt.tol) throw NumericalError("solve_similarity: no convergence, residual " + std::to_string(res));

  out.T_omega = cauchy_transform(out.omega);
  out.g = grid_zero(g);
  out.f = grid_zero(g);
  out.g.v = out.T_omega.v.array().exp().matrix();
  out.f.v = w.v.cwiseProduct((-out.T_omega.v).array().exp().matrix());

  double wmax = 0, perr = 0;
  for (Eigen::Index k = 0; k < w.v.size(); ++k) {
    if (!std::isfinite(std::abs(w.v[k]))) continue;
    wmax = std::max(wmax, std::abs(w.v[k]));
    perr = std::max(perr, std::abs(out.f.v[k] * out.g.v[k] - w.v[k]));
  }
  out.product_error = wmax > 0 ? perr / wmax : perr;

  // Beltrami residual of f away from the mask edge.
  const GridField fb = grid_dbar(out.f), fd = grid_d(out.f);
  double r2 = 0, n2 = 0;
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      if (g.point(i, j).norm() > g.mask_radius - 3 * g.h) continue;
      r2 += std::norm(fb(i, j) + q0(i, j) * fd(i, j));
      n2 += std::norm(fb(i, j)) + std::norm(fd(i, j));
    }
  out.Dw_residual = n2 > 0 ? std::sqrt(r2 / n2) : std::sqrt(r2);
  return out;
}

SimilarityFactorization solve_similarity(const GridField& w, const GridField& q1, const GridField& q2,
                                         const GridField& A, const GridField& B, double t,
                                         const SimilarityOptions& opt) {
  const auto& g = w.grid;
  double a0 = 0;
  for (Eigen::Index k = 0; k < q1.v.size(); ++k) a0 = std::max(a0, std::abs(q1.v[k]) + std::abs(q2.v[k]));
  if (!(a0 < 1)) throw PreconditionError("solve_similarity: sup(|q1| + |q2|) must be < 1");
  const GridField dw = grid_d(w);
  GridField q0 = grid_zero(g), h = grid_zero(g);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) {
      if (!g.in_mask(i, j)) continue;
      const cplx d = dw(i, j), ww = w(i, j);
      q0(i, j) = std::abs(d) < opt.zero_threshold ? q1(i, j) + q2(i, j) : q1(i, j) + q2(i, j) * std::conj(d) / d;
      const bool regular = std::abs(ww) >= opt.zero_threshold && std::isfinite(std::abs(ww));
      h(i, j) = regular ? A(i, j) + B(i, j) * std::conj(ww) / ww : A(i, j) + B(i, j);
    }
  return solve_integral_equation(w, q0, h, t, opt);
}

ExpMoment exp_moment(const GridField& hf, double s, double r) {
  const auto& g = hf.grid;
  std::vector<double> e;
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j)
      if (g.point(i, j).norm() < r) e.push_back(s * std::abs(hf(i, j)));
  if (e.empty()) throw DomainError("exp_moment: no grid points in B_r");
  const double mx = *std::max_element(e.begin(), e.end());
  double acc = 0;
  for (double x : e) acc += std::exp(x - mx);
  ExpMoment out;
  out.samples = int(e.size());
  out.log_value = mx + std::log(acc / double(e.size()));
  out.value = out.log_value > 700 ? kInf : std::exp(out.log_value);
  return out;
}

EnvelopeFit fit_envelope(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
  const Eigen::Index n = Eigen::Index(y.size()), k = Eigen::Index(cols.size()) + 1;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1;
    for (Eigen::Index c = 1; c < k; ++c) X(i, c) = cols[std::size_t(c - 1)][std::size_t(i)];
    Y[i] = y[std::size_t(i)];
  }
  Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
  const Eigen::VectorXd r = Y - X * beta;
  EnvelopeFit out;
  out.max_violation = std::max(0.0, r.maxCoeff());
  beta[0] += out.max_violation;
  out.coef.assign(beta.data(), beta.data() + k);
  return out;
}

static_assert(std::endian::native == std::endian::little, "binary grid layout assumes a little-endian host");

void write_grid_binary(const GridField& f, std::ostream& os) {
  os.write("LLAB", 4);
  const std::uint32_t N = std::uint32_t(f.grid.N);
  os.write(reinterpret_cast<const char*>(&N), 4);
  os.write(reinterpret_cast<const char*>(&f.grid.h), 8);
  for (Eigen::Index k = 0; k < f.v.size(); ++k) {
    const double re = f.v[k].real(), im = f.v[k].imag();
    os.write(reinterpret_cast<const char*>(&re), 8);
    os.write(reinterpret_cast<const char*>(&im), 8);
  }
}

GridField read_grid_binary(std::istream& is, double mask_radius) {
  char magic[4];
  std::uint32_t N = 0;
  double h = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&N), 4);
  is.read(reinterpret_cast<char*>(&h), 8);
  if (!is || std::memcmp(magic, "LLAB", 4) != 0) throw ConfigError("read_grid_binary: bad header");
  UniformComplexGrid g = make_grid(int(N), mask_radius, N * h / 2 / mask_radius);
  g.h = h;
  GridField f = grid_zero(g);
  for (Eigen::Index k = 0; k < f.v.size(); ++k) {
    double re, im;
    is.read(reinterpret_cast<char*>(&re), 8);
    is.read(reinterpret_cast<char*>(&im), 8);
    f.v[k] = cplx(re, im);
  }
  if (!is) throw ConfigError("read_grid_binary: truncated data");
  return f;
}

void write_grid_csv(const GridField& f, std::ostream& os) {
  os.precision(17);
  os << "i,j,x,y,re,im\n";
  for (int i = 0; i < f.grid.N; ++i)
    for (int j = 0; j < f.grid.N; ++j) {
      const Vec2 p = f.grid.point(i, j);
      os << i << "," << j << "," << p[0] << "," << p[1] << "," << f(i, j).real() << "," << f(i, j).imag() << "\n";
    }
}

}  // namespace llab
