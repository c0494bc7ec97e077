#include "llab/estimates.hpp"

#include "llab/beltrami.hpp"

#include <algorithm>
#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>
#include <type_traits>

namespace llab {

namespace {

constexpr double kUnderflow = 1e-13;

double log_ratio(double a, double b) { return std::log(a / b); }

}  // namespace

// ---------------------------------------------------------------- three circles

double polyline_sup(const ComplexFn& f, const std::vector<Vec2>& poly, int samples) {
  const std::size_t n = poly.size();
  if (n == 0) throw DomainError("polyline_sup: empty polyline");
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + (poly[(i + 1) % n] - poly[i]).norm();
  double best = 0;
  auto take = [&](const Vec2& p) {
    const double v = std::abs(f(p));
    if (!std::isfinite(v)) throw DomainError("polyline_sup: f not finite on the curve");
    best = std::max(best, v);
  };
  for (const Vec2& p : poly) take(p);
  const double L = cum[n];
  std::size_t seg = 0;
  for (int k = 0; k < samples && L > 0; ++k) {
    const double t = L * k / samples;
    while (seg + 1 < n && cum[seg + 1] <= t) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double a = len > 0 ? (t - cum[seg]) / len : 0.0;
    take((1 - a) * poly[seg] + a * poly[(seg + 1) % n]);
  }
  return best;
}

QuasiCircle exact_circle(double s, Vec2 center, int n) {
  QuasiCircle z;
  z.s = s;
  z.vertices.reserve(std::size_t(n));
  for (int k = 0; k < n; ++k) {
    const double t = 2 * kPi * k / n - kPi;
    z.vertices.push_back(center + s * Vec2(std::cos(t), std::sin(t)));
  }
  return z;
}

ThreeCircleRecord three_circle_from_curves(const ComplexFn& f, const QuasiCircle& z1, const QuasiCircle& z2,
                                           const QuasiCircle& z3, double residual) {
  ThreeCircleRecord r;
  r.s1 = z1.s;
  r.s2 = z2.s;
  r.s3 = z3.s;
  if (!(0 < r.s1 && r.s1 < r.s2 && r.s2 < r.s3)) throw PreconditionError("three_circle: need 0 < s1 < s2 < s3");
  r.M1 = polyline_sup(f, z1.vertices);
  r.M2 = polyline_sup(f, z2.vertices);
  r.M3 = polyline_sup(f, z3.vertices);
  if (!(r.M1 > 0 && r.M2 > 0 && r.M3 > 0)) throw DomainError("three_circle: f vanishes on a quasi-circle");
  r.theta = log_ratio(r.s3, r.s2) / log_ratio(r.s3, r.s1);
  r.slack = r.theta * std::log(r.M1) + (1 - r.theta) * std::log(r.M3) - std::log(r.M2);
  r.residual = residual;
  return r;
}

ThreeCircleRecord three_circle_check(const ComplexFn& f, const FundamentalSolution& fs, double s1, double s2,
                                     double s3, double residual) {
  if (!(0 < s1 && s1 < s2 && s2 < s3)) throw PreconditionError("three_circle: need 0 < s1 < s2 < s3");
  return three_circle_from_curves(f, quasi_circle(fs, s1), quasi_circle(fs, s2), quasi_circle(fs, s3), residual);
}

ThreeCircleRecord three_circle_check(const ComplexField& f, const FundamentalSolution& fs, double s1, double s2,
                                     double s3, double residual) {
  auto loc = std::make_shared<PointLocator>(f.mesh);
  const Eigen::VectorXd re = f.values.real(), im = f.values.imag();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ComplexFn g = [loc, re, im, nan](const Vec2& p) {
    return cplx(loc->interpolate(re, p, nan), loc->interpolate(im, p, nan));
  };
  return three_circle_check(g, fs, s1, s2, s3, residual);
}

void write_three_circle_csv(const std::vector<ThreeCircleRecord>& recs, std::ostream& os) {
  os << "s1,s2,s3,theta,slack\n" << std::setprecision(17);
  for (const auto& r : recs) os << r.s1 << ',' << r.s2 << ',' << r.s3 << ',' << r.theta << ',' << r.slack << '\n';
}

// ---------------------------------------------------------------- vanishing order

std::string to_string(ScenarioType t) {
  switch (t) {
    case ScenarioType::OofV: return "OofV";
    case ScenarioType::OofV1: return "OofV1";
    case ScenarioType::OofV2: return "OofV2";
    case ScenarioType::OofV3: return "OofV3";
  }
  return "?";
}

ScenarioType scenario_type_from_string(const std::string& s) {
  for (auto t : {ScenarioType::OofV, ScenarioType::OofV1, ScenarioType::OofV2, ScenarioType::OofV3})
    if (to_string(t) == s) return t;
  throw DomainError("unknown scenario type '" + s + "'");
}

double ball_sup(const ScalarFn& u, Vec2 center, double r, int radial, int angular) {
  double best = std::abs(u(center));
  if (!std::isfinite(best)) best = 0;
  for (int j = 1; j <= radial; ++j) {
    const double rho = r * j / radial;
    for (int k = 0; k < angular; ++k) {
      const double t = 2 * kPi * k / angular;
      const double v = std::abs(u(center + rho * Vec2(std::cos(t), std::sin(t))));
      if (std::isfinite(v)) best = std::max(best, v);
    }
  }
  return best;
}

std::array<double, 3> weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                                        const std::vector<double>& w) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || w.size() != n) throw NumericalError("weighted_line_fit: need two or more points");
  Eigen::MatrixXd M(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(w[i]);
    M(Eigen::Index(i), 0) = s * x[i];
    M(Eigen::Index(i), 1) = s;
    b[Eigen::Index(i)] = s * y[i];
  }
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(b);
  double wsum = 0;
  for (double v : w) wsum += v;
  const double rms = std::sqrt((M * c - b).squaredNorm() / wsum);
  return {c[0], c[1], rms};
}

namespace {

VanishingOrderFit fit_vanishing(const std::function<double(double)>& sup_of, std::vector<double> r_grid,
                                const VanishingScenario& sc) {
  VanishingOrderFit out;
  out.K = sc.K;
  std::sort(r_grid.begin(), r_grid.end(), std::greater<>());
  r_grid.erase(std::unique(r_grid.begin(), r_grid.end()), r_grid.end());
  std::vector<double> lr, ls, w;
  for (double r : r_grid) {
    if (!(r > 0)) throw PreconditionError("vanishing_order: radii must be positive");
    const double s = sup_of(r);
    out.r.push_back(r);
    out.sup.push_back(s);
    std::ostringstream note;
    if (!(s > kUnderflow)) {
      note << "r = " << r << " dropped: sup " << s << " below " << kUnderflow;
      out.notes.push_back(note.str());
      continue;
    }
    if (!(r < 1)) {
      note << "r = " << r << " dropped: weight 1/log(1/r) undefined";
      out.notes.push_back(note.str());
      continue;
    }
    lr.push_back(std::log(r));
    ls.push_back(std::log(s));
    w.push_back(1.0 / std::log(1.0 / r));
  }
  if (lr.size() < 2) throw NumericalError("vanishing_order: fewer than two usable radii");

  // smallest decade above the smallest usable radius
  const double lmin = lr.back(), span = std::log(10.0);
  std::vector<double> fx, fy, fw;
  for (std::size_t i = 0; i < lr.size(); ++i)
    if (lr[i] <= lmin + span + 1e-12) {
      fx.push_back(lr[i]);
      fy.push_back(ls[i]);
      fw.push_back(w[i]);
      out.fit_r.push_back(std::exp(lr[i]));
    }
  if (fx.size() < 2) throw NumericalError("vanishing_order: fewer than two radii in the smallest decade");
  const auto fit = weighted_line_fit(fx, fy, fw);
  out.ord = fit[0];
  out.intercept = fit[1];
  out.fit_residual = fit[2];

  // half-decade windows from the top down
  const double half = 0.5 * span;
  for (double top = lr.front(); top - half >= lmin - 1e-12; top -= half) {
    std::vector<double> x, y, ww;
    for (std::size_t i = 0; i < lr.size(); ++i)
      if (lr[i] <= top + 1e-12 && lr[i] >= top - half - 1e-12) {
        x.push_back(lr[i]);
        y.push_back(ls[i]);
        ww.push_back(w[i]);
      }
    if (x.size() >= 2) out.window_ord.push_back(weighted_line_fit(x, y, ww)[0]);
  }
  const auto& wo = out.window_ord;
  if (wo.size() >= 2) {
    const bool increasing = std::adjacent_find(wo.begin(), wo.end(), std::greater_equal<>()) == wo.end();
    out.diverging = increasing && wo.back() > 1.5 * wo.front() && wo.back() - wo.front() > 1.0;
  }
  if (out.diverging) out.notes.push_back("window slopes keep growing: no finite vanishing order fits");
  return out;
}

}  // namespace

VanishingOrderFit vanishing_order(const ScalarFn& u, const std::vector<double>& r_grid,
                                  const VanishingScenario& sc) {
  auto out = fit_vanishing([&](double r) { return ball_sup(u, sc.center, r); }, r_grid, sc);
  out.sup_d = ball_sup(u, sc.center, sc.d);
  out.sup_b = ball_sup(u, sc.center, sc.b);
  out.upper_ok = out.sup_d <= std::exp(sc.C0 * sc.K);
  if (sc.gradient_normalization) {
    // polar Gauss with central differences
    using GL = boost::math::quadrature::gauss<double, 20>;
    const double step = 1e-5 * std::max(1.0, sc.b_tilde);
    const int nt = 128;
    double acc = 0;
    for (int k = 0; k < nt; ++k) {
      const double t = 2 * kPi * k / nt;
      const Vec2 e(std::cos(t), std::sin(t));
      acc += GL::integrate(
          [&](double rho) {
            const Vec2 p = sc.center + rho * e;
            const double gx = (u(p + Vec2(step, 0)) - u(p - Vec2(step, 0))) / (2 * step);
            const double gy = (u(p + Vec2(0, step)) - u(p - Vec2(0, step))) / (2 * step);
            return (gx * gx + gy * gy) * rho;
          },
          0.0, sc.b_tilde);
    }
    out.grad_b_tilde = std::sqrt(acc * 2 * kPi / nt);
    out.lower_ok = out.grad_b_tilde >= 1.0;
  } else {
    out.lower_ok = out.sup_b >= 1.0;
  }
  return out;
}

VanishingOrderFit vanishing_order(const ScalarField& u, const std::vector<double>& r_grid,
                                  const VanishingScenario& sc) {
  auto loc = std::make_shared<PointLocator>(u.mesh);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ScalarFn f = [loc, &u, nan](const Vec2& p) { return loc->interpolate(u.values, p, nan); };
  auto out = fit_vanishing([&](double r) { return ball_sup(f, sc.center, r); }, r_grid, sc);
  out.sup_d = ball_sup(f, sc.center, sc.d);
  out.sup_b = ball_sup(f, sc.center, sc.b);
  out.upper_ok = out.sup_d <= std::exp(sc.C0 * sc.K);
  if (sc.gradient_normalization) {
    out.grad_b_tilde = gradient_norm(u, 2.0, Region::disk(sc.b_tilde, sc.center));
    out.lower_ok = out.grad_b_tilde >= 1.0;
  } else {
    out.lower_ok = out.sup_b >= 1.0;
  }
  return out;
}

double RadialDriftSolution::profile(double rr) const {
  if (rr <= r.front()) return rr * f.front() / r.front();
  if (rr >= r.back()) return f.back() + fp.back() * (rr - r.back());
  const std::size_t j = std::size_t(std::upper_bound(r.begin(), r.end(), rr) - r.begin());
  const std::size_t i = j - 1;
  // cubic Hermite on [r_i, r_j]
  const double hh = r[j] - r[i], t = (rr - r[i]) / hh;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * f[i] + h10 * hh * fp[i] + h01 * f[j] + h11 * hh * fp[j];
}

RadialDriftSolution radial_drift_solution(double K, double a, double r_max) {
  if (!(a >= 0 && a < 1)) throw PreconditionError("radial_drift_solution: need 0 <= a < 1");
  RadialDriftSolution s;
  s.K = K;
  s.a = a;
  // f'' = -f'/r + f/r^2 + K (1 - a) r^{-a-1} f + K r^{-a} f'
  using State = std::array<double, 2>;
  auto rhs = [K, a](const State& y, State& dy, double r) {
    const double ra = std::pow(r, -a);
    dy[0] = y[1];
    dy[1] = -y[1] / r + y[0] / (r * r) + K * (1 - a) * ra / r * y[0] + K * ra * y[1];
  };
  const double r0 = 1e-6;
  const double beta = K * (2 - a) / ((1 - a) * (1 - a));
  State y{r0 + beta * std::pow(r0, 2 - a), 1 + beta * (2 - a) * std::pow(r0, 1 - a)};
  std::vector<double> grid;
  const int n = 4000;
  for (int k = 0; k <= n; ++k) grid.push_back(r0 * std::pow(r_max / r0, double(k) / n));
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
  ode::integrate_times(stepper, rhs, y, grid.begin(), grid.end(), 1e-9, [&](const State& st, double r) {
    s.r.push_back(r);
    s.f.push_back(st[0]);
    s.fp.push_back(st[1]);
  });
  auto self = std::make_shared<RadialDriftSolution>(s);
  s.u = [self](const Vec2& p) {
    const double r = p.norm();
    return r == 0 ? 0.0 : self->profile(r) * p.x() / r;
  };
  s.W = [K, a](const Vec2& p) {
    const double r = p.norm();
    return r == 0 ? Vec2(0, 0) : Vec2(-K * std::pow(r, -a) * p / r);
  };
  return s;
}

// ---------------------------------------------------------------- rescaling

ScaledProblem rescale_problem(const ScalarFn& u, const CoefficientSet& c, Vec2 z0, double R) {
  if (!(R > 0)) throw PreconditionError("rescale_problem: R must be positive");
  ScaledProblem s;
  s.z0 = z0;
  s.R = R;
  if (u) s.u = [u, z0, R](const Vec2& z) { return u(z0 + R * z); };
  if (c.A) s.A = [A = c.A, z0, R](const Vec2& z) { return A(z0 + R * z); };
  if (c.W1) s.W1 = [W = c.W1, z0, R](const Vec2& z) { return Vec2(R * W(z0 + R * z)); };
  if (c.W2) s.W2 = [W = c.W2, z0, R](const Vec2& z) { return Vec2(R * W(z0 + R * z)); };
  if (c.V) s.V = [V = c.V, z0, R](const Vec2& z) { return R * R * V(z0 + R * z); };
  return s;
}

namespace {

// L^q norm over B_r(c) by tensor Gauss (16 radial panels) times the periodic trapezoid in angle.
double tensor_norm(const ScalarFn& g, Vec2 c, double r, double q) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const int nt = 512, panels = 16;
  double acc = 0;
  for (int k = 0; k < nt; ++k) {
    const double t = 2 * kPi * k / nt;
    const Vec2 e(std::cos(t), std::sin(t));
    for (int p = 0; p < panels; ++p)
      acc += GL::integrate([&](double rho) { return std::pow(std::abs(g(c + rho * e)), q) * rho; },
                           r * p / panels, r * (p + 1) / panels);
  }
  return std::pow(acc * 2 * kPi / nt, 1.0 / q);
}

double adaptive_norm(const ScalarFn& g, Vec2 c, double r, double q) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double outer = GK::integrate(
      [&](double rho) {
        return rho * GK::integrate(
                         [&](double t) { return std::pow(std::abs(g(c + rho * Vec2(std::cos(t), std::sin(t)))), q); },
                         0.0, 2 * kPi, 12, 1e-13);
      },
      0.0, r, 12, 1e-13);
  return std::pow(outer, 1.0 / q);
}

// sup over the polar grid of B_r(c); the scaled and original balls share the mapped grid.
double grid_sup(const ScalarFn& g, Vec2 c, double r) {
  double best = 0;
  for (int j = 0; j <= 64; ++j)
    for (int k = 0; k < 256; ++k) {
      const double t = 2 * kPi * k / 256;
      best = std::max(best, std::abs(g(c + r * j / 64.0 * Vec2(std::cos(t), std::sin(t)))));
    }
  return best;
}

NormIdentity scaling_check(const ScalarFn& scaled, const ScalarFn& original, Vec2 z0, double R, double r, double q,
                           double power) {
  NormIdentity n;
  n.q = q;
  n.r = r;
  n.R = R;
  if (q == kInf) {
    n.scaled = grid_sup(scaled, Vec2(0, 0), r);
    n.original = grid_sup(original, z0, r * R);
    n.predicted = std::pow(R, power);
  } else {
    n.scaled = tensor_norm(scaled, Vec2(0, 0), r, q);
    n.original = adaptive_norm(original, z0, r * R, q);
    n.predicted = std::pow(R, power - 2.0 / q);
  }
  n.ratio = n.scaled / n.original;
  return n;
}

}  // namespace

NormIdentity check_drift_scaling(const VectorFn& W, Vec2 z0, double R, double r, double q) {
  CoefficientSet c;
  c.W1 = W;
  const auto s = rescale_problem({}, c, z0, R);
  return scaling_check([W1 = s.W1](const Vec2& z) { return W1(z).norm(); },
                       [W](const Vec2& z) { return W(z).norm(); }, z0, R, r, q, 1.0);
}

NormIdentity check_potential_scaling(const ScalarFn& V, Vec2 z0, double R, double r, double q) {
  CoefficientSet c;
  c.V = V;
  const auto s = rescale_problem({}, c, z0, R);
  return scaling_check(s.V, V, z0, R, r, q, 2.0);
}

// ---------------------------------------------------------------- sharpness gallery

GalleryCase gallery_case_from_string(const std::string& id) {
  if (id == "divergence_drift") return GalleryCase::divergence_drift;
  if (id == "gradient_drift") return GalleryCase::gradient_drift;
  if (id == "full_three_term") return GalleryCase::full_three_term;
  throw DomainError("sharpness_gallery: unknown case '" + id + "'");
}

std::string to_string(GalleryCase c) {
  switch (c) {
    case GalleryCase::divergence_drift: return "divergence_drift";
    case GalleryCase::gradient_drift: return "gradient_drift";
    case GalleryCase::full_three_term: return "full_three_term";
  }
  return "?";
}

namespace {

namespace ad = boost::math::differentiation;

// Radial profiles written once for double and for forward-mode variables.
struct Profiles {
  GalleryCase id;
  double alpha;
  double sign_i = 1.0;  // case (i) drift sign

  template <class X, class Y>
  auto u(const X& x, const Y& y) const {
    using std::exp, std::pow, std::sqrt;
    const auto r = sqrt(x * x + y * y);
    using T = std::decay_t<decltype(r)>;
    return id == GalleryCase::full_three_term ? T(exp(-r)) : T(exp(-pow(r, alpha)));
  }
  // W1 radial magnitude (outward)
  template <class T>
  T w1(const T& r) const {
    using std::pow;
    switch (id) {
      case GalleryCase::divergence_drift: return T(sign_i * alpha * pow(r, alpha - 1));
      case GalleryCase::gradient_drift: return T(0 * r);
      case GalleryCase::full_three_term: return T(0 * r + 1.0 / 3.0);
    }
    return T(0 * r);
  }
  template <class T>
  T w2(const T& r) const {
    using std::pow;
    switch (id) {
      case GalleryCase::divergence_drift: return T(0 * r);
      case GalleryCase::gradient_drift: return T(-alpha * pow(r, alpha - 1) * (1 - pow(r, -alpha)));
      case GalleryCase::full_three_term: return T(-(1 - 1 / r) / 3.0);
    }
    return T(0 * r);
  }
  template <class T>
  T v(const T& r) const {
    return id == GalleryCase::full_three_term ? T((1 - 1 / r) / 3.0) : T(0 * r);
  }

  // -div(grad u + W1 u) + W2 . grad u + V u at (x, y)
  double residual(double x0, double y0) const {
    using std::sqrt;
    const auto vars = ad::make_ftuple<double, 2, 2>(x0, y0);
    const auto& x = std::get<0>(vars);
    const auto& y = std::get<1>(vars);
    const auto r = sqrt(x * x + y * y);
    const auto U = u(x, y);
    const auto a1 = w1(r);
    const auto F1 = a1 * x / r * U, F2 = a1 * y / r * U;
    const double lap = U.derivative(2, 0) + U.derivative(0, 2);
    const double divW = F1.derivative(1, 0) + F2.derivative(0, 1);
    const double rr = std::sqrt(x0 * x0 + y0 * y0);
    const double b2 = w2(rr);
    const double drift2 = b2 * (x0 / rr * U.derivative(1, 0) + y0 / rr * U.derivative(0, 1));
    return -lap - divW + drift2 + v(rr) * U.derivative(0, 0);
  }

  double curl_w1(double x0, double y0) const {
    using std::sqrt;
    const auto vars = ad::make_ftuple<double, 1, 1>(x0, y0);
    const auto& x = std::get<0>(vars);
    const auto& y = std::get<1>(vars);
    const auto r = sqrt(x * x + y * y);
    const auto a1 = w1(r);
    const auto Wx = a1 * x / r, Wy = a1 * y / r;
    return Wy.derivative(1, 0) - Wx.derivative(0, 1);
  }
};

}  // namespace

GalleryReport sharpness_gallery(const std::string& case_id, double q, double delta, int samples) {
  GalleryReport g;
  g.id = gallery_case_from_string(case_id);
  g.q = q;
  if (g.id == GalleryCase::full_three_term) {
    if (q != kInf) throw DomainError("sharpness_gallery: full_three_term is the q = inf case");
    g.alpha = 1;
    g.delta = 0;
  } else if (q == kInf) {
    g.alpha = 1;
    g.delta = 0;
  } else {
    if (!(q > 2)) throw DomainError("sharpness_gallery: need q > 2");
    g.delta = delta < 0 ? (q - 2) / 4 : delta;
    if (!(g.delta > 0 && g.delta < q - 2)) throw DomainError("sharpness_gallery: need 0 < delta < q - 2");
    g.alpha = 1 - (2 + 2 * g.delta) / q;
  }
  g.scenario = g.id == GalleryCase::divergence_drift ? ScenarioType::OofV1
               : g.id == GalleryCase::gradient_drift ? ScenarioType::OofV2
                                                       : ScenarioType::OofV3;
  const Profiles P{g.id, g.alpha};
  g.u = [P](const Vec2& p) { return P.u(p.x(), p.y()); };
  auto radial = [](auto mag) {
    return [mag](const Vec2& p) {
      const double r = p.norm();
      return r == 0 ? Vec2(0, 0) : Vec2(mag(r) * p / r);
    };
  };
  if (g.id != GalleryCase::gradient_drift) g.W1 = radial([P](double r) { return P.w1(r); });
  if (g.id != GalleryCase::divergence_drift) g.W2 = radial([P](double r) { return P.w2(r); });
  if (g.id == GalleryCase::full_three_term) g.V = [P](const Vec2& p) { return P.v(p.norm()); };

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> ur(g.r_in, g.r_out), ut(0, 2 * kPi);
  Profiles literal = P;
  literal.sign_i = -1.0;
  g.samples = samples;
  g.min_sign_gap = kInf;
  for (int k = 0; k < samples; ++k) {
    const double r = ur(rng), t = ut(rng);
    const double x = r * std::cos(t), y = r * std::sin(t);
    g.max_residual = std::max(g.max_residual, std::abs(P.residual(x, y)));
    if (g.id == GalleryCase::divergence_drift)
      g.max_residual_literal = std::max(g.max_residual_literal, std::abs(literal.residual(x, y)));
    g.W_sup = std::max(g.W_sup, std::abs(g.id == GalleryCase::gradient_drift ? P.w2(r) : P.w1(r)));
    if (g.id == GalleryCase::full_three_term) {
      g.min_sign_gap = std::min(g.min_sign_gap, P.v(r) - P.w1(r) * P.w2(r));
      g.max_curl = std::max(g.max_curl, std::abs(P.curl_w1(x, y)));
    }
  }
  if (g.id != GalleryCase::full_three_term) g.min_sign_gap = 0;

  if (q != kInf) {
    boost::math::quadrature::exp_sinh<double> es;
    const bool grad = g.id == GalleryCase::gradient_drift;
    g.W_norm_q_pow = es.integrate(
        [&](double r) { return 2 * kPi * r * std::pow(std::abs(grad ? P.w2(r) : P.w1(r)), q); }, 1.0, kInf);
    g.W_norm_predicted = 2 * kPi * std::pow(g.alpha, q) / (2 * g.delta);
  }
  return g;
}

// ---------------------------------------------------------------- Landis harness

LandisTable landis_harness(const ScalarFn& u, double q, const std::vector<double>& R_grid, ScenarioType scenario,
                           int angles, int jobs) {
  if (scenario == ScenarioType::OofV)
    throw DomainError("landis_harness: the OofV family has no unique-continuation-at-infinity counterpart");
  LandisTable t;
  t.scenario = scenario;
  t.q = q;
  t.theorem_exponent = q == kInf ? 1.0 : 1.0 - 2.0 / q;
  auto member = [&](double R) {
    double best = kInf;
    for (int k = 0; k < angles; ++k) {
      const double th = 2 * kPi * k / angles;
      best = std::min(best, ball_sup(u, R * Vec2(std::cos(th), std::sin(th)), 1.0, 16, 64));
    }
    return LandisRow{R, best};
  };
  std::vector<std::future<LandisRow>> fut;
  const auto policy = jobs > 1 ? std::launch::async : std::launch::deferred;
  for (double R : R_grid) fut.push_back(std::async(policy, member, R));
  for (auto& f : fut) t.rows.push_back(f.get());
  std::sort(t.rows.begin(), t.rows.end(), [](const LandisRow& a, const LandisRow& b) { return a.R < b.R; });

  for (const auto& row : t.rows)
    if (!(row.min_sup > 0 && row.min_sup < 1)) {
      t.note = "degenerate: decay values must lie in (0, 1) for the exponent fit";
      t.exponent = std::numeric_limits<double>::quiet_NaN();
      return t;
    }
  if (t.rows.size() < 2) {
    t.note = "degenerate: fewer than two radii";
    t.exponent = std::numeric_limits<double>::quiet_NaN();
    return t;
  }
  const double mid = 0.5 * (std::log(t.rows.front().R) + std::log(t.rows.back().R));
  std::vector<double> x, y, w;
  for (const auto& row : t.rows)
    if (std::log(row.R) >= mid - 1e-12) {
      x.push_back(std::log(row.R));
      y.push_back(std::log(-std::log(row.min_sup)));
      w.push_back(1.0);
    }
  if (x.size() < 2) {
    t.note = "degenerate: fewer than two radii in the upper half of the grid";
    t.exponent = std::numeric_limits<double>::quiet_NaN();
    return t;
  }
  t.exponent = weighted_line_fit(x, y, w)[0];
  t.fit_ok = std::isfinite(t.exponent);
  if (q == 2) t.note = "q = 2: compare against the (log R)^2 shape";
  return t;
}

LandisTable landis_harness(const GalleryReport& g, const std::vector<double>& R_grid, int jobs) {
  return landis_harness(g.u, g.q, R_grid, g.scenario, 16, jobs);
}

void write_landis_csv(const LandisTable& t, std::ostream& os) {
  os << "R,min_sup,fit_exponent\n" << std::setprecision(17);
  for (const auto& r : t.rows) os << r.R << ',' << r.min_sup << ',' << t.exponent << '\n';
}

// ---------------------------------------------------------------- sub/supersolution

ScalarFn subsolution_phi1(double K) {
  return [K](const Vec2& p) { return std::exp(3 * K * p.x()); };
}

SubSuperReport subsupersolution_multiplier(double K, const CoefficientSet* c, int samples) {
  if (!(K >= 0)) throw PreconditionError("subsupersolution_multiplier: K must be nonnegative");
  constexpr double d = 9.0 / 5.0;
  SubSuperReport s;
  s.K = K;
  s.eta = 3 * K;
  s.quadratic = subsolution_quadratic(s.eta, K);
  s.subsolution = s.quadratic <= 0;
  s.phi1_min = std::exp(-s.eta * d);
  s.phi1_max = std::exp(s.eta * d);
  s.phi2 = std::exp(6 * K);
  s.phi2_dominates = s.phi2 >= s.phi1_max;
  s.within_envelope = s.phi1_min >= std::exp(-s.envelope_C1 * K) && s.phi1_max <= std::exp(s.envelope_C1 * K) &&
                      s.phi2 <= std::exp(s.envelope_C1 * K);

  std::vector<Vec2> pts;
  const int nr = std::max(2, int(std::sqrt(double(samples)))), nt = std::max(4, samples / nr);
  pts.emplace_back(0, 0);
  for (int j = 1; j <= nr; ++j)
    for (int k = 0; k < nt; ++k) {
      const double t = 2 * kPi * k / nt, r = d * j / nr;
      pts.emplace_back(r * std::cos(t), r * std::sin(t));
    }
  const ScalarFn phi1 = subsolution_phi1(K);
  for (const Vec2& p : pts) s.phi2_dominates = s.phi2_dominates && s.phi2 >= phi1(p);

  if (c) {
    s.checked_coefficients = true;
    s.bounds_hold = true;
    s.max_L_phi1 = -kInf;
    s.min_L_phi2 = kInf;
    const double tol = 1e-12 * std::max(1.0, K * K);
    for (const Vec2& p : pts) {
      const Vec2 a = c->w1(p), b = c->w2(p);
      const double v = c->v(p);
      s.bounds_hold = s.bounds_hold && a.norm() <= K + tol && b.norm() <= K + tol && std::abs(v) <= K * K + tol;
      // L phi / phi for phi1 = exp(eta x) and the constant phi2
      const double gap = v - a.dot(b);
      s.max_L_phi1 = std::max(s.max_L_phi1, -s.eta * s.eta + s.eta * (a.x() + b.x()) + gap);
      s.min_L_phi2 = std::min(s.min_L_phi2, gap);
    }
  }
  return s;
}

}  // namespace llab
