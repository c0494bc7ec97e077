#include "llab/greens.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>

#include "llab/estimates.hpp"

namespace llab {

namespace {

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[std::size_t(i)] = a * std::pow(b / a, double(i) / double(n - 1));
  return v;
}

double p1_value(const TriMesh& m, const Eigen::VectorXd& f, std::size_t t, const std::array<double, 3>& b) {
  const auto& T = m.tris[t];
  return b[0] * f[T[0]] + b[1] * f[T[1]] + b[2] * f[T[2]];
}

// Fraction of a triangle where a linear function with vertex values f exceeds tau.
double superlevel_fraction(std::array<double, 3> f, double tau) {
  std::sort(f.begin(), f.end());
  if (tau >= f[2]) return 0.0;
  if (tau <= f[0]) return 1.0;
  if (tau >= f[1]) return (f[2] - tau) * (f[2] - tau) / ((f[2] - f[0]) * (f[2] - f[1]));
  return 1.0 - (tau - f[0]) * (tau - f[0]) / ((f[1] - f[0]) * (f[2] - f[0]));
}

// Smallest eps on a uniform scan with C(eps) <= C_max; C(eps) = max_k v_k x_k^{e(eps)}.
struct EpsFit {
  double eps = std::numeric_limits<double>::quiet_NaN();
  double C = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
};
template <class Exponent>
EpsFit scan_eps(const std::vector<double>& x, const std::vector<double>& v, Exponent e, double C_max,
                double eps_lo = 0.0) {
  EpsFit fit;
  for (int k = 0; k <= 800; ++k) {
    const double eps = eps_lo + 0.005 * k;
    double C = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (v[i] > 0) C = std::max(C, std::exp(std::log(v[i]) + e(eps) * std::log(x[i])));
    if (C <= C_max) {
      fit.eps = eps;
      fit.C = C;
      fit.ok = true;
      return fit;
    }
  }
  return fit;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& v) {
  std::vector<double> lx, lv;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (v[i] > 0 && x[i] > 0) {
      lx.push_back(std::log(x[i]));
      lv.push_back(std::log(v[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return weighted_line_fit(lx, lv, std::vector<double>(lx.size(), 1.0))[0];
}

template <class Fn>
auto run_jobs(std::size_t n, int jobs, Fn fn) {
  using R = decltype(fn(std::size_t(0)));
  const auto policy = jobs > 1 ? std::launch::async : std::launch::deferred;
  std::vector<std::future<R>> fut;
  fut.reserve(n);
  for (std::size_t i = 0; i < n; ++i) fut.push_back(std::async(policy, fn, i));
  std::vector<R> out;
  out.reserve(n);
  for (auto& f : fut) out.push_back(f.get());
  return out;
}

MeshPtr pole_mesh(double radius, double h, Vec2 y, int rings, double ratio) {
  return triangulate_disk(radius, h, RefinementSpec{y, rings, ratio});
}

void require_inside(Vec2 y, double rho, double radius, const char* who) {
  if (!(rho >= 0) || !(y.norm() + rho < radius)) {
    std::ostringstream os;
    os << who << ": averaging ball B_" << rho << "(" << y.x() << ", " << y.y() << ") not inside the domain";
    throw PreconditionError(os.str());
  }
}

}  // namespace

double GreenFunction::value(const Vec2& x) const { return locator->interpolate(gamma.values, x, 0.0); }

const GreenEstimateRow* GreenEstimateTable::find(const std::string& id, double s) const {
  for (const auto& r : rows)
    if (r.id == id && (s < 0 || r.s_or_tau == s)) return &r;
  return nullptr;
}

Eigen::VectorXd ball_average_functional(const PointLocator& loc, Vec2 y, double rho) {
  const TriMesh& m = loc.mesh();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  std::array<double, 3> bary{};
  auto add = [&](const Vec2& x, double w) {
    const int t = loc.locate(x, bary);
    if (t < 0) throw PreconditionError("ball_average_functional: averaging ball leaves the mesh");
    for (int k = 0; k < 3; ++k) b[m.tris[std::size_t(t)][std::size_t(k)]] += w * bary[std::size_t(k)];
  };
  if (rho == 0) {
    add(y, 1.0);
    return b;
  }
  using GL = boost::math::quadrature::gauss<double, 16>;
  const auto& xs = GL::abscissa();
  const auto& ws = GL::weights();
  const int nth = 96;
  double total = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (double sgn : {-1.0, 1.0}) {
      const double r = 0.5 * rho * (1.0 + sgn * xs[i]);
      const double wr = 0.5 * rho * ws[i] * r * 2.0 * kPi / nth;
      for (int j = 0; j < nth; ++j) {
        const double th = 2.0 * kPi * (j + 0.5) / nth;
        add(y + r * Vec2(std::cos(th), std::sin(th)), wr);
        total += wr;
      }
    }
  return b / total;
}

GreenFunction averaged_green(const SparseOperator& op, Vec2 y, double rho, bool check_coercivity) {
  const TriMesh& m = *op.mesh;
  require_inside(y, rho, m.radius, "averaged_green");
  GreenFunction g;
  g.pole = y;
  g.rho = rho;
  g.adjoint = op.adjoint;
  if (check_coercivity) {
    g.coercivity = coercivity_margin(op);
    if (!g.coercivity.coercive) {
      std::ostringstream os;
      os << "averaged_green: bilinear form is not coercive (margin " << g.coercivity.gamma << ")";
      throw PreconditionError(os.str());
    }
  }
  g.locator = std::make_shared<PointLocator>(op.mesh);
  g.average = ball_average_functional(*g.locator, y, rho);
  const Eigen::Index n = Eigen::Index(m.num_nodes());
  g.gamma = solve_dirichlet(op, Eigen::VectorXd::Zero(n), g.average, &g.solve, 1e-12);
  const Eigen::VectorXd Kg = op.K * g.gamma.values;
  double res = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!m.boundary[std::size_t(i)]) res = std::max(res, std::abs(Kg[i] - g.average[i]));
  g.identity_residual = res / g.average.cwiseAbs().maxCoeff();
  return g;
}

GreenFunction averaged_green(const CoefficientSet& c, Vec2 y, double rho, const GreenOptions& opt) {
  require_inside(y, rho, opt.radius, "averaged_green");
  const auto mesh = pole_mesh(opt.radius, opt.h, y, opt.rings, opt.ratio);
  return averaged_green(assemble_bilinear(mesh, c), y, rho, opt.check_coercivity);
}

// ---------------------------------------------------------------- estimates

double level_set_measure(const ScalarField& f, double tau) {
  const TriMesh& m = *f.mesh;
  double acc = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    const std::array<double, 3> v{f.values[T[0]], f.values[T[1]], f.values[T[2]]};
    acc += m.area[t] * (superlevel_fraction(v, tau) + superlevel_fraction({-v[0], -v[1], -v[2]}, tau));
  }
  return acc;
}

double gradient_level_set_measure(const ScalarField& f, double tau) {
  const TriMesh& m = *f.mesh;
  const auto g = tri_gradient(m, f.values);
  double acc = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t)
    if (g[t].norm() > tau) acc += m.area[t];
  return acc;
}

GreenEstimateTable green_estimate_suite(GreenFunction& gf, const EstimateGrids& grids) {
  const TriMesh& m = *gf.gamma.mesh;
  const Vec2 y = gf.pole;
  GreenEstimateTable tab;
  tab.pole = y;
  tab.rho = gf.rho;
  const double far = m.radius + y.norm();
  const double near = std::max(4.0 * gf.rho, 2.0 * m.h);
  const std::vector<double> r = grids.r.empty() ? geomspace(near, 0.9 * far, 16) : grids.r;
  auto push = [&](const std::string& id, double s, const EpsFit& f, double slope) {
    tab.rows.push_back({id, s, f.C, f.eps, slope, f.ok});
  };

  {  // W^{1,2} norm outside Omega_r(y): C r^{-eps}
    std::vector<double> v;
    for (double ri : r) {
      const Region out = Region::annulus(ri, kInf, y);
      const double a = lebesgue_norm(gf.gamma, 2, out), b = gradient_norm(gf.gamma, 2, out);
      v.push_back(std::hypot(a, b));
    }
    push("energy_exterior", 2, scan_eps(r, v, [](double e) { return e; }, grids.C_max), log_slope(r, v));
  }
  for (double s : grids.s_norm) {  // ||Gamma||_{L^s(Omega_r)} <= C r^{-eps + 2/s}
    std::vector<double> v;
    for (double ri : r) v.push_back(lebesgue_norm(gf.gamma, s, Region::disk(ri, y)));
    push("lebesgue_near", s, scan_eps(r, v, [s](double e) { return e - 2.0 / s; }, grids.C_max), log_slope(r, v));
  }
  for (double s : grids.s_grad) {  // ||D Gamma||_{L^s(Omega_r)} <= C r^{-1 - eps + 2/s}
    std::vector<double> v;
    for (double ri : r) v.push_back(gradient_norm(gf.gamma, s, Region::disk(ri, y)));
    push("gradient_near", s, scan_eps(r, v, [s](double e) { return 1.0 + e - 2.0 / s; }, grids.C_max),
         log_slope(r, v));
  }
  {  // weak type for Gamma
    const double top = gf.gamma.values.cwiseAbs().maxCoeff();
    const std::vector<double> tau = grids.tau.empty() ? geomspace(0.02 * top, 0.95 * top, 16) : grids.tau;
    std::vector<double> v;
    for (double t : tau) v.push_back(level_set_measure(gf.gamma, t));
    const auto f = scan_eps(tau, v, [](double e) { return 2.0 / e; }, grids.C_max, 0.005);
    tab.level_eps = f.eps;
    tab.level_slope = log_slope(tau, v);
    push("level_set", 0, f, tab.level_slope);
  }
  {  // weak type for D Gamma
    const auto g = tri_gradient(m, gf.gamma.values);
    double top = 0;
    for (const auto& gi : g) top = std::max(top, gi.norm());
    const std::vector<double> tau = grids.tau_grad.empty() ? geomspace(0.02 * top, 0.9 * top, 16) : grids.tau_grad;
    std::vector<double> v;
    for (double t : tau) v.push_back(gradient_level_set_measure(gf.gamma, t));
    const auto f = scan_eps(tau, v, [](double e) { return 2.0 / (1.0 + e); }, grids.C_max);
    tab.grad_level_eps = f.eps;
    tab.grad_level_slope = log_slope(tau, v);
    push("gradient_level_set", 0, f, tab.grad_level_slope);
  }
  {  // |Gamma(x, y)| <= C |x - y|^{-eps} at nodes outside B_{2 rho}
    std::vector<double> dist, v;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      const double d = (m.nodes[i] - y).norm();
      if (d >= std::max(2.0 * gf.rho, 1e-12) && !m.boundary[i]) {
        dist.push_back(d);
        v.push_back(std::abs(gf.gamma.values[Eigen::Index(i)]));
      }
    }
    const auto f = scan_eps(dist, v, [](double e) { return e; }, grids.C_max);
    tab.pointwise_eps = f.eps;
    push("pointwise", kInf, f, log_slope(dist, v));
  }
  {  // |Gamma(x) - Gamma(z)| <= C (|x - z| / R)^eta R^{-eps}, R = |x - y|, |x - z| < R / 2
    std::mt19937_64 rng(grids.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double eps = std::isfinite(tab.pointwise_eps) ? tab.pointwise_eps : 0.0;
    std::vector<double> t, v;
    int tries = 0;
    while (int(t.size()) < grids.holder_pairs && tries < 100 * grids.holder_pairs) {
      ++tries;
      const double rr = m.radius * std::sqrt(U(rng)), th = 2.0 * kPi * U(rng);
      const Vec2 x(rr * std::cos(th), rr * std::sin(th));
      const double R = (x - y).norm();
      if (R < near) continue;
      const double delta = R / 200.0 * std::pow(100.0 * 0.99, U(rng));
      const double ph = 2.0 * kPi * U(rng);
      const Vec2 z = x + delta * Vec2(std::cos(ph), std::sin(ph));
      if (z.norm() >= m.radius) continue;
      t.push_back(delta / R);
      v.push_back(std::abs(gf.value(x) - gf.value(z)) * std::pow(R, eps));
    }
    // largest eta on [0, 1] with max v / t^eta <= C_max
    tab.holder_eta = std::numeric_limits<double>::quiet_NaN();
    for (int k = 200; k >= 0; --k) {
      const double eta = 0.005 * k;
      double C = 0;
      for (std::size_t i = 0; i < t.size(); ++i) C = std::max(C, v[i] * std::pow(t[i], -eta));
      if (C <= grids.C_max) {
        tab.holder_eta = eta;
        tab.holder_C = C;
        break;
      }
    }
    tab.rows.push_back({"holder", 0, tab.holder_C, tab.holder_eta, log_slope(t, v), tab.holder_eta > 0});
  }
  gf.constants = tab.rows;
  return tab;
}

void write_constants_csv(const std::vector<GreenEstimateTable>& tables, std::ostream& os) {
  os << "pole_x,pole_y,estimate_id,s_or_tau,fitted_C,fitted_eps\n";
  os << std::setprecision(10);
  for (const auto& t : tables)
    for (const auto& r : t.rows)
      os << t.pole.x() << ',' << t.pole.y() << ',' << r.id << ',' << r.s_or_tau << ',' << r.C << ',' << r.eps
         << '\n';
}

// ---------------------------------------------------------------- constants for the multiplier

GreenConstantsTable green_constants(const CoefficientSet& c, const GreenConstantsOptions& opt) {
  if (opt.grid < 1) throw PreconditionError("green_constants: grid must be positive");
  CoefficientSet g;  // -div(A grad + W1)
  g.A = c.A;
  g.W1 = c.W1;
  g.lambda = c.lambda;
  g.Lambda = c.Lambda;
  GreenConstantsTable out;
  out.p_dual = conjugate_exponent(c.p);
  out.q2_dual = conjugate_exponent(c.q2);
  std::vector<Vec2> poles;
  const double a = 0.5 * opt.d;
  for (int i = 0; i < opt.grid; ++i)
    for (int j = 0; j < opt.grid; ++j) {
      const double s = opt.grid == 1 ? 0.0 : -1.0 + 2.0 * i / (opt.grid - 1);
      const double t = opt.grid == 1 ? 0.0 : -1.0 + 2.0 * j / (opt.grid - 1);
      poles.emplace_back(a * s, a * t);
    }
  GreenOptions go;
  go.radius = opt.d;
  go.h = opt.h;
  struct PoleOut {
    PoleConstants k;
    GreenEstimateTable est;
  };
  auto results = run_jobs(poles.size(), opt.jobs, [&](std::size_t i) {
    GreenFunction gf = averaged_green(g, poles[i], opt.rho, go);
    PoleOut o;
    o.k.pole = poles[i];
    o.k.norm_green = lebesgue_norm(gf.gamma, out.p_dual, Region{});
    o.k.norm_grad = gradient_norm(gf.gamma, out.q2_dual, Region{});
    if (opt.run_suite) o.est = green_estimate_suite(gf, opt.grids);
    return o;
  });
  out.constants.C_p = 0;
  out.constants.C_q2 = 0;
  for (auto& r : results) {
    out.constants.C_p = std::max(out.constants.C_p, r.k.norm_green);
    out.constants.C_q2 = std::max(out.constants.C_q2, r.k.norm_grad);
    out.poles.push_back(r.k);
    if (opt.run_suite) out.estimates.push_back(std::move(r.est));
  }
  return out;
}

// ---------------------------------------------------------------- identities

SymmetryReport symmetry_check(const CoefficientSet& c, Vec2 y1, Vec2 y2, double rho, const GreenOptions& opt) {
  require_inside(y1, rho, opt.radius, "symmetry_check");
  require_inside(y2, rho, opt.radius, "symmetry_check");
  const auto mesh = pole_mesh(opt.radius, opt.h, y1, opt.rings, opt.ratio);
  const GreenFunction fwd = averaged_green(assemble_bilinear(mesh, c), y1, rho, opt.check_coercivity);
  const GreenFunction adj = averaged_green(assemble_bilinear(mesh, c, true), y2, rho, false);
  SymmetryReport r;
  r.rho = rho;
  r.forward_average = adj.average.dot(fwd.gamma.values);
  r.adjoint_average = fwd.average.dot(adj.gamma.values);
  r.deviation = std::abs(r.forward_average - r.adjoint_average);
  r.forward_value = fwd.value(y2);
  r.adjoint_value = adj.value(y1);
  r.pointwise_deviation = std::abs(r.forward_value - r.adjoint_value);
  return r;
}

std::vector<Vec2> representation_probes(double radius, int n) {
  std::vector<Vec2> p;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double r = radius * (0.15 + 0.55 * (n > 1 ? double(k) / (n - 1) : 0.0));
    p.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k));
  }
  return p;
}

RepresentationReport representation_check(const CoefficientSet& c, const ScalarFn& f, const VectorFn& G,
                                          const RepresentationOptions& opt) {
  RepresentationReport rep;
  rep.probes = representation_probes(opt.radius, opt.probes);
  const auto mesh = triangulate_disk(opt.radius, opt.h);
  const auto op = assemble_bilinear(mesh, c);
  const Eigen::Index n = Eigen::Index(mesh->num_nodes());
  const ScalarField u = solve_dirichlet(op, Eigen::VectorXd::Zero(n), load_vector(*mesh, f, G));
  const PointLocator loc(mesh);
  for (const auto& y : rep.probes) rep.direct.push_back(loc.interpolate(u.values, y));

  GreenOptions go;
  go.radius = opt.radius;
  go.h = opt.h;
  go.check_coercivity = false;
  const CoefficientSet ca = c.adjoint();
  rep.formula = run_jobs(rep.probes.size(), opt.jobs, [&](std::size_t i) {
    const GreenFunction gs = averaged_green(ca, rep.probes[i], opt.rho, go);
    const TriMesh& m = *gs.gamma.mesh;
    const auto grad = tri_gradient(m, gs.gamma.values);
    return integral(
        m,
        [&](std::size_t t, const std::array<double, 3>& b, const Vec2& x) {
          double acc = 0;
          if (f) acc += p1_value(m, gs.gamma.values, t, b) * f(x);
          if (G) acc += grad[t].dot(G(x));
          return acc;
        },
        Region{});
  });
  for (std::size_t i = 0; i < rep.probes.size(); ++i)
    rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.direct[i] - rep.formula[i]));
  return rep;
}

RepresentationReport multiplier_representation_check(const CoefficientSet& c, const MultiplierResult& r,
                                                     const RepresentationOptions& opt) {
  RepresentationReport rep;
  const double d = r.d > 0 ? r.d : r.phi.mesh->radius;
  rep.probes = representation_probes(d, opt.probes);
  const PointLocator phi_loc(r.phi.mesh);
  for (const auto& z : rep.probes) rep.direct.push_back(phi_loc.interpolate(r.phi.values, z) - 1.0);

  CoefficientSet g;  // -div(A grad + W1)
  g.A = c.A;
  g.W1 = c.W1;
  g.lambda = c.lambda;
  g.Lambda = c.Lambda;
  GreenOptions go;
  go.radius = d;
  go.h = opt.h;
  go.check_coercivity = false;
  rep.formula = run_jobs(rep.probes.size(), opt.jobs, [&](std::size_t i) {
    const GreenFunction gz = averaged_green(g, rep.probes[i], opt.rho, go);
    const TriMesh& m = *gz.gamma.mesh;
    const double cap = 1.0 / m.h;
    const auto grad = tri_gradient(m, gz.gamma.values);
    return -integral(
        m,
        [&](std::size_t t, const std::array<double, 3>& b, const Vec2& x) {
          const double phi = phi_loc.interpolate(r.phi.values, x, 1.0);
          double acc = 0;
          if (c.W2) acc += grad[t].dot(c.w2(x, cap));
          if (c.V) acc += p1_value(m, gz.gamma.values, t, b) * c.v(x, cap);
          return acc * phi;
        },
        Region{});
  });
  for (std::size_t i = 0; i < rep.probes.size(); ++i)
    rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.direct[i] - rep.formula[i]));
  return rep;
}

std::vector<double> rho_convergence(const CoefficientSet& c, Vec2 y, const std::vector<double>& rhos,
                                    const GreenOptions& opt) {
  if (rhos.empty()) return {};
  require_inside(y, rhos.front(), opt.radius, "rho_convergence");
  const auto mesh = pole_mesh(opt.radius, opt.h, y, opt.rings, opt.ratio);
  const auto op = assemble_bilinear(mesh, c);
  std::vector<GreenFunction> g;
  for (std::size_t k = 0; k < rhos.size(); ++k) g.push_back(averaged_green(op, y, rhos[k], false));
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const ScalarField diff{mesh, g[k + 1].gamma.values - g[k].gamma.values};
    out.push_back(lebesgue_norm(diff, 1, Region::annulus(4.0 * rhos[k], kInf, y)));
  }
  return out;
}

}  // namespace llab
