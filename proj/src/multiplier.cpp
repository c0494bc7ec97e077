#include "llab/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "llab/quadrature.hpp"

namespace llab {

namespace {

Vec2 point_of(const TriMesh& m, std::size_t t, const std::array<double, 3>& b) {
  const auto& T = m.tris[t];
  return b[0] * m.nodes[T[0]] + b[1] * m.nodes[T[1]] + b[2] * m.nodes[T[2]];
}

// Integrals of `g(x) . grad phi_i + s(x) phi_i` for every hat function, and the sum of absolute contributions.
template <class F>
PositivityTest positivity(const TriMesh& m, F&& contrib) {
  Eigen::VectorXd val = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  Eigen::VectorXd mag = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  for (std::size_t t = 0; t < m.num_tris(); ++t)
    for (const auto& q : quad3()) {
      const Vec2 x = point_of(m, t, q.bary);
      const double wq = q.weight * m.area[t];
      for (int i = 0; i < 3; ++i) {
        const double v = wq * contrib(x, m.grad[t][i], q.bary[i]);
        val[m.tris[t][i]] += v;
        mag[m.tris[t][i]] += std::abs(v);
      }
    }
  PositivityTest r;
  Eigen::Index arg = 0;
  r.min_value = val.minCoeff(&arg);
  const double tol = 1e-10 * std::max(mag.maxCoeff(), 1e-300);
  r.holds = r.min_value >= -tol;
  if (!r.holds) {
    r.witness = int(arg);
    r.witness_point = m.nodes[std::size_t(arg)];
  }
  return r;
}

}  // namespace

PositivityTest positivity_W1(const TriMesh& m, const CoefficientSet& c) {
  if (!c.has_W1()) return {};
  const double cap = 1.0 / m.h;
  return positivity(m, [&](const Vec2& x, const Vec2& g, double) { return c.w1(x, cap).dot(g); });
}

PositivityTest positivity_W2V(const TriMesh& m, const CoefficientSet& c) {
  if (!c.has_W2() && !c.has_V()) return {};
  const double cap = 1.0 / m.h;
  return positivity(m, [&](const Vec2& x, const Vec2& g, double phi) { return c.w2(x, cap).dot(g) + c.v(x, cap) * phi; });
}

HypothesisRecord check_hypotheses(const TriMesh& m, CoefficientSet c, const HypothesisConstants& k) {
  record_norms(c, m, m.radius);
  HypothesisRecord r;
  r.norm_W1 = c.norm_W1;
  r.norm_W2 = c.norm_W2;
  r.norm_V = c.norm_V;
  r.W2_bound = std::min(c.lambda / (2 * k.c_q2), 1.0 / (3 * k.C_q2));
  r.V_bound = 1.0 / (3 * k.C_p);
  r.W1_within_K = c.norm_W1 <= c.K * (1 + 1e-12);
  r.W2_small = c.norm_W2 <= r.W2_bound;
  r.V_small = c.norm_V <= r.V_bound;
  r.pos1 = positivity_W1(m, c);
  r.pos2 = positivity_W2V(m, c);
  return r;
}

double mu_exponent(double q1, double q2, double p) {
  return std::min({2 - 4 / q1, 2 - 4 / q2, 2 - 2 / p});
}

MultiplierResult solve_multiplier(const CoefficientSet& c, const MultiplierOptions& opt) {
  if (!(opt.d > 0.4)) throw PreconditionError("solve_multiplier: domain radius must exceed 2/5");
  auto mesh = triangulate_disk(opt.d, opt.h);
  MultiplierResult r;
  r.d = opt.d;
  r.rho75 = opt.d - 0.4;
  r.t0 = opt.t0;
  r.mu_exp = mu_exponent(c.q1, c.q2, c.p);
  r.hypotheses = check_hypotheses(*mesh, c, opt.constants);
  const auto op = assemble_bilinear(mesh, c, true);
  r.coercivity = coercivity_margin(op);
  if (!r.coercivity.coercive) {
    std::ostringstream os;
    os << "solve_multiplier: adjoint form not coercive (" << r.coercivity.negative_pivots
       << " nonpositive pivots in the symmetric part)";
    throw PreconditionError(os.str());
  }
  const Eigen::Index n = Eigen::Index(mesh->num_nodes());
  r.phi = solve_dirichlet(op, Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n), &r.solve);
  r.phi_min = r.phi.values.minCoeff();
  r.phi_max = r.phi.values.maxCoeff();
  r.positive = r.phi_min > 0;
  r.Phi.mesh = mesh;
  r.Phi.values = r.phi.values.array().log();
  r.bound_ok = r.phi_min >= 1.0 / 3 - opt.bound_tol && r.phi_max <= 1 + opt.bound_tol;
  return r;
}

std::vector<GradientEntry> log_gradient_table(const MultiplierResult& r, const std::vector<double>& t_list) {
  if (!r.positive) throw PreconditionError("log_gradient_table: multiplier not strictly positive");
  std::vector<GradientEntry> out;
  for (double t : t_list)
    out.push_back({t, gradient_norm(r.Phi, t, Region::disk(r.rho75)), t < 2 || t > r.t0});
  return out;
}

double interpolation_epsilon(double t, double t0, double mu) {
  if (t <= 2) return 0.0;
  return (2 / mu * (3 - 2 / t0) - 1) * (t0 / t) * (t - 2) / (t0 - 2);
}

double interpolation_defect(const std::vector<GradientEntry>& table, double t0) {
  double n2 = -1, nt0 = -1;
  for (const auto& e : table) {
    if (std::abs(e.t - 2) < 1e-12) n2 = e.norm;
    if (std::abs(e.t - t0) < 1e-12) nt0 = e.norm;
  }
  if (n2 < 0 || nt0 < 0) throw PreconditionError("interpolation_defect: table needs t = 2 and t = t0");
  double worst = -kInf;
  for (const auto& e : table) {
    if (e.t <= 2 || e.t >= t0) continue;
    const double g = (t0 - e.t) / (t0 - 2);
    const double rhs = std::pow(n2, 2 * g / e.t) * std::pow(nt0, t0 * (1 - g) / e.t);
    worst = std::max(worst, rhs > 0 ? e.norm / rhs - 1 : (e.norm > 0 ? kInf : 0.0));
  }
  return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = n * sxx - sx * sx;
  return den > 0 ? (n * sxy - sx * sy) / den : 0.0;
}

KScan k_scan(const CoefficientSet& base, const std::vector<double>& Ks, const std::vector<double>& t_list,
             const MultiplierOptions& opt, int jobs) {
  auto member = [&](double K) {
    CoefficientSet c = base;
    if (base.W1) {
      const VectorFn w = base.W1;
      c.W1 = [w, K](const Vec2& x) { return Vec2(K * w(x)); };
    }
    c.K = K * base.K;
    return log_gradient_table(solve_multiplier(c, opt), t_list);
  };
  std::vector<std::vector<GradientEntry>> tables(Ks.size());
  const std::size_t batch = std::size_t(std::max(1, jobs));
  for (std::size_t s = 0; s < Ks.size(); s += batch) {
    std::vector<std::future<std::vector<GradientEntry>>> fut;
    for (std::size_t i = s; i < std::min(Ks.size(), s + batch); ++i)
      fut.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, member, Ks[i]));
    for (std::size_t i = s; i < std::min(Ks.size(), s + batch); ++i) tables[i] = fut[i - s].get();
  }
  KScan out;
  out.t_list = t_list;
  for (std::size_t j = 0; j < t_list.size(); ++j) {
    std::vector<double> y;
    for (std::size_t i = 0; i < Ks.size(); ++i) {
      out.rows.push_back({Ks[i], t_list[j], tables[i][j].norm});
      y.push_back(tables[i][j].norm);
    }
    out.exponents.push_back(loglog_slope(Ks, y));
  }
  return out;
}

void write_k_scan(const KScan& s, std::ostream& os) {
  os << "K,t,norm\n";
  os.precision(12);
  for (const auto& r : s.rows) os << r.K << ',' << r.t << ',' << r.norm << '\n';
}

LocalEnergyCheck local_energy_check(const MultiplierResult& r, const CoefficientSet& c0, int z_grid, int r_count) {
  const TriMesh& m = *r.Phi.mesh;
  CoefficientSet c = c0;
  record_norms(c, m, r.d);
  const double K = std::max(c.K, 1.0);
  const double grad2 = gradient_norm(r.Phi, 2.0, Region::disk(r.rho75 + 0.2));
  const double sup = r.Phi.values.cwiseAbs().maxCoeff();
  LocalEnergyCheck out;
  out.mu_exp = r.mu_exp;
  out.scale = std::max({1.0, c.norm_W1 / K, sup / K, grad2 / K});
  const double eps = 1.0 / (out.scale * K);
  const auto g = tri_gradient(m, r.Phi.values);
  const double inv = 1.0 / (out.scale * K);
  const TriIntegrand energy = [&](std::size_t t, const std::array<double, 3>&, const Vec2&) {
    return g[t].squaredNorm() * inv * inv;
  };
  for (int a = 0; a < z_grid; ++a)
    for (int b = 0; b < z_grid; ++b) {
      const Vec2 z = z_grid == 1 ? Vec2(0, 0)
                                 : Vec2(r.rho75 * (2.0 * a / (z_grid - 1) - 1), r.rho75 * (2.0 * b / (z_grid - 1) - 1));
      if (z.norm() >= r.rho75) continue;
      const double cz = 2.5 * (r.rho75 + 0.2 - z.norm());  // largest c with B_{2c/5}(z) inside B_{rho+1/5}
      const double lo = std::max(eps, 2 * m.h), hi = cz / 5;
      if (!(lo < hi)) continue;
      for (int k = 0; k < r_count; ++k) {
        const double rr = lo * std::pow(hi / lo, (k + 0.5) / r_count);
        const double e = integral(m, energy, Region::disk(rr, z));
        out.C_fit = std::max(out.C_fit, e / std::pow(rr, r.mu_exp));
        ++out.samples;
      }
    }
  return out;
}

MaxPrincipleResult max_principle_check(const ScalarField& u, const CoefficientSet& c, double tol) {
  const TriMesh& m = *u.mesh;
  const auto op = assemble_bilinear(u.mesh, c, true);
  const Eigen::VectorXd res = op.K * u.values;
  const SpMat absK = op.K.cwiseAbs();
  const Eigen::VectorXd scale = absK * u.values.cwiseAbs();
  MaxPrincipleResult r;
  r.worst_residual = -kInf;
  double worst_scaled = -kInf;
  double sup_b = -kInf;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const Eigen::Index k = Eigen::Index(i);
    if (m.boundary[i]) {
      sup_b = std::max(sup_b, u.values[k]);
      continue;
    }
    r.worst_residual = std::max(r.worst_residual, res[k]);
    worst_scaled = std::max(worst_scaled, res[k] - tol * std::max(scale[k], 1e-300));
  }
  r.subsolution = worst_scaled <= 0;
  r.slack = std::max(sup_b, 0.0) - u.values.maxCoeff();
  r.pass = r.subsolution && r.slack >= -tol * std::max(1.0, u.values.cwiseAbs().maxCoeff());
  return r;
}

}  // namespace llab
