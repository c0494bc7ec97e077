#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "llab/beltrami.hpp"
#include "llab/estimates.hpp"
#include "llab/greens.hpp"
#include "llab/multiplier.hpp"
#include "llab/quasigeometry.hpp"
#include "llab/report.hpp"
#include "llab/transforms.hpp"

namespace llab {
namespace {

double num(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v.get<double>();
}

struct Params {
  const ScenarioConfig& cfg;
  double d(const char* k) const { return num(cfg.params.at(k)); }
  int i(const char* k) const { return cfg.params.at(k).get<int>(); }
  bool b(const char* k) const { return cfg.params.at(k).get<bool>(); }
  std::string s(const char* k) const { return cfg.params.at(k).get<std::string>(); }
  std::vector<double> v(const char* k) const {
    std::vector<double> out;
    for (const auto& x : cfg.params.at(k)) out.push_back(num(x));
    return out;
  }
  std::vector<std::string> sv(const char* k) const { return cfg.params.at(k).get<std::vector<std::string>>(); }
  double tol(const char* k) const { return num(cfg.tolerances.at(k)); }
};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(n == 1 ? a : a * std::pow(b / a, double(k) / (n - 1)));
  return v;
}

class Recorder {
 public:
  explicit Recorder(ScenarioReport& r) : r_(r) {}

  void check(const std::string& name, const std::string& anchor, double measured, const std::string& rel,
             double bound, const std::string& note = "") {
    bool ok = false;
    if (rel == "<=") ok = measured <= bound;
    else if (rel == ">=") ok = measured >= bound;
    else if (rel == "<") ok = measured < bound;
    else if (rel == ">") ok = measured > bound;
    add(name, anchor, measured, rel, bound, ok, note);
  }
  // Verdict decided by the callee (its tolerance is scaled internally).
  void verdict(const std::string& name, const std::string& anchor, double measured, const std::string& rel,
               double bound, bool ok, const std::string& note) {
    add(name, anchor, measured, rel, bound, ok, note);
  }
  void constant(const std::string& name, double v) { r_.constants[name] = v; }
  void table(const std::string& file, const std::string& csv) {
    r_.tables[file] = csv;
    r_.artifacts.push_back(file);
  }
  void plot(const PlotSpec& p) {
    r_.plots.push_back(p);
    r_.artifacts.push_back(p.svg);
  }

  template <class F>
  void stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      f();
    } catch (const std::exception& e) {
      add(name + ".completed", "plumbing", 0, ">=", 1, false, e.what());
    }
    r_.timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

 private:
  void add(const std::string& name, const std::string& anchor, double measured, const std::string& rel, double bound,
           bool ok, const std::string& note) {
    r_.checks.push_back({name, anchor, measured, bound, rel, ok, note});
  }
  ScenarioReport& r_;
};

using Runner = std::function<void(const ScenarioConfig&, const RunContext&, Recorder&)>;

// ---------------------------------------------------------------- coefficient recipes

VectorFn rotation(double a) {
  return [a](const Vec2& x) { return Vec2(-a * x.y(), a * x.x()); };
}

MatrixFn variable_A() {
  return [](const Vec2& x) {
    Mat2 m;
    const double off = 0.2 * std::sin(x.x() * x.y());
    m << 1.3 + 0.3 * std::sin(x.x()), off, off, 1.1 + 0.2 * std::cos(x.y());
    return m;
  };
}

Eigen::VectorXd trace(const TriMesh& m, const ScalarFn& g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    if (m.boundary[i]) b[Eigen::Index(i)] = g(m.nodes[i]);
  return b;
}

CoefficientSet rotation_drift(const Params& P) {
  CoefficientSet c;
  if (P.b("variable_A")) {
    c.A = variable_A();
    c.lambda = 0.7;
    c.Lambda = 1.8;
  }
  const double K = P.d("K"), w2 = P.d("w2"), v0 = P.d("v0");
  c.W1 = rotation(K);
  c.W2 = rotation(w2);
  c.V = [v0](const Vec2& x) { return v0 * (1 + x.x() * x.x()); };
  c.K = P.d("d") * K;
  c.q1 = P.d("q1");
  c.q2 = P.d("q2");
  c.p = P.d("p");
  c.name = "rotation_drift";
  return c;
}

CoefficientSet random_admissible(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  CoefficientSet c;
  const double a1 = 0.3 * U(rng), a2 = 0.3 * U(rng), s = 0.4 * U(rng), w = 2 * U(rng);
  c.A = [a1, a2, s](const Vec2& x) {
    Mat2 m;
    m << 1 + a1 * std::sin(x.x() + x.y()), s * 0.3 * std::cos(x.y()), s * 0.3 * std::cos(x.y()),
        1 + a2 * x.x() * x.x() / 4;
    return m;
  };
  c.lambda = 0.5;
  c.Lambda = 2.0;
  c.W1 = rotation(w);
  c.W2 = rotation(0.1 * U(rng));
  const double v0 = 0.1 * U(rng), v1 = 0.1 * U(rng);
  c.V = [v0, v1](const Vec2& x) { return v0 + v1 * std::pow(std::sin(3 * x.x()), 2); };
  c.K = 2 * 1.8;
  c.name = "random_admissible";
  return c;
}

Mat2 random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  Mat2 b;
  b << U(rng), U(rng), U(rng), U(rng);
  return b * b.transpose() + (0.1 + std::abs(U(rng))) * Mat2::Identity();
}

// Seeded subsolutions of the adjoint problem with admissible coefficients: smallest boundary slack.
void subsolution_checks(Recorder& rec, const std::string& prefix, std::uint64_t seed, int count, double h,
                        double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  auto m = triangulate_disk(1.8, h);
  double min_slack = kInf;
  int sub = 0;
  for (int k = 0; k < count; ++k) {
    const auto c = random_admissible(rng);
    const double f0 = U(rng), f1 = U(rng), b0 = U(rng) - 0.5, b1 = U(rng);
    const auto op = assemble_bilinear(m, c, true);
    const auto F =
        load_vector(*m, [f0, f1](const Vec2& x) { return -f0 - f1 * std::abs(std::sin(2 * x.y())); }, nullptr);
    const auto u = solve_dirichlet(op, trace(*m, [b0, b1](const Vec2& x) { return b0 + b1 * x.x(); }), F, nullptr,
                                   1e-12);
    const auto r = max_principle_check(u, c);
    sub += r.subsolution;
    min_slack = std::min(min_slack, r.slack);
  }
  rec.check(prefix + "subsolutions", "maxPrinc", sub, ">=", count);
  rec.check(prefix + "min_slack", "maxPrinc", min_slack, ">=", -tol);
  rec.constant(prefix + "min_slack", min_slack);
}

// ---------------------------------------------------------------- multiplier

void record_multiplier(Recorder& rec, const std::string& pre, const MultiplierResult& r, const CoefficientSet& c,
                       double tol) {
  const auto& h = r.hypotheses;
  rec.check(pre + "W1_within_K", "phiLem", h.norm_W1, "<=", c.K);
  rec.check(pre + "W2_small", "phiLem", h.norm_W2, "<=", h.W2_bound);
  rec.check(pre + "V_small", "phiLem", h.norm_V, "<=", h.V_bound);
  rec.verdict(pre + "positivity_W1", "phiLem", h.pos1.min_value, ">=", 0, h.pos1.holds,
              "tolerance scaled to the size of each tested integral");
  rec.verdict(pre + "positivity_W2V", "phiLem", h.pos2.min_value, ">=", 0, h.pos2.holds,
              "tolerance scaled to the size of each tested integral");
  rec.check(pre + "coercivity", "solvableLem", r.coercivity.gamma, ">", 0);
  rec.check(pre + "phi_min", "phiBound", r.phi_min, ">=", 1.0 / 3 - tol);
  rec.check(pre + "phi_max", "phiBound", r.phi_max, "<=", 1.0 + tol);
  rec.constant(pre + "phi_min", r.phi_min);
  rec.constant(pre + "phi_max", r.phi_max);
  rec.constant(pre + "coercivity_gamma", r.coercivity.gamma);
  rec.constant(pre + "W2_bound", h.W2_bound);
  rec.constant(pre + "V_bound", h.V_bound);
}

HypothesisConstants config_constants(const Params& P) { return {P.d("c_q2"), P.d("C_q2"), P.d("C_p")}; }

HypothesisConstants resolve_constants(const Params& P, const CoefficientSet& c, const RunContext& ctx,
                                      Recorder& rec, const std::string& pre) {
  HypothesisConstants k = config_constants(P);
  if (P.s("constants") != "fitted") return k;
  GreenConstantsOptions o;
  o.d = P.d("d");
  o.jobs = ctx.jobs;
  const auto t = green_constants(c, o);
  k.C_p = t.constants.C_p;
  k.C_q2 = t.constants.C_q2;
  rec.constant(pre + "fitted_C_p", k.C_p);
  rec.constant(pre + "fitted_C_q2", k.C_q2);
  return k;
}

void run_multiplier(const ScenarioConfig& cfg, const RunContext& ctx, Recorder& rec) {
  const Params P{cfg};
  const double tol = P.tol("bound_tol");
  MultiplierOptions o;
  o.d = P.d("d");
  o.h = cfg.h;
  o.bound_tol = tol;

  if (cfg.preset == "rotation_drift") {
    const auto c = rotation_drift(P);
    rec.stage("multiplier", [&] {
      o.constants = resolve_constants(P, c, ctx, rec, "");
      record_multiplier(rec, "", solve_multiplier(c, o), c, tol);
    });
    const auto Ks = P.v("k_scan");
    if (!Ks.empty()) {
      rec.stage("k_scan", [&] {
        CoefficientSet base = c;
        base.W1 = rotation(1.0);
        base.K = o.d;
        MultiplierOptions ko = o;
        ko.h = P.d("k_scan_h");
        const auto scan = k_scan(base, Ks, P.v("t_list"), ko, ctx.jobs);
        const double mu = mu_exponent(c.q1, c.q2, c.p);
        for (std::size_t j = 0; j < scan.t_list.size(); ++j) {
          const double t = scan.t_list[j];
          const double eps = t <= 2 ? 0.0 : interpolation_epsilon(t, o.t0, mu);
          rec.check("k_scan.exponent_t" + fmt(t), "PhiepsBound", scan.exponents[j], "<=",
                    1.0 + eps + P.tol("k_scan_margin"));
          rec.constant("k_scan.exponent_t" + fmt(t), scan.exponents[j]);
        }
        std::ostringstream os;
        os << std::setprecision(17);
        write_k_scan(scan, os);
        rec.table("k_scan.csv", os.str());
        PlotSpec p;
        p.title = "log-gradient norm against K";
        p.csv = "k_scan.csv";
        p.svg = "k_scan.svg";
        p.x = "K";
        p.y = "norm";
        p.series = "t";
        p.logx = p.logy = true;
        rec.plot(p);
      });
    }
  } else if (cfg.preset == "bessel") {
    rec.stage("multiplier", [&] {
      const double V0 = P.d("V");
      CoefficientSet c;
      c.V = [V0](const Vec2&) { return V0; };
      c.name = "bessel";
      o.constants = config_constants(P);
      const auto r = solve_multiplier(c, o);
      record_multiplier(rec, "", r, c, tol);
      PointLocator loc(r.phi.mesh);
      const double k = std::sqrt(V0), I0d = std::cyl_bessel_i(0.0, k * o.d);
      const double e0 = std::abs(loc.interpolate(r.phi.values, Vec2(0, 0)) - 1.0 / I0d);
      double e1 = 0;
      for (int j = 0; j < 8; ++j) {
        const Vec2 p = 0.5 * o.d * Vec2(std::cos(j * kPi / 4), std::sin(j * kPi / 4));
        e1 = std::max(e1, std::abs(loc.interpolate(r.phi.values, p) - std::cyl_bessel_i(0.0, k * o.d / 2) / I0d));
      }
      rec.check("bessel_center", "phiLem", e0, "<=", P.tol("bessel"));
      rec.check("bessel_half_radius", "phiLem", e1, "<=", P.tol("bessel"));
    });
  } else {  // random_admissible
    std::mt19937_64 rng(cfg.seed);
    const int n = P.i("count");
    for (int k = 0; k < n; ++k) {
      const auto c = random_admissible(rng);
      const std::string pre = "set" + std::to_string(k) + ".";
      rec.stage(pre + "multiplier", [&] {
        MultiplierOptions ok = o;
        ok.constants = resolve_constants(P, c, ctx, rec, pre);
        record_multiplier(rec, pre, solve_multiplier(c, ok), c, tol);
      });
    }
  }
  const int subs = P.i("subsolutions");
  if (subs > 0)
    rec.stage("max_principle", [&] {
      subsolution_checks(rec, "max_principle.", cfg.seed + 1, subs, P.d("subsolution_h"), P.tol("max_principle"));
    });
}

// ---------------------------------------------------------------- beltrami

void run_beltrami(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  if (cfg.preset == "random_elliptic") {
    rec.stage("samples", [&] {
      std::mt19937_64 rng(cfg.seed);
      double worst = -kInf, Kmax = 0;
      for (int k = 0; k < P.i("count"); ++k) {
        const Mat2 a = random_spd(rng);
        const double lam = std::sqrt(a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1));
        const double K = qc_bound(a, lam);
        worst = std::max(worst, std::abs(eta_of(a)) + std::abs(nu_of(a)) - K);
        Kmax = std::max(Kmax, K);
      }
      rec.check("sum_minus_bound", "etanuBds", worst, "<=", P.tol("bound"));
      rec.check("K_qc", "etanuBds", Kmax, "<", 1.0);
      rec.constant("max_K_qc", Kmax);
    });
  } else if (cfg.preset == "constant_scalar") {
    rec.stage("constant", [&] {
      const double a = P.d("a");
      const auto b = beltrami_coefficients(triangulate_disk(1.0, cfg.h), [a](const Vec2&) {
        return Mat2(a * Mat2::Identity());
      });
      const double nu_exact = (a - 1) / (a + 1);
      double dnu = 0, deta = 0;
      for (Eigen::Index i = 0; i < b.nu.values.size(); ++i) {
        dnu = std::max(dnu, std::abs(b.nu.values[i] - nu_exact));
        deta = std::max(deta, std::abs(b.eta.values[i]));
      }
      rec.check("nu_exact", "nuDef", dnu, "<=", P.tol("exact"));
      rec.check("eta_zero", "etaDef", deta, "<=", P.tol("exact"));
      rec.check("sum_minus_bound", "etanuBds", b.max_sum - b.K_qc, "<=", P.tol("bound"));
      rec.check("K_qc", "etanuBds", b.K_qc, "<", 1.0);
      rec.constant("nu", nu_exact);
    });
  } else {
    rec.stage("variable", [&] {
      const auto b = beltrami_coefficients(triangulate_disk(P.d("radius"), cfg.h), variable_A());
      rec.check("sum_minus_bound", "etanuBds", b.max_sum - b.K_qc, "<=", P.tol("bound"));
      rec.check("K_qc", "etanuBds", b.K_qc, "<", 1.0);
      rec.constant("K_qc", b.K_qc);
      rec.constant("max_sum", b.max_sum);
    });
  }
}

// ---------------------------------------------------------------- similarity

GridField smooth_field(const UniformComplexGrid& g, double shift) {
  return sample(g, [shift, &g](const Vec2& x) {
    const double r2 = x.squaredNorm() / (g.mask_radius * g.mask_radius);
    const double bump = r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0;
    return bump * cplx(1 + x.x() + shift, 0.5 * x.y() * x.y() - shift * x.x());
  });
}

double interior_max(const GridField& a, const GridField& b) {
  const auto& g = a.grid;
  double m = 0;
  for (int i = 1; i + 1 < g.N; ++i)
    for (int j = 1; j + 1 < g.N; ++j)
      if (g.point(i, j).norm() < g.mask_radius) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

double interior_l2(const GridField& a, const GridField& b) {
  const auto& g = a.grid;
  double s = 0;
  for (int i = 1; i + 1 < g.N; ++i)
    for (int j = 1; j + 1 < g.N; ++j)
      if (g.point(i, j).norm() < g.mask_radius) s += std::norm(a(i, j) - b(i, j)) * g.h * g.h;
  return std::sqrt(s);
}

void history_plot(Recorder& rec, const std::vector<double>& hist, const std::string& stem) {
  std::ostringstream os;
  os << "iteration,residual\n";
  for (std::size_t k = 0; k < hist.size(); ++k) os << k + 1 << ',' << fmt(hist[k]) << '\n';
  rec.table(stem + ".csv", os.str());
  PlotSpec p;
  p.title = "Neumann iteration residual";
  p.csv = stem + ".csv";
  p.svg = stem + ".svg";
  p.x = "iteration";
  p.y = "residual";
  p.logy = true;
  rec.plot(p);
}

void run_similarity(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  if (cfg.preset == "constant_q0") {
    rec.stage("integral_equation", [&] {
      const auto g = make_grid(P.i("N"), 1.0);
      const auto w = sample(g, [](const Vec2& x) { return cplx(2 + x.x(), x.y() * x.x()); });
      const cplx q = std::polar(P.d("q0_abs"), P.d("q0_arg"));
      const auto q0 = sample(g, [q](const Vec2&) { return q; });
      const auto h = smooth_field(g, 0.4);
      const auto r = solve_integral_equation(w, q0, h, P.d("t"));
      rec.check("iterations", "simPrinc", r.iterations, "<=", P.i("max_iterations"));
      rec.check("residual", "simPrinc", r.residual, "<=", P.tol("residual"));
      rec.check("product_error", "simPrinc", r.product_error, "<=", P.tol("product"));
      rec.constant("contraction", r.contraction);
      rec.constant("iterations", r.iterations);
      history_plot(rec, r.history, "history");
    });
  } else {
    rec.stage("isometry", [&] {
      const auto g = make_grid(P.i("N"), 1.0);
      double worst = 0;
      for (int s = 0; s < P.i("fields"); ++s) {
        std::mt19937_64 rng(cfg.seed + std::uint64_t(s));
        std::normal_distribution<double> Nd;
        const auto w = sample(g, [&](const Vec2&) { return cplx(Nd(rng), Nd(rng)); });
        worst = std::max(worst, std::abs(beurling_isometry_ratio(w) - 1.0));
      }
      rec.check("isometry", "TResults", worst, "<=", P.tol("isometry"));
    });
    rec.stage("finite_differences", [&] {
      std::ostringstream os;
      os << "N,h,dbar_err,d_err\n";
      std::vector<double> Cdbar, Cd;
      for (double Nd : P.v("fd_N")) {
        const auto g = make_grid(int(Nd), 1.0);
        const auto w = smooth_field(g, 0.2);
        const auto T = cauchy_transform(w);
        const double e1 = interior_max(grid_dbar(T), w);
        const double e2 = interior_l2(grid_d(T), beurling_transform(w));
        const std::string n = std::to_string(int(Nd));
        rec.check("dbar_T.N" + n, "TResults", e1, "<=", g.h);
        rec.check("d_T.N" + n, "TResults", e2, "<=", g.h);
        Cdbar.push_back(e1 / g.h);
        Cd.push_back(e2 / g.h);
        os << n << ',' << fmt(g.h) << ',' << fmt(e1) << ',' << fmt(e2) << '\n';
      }
      for (std::size_t k = 1; k < Cdbar.size(); ++k) {
        rec.check("dbar_T.C_ratio" + std::to_string(k), "TResults", Cdbar[k] / Cdbar[k - 1], "<=",
                  P.tol("fd_stability"));
        rec.check("d_T.C_ratio" + std::to_string(k), "TResults", Cd[k] / Cd[k - 1], "<=", P.tol("fd_stability"));
      }
      rec.table("finite_differences.csv", os.str());
    });
  }
}

// ---------------------------------------------------------------- three circles

void three_circle_outputs(Recorder& rec, const std::vector<ThreeCircleRecord>& recs) {
  std::ostringstream os;
  os << std::setprecision(17);
  write_three_circle_csv(recs, os);
  rec.table("three_circle.csv", os.str());
  PlotSpec p;
  p.title = "three-circle slack";
  p.csv = "three_circle.csv";
  p.svg = "three_circle.svg";
  p.x = "s2";
  p.y = "slack";
  rec.plot(p);
}

void run_three_circle(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  if (cfg.preset == "monomial") {
    rec.stage("monomials", [&] {
      std::vector<ThreeCircleRecord> all;
      for (int k = 1; k <= P.i("k_max"); ++k) {
        const ComplexFn f = [k](const Vec2& p) { return std::pow(cplx(p.x(), p.y()), k); };
        double worst = 0;
        for (auto [s1, s2, s3] : {std::array{0.2, 0.5, 1.3}, std::array{0.05, 0.07, 1.9}, std::array{0.4, 1.0, 1.1}}) {
          const auto r = three_circle_from_curves(f, exact_circle(s1), exact_circle(s2), exact_circle(s3));
          worst = std::max(worst, std::abs(r.slack));
          all.push_back(r);
        }
        rec.check("slack.z" + std::to_string(k), "Hadamard", worst, "<=", P.tol("slack"));
      }
      three_circle_outputs(rec, all);
    });
  } else {
    rec.stage("hat_null", [&] {
      std::mt19937_64 rng(cfg.seed);
      const double amp = P.d("alpha_range");
      std::uniform_real_distribution<double> ua(-amp, amp), uc(-1.0, 1.0), us(0.15, 0.8);
      const double factor = P.tol("residual_factor");
      int checked = 0;
      double margin = kInf, worst_slack = kInf;
      std::vector<ThreeCircleRecord> all;
      const int count = P.i("count");
      for (int t = 0; t < count; ++t) {
        const HatOperator hat{ua(rng), 0.0};
        const Mat2 Ahat = hat.matrix();
        const cplx tau = hat.null_slope();
        std::array<cplx, 5> c;
        for (auto& x : c) x = cplx(uc(rng), uc(rng));
        c[0] += 2.0;
        const ComplexFn f = [c, tau](const Vec2& p) {
          const cplx z = p.x() + tau * p.y();
          return c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * c[4])));
        };
        std::array<double, 3> s;
        do {
          s = {us(rng), us(rng), us(rng)};
          std::sort(s.begin(), s.end());
        } while (s[1] - s[0] < 0.02 || s[2] - s[1] < 0.02);
        auto fs = fundamental_solution([Ahat](const Vec2&) { return Ahat; }, P.d("outer"), cfg.h);
        const auto field = interpolate_complex(fs->mesh(), f);
        const TriMesh& m = *fs->mesh();
        const auto gr = tri_gradient(m, field.values.real()), gi = tri_gradient(m, field.values.imag());
        double r2 = 0, g2 = 0;
        for (std::size_t k = 0; k < m.num_tris(); ++k) {
          const cplx fx(gr[k][0], gi[k][0]), fy(gr[k][1], gi[k][1]);
          r2 += m.area[k] * std::norm(hat.c1() * fx + hat.c2() * fy);
          g2 += m.area[k] * (std::norm(fx) + std::norm(fy));
        }
        const auto r = three_circle_check(field, *fs, s[0], s[1], s[2], std::sqrt(r2 / g2));
        margin = std::min(margin, r.slack + factor * r.residual);
        worst_slack = std::min(worst_slack, r.slack);
        all.push_back(r);
        ++checked;
      }
      rec.check("slack_margin", "3circle", margin, ">=", 0.0, "min of slack + factor * residual");
      rec.check("checked", "plumbing", checked, ">=", count);
      rec.constant("min_slack", worst_slack);
      three_circle_outputs(rec, all);
    });
  }
}

// ---------------------------------------------------------------- vanishing order

void run_vanishing(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  const auto r = geomspace(P.d("r_min"), P.d("r_max"), P.i("r_count"));
  if (cfg.preset == "monomial") {
    rec.stage("monomials", [&] {
      std::ostringstream os;
      os << "n,r,sup\n";
      for (double nd : P.v("n")) {
        const int n = int(nd);
        const auto fit =
            vanishing_order([n](const Vec2& p) { return std::pow(cplx(p.x(), p.y()), n).real(); }, r);
        rec.check("ord.n" + std::to_string(n), "OofV", std::abs(fit.ord - n), "<=", P.tol("ord"));
        rec.constant("ord.n" + std::to_string(n), fit.ord);
        for (std::size_t k = 0; k < fit.r.size(); ++k) os << n << ',' << fmt(fit.r[k]) << ',' << fmt(fit.sup[k]) << '\n';
      }
      rec.table("vanishing.csv", os.str());
      PlotSpec p;
      p.title = "sup of |u| on shrinking balls";
      p.csv = "vanishing.csv";
      p.svg = "vanishing.svg";
      p.x = "r";
      p.y = "sup";
      p.series = "n";
      p.logx = p.logy = true;
      rec.plot(p);
    });
  } else {
    rec.stage("k_scan", [&] {
      const auto Ks = P.v("K");
      std::vector<double> ords;
      std::ostringstream os;
      os << "K,ord\n";
      for (double K : Ks) {
        const auto s = radial_drift_solution(K, P.d("a"));
        VanishingScenario sc;
        sc.K = K;
        sc.C0 = P.d("C0");
        const auto fit = vanishing_order(s.u, r, sc);
        rec.check("upper_bound.K" + fmt(K), "localBd", fit.upper_ok ? 1 : 0, ">=", 1);
        ords.push_back(fit.ord);
        os << fmt(K) << ',' << fmt(fit.ord) << '\n';
      }
      bool increasing = true;
      for (std::size_t i = 1; i < ords.size(); ++i) increasing = increasing && ords[i] > ords[i - 1];
      rec.check("ord_increasing", "OofV1", increasing ? 1 : 0, ">=", 1);
      std::vector<double> lx, ly, w(Ks.size(), 1.0);
      for (std::size_t i = 0; i < Ks.size(); ++i) {
        lx.push_back(std::log(Ks[i]));
        ly.push_back(std::log(ords[i]));
      }
      const auto fit = weighted_line_fit(lx, ly, w);
      rec.check("ord_slope", "OofV1", fit[0], "<=", P.tol("slope"));
      rec.constant("ord_slope", fit[0]);
      rec.table("ord_vs_K.csv", os.str());
      PlotSpec p;
      p.title = "vanishing order against K";
      p.csv = "ord_vs_K.csv";
      p.svg = "ord_vs_K.svg";
      p.x = "K";
      p.y = "ord";
      p.logx = p.logy = true;
      p.has_fit = true;
      p.fit_slope = fit[0];
      p.fit_intercept = fit[1];
      rec.plot(p);
    });
  }
}

// ---------------------------------------------------------------- Landis

void landis_outputs(Recorder& rec, const LandisTable& t) {
  std::ostringstream os;
  os << std::setprecision(17);
  write_landis_csv(t, os);
  rec.table("landis.csv", os.str());
  // intercept of log(-log min_sup) = slope log R + c over the fitted upper half
  const std::size_t n = t.rows.size(), start = n / 2;
  double c = 0;
  for (std::size_t k = start; k < n; ++k)
    c += std::log(-std::log(t.rows[k].min_sup)) - t.exponent * std::log(t.rows[k].R);
  PlotSpec p;
  p.title = "Landis decay";
  p.csv = "landis.csv";
  p.svg = "landis.svg";
  p.x = "R";
  p.y = "min_sup";
  p.y_transform = "neglog";
  p.logx = p.logy = true;
  p.has_fit = t.fit_ok;
  p.fit_slope = t.exponent;
  p.fit_intercept = n > start ? c / double(n - start) : 0.0;
  rec.plot(p);
}

void run_landis(const ScenarioConfig& cfg, const RunContext& ctx, Recorder& rec) {
  const Params P{cfg};
  if (cfg.preset == "rescaling") {
    rec.stage("rescaling", [&] {
      const VectorFn W = [](const Vec2& p) { return Vec2(p / (1 + p.squaredNorm())); };
      const Vec2 z0(0.7, -0.4);
      for (double q : P.v("q")) {
        double worst = 0;
        for (double R : P.v("R")) {
          const auto n = check_drift_scaling(W, z0, R, P.d("r"), q);
          worst = std::max(worst, std::abs(n.ratio / n.predicted - 1.0));
        }
        rec.check("scaling.q" + fmt(q), "scaling", worst, "<=", P.tol("relative"));
      }
    });
    return;
  }
  const auto R = geomspace(P.d("R_min"), P.d("R_max"), P.i("R_count"));
  if (cfg.preset == "exp_decay") {
    rec.stage("decay", [&] {
      const ScalarFn u = [](const Vec2& p) { return std::exp(-p.norm()); };
      const auto t = landis_harness(u, kInf, R, ScenarioType::OofV3, 16, ctx.jobs);
      rec.check("fit_ok", "plumbing", t.fit_ok ? 1 : 0, ">=", 1);
      rec.check("exponent", "LandisThm", std::abs(t.exponent - 1.0), "<=", P.tol("exponent"));
      // growth hypothesis |u| <= exp(C1 |z|^{1 - 2/q}) with q = inf
      double g = -kInf;
      for (double Rv : R) g = std::max(g, -Rv - P.d("C1") * Rv);
      rec.check("growth_bound", "uBd", g, "<=", 0.0);
      rec.constant("exponent", t.exponent);
      landis_outputs(rec, t);
    });
  } else {
    rec.stage("decay", [&] {
      const auto g = sharpness_gallery("divergence_drift", P.d("q"));
      const auto t = landis_harness(g, R, ctx.jobs);
      rec.check("fit_ok", "plumbing", t.fit_ok ? 1 : 0, ">=", 1);
      rec.check("exponent", "LandisThm2", std::abs(t.exponent - g.alpha), "<=", P.tol("exponent"));
      rec.check("theorem_exponent", "LandisThm2", t.exponent, "<=", t.theorem_exponent);
      // polynomial growth hypothesis |u| <= |z|^m on the sampled circles
      double worst = -kInf;
      for (double Rv : R) worst = std::max(worst, -std::pow(Rv - 1, g.alpha) - P.d("m") * std::log(Rv));
      rec.check("growth_bound", "LandisThm2", worst, "<=", 0.0);
      rec.constant("exponent", t.exponent);
      rec.constant("alpha", g.alpha);
      landis_outputs(rec, t);
    });
  }
}

// ---------------------------------------------------------------- sharpness

void run_sharpness(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  for (const auto& id : P.sv("cases")) {
    rec.stage(id, [&] {
      const auto g = sharpness_gallery(id, P.d("q"), -1.0, P.i("samples"));
      rec.check(id + ".residual", "sharpness", g.max_residual, "<=", P.tol("residual"));
      rec.constant(id + ".residual", g.max_residual);
      if (g.id == GalleryCase::divergence_drift) rec.constant(id + ".residual_literal_sign", g.max_residual_literal);
      if (g.id == GalleryCase::full_three_term) {
        rec.check(id + ".sign_gap", "OofV3", g.min_sign_gap, ">=", 0.0);
        rec.check(id + ".curl", "OofV3", g.max_curl, "<=", P.tol("curl"));
      }
    });
  }
  rec.stage("norm_identity", [&] {
    for (double q : P.v("q_norm")) {
      const auto g = sharpness_gallery("divergence_drift", q, -1.0, P.i("samples"));
      rec.check("norm_identity.q" + fmt(q), "sharpness", std::abs(g.W_norm_q_pow / g.W_norm_predicted - 1.0), "<=",
                P.tol("norm"));
    }
  });
}

// ---------------------------------------------------------------- Green's functions

CoefficientSet greens_coefficients(const ScenarioConfig& cfg) {
  const Params P{cfg};
  CoefficientSet c;
  if (cfg.preset == "laplace") return c;
  c.A = variable_A();
  c.lambda = 0.7;
  c.Lambda = 1.8;
  if (P.d("w1") != 0) c.W1 = rotation(P.d("w1"));
  c.W2 = rotation(P.d("w2"));
  c.p = P.d("p");
  c.q2 = P.d("q2");
  return c;
}

void run_greens(const ScenarioConfig& cfg, const RunContext& ctx, Recorder& rec) {
  const Params P{cfg};
  const auto c = greens_coefficients(cfg);
  const double rho = P.d("rho");
  const bool laplace = cfg.preset == "laplace";
  GreenOptions go;
  go.h = cfg.h;

  if (laplace)
    rec.stage("closed_form", [&] {
      const auto g = averaged_green(c, Vec2(0, 0), rho, go);
      const TriMesh& m = *g.gamma.mesh;
      double dev = 0;
      for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        const double r = m.nodes[i].norm();
        if (r <= 0.1 || m.boundary[i]) continue;
        const double exact = std::log(1.0 / r) / (2.0 * kPi);
        dev = std::max(dev, std::abs(g.gamma.values[Eigen::Index(i)] - exact));
      }
      rec.check("closed_form", "d3.1", dev, "<=", P.tol("closed_form"));
      rec.check("identity_residual", "eqB.25", g.identity_residual, "<=", P.tol("identity"));
    });

  rec.stage("symmetry", [&] {
    const auto s = symmetry_check(c, Vec2(0.2, 0.1), Vec2(-0.3, 0.25), rho, go);
    rec.check("symmetry", "eqB.60", s.deviation, "<=", P.tol("symmetry"));
    rec.constant("symmetry.pointwise_deviation", s.pointwise_deviation);
  });

  rec.stage("representation", [&] {
    RepresentationOptions o;
    o.h = cfg.h;
    o.jobs = ctx.jobs;
    const auto r = laplace ? representation_check(c, [](const Vec2&) { return 1.0; }, VectorFn{}, o)
                           : representation_check(
                                 c, [](const Vec2& x) { return 1.0 + x.x(); },
                                 [](const Vec2& x) { return Vec2(x.y(), 0.5); }, o);
    rec.check("representation", "eqB.14", r.max_deviation, "<=", P.tol("representation"));
    rec.check("probes", "plumbing", double(r.probes.size()), ">=", 10);
  });

  rec.stage("estimates", [&] {
    const Vec2 pole = laplace ? Vec2(0, 0) : Vec2(0.2, -0.1);
    auto g = averaged_green(c, pole, rho, go);
    const auto t = green_estimate_suite(g);
    for (const auto& row : t.rows)
      rec.verdict("estimate." + row.id + "." + fmt(row.s_or_tau), "t3.2", row.C, "<=", 100.0, row.holds,
                  "fitted constant on the eps scan");
    rec.check("level_slope", "t3.2", t.level_slope, "<=", 0.0);
    rec.check("level_slope_floor", "t3.2", t.level_slope, ">=", -2.0 / t.level_eps);
    rec.check("holder_eta", "t3.2", t.holder_eta, ">", 0.0);
    rec.constant("holder_eta", t.holder_eta);
    rec.constant("level_eps", t.level_eps);
    std::ostringstream os;
    os << std::setprecision(17);
    write_constants_csv({t}, os);
    rec.table("green_constants.csv", os.str());
  });

  if (!laplace) {
    rec.stage("constants", [&] {
      GreenConstantsOptions o;
      o.h = P.d("constants_h");
      o.grid = P.i("grid");
      o.jobs = ctx.jobs;
      CoefficientSet cc = c;
      cc.W1 = nullptr;  // operator of the multiplier problem: -div(A grad)
      const auto t = green_constants(cc, o);
      rec.check("poles", "plumbing", double(t.poles.size()), ">=", double(o.grid * o.grid));
      rec.check("C_p_finite", "phiLem", t.constants.C_p, "<", kInf);
      rec.check("C_q2_finite", "phiLem", t.constants.C_q2, "<", kInf);
      rec.constant("C_p", t.constants.C_p);
      rec.constant("C_q2", t.constants.C_q2);
    });
    const int subs = P.i("subsolutions");
    if (subs > 0)
      rec.stage("max_principle", [&] {
        subsolution_checks(rec, "max_principle.", cfg.seed, subs, P.d("subsolution_h"), P.tol("max_principle"));
      });
  }
}

// ---------------------------------------------------------------- full pipeline

// Bilinear interpolation of cell-centred grid samples.
ComplexFn grid_interpolant(const GridField& f) {
  return [f](const Vec2& p) {
    const auto& g = f.grid;
    const double x = p.x() / g.h + g.N / 2 - 0.5, y = p.y() / g.h + g.N / 2 - 0.5;
    const int i = std::clamp(int(std::floor(x)), 0, g.N - 2), j = std::clamp(int(std::floor(y)), 0, g.N - 2);
    const double a = x - i, b = y - j;
    return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) + (1 - a) * b * f(i, j + 1) +
           a * b * f(i + 1, j + 1);
  };
}

void run_full_pipeline(const ScenarioConfig& cfg, const RunContext&, Recorder& rec) {
  const Params P{cfg};
  const auto c = rotation_drift(P);
  const double region = P.d("region");
  MultiplierResult mult;
  ScalarField u;
  StreamFunction stream;
  SimilarityFactorization sim;
  bool ok = true;

  rec.stage("multiplier", [&] {
    MultiplierOptions o;
    o.d = P.d("d");
    o.h = cfg.h;
    o.bound_tol = P.tol("bound_tol");
    mult = solve_multiplier(c, o);
    record_multiplier(rec, "multiplier.", mult, c, o.bound_tol);
  });
  if (!mult.phi.mesh) return;

  rec.stage("solution", [&] {
    const TriMesh& m = *mult.phi.mesh;
    const auto op = assemble_bilinear(mult.phi.mesh, c);
    SolveInfo info;
    u = solve_dirichlet(op, trace(m, [](const Vec2& x) { return 1 + 0.3 * x.x() + 0.2 * x.x() * x.y(); }),
                        Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes())), &info);
    rec.check("solution.residual", "plumbing", info.residual, "<=", 1e-8);
  });
  if (!u.mesh) return;

  rec.stage("stream", [&] {
    stream = stream_function(u, mult.phi, c, region);
    rec.check("stream.duality", "streamFunc", stream.duality_error, "<=", P.tol("duality"));
    const auto red = reduced_field_residual(u, mult.phi, stream.v, c, region, P.d("t"));
    rec.check("reduced.relative", "diffEq", red.relative, "<=", P.tol("reduced_factor") * cfg.h);
    rec.constant("reduced.alpha_norm", red.alpha_norm);
    rec.constant("reduced.beta1_norm", red.beta1_norm);
    rec.constant("reduced.beta2_norm", red.beta2_norm);
  });
  if (!stream.v.mesh) return;

  rec.stage("similarity", [&] {
    const auto b = beltrami_coefficients(u.mesh, c.A);
    ComplexField w{u.mesh, Eigen::VectorXcd(u.mesh->num_nodes())};
    for (Eigen::Index i = 0; i < w.values.size(); ++i)
      w.values[i] = cplx(mult.phi.values[i] * u.values[i], stream.v.values[i]);
    const auto coef = reduced_coefficient_field(mult.phi, c);
    const auto g = make_grid(P.i("N"), region);
    const auto A = sample(g, coef);
    sim = solve_similarity(sample(g, w), sample(g, b.eta), sample(g, b.nu), A, A, P.d("t"));
    rec.check("similarity.residual", "simPrinc", sim.residual, "<=", P.tol("residual"));
    rec.check("similarity.product_error", "simPrinc", sim.product_error, "<=", P.tol("product"));
    rec.check("similarity.Dw_residual", "simPrinc", sim.Dw_residual, "<=", P.tol("dw"));
    history_plot(rec, sim.history, "similarity_history");
  });
  ok = sim.f.grid.N > 0;
  if (!ok) return;

  rec.stage("three_circle", [&] {
    const auto s = P.v("s");
    auto fs = fundamental_solution(c.A, P.d("d"), cfg.h, Vec2(0, 0), c.lambda, c.Lambda);
    const auto r = three_circle_check(grid_interpolant(sim.f), *fs, s.at(0), s.at(1), s.at(2), sim.Dw_residual);
    rec.check("three_circle.slack_margin", "3circle", r.slack + P.tol("residual_factor") * r.residual, ">=", 0.0,
              "slack + factor * Dw residual");
    rec.constant("three_circle.slack", r.slack);
    three_circle_outputs(rec, {r});
  });

  rec.stage("vanishing_order", [&] {
    VanishingScenario sc;
    sc.type = ScenarioType::OofV;
    sc.K = c.K;
    sc.C0 = P.d("C0");
    sc.d = P.d("d");
    const auto fit = vanishing_order(u, geomspace(0.05, 0.9, 12), sc);
    rec.check("vanishing.finite_order", "OofV", fit.diverging ? 0 : 1, ">=", 1);
    rec.check("vanishing.upper_bound", "localBd", fit.upper_ok ? 1 : 0, ">=", 1);
    rec.check("vanishing.lower_bound", "OofV", fit.lower_ok ? 1 : 0, ">=", 1);
    rec.constant("vanishing.ord", fit.ord);
  });
}

// ---------------------------------------------------------------- registry

ParamInfo prm(std::string key, std::string kind, json def, std::string doc) {
  return {std::move(key), std::move(kind), std::move(def), std::move(doc)};
}

std::vector<ParamInfo> constants_params() {
  return {prm("constants", "choice:config|fitted", "config", "smallness constants from config or fitted Green norms"),
          prm("c_q2", "positive", 1.0, "constant in the W2 smallness condition"),
          prm("C_q2", "positive", 1.0, "Green gradient-norm constant"),
          prm("C_p", "positive", 1.0, "Green norm constant")};
}

std::vector<ParamInfo> drift_params() {
  return {prm("K", "positive", 1.0, "rotation strength of W1"),
          prm("w2", "real", 0.05, "rotation strength of W2"),
          prm("v0", "real", 0.05, "potential scale, V = v0 (1 + x^2)"),
          prm("variable_A", "bool", true, "variable symmetric A instead of the identity"),
          prm("q1", "q_open", "inf", "Lebesgue exponent of W1"),
          prm("q2", "q_open", "inf", "Lebesgue exponent of W2"),
          prm("p", "p", "inf", "Lebesgue exponent of V"),
          prm("d", "positive", 1.8, "domain radius")};
}

template <class... V>
std::vector<ParamInfo> join(std::vector<ParamInfo> a, const V&... rest) {
  (a.insert(a.end(), rest.begin(), rest.end()), ...);
  return a;
}

struct Preset {
  PresetInfo info;
  Runner run;
};

const std::vector<Preset>& registry() {
  static const std::vector<Preset> presets = [] {
    std::vector<Preset> v;
    auto add = [&](std::string type, std::string name, std::string doc, double h, std::vector<ParamInfo> params,
                   std::map<std::string, double> tol, Runner run) {
      v.push_back({{std::move(type), std::move(name), std::move(doc), std::move(params), std::move(tol), h},
                   std::move(run)});
    };
    const std::vector<ParamInfo> subs{prm("subsolutions", "int", 0, "seeded adjoint subsolutions to test"),
                                      prm("subsolution_h", "positive", 0.1, "mesh size for the subsolutions")};

    add("multiplier", "rotation_drift", "rotational drifts with a small potential", 0.04,
        join(drift_params(), constants_params(), subs,
             std::vector<ParamInfo>{prm("k_scan", "positives", json::array({1, 2, 4, 8}), "W1 scales for the K-scan"),
                                    prm("t_list", "positives", json::array({2.0, 2.5}), "gradient exponents"),
                                    prm("k_scan_h", "positive", 0.05, "mesh size for the K-scan")}),
        {{"bound_tol", 0.02}, {"k_scan_margin", 0.2}, {"max_principle", 1e-10}}, run_multiplier);
    add("multiplier", "bessel", "A = I with a constant potential; closed-form multiplier", 0.03,
        join(std::vector<ParamInfo>{prm("V", "positive", 0.25, "constant potential"),
                                    prm("d", "positive", 1.8, "domain radius")},
             constants_params(), subs),
        {{"bound_tol", 0.02}, {"bessel", 1e-3}, {"max_principle", 1e-10}}, run_multiplier);
    add("multiplier", "random_admissible", "seeded admissible coefficient sets", 0.02,
        join(std::vector<ParamInfo>{prm("count", "count", 10, "number of sets"),
                                    prm("d", "positive", 1.8, "domain radius")},
             constants_params(), subs),
        {{"bound_tol", 0.02}, {"max_principle", 1e-10}}, run_multiplier);

    add("beltrami", "random_elliptic", "random symmetric positive definite matrices", 0.1,
        {prm("count", "count", 100, "number of samples")}, {{"bound", 1e-12}}, run_beltrami);
    add("beltrami", "constant_scalar", "A = a I", 0.2, {prm("a", "positive", 2.0, "scalar coefficient")},
        {{"bound", 1e-12}, {"exact", 1e-15}}, run_beltrami);
    add("beltrami", "variable", "smooth variable A on a disk", 0.1,
        {prm("radius", "positive", 1.5, "disk radius")}, {{"bound", 1e-12}}, run_beltrami);

    add("similarity", "constant_q0", "Neumann iteration with constant q0", 0,
        {prm("N", "pow2", 128, "grid size"), prm("q0_abs", "unit", 0.5, "modulus of q0"),
         prm("q0_arg", "real", 1.3, "argument of q0"), prm("t", "positive", 2.0, "integrability exponent"),
         prm("max_iterations", "int", 35, "iteration budget")},
        {{"residual", 1e-10}, {"product", 1e-12}}, run_similarity);
    add("similarity", "beurling", "Beurling isometry and Cauchy transform identities", 0,
        {prm("N", "pow2", 512, "grid size for the isometry"), prm("fields", "count", 20, "random fields"),
         prm("fd_N", "pow2s", json::array({64, 128}), "grid sizes for the difference identities")},
        {{"isometry", 1e-6}, {"fd_stability", 1.1}}, run_similarity);

    add("three_circle", "monomial", "z^k on exact circles", 0, {prm("k_max", "count", 5, "largest power")},
        {{"slack", 1e-12}}, run_three_circle);
    add("three_circle", "hat_null_random", "random null fields of constant hat operators", 0.07,
        {prm("count", "count", 50, "number of fields"), prm("outer", "positive", 2.5, "mesh radius"),
         prm("alpha_range", "unit", 0.5, "half-width of the anisotropy range")},
        {{"residual_factor", 10}}, run_three_circle);

    add("vanishing_order", "monomial", "Re z^n", 0,
        {prm("n", "positives", json::array({1, 2, 3}), "powers"), prm("r_min", "positive", 1e-3, "smallest radius"),
         prm("r_max", "positive", 0.5, "largest radius"), prm("r_count", "count", 25, "radii")},
        {{"ord", 0.05}}, run_vanishing);
    add("vanishing_order", "radial_drift", "radial drift family with growing K", 0,
        {prm("K", "positives", json::array({1, 2, 4, 8, 16}), "drift strengths"),
         prm("a", "real", 0.5, "singularity power"), prm("C0", "positive", 4.0, "normalization constant"),
         prm("q1", "q_closed", 3.0, "Lebesgue exponent of the drift"), prm("r_min", "positive", 0.1, "smallest radius"),
         prm("r_max", "positive", 0.95, "largest radius"), prm("r_count", "count", 12, "radii")},
        {{"slope", 1.15}}, run_vanishing);

    const std::vector<ParamInfo> Rgrid{prm("R_min", "positive", 10.0, "smallest radius"),
                                       prm("R_max", "positive", 100.0, "largest radius"),
                                       prm("R_count", "count", 10, "radii")};
    add("landis", "exp_decay", "u = exp(-r) with q = inf", 0,
        join(Rgrid, std::vector<ParamInfo>{prm("C1", "positive", 1.0, "growth constant")}), {{"exponent", 0.03}},
        run_landis);
    add("landis", "stretched", "stretched exponential of the divergence-drift family", 0,
        join(Rgrid, std::vector<ParamInfo>{prm("q", "q_open", 4.0, "Lebesgue exponent"),
                                           prm("m", "real", 0.0, "polynomial growth power")}),
        {{"exponent", 0.05}}, run_landis);
    add("landis", "rescaling", "norm identity under rescaling", 0,
        {prm("q", "qs_closed", json::array({2.0, 4.0, "inf"}), "exponents"),
         prm("R", "positives", json::array({0.5, 3.0}), "scales"), prm("r", "positive", 0.8, "ball radius")},
        {{"relative", 1e-6}}, run_landis);

    add("sharpness", "gallery", "closed-form sharpness examples", 0,
        {prm("cases", "choices:divergence_drift|gradient_drift|full_three_term", json::array({"divergence_drift", "gradient_drift", "full_three_term"}), "cases"),
         prm("q", "q_open", "inf", "Lebesgue exponent"), prm("samples", "count", 200, "annulus samples"),
         prm("q_norm", "qs_open", json::array({3.0, 4.0, 6.0}), "exponents for the norm identity")},
        {{"residual", 1e-8}, {"norm", 0.01}, {"curl", 1e-12}}, run_sharpness);

    const std::vector<ParamInfo> gparams{prm("rho", "positive", 0.02, "averaging radius")};
    add("greens", "laplace", "Laplacian on the unit disk", 0.03, gparams,
        {{"closed_form", 5e-3}, {"identity", 1e-9}, {"symmetry", 1e-8}, {"representation", 1e-3}}, run_greens);
    add("greens", "drift", "variable A with rotational drifts", 0.04,
        join(gparams,
             std::vector<ParamInfo>{prm("subsolutions", "int", 50, "seeded adjoint subsolutions to test"),
                                    prm("subsolution_h", "positive", 0.1, "mesh size for the subsolutions"),
                                    prm("w1", "real", 0.0, "rotation strength of W1"),
                                    prm("w2", "real", 1.5, "rotation strength of W2"),
                                    prm("p", "p", 4.0, "exponent for C_p"), prm("q2", "q_open", 6.0, "exponent for C_q2"),
                                    prm("grid", "count", 5, "pole lattice size"),
                                    prm("constants_h", "positive", 0.08, "mesh size for the pole lattice")}),
        {{"symmetry", 1e-6}, {"representation", 1e-3}, {"max_principle", 1e-10}}, run_greens);

    add("full_pipeline", "rotation_drift", "multiplier, stream function, similarity, three circles, vanishing order",
        0.06,
        join(drift_params(),
             std::vector<ParamInfo>{prm("region", "positive", 1.4, "radius of the reduced problem"),
                                    prm("N", "pow2", 128, "grid size"), prm("t", "positive", 4.0, "working exponent"),
                                    prm("s", "positives", json::array({0.3, 0.6, 1.0}), "quasi-circle levels"),
                                    prm("C0", "positive", 4.0, "normalization constant")}),
        {{"bound_tol", 0.02},
         {"duality", 0.1},
         {"reduced_factor", 3},
         {"residual", 1e-10},
         {"product", 1e-12},
         {"dw", 0.05},
         {"residual_factor", 10}},
        run_full_pipeline);
    return v;
  }();
  return presets;
}

}  // namespace

std::vector<std::string> scenario_types() {
  return {"multiplier", "beltrami", "similarity", "three_circle", "vanishing_order",
          "landis",     "sharpness", "greens",    "full_pipeline"};
}

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& p : registry()) out.push_back(p.info);
  return out;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunContext& ctx) {
  ScenarioReport rep;
  rep.config = cfg.echo();
  Recorder rec(rep);
  const Preset* found = nullptr;
  for (const auto& p : registry())
    if (p.info.type == cfg.type && p.info.name == cfg.preset) found = &p;
  if (!found) throw ConfigError("scenario '" + cfg.name + "': unknown preset " + cfg.type + "/" + cfg.preset);
  const auto t0 = std::chrono::steady_clock::now();
  found->run(cfg, ctx, rec);
  rep.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace llab
