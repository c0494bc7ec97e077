#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "llab/beltrami.hpp"
#include "llab/estimates.hpp"
#include "llab/multiplier.hpp"
#include "test_support.hpp"

using namespace llab;

namespace {

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(a * std::pow(b / a, double(k) / (n - 1)));
  return v;
}

double re_pow(const Vec2& p, int n) { return std::pow(cplx(p.x(), p.y()), n).real(); }

// 4th-order central difference of a scalar function along a coordinate.
double fd(const ScalarFn& f, const Vec2& p, int dir, double h = 1e-3) {
  Vec2 e = Vec2::Zero();
  e[dir] = h;
  return (8 * (f(p + e) - f(p - e)) - (f(p + 2 * e) - f(p - 2 * e))) / (12 * h);
}

}  // namespace

// ---------------------------------------------------------------- three circles

TEST(ThreeCircle, MonomialsOnBallsHaveZeroSlack) {
  for (int k = 1; k <= 5; ++k) {
    const ComplexFn f = [k](const Vec2& p) { return std::pow(cplx(p.x(), p.y()), k); };
    for (auto [s1, s2, s3] : {std::array{0.2, 0.5, 1.3}, std::array{0.05, 0.07, 1.9}, std::array{0.4, 1.0, 1.1}}) {
      const auto r = three_circle_from_curves(f, exact_circle(s1), exact_circle(s2), exact_circle(s3));
      EXPECT_NEAR(r.slack, 0.0, 1e-12) << k;
      EXPECT_GT(r.theta, 0);
      EXPECT_LT(r.theta, 1);
      EXPECT_NEAR(r.theta, std::log(s3 / s2) / std::log(s3 / s1), 1e-15);
    }
  }
}

TEST(ThreeCircle, MonomialsOnFundamentalSolutionCircles) {
  auto fs = fundamental_solution([](const Vec2&) { return Mat2::Identity(); }, 2.0, 0.08);
  for (int k = 1; k <= 5; ++k) {
    const ComplexFn f = [k](const Vec2& p) { return std::pow(cplx(p.x(), p.y()), k); };
    const auto r = three_circle_check(f, *fs, 0.3, 0.6, 1.2);
    EXPECT_NEAR(r.slack, 0.0, 1e-9) << k;
  }
}

TEST(ThreeCircle, OnePlusZIsLogConvex) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.02, 1.98);
  const ComplexFn f = [](const Vec2& p) { return 1.0 + cplx(p.x(), p.y()); };
  std::vector<ThreeCircleRecord> recs;
  for (int t = 0; t < 20; ++t) {
    std::array<double, 3> s{u(rng), u(rng), u(rng)};
    std::sort(s.begin(), s.end());
    const auto r = three_circle_from_curves(f, exact_circle(s[0]), exact_circle(s[1]), exact_circle(s[2]));
    // max |1 + z| on |z| = s is 1 + s
    const double th = std::log(s[2] / s[1]) / std::log(s[2] / s[0]);
    const double oracle = th * std::log1p(s[0]) + (1 - th) * std::log1p(s[2]) - std::log1p(s[1]);
    EXPECT_NEAR(r.M2, 1 + s[1], 1e-12);
    EXPECT_NEAR(r.slack, oracle, 1e-12);
    EXPECT_GE(r.slack, -1e-3);
    recs.push_back(r);
  }
  std::ostringstream os;
  write_three_circle_csv(recs, os);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "s1,s2,s3,theta,slack");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
}

TEST(ThreeCircle, RandomHatNullFieldsOnEllipses) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), uc(-1.0, 1.0), us(0.15, 0.8);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    const HatOperator hat{ua(rng), 0.0};
    const Mat2 Ahat = hat.matrix();
    ASSERT_LT(std::abs(Ahat(0, 1)), 1e-15);
    const cplx tau = hat.null_slope();
    std::array<cplx, 5> c;
    for (auto& x : c) x = cplx(uc(rng), uc(rng));
    c[0] += 2.0;
    const ComplexFn f = [c, tau](const Vec2& p) {
      const cplx z = p.x() + tau * p.y();
      return c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * c[4])));
    };
    auto fs = fundamental_solution([Ahat](const Vec2&) { return Ahat; }, 2.5, 0.07);
    const auto field = interpolate_complex(fs->mesh(), f);
    // relative L^2 norm of Dhat through P1 gradients
    const TriMesh& m = *fs->mesh();
    const auto gr = tri_gradient(m, field.values.real()), gi = tri_gradient(m, field.values.imag());
    double r2 = 0, g2 = 0;
    for (std::size_t k = 0; k < m.num_tris(); ++k) {
      const cplx fx(gr[k][0], gi[k][0]), fy(gr[k][1], gi[k][1]);
      r2 += m.area[k] * std::norm(hat.c1() * fx + hat.c2() * fy);
      g2 += m.area[k] * (std::norm(fx) + std::norm(fy));
    }
    const double residual = std::sqrt(r2 / g2);
    std::array<double, 3> s{us(rng), us(rng), us(rng)};
    std::sort(s.begin(), s.end());
    if (s[1] - s[0] < 0.02 || s[2] - s[1] < 0.02) continue;
    const auto r = three_circle_check(field, *fs, s[0], s[1], s[2], residual);
    EXPECT_GE(r.slack, -10 * r.residual) << t;
    EXPECT_TRUE(std::isfinite(r.slack));
    ++checked;
  }
  EXPECT_GE(checked, 40);
}

TEST(ThreeCircle, RejectsUnorderedRadii) {
  const ComplexFn f = [](const Vec2& p) { return cplx(p.x(), p.y()); };
  EXPECT_THROW(three_circle_from_curves(f, exact_circle(0.5), exact_circle(0.4), exact_circle(1.0)),
               PreconditionError);
}

// ---------------------------------------------------------------- vanishing order

TEST(VanishingOrder, HarmonicPolynomials) {
  const auto r = geomspace(1e-3, 0.5, 25);
  double prev = 0;
  for (int n = 1; n <= 3; ++n) {
    const auto fit = vanishing_order([n](const Vec2& p) { return re_pow(p, n); }, r);
    EXPECT_NEAR(fit.ord, n, 0.05);
    EXPECT_GT(fit.ord, prev);
    EXPECT_FALSE(fit.diverging);
    prev = fit.ord;
    for (std::size_t i = 1; i < fit.r.size(); ++i) EXPECT_LT(fit.r[i], fit.r[i - 1]);
    for (double s : fit.sup) EXPECT_GT(s, 0);
    // smallest decade only
    for (double x : fit.fit_r) EXPECT_LE(x, 10 * fit.r.back() * (1 + 1e-12));
  }
}

TEST(VanishingOrder, UnderflowDroppedAndInfiniteOrderFlagged) {
  const auto r = geomspace(1e-3, 0.5, 40);
  const auto fit = vanishing_order([](const Vec2& p) { return std::exp(-1.0 / p.norm()); }, r);
  EXPECT_TRUE(fit.diverging);
  EXPECT_FALSE(fit.notes.empty());
  EXPECT_LT(fit.fit_r.size(), r.size());
  const auto poly = vanishing_order([](const Vec2& p) { return re_pow(p, 6); }, r);
  EXPECT_FALSE(poly.diverging);
}

TEST(VanishingOrder, RadialDriftFamilySolvesEquation) {
  const auto s = radial_drift_solution(4.0, 0.5);
  // div(grad u + W u) by finite differences of the flux components
  for (Vec2 p : {Vec2(0.3, 0.2), Vec2(-0.5, 0.7), Vec2(0.9, -0.1)}) {
    const ScalarFn Fx = [&](const Vec2& z) { return fd(s.u, z, 0, 1e-4) + s.W(z).x() * s.u(z); };
    const ScalarFn Fy = [&](const Vec2& z) { return fd(s.u, z, 1, 1e-4) + s.W(z).y() * s.u(z); };
    const double div = fd(Fx, p, 0, 1e-2) + fd(Fy, p, 1, 1e-2);
    const double scale = std::abs(fd(Fx, p, 0, 1e-2)) + std::abs(fd(Fy, p, 1, 1e-2));
    EXPECT_LE(std::abs(div), 1e-5 * scale) << p.transpose();
  }
}

TEST(VanishingOrder, KScanGrowsAtMostLinearly) {
  // W = -K r^{-1/2} e_r lies in L^3 near the origin.
  const std::vector<double> Ks{1, 2, 4, 8, 16};
  const auto r = geomspace(0.1, 0.95, 12);
  std::vector<double> ords;
  for (double K : Ks) {
    const auto s = radial_drift_solution(K, 0.5);
    VanishingScenario sc;
    sc.K = K;
    sc.C0 = 4.0;
    const auto fit = vanishing_order(s.u, r, sc);
    EXPECT_TRUE(fit.upper_ok) << K;
    ords.push_back(fit.ord);
  }
  for (std::size_t i = 1; i < ords.size(); ++i) EXPECT_GT(ords[i], ords[i - 1]);
  EXPECT_LE(loglog_slope(Ks, ords), 1.15);
}

TEST(VanishingOrder, GradientNormalizedEnvelope) {
  // u_n = c_n Re z^n with ||grad u_n||_{L^2(B_bt)} = 1; K = 1 with zero drift.
  const double bt = 1.2, d = 1.8, K = 1.0;
  const auto r = geomspace(1e-3, 0.5, 25);
  std::vector<double> C;
  for (int n = 2; n <= 8; ++n) {
    const double cn = 1.0 / std::sqrt(kPi * n * std::pow(bt, 2 * n));
    VanishingScenario sc;
    sc.type = ScenarioType::OofV2;
    sc.K = K;
    sc.d = d;
    sc.gradient_normalization = true;
    sc.b_tilde = bt;
    const auto fit = vanishing_order([n, cn](const Vec2& p) { return cn * re_pow(p, n); }, r, sc);
    EXPECT_NEAR(fit.grad_b_tilde, 1.0, 1e-6) << n;
    EXPECT_NEAR(fit.sup_d, cn * std::pow(d, n), 1e-12 * cn * std::pow(d, n));
    const double logM = std::log(fit.sup_d);
    C.push_back(fit.ord / (logM + K * K));
  }
  const double cmax = *std::max_element(C.begin(), C.end()), cmin = *std::min_element(C.begin(), C.end());
  EXPECT_GT(cmin, 0);
  EXPECT_LE(cmax, 2 * cmin);
}

TEST(VanishingOrder, SquareIntegrableDriftDoesNotDiverge) {
  CoefficientSet c;
  c.W1 = [](const Vec2& p) {
    const double r = p.norm();
    return r == 0 ? Vec2(0, 0) : Vec2(0.3 * p / (r * r * std::log(std::exp(2.0) / r)));
  };
  c.q1 = 2;
  c.lambda = 1;
  c.Lambda = 1;
  const double h = 0.03;
  auto mesh = triangulate_disk(1.8, h);
  const auto op = assemble_bilinear(mesh, c);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(Eigen::Index(mesh->num_nodes()));
  const auto ua = solve_dirichlet(op, fixtures::trace(*mesh, [](const Vec2& p) { return 1 + 0.5 * p.x(); }), zero);
  const auto ub = solve_dirichlet(op, fixtures::trace(*mesh, [](const Vec2& p) { return p.x() - 0.3 * p.y(); }), zero);
  PointLocator loc(mesh);
  const double a0 = loc.interpolate(ua.values, Vec2(0, 0)), b0 = loc.interpolate(ub.values, Vec2(0, 0));
  const auto r = geomspace(4 * h, 0.8, 16);
  for (const ScalarField& u : {ua, ScalarField{mesh, ua.values - (a0 / b0) * ub.values}}) {
    const auto fit = vanishing_order(u, r);
    EXPECT_FALSE(fit.diverging);
    EXPECT_TRUE(std::isfinite(fit.ord));
    for (double w : fit.window_ord) EXPECT_LT(w, 3.0);
  }
}

// ---------------------------------------------------------------- rescaling

TEST(Rescale, ConstantDriftSupScalesByR) {
  const Vec2 w(0.3, -0.4);
  for (double R : {2.0, 7.5}) {
    const auto n = check_drift_scaling([w](const Vec2&) { return w; }, Vec2(1, 2), R, 1.0, kInf);
    EXPECT_DOUBLE_EQ(n.scaled, R * w.norm());
    EXPECT_DOUBLE_EQ(n.predicted, R);
  }
}

TEST(Rescale, NormIdentityAcrossExponents) {
  const VectorFn W = [](const Vec2& p) { return Vec2(p / (1 + p.squaredNorm())); };
  const Vec2 z0(0.7, -0.4);
  for (double R : {0.5, 3.0}) {
    for (double q : {2.0, 4.0, kInf}) {
      const auto n = check_drift_scaling(W, z0, R, 0.8, q);
      EXPECT_NEAR(n.ratio / (q == kInf ? R : std::pow(R, 1 - 2 / q)), 1.0, 1e-6) << R << ' ' << q;
      EXPECT_NEAR(n.ratio / n.predicted, 1.0, 1e-6);
    }
    const auto n2 = check_drift_scaling(W, z0, R, 0.8, 2.0);
    EXPECT_NEAR(n2.ratio, 1.0, 1e-6);
  }
  const ScalarFn V = [](const Vec2& p) { return 1 + p.x() * p.x(); };
  for (double q : {2.0, kInf}) {
    const auto n = check_potential_scaling(V, z0, 3.0, 0.8, q);
    EXPECT_NEAR(n.ratio / (q == kInf ? 9.0 : 3.0), 1.0, 1e-6);
  }
}

TEST(Rescale, ScaledThreeTermEquationHolds) {
  const auto g = sharpness_gallery("full_three_term");
  CoefficientSet c;
  c.W1 = g.W1;
  c.W2 = g.W2;
  c.V = g.V;
  const Vec2 z0(4, 3);
  const double R = 0.5;
  const auto s = rescale_problem(g.u, c, z0, R);
  EXPECT_FALSE(bool(s.A));
  EXPECT_NEAR(s.V(Vec2(0.1, 0.2)), R * R * g.V(z0 + R * Vec2(0.1, 0.2)), 1e-15);
  for (Vec2 p : {Vec2(0, 0), Vec2(0.5, -1.0), Vec2(-1.2, 0.9)}) {
    const ScalarFn Fx = [&](const Vec2& z) { return fd(s.u, z, 0) + s.W1(z).x() * s.u(z); };
    const ScalarFn Fy = [&](const Vec2& z) { return fd(s.u, z, 1) + s.W1(z).y() * s.u(z); };
    const double res = -(fd(Fx, p, 0) + fd(Fy, p, 1)) + s.W2(p).dot(Vec2(fd(s.u, p, 0), fd(s.u, p, 1))) +
                       s.V(p) * s.u(p);
    EXPECT_LE(std::abs(res), 1e-7 * s.u(p)) << p.transpose();
  }
}

// ---------------------------------------------------------------- gallery

TEST(Gallery, DivergenceDriftAlphaOne) {
  const auto g = sharpness_gallery("divergence_drift");
  EXPECT_EQ(g.samples, 200);
  EXPECT_LE(g.max_residual, 1e-8);
  EXPECT_GT(g.max_residual_literal, 1e-4);
  EXPECT_EQ(g.scenario, ScenarioType::OofV1);
  // hand derivatives: Laplacian identity and grad u + W u = 0
  for (Vec2 p : {Vec2(1.5, 0.3), Vec2(-2.0, 3.1), Vec2(0.2, -4.4)}) {
    const double r = p.norm(), u = std::exp(-r);
    EXPECT_NEAR(g.u(p), u, 1e-15);
    const Vec2 grad = -p / r * u;
    EXPECT_LE((grad + g.W1(p) * g.u(p)).norm(), 1e-15);
    const double lap = fd([&](const Vec2& z) { return fd(g.u, z, 0); }, p, 0) +
                       fd([&](const Vec2& z) { return fd(g.u, z, 1); }, p, 1);
    EXPECT_NEAR(lap, (1 - 1 / r) * u, 1e-8);
  }
}

TEST(Gallery, DivergenceDriftNormsFinite) {
  for (double q : {3.0, 4.0, 6.0}) {
    const auto g = sharpness_gallery("divergence_drift", q);
    const double delta = (q - 2) / 4, alpha = 1 - (2 + 2 * delta) / q;
    EXPECT_NEAR(g.alpha, alpha, 1e-15);
    EXPECT_LE(g.max_residual, 1e-8);
    const double predicted = 2 * kPi * std::pow(alpha, q) / (2 * delta);
    EXPECT_NEAR(g.W_norm_q_pow / predicted, 1.0, 0.01) << q;
  }
}

TEST(Gallery, GradientDrift) {
  for (double q : {kInf, 4.0}) {
    const auto g = sharpness_gallery("gradient_drift", q);
    EXPECT_LE(g.max_residual, 1e-8);
    EXPECT_FALSE(bool(g.W1));
    const double a = g.alpha;
    for (Vec2 p : {Vec2(1.5, 0.3), Vec2(-2.0, 3.1)}) {
      const double r = p.norm(), u = std::exp(-std::pow(r, a));
      const Vec2 grad = -a * std::pow(r, a - 1) * p / r * u;
      const double lap = a * a * std::pow(r, 2 * (a - 1)) * (1 - std::pow(r, -a)) * u;
      EXPECT_NEAR(g.W2(p).dot(grad), lap, 1e-14);
    }
  }
}

TEST(Gallery, FullThreeTerm) {
  const auto g = sharpness_gallery("full_three_term");
  EXPECT_LE(g.max_residual, 1e-8);
  EXPECT_GE(g.min_sign_gap, 0.0);
  EXPECT_LE(g.max_curl, 1e-12);
  EXPECT_EQ(g.scenario, ScenarioType::OofV3);
  for (double r : {1.0, 1.1, 2.0, 5.0, 50.0}) {
    const Vec2 p(r * 0.6, r * 0.8);
    const double oracle = (1 - 1 / r) / 3 + (1 - 1 / r) / 9;
    EXPECT_NEAR(g.V(p) - g.W1(p).dot(g.W2(p)), oracle, 1e-15);
    EXPECT_GE(oracle, 0);
  }
}

TEST(Gallery, InvalidCase) {
  EXPECT_THROW(sharpness_gallery("nope"), DomainError);
  EXPECT_THROW(sharpness_gallery("divergence_drift", 1.5), DomainError);
}

// ---------------------------------------------------------------- Landis

TEST(Landis, ExponentialDecay) {
  const auto R = geomspace(10, 100, 10);
  const ScalarFn u = [](const Vec2& p) { return std::exp(-p.norm()); };
  const auto t = landis_harness(u, kInf, R, ScenarioType::OofV3);
  ASSERT_EQ(t.rows.size(), R.size());
  for (const auto& row : t.rows) EXPECT_NEAR(row.min_sup / std::exp(-(row.R - 1)), 1.0, 1e-12);
  EXPECT_TRUE(t.fit_ok);
  EXPECT_NEAR(t.exponent, 1.0, 0.03);
  EXPECT_EQ(t.theorem_exponent, 1.0);
  const auto t2 = landis_harness(u, kInf, R, ScenarioType::OofV3, 16, 3);
  EXPECT_EQ(t2.exponent, t.exponent);
  std::ostringstream os;
  write_landis_csv(t, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "R,min_sup,fit_exponent");
}

TEST(Landis, StretchedExponentialMatchesAlpha) {
  const auto R = geomspace(10, 100, 10);
  for (double q : {4.0, 6.0, 10.0}) {
    const auto g = sharpness_gallery("divergence_drift", q);
    const auto t = landis_harness(g, R);
    for (const auto& row : t.rows)
      EXPECT_NEAR(row.min_sup / std::exp(-std::pow(row.R - 1, g.alpha)), 1.0, 1e-12);
    EXPECT_NEAR(t.exponent, g.alpha, 0.05) << q;
    EXPECT_LE(t.exponent, t.theorem_exponent);
  }
}

TEST(Landis, ConstantIsDegenerate) {
  const auto t = landis_harness([](const Vec2&) { return 1.0; }, kInf, {10, 20, 40}, ScenarioType::OofV1);
  for (const auto& row : t.rows) EXPECT_EQ(row.min_sup, 1.0);
  EXPECT_FALSE(t.fit_ok);
  EXPECT_FALSE(t.note.empty());
}

TEST(Landis, RejectsFamilyWithoutScalingCounterpart) {
  EXPECT_THROW(landis_harness([](const Vec2& p) { return std::exp(-p.norm()); }, kInf, {10, 20}, ScenarioType::OofV),
               DomainError);
  EXPECT_EQ(sharpness_gallery("gradient_drift").scenario, ScenarioType::OofV2);
  EXPECT_EQ(scenario_type_from_string("OofV2"), ScenarioType::OofV2);
  EXPECT_THROW(scenario_type_from_string("landis"), DomainError);
}

// ---------------------------------------------------------------- sub/supersolution

TEST(SubSuper, ZeroK) {
  const auto s = subsupersolution_multiplier(0);
  EXPECT_EQ(s.phi1_min, 1.0);
  EXPECT_EQ(s.phi1_max, 1.0);
  EXPECT_EQ(s.phi2, 1.0);
  EXPECT_TRUE(s.subsolution);
  EXPECT_EQ(subsolution_phi1(0)(Vec2(1.3, -0.2)), 1.0);
}

TEST(SubSuper, UnitK) {
  const auto s = subsupersolution_multiplier(1);
  EXPECT_EQ(s.eta, 3.0);
  EXPECT_EQ(s.quadratic, -1.0);
  EXPECT_TRUE(s.subsolution);
  EXPECT_TRUE(s.phi2_dominates);
}

TEST(SubSuper, RangeForKTwo) {
  const auto s = subsupersolution_multiplier(2);
  EXPECT_NEAR(s.phi1_min, std::exp(-10.8), 1e-12 * std::exp(-10.8));
  EXPECT_NEAR(s.phi1_max, std::exp(10.8), 1e-12 * std::exp(10.8));
  EXPECT_GE(s.phi1_min, std::exp(-12.0));
  EXPECT_LE(s.phi1_max, std::exp(12.0));
  EXPECT_TRUE(s.within_envelope);
  EXPECT_TRUE(s.phi2_dominates);
}

TEST(SubSuper, PointwiseWithAdmissibleCoefficients) {
  for (double K : {0.5, 1.0, 3.0}) {
    CoefficientSet c;
    c.W1 = [K](const Vec2& p) { return Vec2(K * 0.8 * std::cos(p.y()), K * 0.5 * std::sin(p.x())); };
    c.W2 = [K](const Vec2& p) { return Vec2(K * 0.6 * std::sin(p.x() + p.y()), -K * 0.7); };
    c.V = [K, W1 = c.W1, W2 = c.W2](const Vec2& p) { return std::min(K * K, W1(p).dot(W2(p)) + 0.1 * K * K); };
    const auto s = subsupersolution_multiplier(K, &c);
    ASSERT_TRUE(s.checked_coefficients);
    EXPECT_TRUE(s.bounds_hold);
    EXPECT_LE(s.max_L_phi1, s.quadratic + 1e-12);
    EXPECT_GE(s.min_L_phi2, 0.0);
    // L phi1 at a point through finite differences
    const auto phi = subsolution_phi1(K);
    const Vec2 p(0.4, -0.9);
    const double lap = fd([&](const Vec2& z) { return fd(phi, z, 0); }, p, 0) +
                       fd([&](const Vec2& z) { return fd(phi, z, 1); }, p, 1);
    const Vec2 grad(fd(phi, p, 0), fd(phi, p, 1));
    const double L = -lap + (c.W1(p) + c.W2(p)).dot(grad) + (c.V(p) - c.W1(p).dot(c.W2(p))) * phi(p);
    EXPECT_LE(L, 0.0);
  }
}
