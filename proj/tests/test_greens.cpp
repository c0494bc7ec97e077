#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "llab/greens.hpp"
#include "test_support.hpp"

using namespace llab;

namespace {

// Averaged Green function of the Laplacian on the unit disk with pole at the center.
double laplace_averaged(double r, double rho) {
  if (r >= rho) return std::log(1.0 / r) / (2.0 * kPi);
  return (std::log(1.0 / rho) + 0.5 * (1.0 - r * r / (rho * rho))) / (2.0 * kPi);
}

CoefficientSet drift_only() {
  CoefficientSet c;
  c.A = fixtures::variable_A();
  c.lambda = 0.7;
  c.Lambda = 1.8;
  c.W2 = fixtures::rotation(1.5);
  return c;
}

}  // namespace

TEST(AveragedGreen, LaplacianMatchesLogarithm) {
  GreenOptions o;
  o.h = 0.03;
  const auto g = averaged_green(CoefficientSet{}, Vec2(0, 0), 0.02, o);
  const TriMesh& m = *g.gamma.mesh;
  double dev_far = 0, dev_2rho = 0, dev_all = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const double r = m.nodes[i].norm();
    const double v = g.gamma.values[Eigen::Index(i)];
    if (m.boundary[i]) {
      EXPECT_EQ(v, 0.0);
      continue;
    }
    const double e = std::abs(v - laplace_averaged(r, 0.02));
    dev_all = std::max(dev_all, e);
    if (r > 0.1) dev_far = std::max(dev_far, e);
    if (r > 0.04) dev_2rho = std::max(dev_2rho, e);
  }
  EXPECT_LE(dev_far, 5e-3);
  EXPECT_LE(dev_2rho, 5e-3);
  EXPECT_LE(dev_all, 2e-2);
  EXPECT_LE(g.identity_residual, 1e-9);
  EXPECT_TRUE(g.coercivity.coercive);
  EXPECT_NEAR(g.average.sum(), 1.0, 1e-12);
}

TEST(AveragedGreen, VariationalIdentityWithDrift) {
  const auto c = fixtures::drift_scenario(1.0);
  GreenOptions o;
  o.h = 0.05;
  for (const Vec2 y : {Vec2(0, 0), Vec2(0.3, -0.2), Vec2(-0.5, 0.4)}) {
    const auto g = averaged_green(c, y, 0.03, o);
    EXPECT_LE(g.identity_residual, 1e-9) << y.transpose();
    EXPECT_GT(g.gamma.values.maxCoeff(), 0.0);
  }
}

TEST(AveragedGreen, EnergyPowerOfRho) {
  for (const auto& c : {CoefficientSet{}, drift_only()}) {
    std::vector<double> rho{0.02, 0.04, 0.08}, e;
    for (double r : rho) e.push_back(gradient_norm(averaged_green(c, Vec2(0.1, 0), r).gamma, 2, Region{}));
    EXPECT_GE(loglog_slope(rho, e), -0.25);
    EXPECT_LE(loglog_slope(rho, e), 0.0);
  }
}

TEST(AveragedGreen, PointEvaluationLimit) {
  const auto g = averaged_green(CoefficientSet{}, Vec2(0.2, 0.1), 0.0);
  EXPECT_LE(g.identity_residual, 1e-9);
  EXPECT_NEAR(g.average.sum(), 1.0, 1e-14);
}

TEST(AveragedGreen, Refusals) {
  CoefficientSet bad;
  bad.V = [](const Vec2&) { return -60.0; };
  EXPECT_THROW(averaged_green(bad, Vec2(0, 0), 0.02), PreconditionError);
  EXPECT_THROW(averaged_green(CoefficientSet{}, Vec2(0.99, 0), 0.02), PreconditionError);
  EXPECT_THROW(averaged_green(CoefficientSet{}, Vec2(0, 0), -0.1), PreconditionError);
}

TEST(AveragedGreen, RhoConvergence) {
  CoefficientSet a;
  a.A = fixtures::variable_A();
  a.lambda = 0.7;
  a.Lambda = 1.8;
  for (const auto& c : {a, drift_only()}) {
    const auto d = rho_convergence(c, Vec2(0.15, -0.1), {0.08, 0.04, 0.02, 0.01});
    ASSERT_EQ(d.size(), 3u);
    for (std::size_t k = 0; k + 1 < d.size(); ++k) EXPECT_GE(d[k] / d[k + 1], 1.5) << k << ' ' << d[k];
  }
  // mean-value property: the Laplacian's averaged functions agree outside B_rho, up to discretization
  for (double d : rho_convergence(CoefficientSet{}, Vec2(0.15, -0.1), {0.08, 0.04, 0.02})) EXPECT_LE(d, 1e-5);
}

TEST(Symmetry, LaplacianPairing) {
  const auto r = symmetry_check(CoefficientSet{}, Vec2(0.2, 0.1), Vec2(-0.3, 0.25), 0.03);
  EXPECT_LE(r.deviation, 1e-8);
  EXPECT_GT(r.forward_average, 0.0);
}

TEST(Symmetry, DriftPairingAndRefinement) {
  const auto c = drift_only();
  const Vec2 y1(0.2, 0.1), y2(-0.3, 0.25);
  GreenOptions fine;
  fine.h = 0.02;
  double prev = kInf;
  for (double rho : {0.16, 0.08, 0.04, 0.02}) {
    const auto r = symmetry_check(c, y1, y2, rho, fine);
    EXPECT_LE(r.deviation, 1e-6) << rho;
    EXPECT_LE(r.pointwise_deviation, prev * (1 + 1e-9)) << rho;
    prev = r.pointwise_deviation;
  }
  // the operator is not self-adjoint: the forward Green function is not symmetric in its poles
  GreenOptions o;
  const auto a = averaged_green(c, y1, 0.02, o), b = averaged_green(c, y2, 0.02, o);
  EXPECT_GT(std::abs(a.value(y2) - b.value(y1)), 1e-4);
}

TEST(Estimates, LevelSetMeasureOracle) {
  const auto mesh = triangulate_disk(1.0, 0.02);
  const auto f = interpolate(mesh, [](const Vec2& x) { return x.x(); });
  for (double tau : {0.1, 0.4, 0.8}) {
    const double exact = 2.0 * (std::acos(tau) - tau * std::sqrt(1 - tau * tau));
    EXPECT_NEAR(level_set_measure(f, tau), exact, 2e-3) << tau;
    EXPECT_NEAR(gradient_level_set_measure(f, 0.99), region_measure(*mesh, Region{}), 1e-10);
    EXPECT_EQ(gradient_level_set_measure(f, 1.01), 0.0);
  }
}

TEST(Estimates, LaplacianSuite) {
  auto g = averaged_green(CoefficientSet{}, Vec2(0, 0), 0.02);
  const auto t = green_estimate_suite(g);
  const auto* l1 = t.find("lebesgue_near", 1);
  ASSERT_NE(l1, nullptr);
  EXPECT_TRUE(l1->holds);
  EXPECT_GE(2.0 - l1->eps, 2.0 - 0.3);
  // sign structure
  for (const auto& r : t.rows) {
    EXPECT_TRUE(r.holds) << r.id << ' ' << r.s_or_tau;
    EXPECT_LE(r.C, 100.0);
    if (r.id == "energy_exterior") EXPECT_LE(r.slope, 0.0);
    if (r.id != "holder") EXPECT_GE(r.eps, 0.0);
  }
  EXPECT_LE(t.level_slope, 0.0);
  EXPECT_GE(t.level_slope, -2.0 / t.level_eps);
  EXPECT_LE(t.grad_level_slope, 0.0);
  EXPECT_GT(t.holder_eta, 0.0);
  EXPECT_EQ(g.constants.size(), t.rows.size());

  // monotone level sets
  double prev = kInf;
  for (double tau : {0.05, 0.1, 0.2, 0.4, 0.6}) {
    const double mm = level_set_measure(g.gamma, tau);
    EXPECT_LE(mm, prev);
    // |{Gamma > tau}| = pi exp(-4 pi tau) for the logarithm
    EXPECT_NEAR(mm, kPi * std::exp(-4 * kPi * tau), 0.02 * kPi * std::exp(-4 * kPi * tau) + 2e-3);
    prev = mm;
  }

  std::ostringstream os;
  write_constants_csv({t}, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "pole_x,pole_y,estimate_id,s_or_tau,fitted_C,fitted_eps");
}

TEST(Estimates, DriftSuiteSignStructure) {
  auto g = averaged_green(drift_only(), Vec2(0.2, -0.1), 0.02);
  const auto t = green_estimate_suite(g);
  for (const auto& r : t.rows) EXPECT_TRUE(r.holds) << r.id << ' ' << r.s_or_tau;
  EXPECT_LE(t.level_slope, 0.0);
  EXPECT_GE(t.level_slope, -2.0 / t.level_eps);
  EXPECT_GT(t.holder_eta, 0.0);
}

TEST(Representation, LaplacianConstantSource) {
  const auto r = representation_check(CoefficientSet{}, [](const Vec2&) { return 1.0; }, VectorFn{});
  ASSERT_EQ(r.probes.size(), 10u);
  EXPECT_LE(r.max_deviation, 1e-3);
  for (std::size_t i = 0; i < r.probes.size(); ++i)
    EXPECT_NEAR(r.direct[i], 0.25 * (1 - r.probes[i].squaredNorm()), 1e-3);
}

TEST(Representation, ZeroData) {
  const auto r = representation_check(drift_only(), [](const Vec2&) { return 0.0; },
                                      [](const Vec2&) { return Vec2(0, 0); });
  EXPECT_EQ(r.max_deviation, 0.0);
  for (double v : r.formula) EXPECT_EQ(v, 0.0);
}

TEST(Representation, DriftWithDivergenceData) {
  RepresentationOptions o;
  o.jobs = 3;
  const auto r = representation_check(
      drift_only(), [](const Vec2& x) { return 1.0 + x.x(); }, [](const Vec2& x) { return Vec2(x.y(), 0.5); }, o);
  EXPECT_LE(r.max_deviation, 1e-3);
}

TEST(Representation, MultiplierReconstruction) {
  const auto c = fixtures::drift_scenario(1.0);
  const auto mult = solve_multiplier(c, {.d = 1.8, .h = 0.04});
  RepresentationOptions o;
  o.h = 0.04;
  const auto r = multiplier_representation_check(c, mult, o);
  double scale = 0;
  for (double v : r.direct) scale = std::max(scale, std::abs(v));
  EXPECT_GT(scale, 1e-2);
  EXPECT_LE(r.max_deviation, 2e-3);
}

TEST(Constants, PoleGridSuprema) {
  auto c = fixtures::drift_scenario(1.0);
  c.p = 4;
  c.q2 = 6;
  GreenConstantsOptions o;
  o.h = 0.08;
  const auto a = green_constants(c, o);
  ASSERT_EQ(a.poles.size(), 25u);
  EXPECT_NEAR(a.p_dual, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.q2_dual, 1.2, 1e-15);
  double mp = 0, mq = 0;
  for (const auto& p : a.poles) {
    EXPECT_GT(p.norm_green, 0.0);
    mp = std::max(mp, p.norm_green);
    mq = std::max(mq, p.norm_grad);
  }
  EXPECT_EQ(a.constants.C_p, mp);
  EXPECT_EQ(a.constants.C_q2, mq);
  o.jobs = 3;
  const auto b = green_constants(c, o);
  EXPECT_EQ(b.constants.C_p, a.constants.C_p);
  EXPECT_EQ(b.constants.C_q2, a.constants.C_q2);
  // consumed by the hypothesis check
  const auto mesh = triangulate_disk(1.8, 0.08);
  const auto rec = check_hypotheses(*mesh, c, a.constants);
  EXPECT_GT(rec.W2_bound, 0.0);
}
