#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "llab/fem.hpp"
#include "llab/quadrature.hpp"

using namespace llab;

namespace {

double l2_error(const ScalarField& u, const ScalarFn& exact) {
  const TriMesh& m = *u.mesh;
  double acc = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad7()) {
      const Vec2 x = q.bary[0] * m.nodes[T[0]] + q.bary[1] * m.nodes[T[1]] + q.bary[2] * m.nodes[T[2]];
      const double uh = q.bary[0] * u.values[T[0]] + q.bary[1] * u.values[T[1]] + q.bary[2] * u.values[T[2]];
      acc += q.weight * m.area[t] * std::pow(uh - exact(x), 2);
    }
  }
  return std::sqrt(acc);
}

Eigen::VectorXd boundary_trace(const TriMesh& m, const ScalarFn& g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    if (m.boundary[i]) b[Eigen::Index(i)] = g(m.nodes[i]);
  return b;
}

}  // namespace

TEST(Mesh, SmallDiskInvariants) {
  auto m = triangulate_disk(1.0, 0.5);
  const auto r = check_mesh(*m);
  EXPECT_TRUE(r.positive_areas);
  EXPECT_TRUE(r.boundary_on_circle);
  EXPECT_TRUE(r.connected);
  EXPECT_TRUE(r.manifold_edges);
  EXPECT_LE(r.max_edge, 2 * 0.5);
}

TEST(Mesh, RefinementTriangleRatio) {
  for (double h : {0.1, 0.05}) {
    auto a = triangulate_disk(1.0, h);
    auto b = triangulate_disk(1.0, h / 2);
    const double ratio = double(b->num_tris()) / double(a->num_tris());
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
  }
}

TEST(Mesh, LargeDiskConnected) {
  auto m = triangulate_disk(1.8, 0.05);
  EXPECT_GE(m->num_nodes(), 1000u);
  const auto r = check_mesh(*m);
  EXPECT_TRUE(r.ok());
  EXPECT_LE(r.max_edge, 2 * 0.05);
}

TEST(Mesh, RefinedAroundPoleStaysValid) {
  auto m = triangulate_disk(1.0, 0.05, RefinementSpec{Vec2(0.3, -0.2)});
  const auto r = check_mesh(*m);
  EXPECT_TRUE(r.ok());
  double closest = kInf;
  for (const auto& p : m->nodes)
    if ((p - Vec2(0.3, -0.2)).norm() > 0) closest = std::min(closest, (p - Vec2(0.3, -0.2)).norm());
  EXPECT_NEAR(closest, 0.05 / 4, 1e-12);
}

TEST(Mesh, Deterministic) {
  auto a = triangulate_disk(1.3, 0.07);
  auto b = triangulate_disk(1.3, 0.07);
  ASSERT_EQ(a->num_tris(), b->num_tris());
  for (std::size_t t = 0; t < a->num_tris(); ++t) EXPECT_EQ(a->tris[t], b->tris[t]);
}

TEST(Mesh, RejectsBadArguments) {
  EXPECT_THROW(triangulate_disk(1.0, 2.0), PreconditionError);
  EXPECT_THROW(triangulate_disk(-1.0, 0.1), PreconditionError);
  EXPECT_THROW(triangulate_disk(1.0, 1e-5), ResourceError);
}

TEST(Mesh, TextRoundTrip) {
  auto m = triangulate_disk(1.0, 0.2);
  std::stringstream ss;
  write_mesh(*m, ss);
  auto back = read_mesh(ss, 1.0, 0.2);
  ASSERT_EQ(back->num_nodes(), m->num_nodes());
  ASSERT_EQ(back->num_tris(), m->num_tris());
  for (std::size_t i = 0; i < m->num_nodes(); ++i) {
    EXPECT_EQ(back->nodes[i], m->nodes[i]);
    EXPECT_EQ(back->boundary[i], m->boundary[i]);
  }
}

TEST(Mesh, PointLocation) {
  auto m = triangulate_disk(1.0, 0.1);
  PointLocator loc(m);
  auto f = interpolate(m, [](const Vec2& x) { return 2 * x.x() - 3 * x.y() + 0.5; });
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  for (int k = 0; k < 200; ++k) {
    const Vec2 p(U(rng), U(rng));
    EXPECT_NEAR(loc.interpolate(f.values, p), 2 * p.x() - 3 * p.y() + 0.5, 1e-12);
  }
}

// Oracle: cotangent formula for the P1 Laplacian, written independently of the hat gradients.
TEST(Assembly, LaplaceMatchesCotangentFormula) {
  auto m = triangulate_disk(1.0, 0.2);
  const auto op = assemble_bilinear(m, CoefficientSet{});
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(Eigen::Index(m->num_nodes()), Eigen::Index(m->num_nodes()));
  for (const auto& T : m->tris)
    for (int k = 0; k < 3; ++k) {
      const int i = T[(k + 1) % 3], j = T[(k + 2) % 3];
      const Vec2 u = m->nodes[i] - m->nodes[T[k]], v = m->nodes[j] - m->nodes[T[k]];
      const double cot = u.dot(v) / std::abs(u.x() * v.y() - u.y() * v.x());
      ref(i, j) -= 0.5 * cot;
      ref(j, i) -= 0.5 * cot;
      ref(i, i) += 0.5 * cot;
      ref(j, j) += 0.5 * cot;
    }
  EXPECT_LE((Eigen::MatrixXd(op.K) - ref).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Eigen::Index(m->num_nodes()));
  const Eigen::VectorXd r = op.K * ones;
  for (std::size_t i = 0; i < m->num_nodes(); ++i)
    if (!m->boundary[i]) EXPECT_NEAR(r[Eigen::Index(i)], 0.0, 1e-12);
  EXPECT_TRUE(op.symmetric);
}

TEST(Assembly, SymmetricWhenNoDrift) {
  auto m = triangulate_disk(1.0, 0.1);
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << 2 + x.x(), 0.3 * x.y(), 0.3 * x.y(), 1.5;
    return a;
  };
  c.lambda = 0.5;
  c.Lambda = 3;
  const auto op = assemble_bilinear(m, c);
  EXPECT_TRUE(op.symmetric);
  const SpMat d = op.K - SpMat(op.K.transpose());
  EXPECT_LE(d.norm(), 1e-12 * op.K.norm());
}

TEST(Assembly, AdjointIsTranspose) {
  auto m = triangulate_disk(1.0, 0.1);
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << 2, 0.4 + 0.1 * x.x(), -0.2, 1.5 + 0.2 * x.y();
    return a;
  };
  c.lambda = 1.0;
  c.Lambda = 3;
  c.W1 = [](const Vec2& x) { return Vec2(std::sin(x.y()), x.x() * x.y()); };
  c.W2 = [](const Vec2& x) { return Vec2(0.5, -x.x()); };
  c.V = [](const Vec2& x) { return 1 + x.x(); };
  const auto op = assemble_bilinear(m, c, false);
  const auto adj = assemble_bilinear(m, c, true);
  EXPECT_FALSE(op.symmetric);
  const SpMat d = adj.K - SpMat(op.K.transpose());
  EXPECT_LE(Eigen::MatrixXd(d).cwiseAbs().maxCoeff(), 1e-12 * Eigen::MatrixXd(op.K).cwiseAbs().maxCoeff());
}

// Oracle: direct quadrature of the element integrand for a single drift term on a single triangle.
TEST(Assembly, DriftTermsMatchElementIntegrals) {
  auto m = triangulate_disk(1.0, 0.5);
  CoefficientSet c;
  c.W1 = [](const Vec2&) { return Vec2(1.0, 0.0); };
  const auto op = assemble_bilinear(m, c);
  CoefficientSet lap;
  const auto base = assemble_bilinear(m, lap);
  // constant W1: int phi_j W1 . grad phi_i = W1 . grad phi_i * area / 3 summed over triangles
  Eigen::MatrixXd ref = Eigen::MatrixXd(base.K);
  for (std::size_t t = 0; t < m->num_tris(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ref(m->tris[t][i], m->tris[t][j]) += m->grad[t][i].x() * m->area[t] / 3.0;
  EXPECT_LE((Eigen::MatrixXd(op.K) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assembly, NonEllipticRejected) {
  auto m = triangulate_disk(1.0, 0.25);
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << (x.x() > 0.3 ? -1.0 : 1.0), 0, 0, 1;
    return a;
  };
  c.lambda = 0.5;
  EXPECT_THROW(assemble_bilinear(m, c), PreconditionError);
}

TEST(Assembly, CoercivityUnderSmallLowerOrderTerms) {
  auto m = triangulate_disk(1.0, 0.08);
  CoefficientSet c;
  c.W1 = [](const Vec2& x) { return Vec2(-x.y(), x.x()); };  // divergence free, tangential
  c.W2 = [](const Vec2& x) { return Vec2(0.1 * x.y(), -0.1 * x.x()); };
  c.V = [](const Vec2&) { return 0.05; };
  const auto op = assemble_bilinear(m, c);
  const auto r = coercivity_margin(op);
  EXPECT_TRUE(r.coercive);
  EXPECT_GT(r.gamma, 0.0);
  CoefficientSet bad;
  bad.V = [](const Vec2&) { return -40.0; };
  EXPECT_FALSE(coercivity_margin(assemble_bilinear(m, bad)).coercive);
}

TEST(Dirichlet, ReproducesLinears) {
  auto m = triangulate_disk(1.0, 0.1);
  const auto op = assemble_bilinear(m, CoefficientSet{});
  const auto g = boundary_trace(*m, [](const Vec2& x) { return x.x(); });
  const auto u = solve_dirichlet(op, g, Eigen::VectorXd::Zero(Eigen::Index(m->num_nodes())));
  for (std::size_t i = 0; i < m->num_nodes(); ++i) EXPECT_NEAR(u.values[Eigen::Index(i)], m->nodes[i].x(), 1e-10);
  for (std::size_t i = 0; i < m->num_nodes(); ++i)
    if (m->boundary[i]) EXPECT_EQ(u.values[Eigen::Index(i)], g[Eigen::Index(i)]);
}

TEST(Dirichlet, QuadraticConvergesSecondOrder) {
  std::vector<double> hs{0.1, 0.05, 0.025}, errs;
  const ScalarFn exact = [](const Vec2& x) { return x.squaredNorm(); };
  for (double h : hs) {
    auto m = triangulate_disk(1.0, h);
    const auto op = assemble_bilinear(m, CoefficientSet{});
    const auto F = load_vector(*m, [](const Vec2&) { return -4.0; }, nullptr);
    const auto u = solve_dirichlet(op, boundary_trace(*m, exact), F);
    errs.push_back(l2_error(u, exact));
  }
  const double rate1 = std::log(errs[0] / errs[1]) / std::log(2.0);
  const double rate2 = std::log(errs[1] / errs[2]) / std::log(2.0);
  EXPECT_GE(rate1, 1.8);
  EXPECT_GE(rate2, 1.8);
}

// Manufactured solution with every term of the bilinear form present.
TEST(Dirichlet, ManufacturedFullOperatorConverges) {
  const ScalarFn exact = [](const Vec2& x) { return std::sin(x.x()) * std::exp(x.y()); };
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << 2 + x.x(), 0.3, 0.1, 1.5;
    return a;
  };
  c.lambda = 0.5;
  c.Lambda = 3.5;
  c.W1 = [](const Vec2& x) { return Vec2(0.5 * x.y(), 0.2); };
  c.W2 = [](const Vec2& x) { return Vec2(0.3, -0.4 * x.x()); };
  c.V = [](const Vec2& x) { return 1 + x.x() * x.x(); };
  // L u = -div(A grad u + W1 u) + W2 . grad u + V u; computed with exact derivatives.
  const ScalarFn f = [](const Vec2& p) {
    const double x = p.x(), y = p.y();
    const double u = std::sin(x) * std::exp(y), ux = std::cos(x) * std::exp(y), uy = u;
    const double uxx = -u, uxy = ux, uyy = u;
    const double a11 = 2 + x, a12 = 0.3, a21 = 0.1, a22 = 1.5;
    const double flux_div = (1.0 * ux + a11 * uxx + a12 * uxy) + (a21 * uxy + a22 * uyy);
    const double w1x = 0.5 * y, w1y = 0.2;
    const double w1_div_u = w1x * ux + w1y * uy;  // div W1 = 0
    return -(flux_div + w1_div_u) + (0.3 * ux - 0.4 * x * uy) + (1 + x * x) * u;
  };
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025}) {
    auto m = triangulate_disk(1.0, h);
    const auto op = assemble_bilinear(m, c);
    const auto u = solve_dirichlet(op, boundary_trace(*m, exact), load_vector(*m, f, nullptr));
    errs.push_back(l2_error(u, exact));
  }
  EXPECT_GE(std::log(errs[0] / errs[1]) / std::log(2.0), 1.8);
  EXPECT_GE(std::log(errs[1] / errs[2]) / std::log(2.0), 1.8);
}

TEST(Dirichlet, GalerkinOrthogonality) {
  auto m = triangulate_disk(1.0, 0.05);
  CoefficientSet c;
  c.W1 = [](const Vec2& x) { return Vec2(x.y(), 0.3); };
  c.V = [](const Vec2&) { return 0.5; };
  const auto op = assemble_bilinear(m, c);
  const auto F = load_vector(*m, [](const Vec2& x) { return std::cos(3 * x.x()); }, nullptr);
  const auto g = boundary_trace(*m, [](const Vec2& x) { return x.y(); });
  SolveInfo info;
  const auto u = solve_dirichlet(op, g, F, &info);
  const Eigen::VectorXd r = op.K * u.values - F;
  double worst = 0;
  for (std::size_t i = 0; i < m->num_nodes(); ++i)
    if (!m->boundary[i]) worst = std::max(worst, std::abs(r[Eigen::Index(i)]));
  EXPECT_LE(worst, 1e-9 * (F.norm() + (op.K * g).norm()));
}

TEST(Dirichlet, AdjointBvpWithoutW2AndVGivesOne) {
  auto m = triangulate_disk(1.8, 0.06);
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << 1.5, 0.2 * std::sin(x.x()), 0.0, 1.0;
    return a;
  };
  c.lambda = 0.8;
  c.Lambda = 1.5;
  c.W1 = [](const Vec2& x) { return Vec2(2 * x.y(), -x.x()); };
  const auto adj = assemble_bilinear(m, c, true);
  const auto u = solve_dirichlet(adj, Eigen::VectorXd::Ones(Eigen::Index(m->num_nodes())),
                                 Eigen::VectorXd::Zero(Eigen::Index(m->num_nodes())));
  EXPECT_LE((u.values.array() - 1.0).abs().maxCoeff(), 1e-8);
}

TEST(Norms, ConstantOnUnitDisk) {
  auto m = triangulate_disk(1.0, 0.05);
  auto one = interpolate(m, [](const Vec2&) { return 1.0; });
  // the polygon has area slightly below pi; oracle is the polygon area
  double poly = 0;
  for (double a : m->area) poly += a;
  EXPECT_NEAR(lebesgue_norm(one, 2.0, Region::disk(2.0)), std::sqrt(poly), 1e-12);
  EXPECT_NEAR(lebesgue_norm(one, 2.0, Region::disk(2.0)), std::sqrt(kPi), 2e-3);
}

TEST(Norms, SingularRadialField) {
  // oracle: int_0^1 int_0^{2pi} r^{-3/2} r dr dth = 4 pi
  const double expect = std::cbrt(4 * kPi);
  double prev_err = kInf;
  for (double h : {0.05, 0.025}) {
    auto m = triangulate_disk(1.0, h);
    const double v = lebesgue_norm(*m, ScalarFn([](const Vec2& x) { return std::pow(x.norm(), -0.5); }), 3.0,
                                   Region::disk(2.0));
    const double err = std::abs(v - expect) / expect;
    EXPECT_LE(err, 0.02);
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
}

TEST(Norms, SupOfLinear) {
  auto m = triangulate_disk(1.0, 0.02);
  auto x = interpolate(m, [](const Vec2& p) { return p.x(); });
  EXPECT_NEAR(lebesgue_norm(x, kInf, Region::disk(2.0)), 1.0, 2 * 0.02);
  EXPECT_THROW(lebesgue_norm(x, 2.0, Region::annulus(3.0, 4.0)), DomainError);
}

TEST(Norms, StoredNormsMatchRecomputation) {
  auto m = triangulate_disk(1.0, 0.05);
  CoefficientSet c;
  c.q1 = 4;
  c.q2 = 6;
  c.p = 3;
  c.W1 = [](const Vec2& x) { return Vec2(x.x(), 1.0) / std::pow(x.norm() + 1e-3, 0.3); };
  c.W2 = [](const Vec2& x) { return Vec2(std::sin(x.y()), 0.2); };
  c.V = [](const Vec2& x) { return std::pow(x.norm(), -0.4); };
  record_norms(c, *m, 1.0);
  const double cap = 1.0 / m->h;
  const double n1 = lebesgue_norm(*m, VectorFn([&](const Vec2& x) { return c.w1(x, cap); }), 4.0, Region::disk(1.0));
  const double nv = lebesgue_norm(*m, ScalarFn([&](const Vec2& x) { return c.v(x, cap); }), 3.0, Region::disk(1.0));
  EXPECT_NEAR(c.norm_W1, n1, 1e-8 * n1);
  EXPECT_NEAR(c.norm_V, nv, 1e-8 * nv);
}

TEST(Coefficients, EllipticityAndBoundsChecked) {
  auto m = triangulate_disk(1.0, 0.1);
  CoefficientSet c;
  c.A = [](const Vec2& x) {
    Mat2 a;
    a << 2 + x.x(), 0.0, 0.0, 1.0;
    return a;
  };
  c.lambda = 0.9;
  c.Lambda = 3.0;
  auto r = check_ellipticity(c, *m);
  EXPECT_TRUE(r.elliptic);
  EXPECT_TRUE(r.bounded);
  c.Lambda = 2.5;
  EXPECT_FALSE(check_ellipticity(c, *m).bounded);
}

TEST(Caccioppoli, Tau0Formula) {
  EXPECT_DOUBLE_EQ(tau0(4, 4, 3), 4.0);
  EXPECT_DOUBLE_EQ(tau0(6, 8, 1.5), 6.0);
  EXPECT_DOUBLE_EQ(tau0(10, 8, 1.5), 6.0);
  EXPECT_DOUBLE_EQ(tau0(kInf, kInf, kInf), kInf);
}

TEST(Caccioppoli, LinearFieldRatioStable) {
  std::vector<double> ratios;
  for (double h : {0.05, 0.025}) {
    auto m = triangulate_disk(1.0, h);
    auto u = interpolate(m, [](const Vec2& x) { return x.x(); });
    const auto r = caccioppoli_check(u, CoefficientSet{}, 0.5, 2.0, 2.0);
    EXPECT_TRUE(std::isfinite(r.ratio));
    ratios.push_back(r.ratio);
  }
  EXPECT_NEAR(ratios[1] / ratios[0], 1.0, 0.2);
}

TEST(Caccioppoli, RejectsExponentAboveTau0) {
  auto m = triangulate_disk(1.0, 0.1);
  auto u = interpolate(m, [](const Vec2& x) { return x.x(); });
  CoefficientSet c;
  c.q1 = c.q2 = 4;
  c.p = 3;
  EXPECT_THROW(caccioppoli_check(u, c, 0.4, 2.0, 4.5), PreconditionError);
  EXPECT_NO_THROW(caccioppoli_check(u, c, 0.4, 2.0, 4.0));
}

// Caccioppoli inequality as a property: solutions with lower-order terms keep a bounded ratio.
TEST(Caccioppoli, SolutionsWithDriftHaveBoundedRatio) {
  auto m = triangulate_disk(1.0, 0.04);
  CoefficientSet c;
  c.q1 = c.q2 = 4;
  c.p = 3;
  c.W1 = [](const Vec2& x) { return Vec2(-x.y(), x.x()); };
  c.W2 = [](const Vec2&) { return Vec2(0.5, 0.0); };
  c.V = [](const Vec2&) { return 0.3; };
  const auto op = assemble_bilinear(m, c);
  const auto g = boundary_trace(*m, [](const Vec2& x) { return std::exp(x.x()) * std::cos(x.y()); });
  const auto u = solve_dirichlet(op, g, Eigen::VectorXd::Zero(Eigen::Index(m->num_nodes())));
  double worst = 0;
  for (double r : {0.2, 0.3, 0.4, 0.5}) worst = std::max(worst, caccioppoli_check(u, c, r, 2.0, 3.0).ratio);
  EXPECT_LT(worst, 10.0);
}
