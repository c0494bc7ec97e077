#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "llab/transforms.hpp"
#include "test_support.hpp"

using namespace llab;

namespace {

GridField smooth_field(const UniformComplexGrid& g, double shift = 0) {
  return sample(g, [shift, &g](const Vec2& x) {
    const double r2 = x.squaredNorm() / (g.mask_radius * g.mask_radius);
    const double bump = r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0;
    return bump * cplx(1 + x.x() + shift, 0.5 * x.y() * x.y() - shift * x.x());
  });
}

GridField random_field(const UniformComplexGrid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N;
  return sample(g, [&](const Vec2&) { return cplx(N(rng), N(rng)); });
}

// Max over interior mask points of |a - b|, staying `gap` away from the mask edge.
double interior_max(const GridField& a, const GridField& b, double gap) {
  const auto& g = a.grid;
  double m = 0;
  for (int i = 1; i + 1 < g.N; ++i)
    for (int j = 1; j + 1 < g.N; ++j)
      if (g.point(i, j).norm() < g.mask_radius - gap) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

double interior_l2(const GridField& a, const GridField& b, double radius) {
  const auto& g = a.grid;
  double s = 0;
  for (int i = 1; i + 1 < g.N; ++i)
    for (int j = 1; j + 1 < g.N; ++j)
      if (g.point(i, j).norm() < radius) s += std::norm(a(i, j) - b(i, j)) * g.h * g.h;
  return std::sqrt(s);
}

}  // namespace

TEST(Grid, Geometry) {
  EXPECT_THROW(make_grid(100, 1.0), PreconditionError);
  const auto g = make_grid(64, 1.0);
  EXPECT_NEAR(g.h, 2.5 / 64, 1e-15);
  EXPECT_NEAR(g.point(32, 32).x(), 0.5 * g.h, 1e-15);
  EXPECT_NEAR(g.point(0, 0).y(), -1.25 + 0.5 * g.h, 1e-15);
  int inside = 0;
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) inside += g.in_mask(i, j);
  EXPECT_NEAR(inside * g.h * g.h, kPi, 0.02);
}

TEST(Transforms, ZeroMapsToZero) {
  const auto g = make_grid(32, 1.0);
  const auto z = grid_zero(g);
  EXPECT_EQ(grid_norm(cauchy_transform(z), kInf, false), 0.0);
  EXPECT_EQ(grid_norm(beurling_transform(z), kInf, false), 0.0);
}

TEST(Transforms, IndicatorGivesConjugate) {
  // Padding large enough that the mean leak |Omega| z / L^2 is below the discretization error.
  const auto g = make_grid(64, 1.0, 1.25, 16);
  const auto chi = sample(g, [](const Vec2&) { return cplx(1); });
  const auto T = cauchy_transform(chi);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-0.65, 0.65);
  for (int k = 0; k < 10; ++k) {
    const int i = int((U(rng) + 1.25) / g.h), j = int((U(rng) + 1.25) / g.h);
    const Vec2 z = g.point(i, j);
    const cplx oracle = cauchy_direct(chi, z);
    EXPECT_NEAR(std::abs(oracle - cplx(z.x(), -z.y())), 0.0, 2 * g.h) << k;
    EXPECT_NEAR(std::abs(T(i, j) - oracle), 0.0, 2 * g.h) << k;
  }
  EXPECT_LE(interior_max(grid_dbar(T), chi, 4 * g.h), 0.05);
}

TEST(Transforms, DefaultPaddingLeaksMeanTimesZ) {
  const auto g = make_grid(64, 1.0);
  const auto chi = sample(g, [](const Vec2&) { return cplx(1); });
  const auto T = cauchy_transform(chi);
  const double mean = chi.v.sum().real() * g.h * g.h / g.torus_area();
  for (const auto& [i, j] : {std::pair{40, 36}, std::pair{20, 30}, std::pair{45, 18}}) {
    const Vec2 z = g.point(i, j);
    const cplx leak = T(i, j) - cauchy_direct(chi, z);
    EXPECT_NEAR(std::abs(leak - mean * cplx(z.x(), z.y())), 0.0, 0.02);
  }
}

TEST(Transforms, DbarIdentityFirstOrder) {
  std::vector<double> C;
  for (int N : {64, 128}) {
    const auto g = make_grid(N, 1.0);
    const auto w = smooth_field(g);
    const auto T = cauchy_transform(w);
    const double err = interior_max(grid_dbar(T), w, 0.0);
    EXPECT_LE(err, g.h);
    C.push_back(err / g.h);
  }
  EXPECT_LE(C[1], C[0] * 1.1);
}

TEST(Transforms, BeurlingIsometry) {
  const auto g = make_grid(128, 1.0);
  for (unsigned s = 0; s < 20; ++s) {
    const auto w = random_field(g, s);
    EXPECT_NEAR(beurling_isometry_ratio(w), 1.0, 1e-6) << s;
  }
  EXPECT_NEAR(beurling_isometry_ratio(smooth_field(g, 0.3)), 1.0, 1e-6);
}

TEST(Transforms, DOfTIsS) {
  std::vector<double> C;
  for (int N : {64, 128}) {
    const auto g = make_grid(N, 1.0);
    const auto w = smooth_field(g, 0.2);
    const auto lhs = grid_d(cauchy_transform(w));
    const auto S = beurling_transform(w);
    const double err = interior_l2(lhs, S, 1.0);
    EXPECT_LE(err, g.h);
    C.push_back(err / g.h);
  }
  EXPECT_LE(C[1], C[0] * 1.1);
}

TEST(Transforms, BeurlingMapsDbarToD) {
  const auto g = make_grid(128, 1.0);
  const auto u = sample(g, [](const Vec2& x) {
    const double r2 = x.squaredNorm();
    return r2 < 1 ? std::exp(-1 / (1 - r2)) * cplx(std::cos(x.x()), x.y()) : cplx(0);
  });
  const auto S = beurling_transform(grid_dbar(u));
  EXPECT_LE(interior_l2(S, grid_d(u), 1.0), g.h);
}

TEST(Transforms, CauchyPointwiseBound) {
  // |T w(z)| <= (1/pi) ||w||_p || 1/|zeta| ||_{L^p'(B_2)} for z in the unit disk.
  const auto g = make_grid(64, 1.0);
  const double p = 4, pc = p / (p - 1);
  const double cp = std::pow(2 * kPi * std::pow(2.0, 2 - pc) / (2 - pc), 1 / pc) / kPi;
  for (unsigned s = 0; s < 5; ++s) {
    const auto w = s == 0 ? sample(g, [](const Vec2&) { return cplx(1); }) : random_field(g, 100 + s);
    const auto T = cauchy_transform(w);
    double sup = 0;
    for (int i = 0; i < g.N; ++i)
      for (int j = 0; j < g.N; ++j)
        if (g.in_mask(i, j)) sup = std::max(sup, std::abs(T(i, j)));
    EXPECT_LE(sup, cp * grid_norm(w, p)) << s;
  }
}

// ----- similarity principle -----

TEST(Similarity, ZeroQ0GivesH) {
  const auto g = make_grid(64, 1.0);
  const auto w = sample(g, [](const Vec2& x) { return cplx(1 + x.x(), x.y()); });
  const auto h = smooth_field(g);
  const auto r = solve_integral_equation(w, grid_zero(g), h, 4.0);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LE((r.omega.v - h.v).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(r.product_error, 1e-12);
}

TEST(Similarity, HalfContractionIterations) {
  const auto g = make_grid(128, 1.0);
  const auto w = sample(g, [](const Vec2& x) { return cplx(2 + x.x(), x.y() * x.x()); });
  const auto q0 = sample(g, [](const Vec2& x) { return 0.5 * std::exp(cplx(0, 1.3 + 0 * x.x())); });
  const auto h = smooth_field(g, 0.4);
  const auto r = solve_integral_equation(w, q0, h, 2.0);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(r.iterations, int(std::ceil(std::log(1e-10) / std::log(0.5))) + 1);
  EXPECT_LE(r.product_error, 1e-12);
  bool below = false;
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    if (r.history[k - 1] < 1) below = true;
    if (below) EXPECT_LE(r.history[k], r.history[k - 1]);
  }
}

TEST(Similarity, RefusesNonContraction) {
  const auto g = make_grid(32, 1.0);
  const auto w = sample(g, [](const Vec2&) { return cplx(1); });
  const auto q0 = sample(g, [](const Vec2&) { return cplx(1.0); });
  try {
    solve_integral_equation(w, q0, grid_zero(g), 2.0);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("contraction factor"), std::string::npos);
  }
  const auto big = sample(g, [](const Vec2&) { return cplx(0.6); });
  EXPECT_THROW(solve_similarity(w, big, big, grid_zero(g), grid_zero(g), 4.0), PreconditionError);
}

TEST(Similarity, WorkingExponentAndCp) {
  EXPECT_EQ(working_exponent(2.0), 2.0);
  EXPECT_EQ(working_exponent(4.0), 3.0);
  EXPECT_EQ(working_exponent(kInf), 4.0);
  const auto g = make_grid(64, 1.0);
  EXPECT_EQ(estimate_Cp(g, 2.0), 1.0);
  const double c3 = estimate_Cp(g, 3.0);
  EXPECT_GE(c3, 1.0);
  EXPECT_LT(c3, 3.0);
}

TEST(Similarity, HolomorphicDataFactorsExactly) {
  // dbar w = 0: with A = B = 0, omega = 0 and f = w.
  const auto g = make_grid(64, 1.0);
  const auto w = sample(g, [](const Vec2& x) { return std::exp(cplx(x.x(), x.y())); });
  const auto z = grid_zero(g);
  const auto r = solve_similarity(w, z, z, z, z, 4.0);
  EXPECT_LE(grid_norm(r.omega, kInf, false), 1e-15);
  EXPECT_LE(r.product_error, 1e-12);
  EXPECT_LE(r.Dw_residual, 0.01);
}

TEST(Similarity, BeltramiScenarioGBounds) {
  std::vector<double> Cfit, Nval;
  for (double k : {0.5, 1.0, 2.0}) {
    const auto sc = fixtures::solve_drift_scenario(0.06, k);
    const auto b = beltrami_coefficients(sc.u.mesh, sc.c.A);
    ComplexField w{sc.u.mesh, Eigen::VectorXcd(sc.u.mesh->num_nodes())};
    for (Eigen::Index i = 0; i < w.values.size(); ++i)
      w.values[i] = cplx(sc.mult.phi.values[i] * sc.u.values[i], sc.v.values[i]);
    const auto coef = reduced_coefficient_field(sc.mult.phi, sc.c);
    const auto red = reduced_field_residual(sc.u, sc.mult.phi, sc.v, sc.c, 1.4, 4.0);
    const auto g = make_grid(128, 1.4);
    const auto wg = sample(g, w), q1 = sample(g, b.eta), q2 = sample(g, b.nu), A = sample(g, coef);
    const auto r = solve_similarity(wg, q1, q2, A, A, 4.0);
    EXPECT_LE(r.residual, 1e-10);
    EXPECT_LE(r.product_error, 1e-12);
    const double N = red.alpha_norm + red.beta1_norm + red.beta2_norm;
    double logg = 0;
    for (int i = 0; i < g.N; ++i)
      for (int j = 0; j < g.N; ++j)
        if (g.in_mask(i, j)) logg = std::max(logg, std::abs(std::log(std::abs(r.g(i, j)))));
    Cfit.push_back(logg / N);
    EXPECT_LE(r.Dw_residual, 0.05);
    Nval.push_back(N);
  }
  EXPECT_LT(Nval[0], Nval[2]);
  const double C = *std::max_element(Cfit.begin(), Cfit.end());
  const double c = *std::min_element(Cfit.begin(), Cfit.end());
  EXPECT_TRUE(std::isfinite(C));
  EXPECT_LE(C, 3 * c);
}

// ----- exponential moments -----

TEST(ExpMoment, ZeroFieldGivesOne) {
  const auto g = make_grid(32, 1.0);
  for (double s : {0.5, 1.0, 3.0})
    for (double r : {0.2, 1.0}) EXPECT_NEAR(exp_moment(grid_zero(g), s, r).value, 1.0, 1e-15);
  EXPECT_THROW(exp_moment(grid_zero(g), 1.0, 1e-6), DomainError);
}

TEST(ExpMoment, OverflowHandled) {
  const auto g = make_grid(32, 1.0);
  const auto big = sample(g, [](const Vec2&) { return cplx(1000); });
  const auto m = exp_moment(big, 2.0, 0.5);
  EXPECT_NEAR(m.log_value, 2000.0, 1e-9);
  EXPECT_EQ(m.value, kInf);
}

TEST(ExpMoment, RadiusAndExponentEnvelopes) {
  const auto g = make_grid(128, 1.0);
  const auto h = cauchy_transform(smooth_field(g, 0.3));
  std::vector<double> logr, lm;
  for (int k = 1; k <= 10; ++k) {
    const double r = 0.1 * k;
    logr.push_back(-std::log(r));
    lm.push_back(exp_moment(h, 1.0, r).log_value);
  }
  const auto fit = fit_envelope({logr}, lm);
  for (std::size_t k = 0; k < lm.size(); ++k) EXPECT_LE(lm[k], fit.coef[0] + fit.coef[1] * logr[k] + 1e-12);
  std::vector<double> s{0.5, 1, 2}, s2{0.25, 1, 4}, ls;
  for (double x : s) ls.push_back(exp_moment(h, x, 0.5).log_value);
  const auto q = fit_envelope({s, s2}, ls);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_LE(ls[k], q.coef[0] + q.coef[1] * s[k] + q.coef[2] * s2[k] + 1e-12);
  EXPECT_GE(ls[2], ls[1]);
}

TEST(GridIO, BinaryRoundTripAndCsv) {
  const auto g = make_grid(16, 1.0);
  const auto f = smooth_field(g, 0.1);
  std::stringstream ss;
  write_grid_binary(f, ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.size(), 16u + 16u * 16 * 16);
  EXPECT_EQ(bytes.substr(0, 4), "LLAB");
  const auto back = read_grid_binary(ss, 1.0);
  EXPECT_EQ(back.grid.N, 16);
  EXPECT_EQ(back.grid.h, g.h);
  EXPECT_EQ((back.v - f.v).cwiseAbs().maxCoeff(), 0.0);
  std::ostringstream csv;
  write_grid_csv(f, csv);
  EXPECT_EQ(csv.str().rfind("i,j,x,y,re,im\n", 0), 0u);
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_grid_binary(bad, 1.0), ConfigError);
}
