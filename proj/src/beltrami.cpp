#include "llab/beltrami.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>
#include <type_traits>

#include "llab/quadrature.hpp"

namespace llab {

namespace {

constexpr cplx I1{0.0, 1.0};

double det_plus_identity(const Mat2& a) { return (a(0, 0) + 1) * (a(1, 1) + 1) - a(0, 1) * a(1, 0); }

double checked_det_plus_identity(const Mat2& a) {
  const double d = det_plus_identity(a);
  if (!(d > 0)) throw PreconditionError("det(A+I) <= 0; A is not elliptic");
  return d;
}

Vec2 point_of(const TriMesh& m, std::size_t t, const std::array<double, 3>& b) {
  const auto& T = m.tris[t];
  return b[0] * m.nodes[T[0]] + b[1] * m.nodes[T[1]] + b[2] * m.nodes[T[2]];
}

template <class V>
auto bary_mix(const V& f, const std::array<int, 3>& T, const std::array<double, 3>& b) {
  return b[0] * f[T[0]] + b[1] * f[T[1]] + b[2] * f[T[2]];
}

// Fourth-order central differences.
constexpr double kStep = 1e-3;

template <class F>
auto d_dx(const F& f, const Vec2& p, int dir, double h = kStep) {
  using R = std::decay_t<decltype(f(p))>;
  Vec2 e = Vec2::Zero();
  e[dir] = h;
  return R((8.0 * (f(p + e) - f(p - e)) - (f(p + 2 * e) - f(p - 2 * e))) / (12.0 * h));
}

Vec2 fd_gradient(const ScalarFn& u, const Vec2& p) { return Vec2(d_dx(u, p, 0), d_dx(u, p, 1)); }

double fd_divergence(const VectorFn& F, const Vec2& p) {
  auto fx = [&](const Vec2& q) { return F(q)[0]; };
  auto fy = [&](const Vec2& q) { return F(q)[1]; };
  return d_dx(fx, p, 0) + d_dx(fy, p, 1);
}

bool in_disk(const Vec2& x, double r) { return x.norm() < r; }

}  // namespace

cplx eta_of(const Mat2& a) {
  return cplx(a(0, 0) - a(1, 1), a(0, 1) + a(1, 0)) / checked_det_plus_identity(a);
}

cplx nu_of(const Mat2& a) {
  return cplx(a.determinant() - 1.0, a(1, 0) - a(0, 1)) / checked_det_plus_identity(a);
}

double qc_bound(const Mat2& a, double lambda) {
  const double tr = a.trace(), det = a.determinant();
  const double l2 = lambda * lambda;
  return (std::sqrt(std::max(0.0, tr * tr - 4 * l2)) + std::sqrt(std::max(0.0, (det + 1) * (det + 1) - 4 * l2))) /
         (tr + det + 1);
}

cplx D_expanded(const Mat2& a, double ux, double uy, double vx, double vy) {
  const double det = a.determinant();
  const double dp = checked_det_plus_identity(a);
  const cplx r = cplx(a(0, 0) + det, a(1, 0)) * ux + cplx(a(0, 1), a(1, 1) + det) * uy +
                 cplx(a(0, 0) + 1, a(0, 1)) * I1 * vx + cplx(a(1, 0), a(1, 1) + 1) * I1 * vy;
  return r / dp;
}

cplx D_apply(const Mat2& a, cplx fx, cplx fy) {
  const cplx d = 0.5 * (fx - I1 * fy), dbar = 0.5 * (fx + I1 * fy);
  return dbar + eta_of(a) * d + nu_of(a) * std::conj(d);
}

BeltramiData beltrami_coefficients(MeshPtr mesh, const MatrixFn& A) {
  BeltramiData out;
  out.mesh = mesh;
  const std::size_t n = mesh->num_nodes();
  out.eta = {mesh, Eigen::VectorXcd(n)};
  out.nu = {mesh, Eigen::VectorXcd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Mat2 a = A ? A(mesh->nodes[i]) : Mat2::Identity();
    out.eta.values[i] = eta_of(a);
    out.nu.values[i] = nu_of(a);
    // The bound only uses a11 a22 - (a12 + a21)^2 / 4 >= lambda^2.
    const double l2 = a(0, 0) * a(1, 1) - 0.25 * std::pow(a(0, 1) + a(1, 0), 2);
    if (!(l2 > 0) || !(a(0, 0) > 0)) throw PreconditionError("beltrami_coefficients: A not elliptic at a node");
    out.K_qc = std::max(out.K_qc, qc_bound(a, std::sqrt(l2)));
    out.max_sum = std::max(out.max_sum, std::abs(out.eta.values[i]) + std::abs(out.nu.values[i]));
  }
  return out;
}

ComplexField eta_w(const BeltramiData& b, const ComplexField& dw) {
  ComplexField out{b.mesh, Eigen::VectorXcd(b.mesh->num_nodes())};
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    const cplx d = dw.values[i];
    out.values[i] = std::abs(d) < 1e-12 ? b.eta.values[i] + b.nu.values[i]
                                        : b.eta.values[i] + b.nu.values[i] * std::conj(d) / d;
  }
  return out;
}

Mat2 HatOperator::matrix() const {
  const double s = 1 - alpha * alpha - beta * beta;
  if (!(s > 0)) throw PreconditionError("HatOperator: alpha^2 + beta^2 must be < 1");
  Mat2 m;
  m << ((1 + alpha) * (1 + alpha) + beta * beta) / s, 2 * beta / s, 2 * beta / s,
      ((1 - alpha) * (1 - alpha) + beta * beta) / s;
  return m;
}

HatOperator hat_from_eta(cplx e) { return {e.real(), e.imag()}; }

double hat_L_residual(const ScalarField& u, const MatrixFn& Ahat) {
  CoefficientSet c;
  c.A = Ahat;
  c.lambda = 0.0;
  c.Lambda = kInf;
  const auto op = assemble_bilinear(u.mesh, c);
  const Eigen::VectorXd r = op.K * u.values;
  const SpMat absK = op.K.cwiseAbs();
  const Eigen::VectorXd scale = absK * u.values.cwiseAbs();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < u.mesh->num_nodes(); ++i) {
    if (u.mesh->boundary[i]) continue;
    num = std::max(num, std::abs(r[i]));
    den = std::max(den, scale[i]);
  }
  return den > 0 ? num / den : 0.0;
}

// ---------------------------------------------------------------------------
// Stream function

namespace {

struct StreamIntegrand {
  const CoefficientSet& c;
  const TriMesh& m;
  const Eigen::VectorXd &u, &phi;
  VectorField gu, gphi;
  double cap;

  Vec2 at(std::size_t t, const std::array<double, 3>& b, const Vec2& x) const {
    const auto& T = m.tris[t];
    const double uu = bary_mix(u, T, b), ph = bary_mix(phi, T, b);
    const Vec2 du(bary_mix(gu.x, T, b), bary_mix(gu.y, T, b));
    const Vec2 dphi(bary_mix(gphi.x, T, b), bary_mix(gphi.y, T, b));
    const Mat2 a = c.a(x);
    return ph * (a * du) - uu * (a.transpose() * dphi) + uu * ph * (c.w1(x, cap) - c.w2(x, cap));
  }
};

}  // namespace

StreamFunction stream_function(const ScalarField& u, const ScalarField& phi, const CoefficientSet& c,
                               double region_radius, const StreamOptions& opt) {
  const TriMesh& m = *u.mesh;
  if (phi.mesh->num_nodes() != m.num_nodes()) throw PreconditionError("stream_function: mesh mismatch");
  StreamIntegrand P{c, m, u.values, phi.values, nodal_gradient(u), nodal_gradient(phi), 1.0 / m.h};
  PointLocator loc(u.mesh);

  StreamFunction out;
  out.v = {u.mesh, Eigen::VectorXd::Zero(m.num_nodes())};
  using G = boost::math::quadrature::gauss<double, 8>;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const Vec2 p = m.nodes[i];
    if (p.norm() == 0) continue;
    auto integrand = [&](double t) {
      std::array<double, 3> b;
      Vec2 x = t * p;
      int tri = loc.locate(x, b);
      if (tri < 0) {
        x *= 1 - 1e-12;
        tri = loc.locate(x, b);
        if (tri < 0) return 0.0;
      }
      const Vec2 Pv = P.at(std::size_t(tri), b, x);
      return -Pv[1] * p[0] + Pv[0] * p[1];
    };
    double acc = 0;
    for (int k = 0; k < opt.panels; ++k) {
      const double a = std::pow(double(k) / opt.panels, 2), bnd = std::pow(double(k + 1) / opt.panels, 2);
      acc += G::integrate(integrand, a, bnd);
    }
    out.v.values[i] = acc;
  }

  const Region reg = Region::disk(region_radius);
  const auto gv = tri_gradient(m, out.v.values);
  double err2 = 0, p2 = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    for (const auto& q : quad7()) {
      const Vec2 x = point_of(m, t, q.bary);
      if (!reg.contains(x)) continue;
      const Vec2 Pv = P.at(t, q.bary, x);
      const Vec2 rot(gv[t][1], -gv[t][0]);
      const double w = q.weight * m.area[t];
      err2 += w * (rot - Pv).squaredNorm();
      p2 += w * Pv.squaredNorm();
    }
  }
  out.duality_error = p2 > 0 ? std::sqrt(err2 / p2) : 0.0;

  Eigen::VectorXd div = Eigen::VectorXd::Zero(m.num_nodes()), scale = div;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad3()) {
      const Vec2 x = point_of(m, t, q.bary);
      const Vec2 Pv = P.at(t, q.bary, x);
      const double w = q.weight * m.area[t];
      for (int k = 0; k < 3; ++k) {
        div[T[k]] += w * Pv.dot(m.grad[t][k]);
        scale[T[k]] += w * Pv.norm() * m.grad[t][k].norm();
      }
    }
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (m.boundary[i] || !in_disk(m.nodes[i], region_radius)) continue;
    num = std::max(num, std::abs(div[i]));
    den = std::max(den, scale[i]);
  }
  out.divergence_ratio = den > 0 ? num / den : 0.0;
  return out;
}

StreamL1Fit stream_l1_fit(const ScalarField& v, const ScalarField& u, const CoefficientSet& c,
                          const std::vector<double>& radii, double kappa) {
  StreamL1Fit out;
  const double expo = c.q1 == kInf ? 2.0 : 2.0 - 4.0 / c.q1;
  for (double r : radii) {
    const double l1 = lebesgue_norm(v, 1.0, Region::disk(r));
    const double sup = lebesgue_norm(u, kInf, Region::disk(kappa * r));
    const double bound = r * r * (1 + std::pow(r, expo) * c.K * c.K) * sup;
    out.r.push_back(r);
    out.ratio.push_back(bound > 0 ? l1 / bound : 0.0);
    out.C = std::max(out.C, out.ratio.back());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced equation

cplx reduced_alpha(const Mat2& a, const Vec2& g) {
  const double a11 = a(0, 0), a12 = a(0, 1), a21 = a(1, 0), a22 = a(1, 1);
  const double dp = checked_det_plus_identity(a);
  const cplx cx(2 * a11 * (1 + a22) - (a12 + a21) * a12, (a12 + a21) + a11 * (a12 - a21));
  const cplx cy((a12 + a21) - a22 * (a12 - a21), 2 * a22 * (1 + a11) - (a12 + a21) * a21);
  return (cx * g[0] + cy * g[1]) / (2 * dp);
}

cplx reduced_beta(const Mat2& a, const Vec2& W) {
  const double dp = checked_det_plus_identity(a);
  return cplx(-W[0] * (a(1, 1) + 1) + W[1] * a(0, 1), -W[1] * (a(0, 0) + 1) + W[0] * a(1, 0)) / (2 * dp);
}

ComplexField reduced_coefficient_field(const ScalarField& phi, const CoefficientSet& c) {
  const TriMesh& m = *phi.mesh;
  ScalarField logphi{phi.mesh, Eigen::VectorXd(m.num_nodes())};
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (!(phi.values[i] > 0)) throw PreconditionError("reduced_coefficient_field: phi must be positive");
    logphi.values[i] = std::log(phi.values[i]);
  }
  const auto g = nodal_gradient(logphi);
  const double cap = 1.0 / m.h;
  ComplexField out{phi.mesh, Eigen::VectorXcd(m.num_nodes())};
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const Vec2& x = m.nodes[i];
    const Mat2 a = c.a(x);
    out.values[i] = reduced_alpha(a, g.at(i)) + reduced_beta(a, c.w1(x, cap)) - reduced_beta(a, c.w2(x, cap));
  }
  return out;
}

ReducedResidual reduced_field_residual(const ScalarField& u, const ScalarField& phi, const ScalarField& v,
                                       const CoefficientSet& c, double region_radius, double t) {
  const TriMesh& m = *u.mesh;
  const double cap = 1.0 / m.h;
  ReducedResidual out;
  out.w = {u.mesh, Eigen::VectorXcd(m.num_nodes())};
  Eigen::VectorXd U(m.num_nodes()), logphi(m.num_nodes());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (!(phi.values[i] > 0)) throw PreconditionError("reduced_field_residual: phi must be positive");
    U[i] = phi.values[i] * u.values[i];
    logphi[i] = std::log(phi.values[i]);
    out.w.values[i] = cplx(U[i], v.values[i]);
  }
  const auto gU = tri_gradient(m, U), gV = tri_gradient(m, v.values), gPhi = tri_gradient(m, logphi);
  const Region reg = Region::disk(region_radius);

  double r2 = 0, d2 = 0;
  for (std::size_t tr = 0; tr < m.num_tris(); ++tr) {
    const auto& T = m.tris[tr];
    for (const auto& q : quad7()) {
      const Vec2 x = point_of(m, tr, q.bary);
      if (!reg.contains(x)) continue;
      const Mat2 a = c.a(x);
      const cplx Dw = D_apply(a, cplx(gU[tr][0], gV[tr][0]), cplx(gU[tr][1], gV[tr][1]));
      const cplx coef = reduced_alpha(a, gPhi[tr]) + reduced_beta(a, c.w1(x, cap)) - reduced_beta(a, c.w2(x, cap));
      const double wre = bary_mix(U, T, q.bary);
      const double w = q.weight * m.area[tr];
      r2 += w * std::norm(Dw - coef * 2.0 * wre);
      d2 += w * (gU[tr].squaredNorm() + gV[tr].squaredNorm());
    }
  }
  out.residual_l2 = std::sqrt(r2);
  out.grad_l2 = std::sqrt(d2);
  out.relative = d2 > 0 ? out.residual_l2 / out.grad_l2 : out.residual_l2;

  out.alpha_norm = lebesgue_norm_integrand(
      m, [&](std::size_t tr, const std::array<double, 3>&, const Vec2& x) {
        return std::abs(reduced_alpha(c.a(x), gPhi[tr]));
      },
      t, reg);
  out.beta1_norm = lebesgue_norm_integrand(
      m, [&](std::size_t, const std::array<double, 3>&, const Vec2& x) {
        return std::abs(reduced_beta(c.a(x), c.w1(x, cap)));
      },
      c.q1, reg);
  out.beta2_norm = lebesgue_norm_integrand(
      m, [&](std::size_t, const std::array<double, 3>&, const Vec2& x) {
        return std::abs(reduced_beta(c.a(x), c.w2(x, cap)));
      },
      c.q2, reg);
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition for symmetric det-1 matrices

DecompositionPoint decomposition_at(const Mat2& a, const Mat2& ax, const Mat2& ay) {
  const double a11 = a(0, 0), a12 = a(0, 1), a22 = a(1, 1);
  const double dp = checked_det_plus_identity(a);
  DecompositionPoint o;
  o.Dx = cplx(a11 + 1, a12) / dp;
  o.Dy = cplx(a12, a22 + 1) / dp;
  o.Dtx = cplx(1 + a11, -a12);
  o.Dty = cplx(a12, -(1 + a22));
  const double p = a11 + a22 + 2 * a11 * a22;
  const double q = 2 * a12 * (1 + a11);
  const double r = a12 * (a22 - a11);
  const double s = (1 + a11) * (1 + a11) - a12 * a12;
  const double x11 = ax(0, 0), x12 = ax(0, 1), y11 = ay(0, 0), y12 = ay(0, 1);
  o.Gamma = cplx(p * x11 - q * x12 + r * y11 + s * y12, r * x11 + s * x12 - p * y11 + q * y12) / (a11 * dp * dp);
  return o;
}

namespace {

Mat2 matrix_dx(const MatrixFn& A, const Vec2& x, int dir) { return d_dx(A, x, dir, 1e-4); }

void require_symmetric(const MatrixFn& A, const TriMesh& m) {
  for (const auto& x : m.nodes) {
    const Mat2 a = A(x);
    if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * (1 + a.cwiseAbs().maxCoeff()))
      throw PreconditionError("decompose_second_order: A must be symmetric");
  }
}

}  // namespace

Decomposition decompose_second_order(MeshPtr mesh, const MatrixFn& A0) {
  const MatrixFn A = A0 ? A0 : MatrixFn([](const Vec2&) { return Mat2::Identity(); });
  require_symmetric(A, *mesh);
  Decomposition d;
  d.mesh = mesh;
  d.normalized = [A](const Vec2& x) {
    const Mat2 a = A(x);
    const double det = a.determinant();
    if (!(det > 0)) throw PreconditionError("decompose_second_order: det A <= 0");
    return Mat2(a / std::sqrt(det));
  };
  d.extra_drift = [A](const Vec2& x) {
    const ScalarFn s = [&A](const Vec2& y) { return 1.0 / std::sqrt(A(y).determinant()); };
    return Vec2(A(x) * fd_gradient(s, x));
  };
  d.Gamma = {mesh, Eigen::VectorXcd(mesh->num_nodes())};
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    const Vec2& x = mesh->nodes[i];
    const auto pt = decomposition_at(d.normalized(x), matrix_dx(d.normalized, x, 0), matrix_dx(d.normalized, x, 1));
    d.Gamma.values[i] = pt.Gamma;
    d.Gamma_sup = std::max(d.Gamma_sup, std::abs(pt.Gamma));
  }
  return d;
}

double decomposition_residual(const Decomposition& d, const ScalarFn& u, double region_radius) {
  const TriMesh& m = *d.mesh;
  const auto gu = nodal_gradient(interpolate(d.mesh, u));
  Eigen::VectorXd gre(m.num_nodes()), gim(m.num_nodes());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const cplx g = Dtilde_apply(d.normalized(m.nodes[i]), gu.at(i));
    gre[i] = g.real();
    gim[i] = g.imag();
  }
  const auto tre = tri_gradient(m, gre), tim = tri_gradient(m, gim);
  const VectorFn flux = [&](const Vec2& x) { return Vec2(d.normalized(x) * fd_gradient(u, x)); };
  const Region reg = Region::disk(region_radius);
  double r2 = 0, t2 = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad7()) {
      const Vec2 x = point_of(m, t, q.bary);
      if (!reg.contains(x)) continue;
      const Mat2 a = d.normalized(x);
      const auto pt = decomposition_at(a, matrix_dx(d.normalized, x, 0), matrix_dx(d.normalized, x, 1));
      const cplx g(bary_mix(gre, T, q.bary), bary_mix(gim, T, q.bary));
      const cplx gx(tre[t][0], tim[t][0]), gy(tre[t][1], tim[t][1]);
      const cplx lhs = pt.Dx * gx + pt.Dy * gy + pt.Gamma * g;
      const double target = fd_divergence(flux, x);
      const double w = q.weight * m.area[t];
      r2 += w * std::norm(lhs - target);
      t2 += w * target * target;
    }
  }
  return t2 > 0 ? std::sqrt(r2 / t2) : std::sqrt(r2);
}

// ---------------------------------------------------------------------------
// Drift factor

cplx Dtilde_apply(const Mat2& a, const Vec2& g) {
  return cplx(1 + a(0, 0), -a(0, 1)) * g[0] + cplx(a(0, 1), -(1 + a(1, 1))) * g[1];
}

UpsilonPoint upsilon_at(const Mat2& a, const Vec2& W, cplx Dtu) {
  const double dp = checked_det_plus_identity(a);
  UpsilonPoint o;
  o.e = ((1 + a(1, 1)) * W[0] - a(0, 1) * W[1]) / dp;
  o.f = (-a(0, 1) * W[0] + (1 + a(0, 0)) * W[1]) / dp;
  const cplx ups(o.e, o.f);
  // Zero where Dtilde u vanishes.
  o.value = std::abs(Dtu) > 0 ? 0.5 * (ups + std::conj(ups) * std::conj(Dtu) / Dtu) : cplx(0.0);
  return o;
}

ComplexField upsilon_field(const MatrixFn& A, const VectorFn& W, const ComplexField& Dtu) {
  const TriMesh& m = *Dtu.mesh;
  ComplexField out{Dtu.mesh, Eigen::VectorXcd::Zero(m.num_nodes())};
  if (!W) return out;
  const double cap = 1.0 / m.h;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const Mat2 a = A ? A(m.nodes[i]) : Mat2::Identity();
    out.values[i] = upsilon_at(a, clamp_vector(W(m.nodes[i]), cap), Dtu.values[i]).value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curl-free potential

CurlFreePotential curl_free_potential(MeshPtr mesh, const VectorFn& W, double curl_tol) {
  const TriMesh& m = *mesh;
  Eigen::VectorXd curl = Eigen::VectorXd::Zero(m.num_nodes()), scale = curl;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad7()) {
      const Vec2 w = W(point_of(m, t, q.bary));
      const double wt = q.weight * m.area[t];
      for (int k = 0; k < 3; ++k) {
        const Vec2& g = m.grad[t][k];
        curl[T[k]] += wt * (w[0] * g[1] - w[1] * g[0]);
        scale[T[k]] += wt * w.norm() * g.norm();
      }
    }
  }
  double worst = 0, den = 0;
  std::size_t wi = 0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (m.boundary[i]) continue;
    if (std::abs(curl[i]) > worst) {
      worst = std::abs(curl[i]);
      wi = i;
    }
    den = std::max(den, scale[i]);
  }
  CurlFreePotential out;
  out.curl_ratio = den > 0 ? worst / den : 0.0;
  if (out.curl_ratio > curl_tol) {
    std::ostringstream os;
    os << "curl_free_potential: W is not curl-free (ratio " << out.curl_ratio << ", witness node " << wi << " at ("
       << m.nodes[wi][0] << ", " << m.nodes[wi][1] << "), weak curl " << curl[wi] << ")";
    throw DomainError(os.str());
  }

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  out.potential = {mesh, Eigen::VectorXd(m.num_nodes())};
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const double x = m.nodes[i][0], y = m.nodes[i][1];
    const double horiz = GK::integrate([&](double s) { return W(Vec2(s, y))[0]; }, 0.0, x, 10, 1e-13);
    const double vert = GK::integrate([&](double s) { return W(Vec2(0.0, s))[1]; }, 0.0, y, 10, 1e-13);
    out.potential.values[i] = horiz + vert;
  }

  const auto g = tri_gradient(m, out.potential.values);
  double e2 = 0, w2 = 0, wsup = 0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    for (const auto& q : quad7()) {
      const Vec2 w = W(point_of(m, t, q.bary));
      const double wt = q.weight * m.area[t];
      e2 += wt * (g[t] - w).squaredNorm();
      w2 += wt * w.squaredNorm();
      wsup = std::max(wsup, w.norm());
    }
  }
  out.gradient_error = w2 > 0 ? std::sqrt(e2 / w2) : 0.0;
  out.sup_ratio = wsup > 0 ? out.potential.values.cwiseAbs().maxCoeff() / wsup : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Rotation reduction, (x, y) -> (y, -x)

RotationReduction rotate_reduction(const ScalarFn& u, const MatrixFn& A0, const VectorFn& W0, double radius) {
  const MatrixFn A = A0 ? A0 : MatrixFn([](const Vec2&) { return Mat2::Identity(); });
  const VectorFn W = W0 ? W0 : VectorFn([](const Vec2&) { return Vec2(0, 0); });
  Mat2 M;
  M << 0, 1, -1, 0;
  RotationReduction out;
  out.A_rot = [A, M](const Vec2& p) { return Mat2(M.transpose() * A(M * p) * M); };
  out.W_rot = [W, M](const Vec2& p) { return Vec2(M.transpose() * W(M * p)); };
  out.W_rot_literal = [W, M](const Vec2& p) { return W(M * p); };
  const ScalarFn ut = [u, M](const Vec2& p) { return u(M * p); };

  const VectorFn flux = [&](const Vec2& p) { return Vec2(A(p) * fd_gradient(u, p) + W(p) * u(p)); };
  const VectorFn flux_rot = [&](const Vec2& p) { return Vec2(out.A_rot(p) * fd_gradient(ut, p)); };

  // Polar samples closed under quarter turns.
  const int nr = 12, nth = 48;
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  for (int k = 0; k < nr; ++k) {
    const double r = radius * (k + 0.5) / nr;
    for (int j = 0; j < nth; ++j) {
      const double th = 2 * kPi * j / nth;
      const Vec2 p(r * std::cos(th), r * std::sin(th));
      const double w = r;
      const double orig = -fd_divergence(flux, p);
      const Vec2 gut = fd_gradient(ut, p);
      const double rot_base = -fd_divergence(flux_rot, p);
      const double rot = rot_base - out.W_rot(p).dot(gut);
      const double lit = rot_base - out.W_rot_literal(p).dot(gut);
      const double gap = fd_divergence(W, p) * u(p);
      s0 += w * orig * orig;
      s1 += w * rot * rot;
      s2 += w * lit * lit;
      s3 += w * gap * gap;
    }
  }
  const double norm = (radius / nr) * (2 * kPi / nth);
  out.residual_original = std::sqrt(s0 * norm);
  out.residual_rotated = std::sqrt(s1 * norm);
  out.residual_literal = std::sqrt(s2 * norm);
  out.divergence_gap = std::sqrt(s3 * norm);
  return out;
}

}  // namespace llab
