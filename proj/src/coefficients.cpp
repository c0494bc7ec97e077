#include "llab/coefficients.hpp"

#include <cmath>

#include "llab/fem.hpp"
#include "llab/quadrature.hpp"

namespace llab {

Vec2 clamp_vector(const Vec2& w, double cap) {
  if (!std::isfinite(w.x()) || !std::isfinite(w.y())) return Vec2::Zero();
  if (cap <= 0) return w;
  const double n = w.norm();
  return n > cap ? Vec2(w * (cap / n)) : w;
}

double clamp_scalar(double s, double cap) {
  if (!std::isfinite(s)) return 0.0;
  if (cap <= 0) return s;
  return std::clamp(s, -cap, cap);
}

Vec2 CoefficientSet::w1(const Vec2& x, double cap) const { return W1 ? clamp_vector(W1(x), cap) : Vec2::Zero(); }
Vec2 CoefficientSet::w2(const Vec2& x, double cap) const { return W2 ? clamp_vector(W2(x), cap) : Vec2::Zero(); }
double CoefficientSet::v(const Vec2& x, double cap) const { return V ? clamp_scalar(V(x), cap) : 0.0; }

CoefficientSet CoefficientSet::adjoint() const {
  CoefficientSet c = *this;
  if (A) {
    auto a = A;
    c.A = [a](const Vec2& x) -> Mat2 { return a(x).transpose(); };
  }
  std::swap(c.W1, c.W2);
  std::swap(c.q1, c.q2);
  std::swap(c.norm_W1, c.norm_W2);
  c.name = name + "*";
  return c;
}

void record_norms(CoefficientSet& c, const TriMesh& mesh, double radius) {
  const Region reg = Region::disk(radius);
  const double cap = 1.0 / mesh.h;
  c.norm_radius = radius;
  c.norm_W1 = c.W1 ? lebesgue_norm(mesh, VectorFn([&](const Vec2& x) { return c.w1(x, cap); }), c.q1, reg) : 0.0;
  c.norm_W2 = c.W2 ? lebesgue_norm(mesh, VectorFn([&](const Vec2& x) { return c.w2(x, cap); }), c.q2, reg) : 0.0;
  c.norm_V = c.V ? lebesgue_norm(mesh, ScalarFn([&](const Vec2& x) { return c.v(x, cap); }), c.p, reg) : 0.0;
}

EllipticityReport check_ellipticity(const CoefficientSet& c, const TriMesh& mesh) {
  EllipticityReport r;
  for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
    const auto& T = mesh.tris[t];
    for (const auto& q : quad3()) {
      const Vec2 x = q.bary[0] * mesh.nodes[T[0]] + q.bary[1] * mesh.nodes[T[1]] + q.bary[2] * mesh.nodes[T[2]];
      const Mat2 a = c.a(x);
      const double s12 = 0.5 * (a(0, 1) + a(1, 0));
      const double tr = a(0, 0) + a(1, 1);
      const double disc = std::sqrt(0.25 * (a(0, 0) - a(1, 1)) * (a(0, 0) - a(1, 1)) + s12 * s12);
      const double mn = 0.5 * tr - disc;
      if (mn < r.min_eig) {
        r.min_eig = mn;
        r.worst_point = x;
      }
      r.max_entry = std::max(r.max_entry, a.cwiseAbs().maxCoeff());
    }
  }
  r.elliptic = r.min_eig >= c.lambda * (1.0 - 1e-9) && r.min_eig > 0;
  r.bounded = r.max_entry <= c.Lambda * (1.0 + 1e-9);
  return r;
}

}  // namespace llab
