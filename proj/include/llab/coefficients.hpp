#pragma once

#include <optional>
#include <string>

#include "llab/common.hpp"
#include "llab/mesh.hpp"

namespace llab {

// Coefficients of L u = -div(A grad u + W1 u) + W2 . grad u + V u.
// Empty callables mean A = I and zero lower-order terms.
struct CoefficientSet {
  MatrixFn A;
  VectorFn W1, W2;
  ScalarFn V;

  double lambda = 1.0;
  double Lambda = 1.0;
  std::optional<double> mu;  // Lipschitz bound of the entries of A
  double q1 = kInf, q2 = kInf, p = kInf;
  double K = 1.0;
  std::string name = "custom";

  // Recorded Lebesgue norms on B_{norm_radius}; filled by record_norms.
  double norm_radius = 0.0;
  double norm_W1 = 0.0, norm_W2 = 0.0, norm_V = 0.0;

  bool has_A() const { return bool(A); }
  bool has_W1() const { return bool(W1); }
  bool has_W2() const { return bool(W2); }
  bool has_V() const { return bool(V); }

  Mat2 a(const Vec2& x) const { return A ? A(x) : Mat2::Identity(); }
  // Samples of singular fields are clamped at magnitude `cap` (cap <= 0 disables).
  Vec2 w1(const Vec2& x, double cap = 0.0) const;
  Vec2 w2(const Vec2& x, double cap = 0.0) const;
  double v(const Vec2& x, double cap = 0.0) const;

  // Swap to the adjoint form: A -> A^T, W1 <-> W2.
  CoefficientSet adjoint() const;
};

Vec2 clamp_vector(const Vec2& w, double cap);
double clamp_scalar(double s, double cap);

// Recompute and store ||W1||_{q1}, ||W2||_{q2}, ||V||_p over B_radius on the mesh.
void record_norms(CoefficientSet& c, const TriMesh& mesh, double radius);

struct EllipticityReport {
  bool elliptic = true;
  bool bounded = true;
  double min_eig = kInf;
  double max_entry = 0.0;
  Vec2 worst_point{0, 0};
};
EllipticityReport check_ellipticity(const CoefficientSet& c, const TriMesh& mesh);

}  // namespace llab
