#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <string>

#include "llab/coefficients.hpp"
#include "llab/fields.hpp"

namespace llab {

using SpMat = Eigen::SparseMatrix<double>;

// Row i, column j holds B[phi_j, phi_i] (trial j, test i).
struct SparseOperator {
  MeshPtr mesh;
  SpMat K;
  bool has_A = false, has_W1 = false, has_W2 = false, has_V = false;
  bool adjoint = false;
  bool symmetric = false;
};

SparseOperator assemble_bilinear(MeshPtr mesh, const CoefficientSet& c, bool adjoint = false);

// Load vector F_i = int f phi_i + G . grad phi_i (either part may be empty).
Eigen::VectorXd load_vector(const TriMesh& m, const ScalarFn& f, const VectorFn& G);
// Same with per-quadrature-point evaluation through P1 interpolants of nodal data.
Eigen::VectorXd load_vector_nodal(const TriMesh& m, const Eigen::VectorXd* f, const Eigen::VectorXd* Gx,
                                  const Eigen::VectorXd* Gy);

struct SolveInfo {
  std::string method;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

// Dirichlet solve: boundary rows take `boundary_values`, interior rows satisfy the discrete weak form.
ScalarField solve_dirichlet(const SparseOperator& op, const Eigen::VectorXd& boundary_values,
                            const Eigen::VectorXd& rhs, SolveInfo* info = nullptr, double tol = 1e-10);

// Factorization reused across many right-hand sides (zero boundary data).
class InteriorSolver {
 public:
  explicit InteriorSolver(const SparseOperator& op, bool transpose = false);
  ~InteriorSolver();
  InteriorSolver(const InteriorSolver&) = delete;
  InteriorSolver& operator=(const InteriorSolver&) = delete;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs_full) const;  // returns full nodal vector
 private:
  struct Impl;
  Impl* impl_;
};

// Regions for norms: annulus r_in <= |x - center| < r_out.
struct Region {
  Vec2 center{0, 0};
  double r_out = kInf;
  double r_in = 0.0;
  bool contains(const Vec2& x) const {
    const double d = (x - center).norm();
    return d < r_out && d >= r_in;
  }
  static Region disk(double r, Vec2 c = Vec2(0, 0)) { return {c, r, 0.0}; }
  static Region annulus(double r_in, double r_out, Vec2 c = Vec2(0, 0)) { return {c, r_out, r_in}; }
};

// Integrand evaluated at (triangle, barycentric coordinates, point).
using TriIntegrand = std::function<double(std::size_t, const std::array<double, 3>&, const Vec2&)>;

double lebesgue_norm_integrand(const TriMesh& m, const TriIntegrand& g, double s, const Region& region);
double lebesgue_norm(const ScalarField& f, double s, const Region& region);
double lebesgue_norm(const TriMesh& m, const ScalarFn& f, double s, const Region& region);
double lebesgue_norm(const TriMesh& m, const VectorFn& f, double s, const Region& region, double cap = 0.0);
double lebesgue_norm(const ComplexField& f, double s, const Region& region);
// Norm of the piecewise-constant P1 gradient of a nodal field.
double gradient_norm(const ScalarField& f, double s, const Region& region);
double integral(const TriMesh& m, const TriIntegrand& g, const Region& region);
double region_measure(const TriMesh& m, const Region& region);

double tau0(double q1, double q2, double p);

struct CaccioppoliResult {
  double ratio = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tau0 = 0.0;
};
CaccioppoliResult caccioppoli_check(const ScalarField& u, const CoefficientSet& c, double r, double alpha,
                                    double t);

// min over interior v of v^T S v / v^T N v, S the symmetric part and N the W^{1,2} Gram matrix.
struct CoercivityResult {
  bool coercive = false;
  double gamma = 0.0;
  int negative_pivots = 0;
};
CoercivityResult coercivity_margin(const SparseOperator& op);

// Standard P1 mass matrix.
SpMat mass_matrix(const TriMesh& m);

}  // namespace llab
