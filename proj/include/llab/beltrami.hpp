#pragma once

#include <vector>

#include "llab/fem.hpp"

namespace llab {

// Pointwise Beltrami coefficients of D f = dbar f + eta d f + nu conj(d f).
cplx eta_of(const Mat2& a);
cplx nu_of(const Mat2& a);
// Bound |eta| + |nu| <= K(A, lambda) from the ellipticity constant lambda.
double qc_bound(const Mat2& a, double lambda);
// D f written through the partial derivatives of Re f and Im f.
cplx D_expanded(const Mat2& a, double ux, double uy, double vx, double vy);
cplx D_apply(const Mat2& a, cplx fx, cplx fy);  // dbar f + eta d f + nu conj(d f)

struct BeltramiData {
  MeshPtr mesh;
  ComplexField eta, nu;
  double K_qc = 0;      // sup over nodes of the pointwise bound (lambda = smallest eigenvalue of sym A there)
  double max_sum = 0;   // sup over nodes of |eta| + |nu|
};
BeltramiData beltrami_coefficients(MeshPtr mesh, const MatrixFn& A);

// eta + nu conj(dw)/dw, or eta + nu where |dw| < 1e-12.
ComplexField eta_w(const BeltramiData& b, const ComplexField& dw);

// Operator c1 d_x + c2 d_y with c1 = (1 + alpha + i beta)/2, c2 = (beta + i (1 - alpha))/2.
struct HatOperator {
  double alpha = 0, beta = 0;
  cplx c1() const { return {0.5 * (1 + alpha), 0.5 * beta}; }
  cplx c2() const { return {0.5 * beta, 0.5 * (1 - alpha)}; }
  Mat2 matrix() const;  // induced symmetric second-order coefficient
  // Slope tau with dhat g(x + tau y) = 0 for every holomorphic g.
  cplx null_slope() const { return -c1() / c2(); }
};
HatOperator hat_from_eta(cplx eta_w);

// Discrete residual of div(Ahat grad u) = 0: max over interior rows of |K u| divided by max_i sum_j |K_ij u_j|.
double hat_L_residual(const ScalarField& u, const MatrixFn& Ahat);

// ----- stream function and the reduced equation -----

struct StreamOptions {
  int panels = 8;  // graded panels of 8-point Gauss on [0, 1]; 64 samples per ray
};

struct StreamFunction {
  ScalarField v;
  double duality_error = 0;    // ||(v_y, -v_x) - P||_{L^2} / ||P||_{L^2} on the region
  double divergence_ratio = 0;  // max_i |int P . grad psi_i| / max_i int |P| |grad psi_i| over interior nodes
};

// P = phi (A grad u + b u), b = -A^T grad log phi + W1 - W2.
StreamFunction stream_function(const ScalarField& u, const ScalarField& phi, const CoefficientSet& c,
                               double region_radius, const StreamOptions& opt = {});

struct StreamL1Fit {
  std::vector<double> r, ratio;
  double C = 0;
};
// ||v||_{L^1(B_r)} against r^2 (1 + r^{2 - 4/q1} K^2) ||u||_{L^inf(B_{kappa r})}.
StreamL1Fit stream_l1_fit(const ScalarField& v, const ScalarField& u, const CoefficientSet& c,
                          const std::vector<double>& radii, double kappa = 2.0);

// Coefficient alpha (gradient of log phi part) and beta_j of the reduced equation at one point.
cplx reduced_alpha(const Mat2& a, const Vec2& grad_log_phi);
cplx reduced_beta(const Mat2& a, const Vec2& Wj);

struct ReducedResidual {
  ComplexField w;
  double residual_l2 = 0;  // || D w - (alpha + beta1 - beta2)(w + conj w) ||_{L^2(region)}
  double grad_l2 = 0;      // || grad w ||_{L^2(region)}
  double relative = 0;
  double alpha_norm = 0, beta1_norm = 0, beta2_norm = 0;  // L^t, L^{q1}, L^{q2} norms on the region
};
// Nodal alpha + beta1 - beta2, with grad log phi from recovered nodal gradients.
ComplexField reduced_coefficient_field(const ScalarField& phi, const CoefficientSet& c);

ReducedResidual reduced_field_residual(const ScalarField& u, const ScalarField& phi, const ScalarField& v,
                                       const CoefficientSet& c, double region_radius, double t = 2.5);

// ----- second-order decomposition -----

struct DecompositionPoint {
  cplx Dx, Dy;    // D = Dx d_x + Dy d_y
  cplx Dtx, Dty;  // Dtilde = Dtx d_x + Dty d_y
  cplx Gamma;
};
// Coefficients for a symmetric matrix with determinant one, given its first derivatives.
DecompositionPoint decomposition_at(const Mat2& a, const Mat2& ax, const Mat2& ay);

struct Decomposition {
  MeshPtr mesh;
  MatrixFn normalized;  // A / sqrt(det A)
  VectorFn extra_drift;  // A grad(1/sqrt det A)
  ComplexField Gamma;
  double Gamma_sup = 0;
};
Decomposition decompose_second_order(MeshPtr mesh, const MatrixFn& A);

// || div(Ahat grad u) - (D + Gamma) Dtilde u ||_{L^2(region)} / || div(Ahat grad u) ||, with Dtilde u from
// recovered nodal gradients and D applied through P1 gradients.
double decomposition_residual(const Decomposition& d, const ScalarFn& u, double region_radius);

// ----- drift factor in W . grad u = Upsilon~ Dtilde u -----
struct UpsilonPoint {
  double e = 0, f = 0;
  cplx value;  // Upsilon~
};
UpsilonPoint upsilon_at(const Mat2& a, const Vec2& W, cplx Dtu);
cplx Dtilde_apply(const Mat2& a, const Vec2& grad_u);
ComplexField upsilon_field(const MatrixFn& A, const VectorFn& W, const ComplexField& Dtu);

// ----- curl-free potential and the rotation reduction -----
struct CurlFreePotential {
  ScalarField potential;
  double curl_ratio = 0;
  double gradient_error = 0;  // ||grad_h Phi - W||_{L^2} / ||W||_{L^2}
  double sup_ratio = 0;       // ||Phi||_inf / ||W||_inf
};
CurlFreePotential curl_free_potential(MeshPtr mesh, const VectorFn& W, double curl_tol = 1e-6);

struct RotationReduction {
  MatrixFn A_rot;
  VectorFn W_rot;           // M^T W(M p), M p = (y, -x)
  VectorFn W_rot_literal;   // W(M p), components unrotated
  double residual_original = 0;  // sampled L^2 of -div(A grad u + W u)
  double residual_rotated = 0;   // sampled L^2 of -div(A~ grad u~) - W~ . grad u~
  double residual_literal = 0;   // same with the unrotated components
  double divergence_gap = 0;     // sampled L^2 of (div W) u
};
RotationReduction rotate_reduction(const ScalarFn& u, const MatrixFn& A, const VectorFn& W, double radius);

// Coefficient of the exponential subsolution test: -eta^2 + 2 K eta + 2 K^2.
inline double subsolution_quadratic(double eta, double K) { return -eta * eta + 2 * K * eta + 2 * K * K; }

}  // namespace llab
