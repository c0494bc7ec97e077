#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "llab/coefficients.hpp"
#include "llab/fields.hpp"
#include "llab/quasigeometry.hpp"

namespace llab {

// ----- three quasi-circle inequality -----

struct ThreeCircleRecord {
  double s1 = 0, s2 = 0, s3 = 0;
  double M1 = 0, M2 = 0, M3 = 0;
  double theta = 0;
  double slack = 0;     // theta log M1 + (1 - theta) log M3 - log M2
  double residual = 0;  // recorded Dhat residual of f (caller supplied)
};

// Sup of |f| over the polyline: every vertex plus `samples` points equally spaced in arc length.
double polyline_sup(const ComplexFn& f, const std::vector<Vec2>& poly, int samples = 512);
// Circle of radius s about `center`, as a polyline with n vertices.
QuasiCircle exact_circle(double s, Vec2 center = Vec2(0, 0), int n = 512);

ThreeCircleRecord three_circle_from_curves(const ComplexFn& f, const QuasiCircle& z1, const QuasiCircle& z2,
                                           const QuasiCircle& z3, double residual = 0.0);
ThreeCircleRecord three_circle_check(const ComplexFn& f, const FundamentalSolution& fs, double s1, double s2,
                                     double s3, double residual = 0.0);
// Field values are read through P1 interpolation on the field's own mesh.
ThreeCircleRecord three_circle_check(const ComplexField& f, const FundamentalSolution& fs, double s1, double s2,
                                     double s3, double residual = 0.0);
void write_three_circle_csv(const std::vector<ThreeCircleRecord>& recs, std::ostream& os);  // "s1,s2,s3,theta,slack"

// ----- vanishing order -----

enum class ScenarioType { OofV, OofV1, OofV2, OofV3 };
std::string to_string(ScenarioType t);
ScenarioType scenario_type_from_string(const std::string& s);

struct VanishingScenario {
  ScenarioType type = ScenarioType::OofV1;
  double K = 1.0;
  double C0 = 1.0;
  double d = 1.8;        // outer radius for the upper bound
  double b = 1.0;        // radius for the lower normalization
  bool gradient_normalization = false;  // ||grad u||_{L^2(B_b_tilde)} >= 1 instead of ||u||_{L^inf(B_b)} >= 1
  double b_tilde = 1.2;
  Vec2 center{0, 0};
};

struct VanishingOrderFit {
  std::vector<double> r;    // strictly decreasing
  std::vector<double> sup;  // ||u||_{L^inf(B_r)}
  std::vector<double> fit_r;  // radii used in the fit
  double ord = 0, intercept = 0;
  double fit_residual = 0;  // weighted RMS of the log residuals
  double K = 0;
  // slopes over successive half-decade windows, largest radii first
  std::vector<double> window_ord;
  bool diverging = false;  // window slopes keep growing: infinite-order profile
  // normalization record
  double sup_d = 0, sup_b = 0, grad_b_tilde = 0;
  bool upper_ok = false, lower_ok = false;
  std::vector<std::string> notes;
};

// Sup of |u| over the closed disk, sampled on a polar grid that includes the center and the rim.
double ball_sup(const ScalarFn& u, Vec2 center, double r, int radial = 16, int angular = 96);

VanishingOrderFit vanishing_order(const ScalarFn& u, const std::vector<double>& r_grid,
                                  const VanishingScenario& scenario = {});
// Field values through P1 interpolation; points outside the mesh are ignored.
VanishingOrderFit vanishing_order(const ScalarField& u, const std::vector<double>& r_grid,
                                  const VanishingScenario& scenario = {});

// Weighted least-squares slope of y against x; returns {slope, intercept, weighted RMS residual}.
std::array<double, 3> weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                                        const std::vector<double>& w);

// Radial drift family u = f(r) x / r solving div(grad u + W u) = 0 with W = -K r^{-a} x / r.
struct RadialDriftSolution {
  double K = 0, a = 0;
  std::vector<double> r, f, fp;  // ODE samples on (0, r_max]
  ScalarFn u;
  VectorFn W;
  double profile(double r) const;
};
RadialDriftSolution radial_drift_solution(double K, double a, double r_max = 2.0);

// ----- rescaling -----

struct ScaledProblem {
  Vec2 z0{0, 0};
  double R = 1;
  ScalarFn u;
  MatrixFn A;
  VectorFn W1, W2;
  ScalarFn V;
};
// u_R(z) = u(z0 + R z), A_R = A(z0 + R z), W_R = R W(z0 + R z), V_R = R^2 V(z0 + R z).
ScaledProblem rescale_problem(const ScalarFn& u, const CoefficientSet& c, Vec2 z0, double R);

struct NormIdentity {
  double q = 2, r = 1, R = 1;
  double scaled = 0;    // ||W_R||_{L^q(B_r(0))}
  double original = 0;  // ||W||_{L^q(B_{rR}(z0))}
  double ratio = 0;     // scaled / original
  double predicted = 0;  // R^{1 - 2/q}, or R^2 for the potential
};
// Both sides by independent quadratures: tensor Gauss on the scaled disk, adaptive Gauss-Kronrod on the original.
NormIdentity check_drift_scaling(const VectorFn& W, Vec2 z0, double R, double r, double q);
NormIdentity check_potential_scaling(const ScalarFn& V, Vec2 z0, double R, double r, double q);

// ----- sharpness gallery -----

enum class GalleryCase { divergence_drift, gradient_drift, full_three_term };
GalleryCase gallery_case_from_string(const std::string& id);
std::string to_string(GalleryCase c);

struct GalleryReport {
  GalleryCase id{};
  double q = kInf, delta = 0, alpha = 1;
  ScalarFn u;
  VectorFn W1, W2;  // empty when absent
  ScalarFn V;
  ScenarioType scenario{};
  // residual on the sample annulus
  int samples = 0;
  double r_in = 1.1, r_out = 5.0;
  double max_residual = 0;          // through forward-mode second derivatives
  double max_residual_literal = 0;  // case (i) with the drift sign as printed: grad u + W u with W = -alpha r^{alpha-1} e_r
  // norm report
  double W_norm_q_pow = 0;      // ||W||_q^q over the exterior of B_1 (q finite)
  double W_norm_predicted = 0;  // 2 pi alpha^q / (2 delta)
  double W_sup = 0;
  double min_sign_gap = 0;  // min of V - W1 . W2 over samples (case iii)
  double max_curl = 0;      // max |curl W1| over samples (case iii)
};
// q = inf selects alpha = 1; otherwise alpha = 1 - (2 + 2 delta)/q with delta defaulting to (q - 2)/4.
GalleryReport sharpness_gallery(const std::string& case_id, double q = kInf, double delta = -1.0, int samples = 200);

// ----- Landis harness -----

struct LandisRow {
  double R = 0, min_sup = 0;
};
struct LandisTable {
  ScenarioType scenario{};
  double q = kInf;
  std::vector<LandisRow> rows;
  bool fit_ok = false;
  double exponent = 0;  // slope of log(-log min_sup) against log R over the upper half of the grid
  double theorem_exponent = 1;  // 1 - 2/q
  std::string note;
};
LandisTable landis_harness(const ScalarFn& u, double q, const std::vector<double>& R_grid, ScenarioType scenario,
                           int angles = 16, int jobs = 1);
LandisTable landis_harness(const GalleryReport& g, const std::vector<double>& R_grid, int jobs = 1);
void write_landis_csv(const LandisTable& t, std::ostream& os);  // "R,min_sup,fit_exponent"

// ----- sub/supersolution pair for the positive multiplier -----

struct SubSuperReport {
  double K = 0, eta = 0;
  double quadratic = 0;  // -eta^2 + 2 K eta + 2 K^2 at eta = 3K
  bool subsolution = false;
  double phi1_min = 0, phi1_max = 0, phi2 = 0;
  bool phi2_dominates = false;  // phi2 >= phi1 on B_{9/5}
  double envelope_C1 = 6;
  bool within_envelope = false;  // phi1, phi2 within [exp(-C1 K), exp(C1 K)]
  // With a coefficient set: pointwise L phi1 <= 0 and L phi2 >= 0 at samples of B_{9/5}.
  bool checked_coefficients = false;
  double max_L_phi1 = 0, min_L_phi2 = 0;
  bool bounds_hold = false;  // |W_i| <= K, |V| <= K^2 at the samples
};
ScalarFn subsolution_phi1(double K);
SubSuperReport subsupersolution_multiplier(double K, const CoefficientSet* c = nullptr, int samples = 400);

}  // namespace llab
