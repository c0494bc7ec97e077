#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "llab/fem.hpp"
#include "llab/multiplier.hpp"

namespace llab {

struct GreenOptions {
  double radius = 1.0;  // disk domain centered at the origin
  double h = 0.04;
  int rings = 3;  // geometric refinement around the pole
  double ratio = 2.0;
  bool check_coercivity = true;
};

struct GreenEstimateRow {
  std::string id;
  double s_or_tau = 0;  // Lebesgue index, or 0 for fits over a tau grid
  double C = 0;
  double eps = 0;    // smallest eps on the scan grid with C <= C_max (NaN if none)
  double slope = 0;  // least-squares log-log slope of the raw data
  bool holds = false;
};

struct GreenFunction {
  Vec2 pole{0, 0};
  double rho = 0;  // 0 selects point evaluation at the pole
  bool adjoint = false;
  ScalarField gamma;
  Eigen::VectorXd average;  // nodal weights of the averaging functional
  SolveInfo solve;
  double identity_residual = 0;  // max interior |K gamma - average| / max |average|
  CoercivityResult coercivity;
  std::shared_ptr<const PointLocator> locator;
  std::vector<GreenEstimateRow> constants;  // filled by green_estimate_suite

  double value(const Vec2& x) const;  // 0 outside the mesh
};

// Weights b_i = average of phi_i over B_rho(y), by polar Gauss quadrature (sum normalized to 1).
Eigen::VectorXd ball_average_functional(const PointLocator& loc, Vec2 y, double rho);

// B[gamma, v] = average of v over B_rho(y) for every interior hat v; gamma = 0 on the boundary.
GreenFunction averaged_green(const CoefficientSet& c, Vec2 y, double rho, const GreenOptions& opt = {});
// Same on a prebuilt operator (mesh and coefficients reused across poles or radii).
GreenFunction averaged_green(const SparseOperator& op, Vec2 y, double rho, bool check_coercivity = false);

// ----- estimate suite -----

struct EstimateGrids {
  std::vector<double> r;  // radii for Omega_r(y); empty selects 16 geometric radii
  std::vector<double> s_norm{1, 2, 4};
  std::vector<double> s_grad{1, 1.5};
  std::vector<double> tau;       // levels of |Gamma|; empty selects from its range
  std::vector<double> tau_grad;  // levels of |D Gamma|
  int holder_pairs = 400;
  double C_max = 100;
  std::uint64_t seed = 20240611;
};

struct GreenEstimateTable {
  Vec2 pole{0, 0};
  double rho = 0;
  std::vector<GreenEstimateRow> rows;
  double level_eps = 0, level_slope = 0;  // |{|Gamma| > tau}| <= C tau^{-2/eps}
  double grad_level_eps = 0, grad_level_slope = 0;  // |{|D Gamma| > tau}| <= C tau^{-2/(1+eps)}
  double pointwise_eps = 0;
  double holder_eta = 0, holder_C = 0;
  const GreenEstimateRow* find(const std::string& id, double s = -1) const;
};

// Row ids: energy_exterior, lebesgue_near, gradient_near, level_set, gradient_level_set, pointwise, holder.
GreenEstimateTable green_estimate_suite(GreenFunction& gf, const EstimateGrids& grids = {});
void write_constants_csv(const std::vector<GreenEstimateTable>& tables, std::ostream& os);

// |{ |f| > tau }| for a P1 field, exact per triangle.
double level_set_measure(const ScalarField& f, double tau);
// |{ |grad f| > tau }| for the piecewise-constant gradient.
double gradient_level_set_measure(const ScalarField& f, double tau);

// ----- constants for the multiplier hypotheses -----

struct PoleConstants {
  Vec2 pole{0, 0};
  double norm_green = 0;  // ||Gamma(., z)||_{L^{p'}}
  double norm_grad = 0;   // ||D Gamma(., z)||_{L^{q2'}}
};

struct GreenConstantsOptions {
  double d = 1.8;
  double h = 0.06;
  double rho = 0.03;
  int grid = 5;
  int jobs = 1;
  bool run_suite = false;
  EstimateGrids grids;
};

struct GreenConstantsTable {
  std::vector<PoleConstants> poles;
  std::vector<GreenEstimateTable> estimates;  // when run_suite
  HypothesisConstants constants;
  double p_dual = 1, q2_dual = 1;
};

// Green functions of -div(A grad + W1) on B_d with poles on a grid x grid lattice; the suprema of the
// pole-wise norms become C_p and C_q2.
GreenConstantsTable green_constants(const CoefficientSet& c, const GreenConstantsOptions& opt = {});

// ----- identities -----

struct SymmetryReport {
  double rho = 0;
  double forward_average = 0;  // average of Gamma^rho(., y1) over B_rho(y2)
  double adjoint_average = 0;  // average of Gamma*^rho(., y2) over B_rho(y1)
  double deviation = 0;        // |forward_average - adjoint_average|
  double forward_value = 0;    // Gamma^rho(y2, y1)
  double adjoint_value = 0;    // Gamma*^rho(y1, y2)
  double pointwise_deviation = 0;
};
// One mesh refined around y1 carries both problems.
SymmetryReport symmetry_check(const CoefficientSet& c, Vec2 y1, Vec2 y2, double rho, const GreenOptions& opt = {});

struct RepresentationOptions {
  double radius = 1.0;
  double h = 0.04;
  double rho = 0.01;
  int probes = 10;
  int jobs = 1;
};

struct RepresentationReport {
  std::vector<Vec2> probes;
  std::vector<double> direct, formula;
  double max_deviation = 0;
};

// Probe points at radii 0.15..0.7 of the domain on a golden-angle spiral.
std::vector<Vec2> representation_probes(double radius, int n);

// Solution of L u = f - div G with zero trace, against u(y) = int Gamma*(x, y) f + D_x Gamma*(x, y) . G dx,
// Gamma* the averaged Green function of the adjoint operator with pole y, on its own refined mesh.
RepresentationReport representation_check(const CoefficientSet& c, const ScalarFn& f, const VectorFn& G,
                                          const RepresentationOptions& opt = {});

// phi - 1 at the probes against -int [D Gamma(., z) . W2 + Gamma(., z) V] phi, Gamma(., z) the Green function
// of -div(A grad + W1) on B_d with pole z.
RepresentationReport multiplier_representation_check(const CoefficientSet& c, const MultiplierResult& r,
                                                     const RepresentationOptions& opt = {});

// L^1 norms of Gamma^{rho_k+1} - Gamma^{rho_k} outside B_{4 rho_k}(y) on one mesh; rhos decreasing.
std::vector<double> rho_convergence(const CoefficientSet& c, Vec2 y, const std::vector<double>& rhos,
                                    const GreenOptions& opt = {});

}  // namespace llab
