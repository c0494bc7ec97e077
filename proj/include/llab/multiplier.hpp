#pragma once

#include <ostream>
#include <vector>

#include "llab/fem.hpp"

namespace llab {

// Constants in the smallness conditions on W2 and V (fitted by the Green's-function module or set in config).
struct HypothesisConstants {
  double c_q2 = 1.0;
  double C_q2 = 1.0;
  double C_p = 1.0;
};

struct PositivityTest {
  bool holds = true;
  double min_value = 0.0;  // smallest tested integral
  int witness = -1;        // node whose hat function violates the condition
  Vec2 witness_point{0, 0};
};

struct HypothesisRecord {
  double norm_W1 = 0, norm_W2 = 0, norm_V = 0;
  double W2_bound = 0, V_bound = 0;
  bool W1_within_K = true;
  bool W2_small = true;
  bool V_small = true;
  PositivityTest pos1, pos2;
  bool all() const { return W1_within_K && W2_small && V_small && pos1.holds && pos2.holds; }
};

// Tests of the two positivity conditions against every hat function of the mesh (boundary ones included).
PositivityTest positivity_W1(const TriMesh& m, const CoefficientSet& c);
PositivityTest positivity_W2V(const TriMesh& m, const CoefficientSet& c);

HypothesisRecord check_hypotheses(const TriMesh& m, CoefficientSet c, const HypothesisConstants& k);

struct MultiplierOptions {
  double d = 1.8;  // radius of the domain, rho(7/5) + 2/5
  double h = 0.04;
  double t0 = 2.5;
  double bound_tol = 0.02;
  HypothesisConstants constants;
};

struct MultiplierResult {
  ScalarField phi;
  ScalarField Phi;  // nodewise log phi
  HypothesisRecord hypotheses;
  CoercivityResult coercivity;
  double d = 0, rho75 = 0;
  double t0 = 2.5;
  double mu_exp = 0;  // min{2 - 4/q1, 2 - 4/q2, 2 - 2/p}
  double phi_min = 0, phi_max = 0;
  bool positive = false;
  bool bound_ok = false;  // 1/3 - tol <= phi <= 1 + tol (meaningful when hypotheses hold)
  SolveInfo solve;
};

double mu_exponent(double q1, double q2, double p);

MultiplierResult solve_multiplier(const CoefficientSet& c, const MultiplierOptions& opt = {});

struct GradientEntry {
  double t = 0, norm = 0;
  bool extrapolated = false;
};
std::vector<GradientEntry> log_gradient_table(const MultiplierResult& r, const std::vector<double>& t_list);

// Exponent bound from the interpolation lemma at exponent t: K^{1 + eps(t)}.
double interpolation_epsilon(double t, double t0, double mu_exp);

// Hoelder interpolation between the L^2 and L^{t0} entries; returns max of lhs/rhs - 1 over the table.
double interpolation_defect(const std::vector<GradientEntry>& table, double t0);

struct KScanRow {
  double K = 0, t = 0, norm = 0;
};
struct KScan {
  std::vector<KScanRow> rows;
  std::vector<double> t_list;
  std::vector<double> exponents;  // fitted log-log slope per t
};
// Scales W1 by each K; W2 and V fixed.
KScan k_scan(const CoefficientSet& base, const std::vector<double>& Ks, const std::vector<double>& t_list,
             const MultiplierOptions& opt = {}, int jobs = 1);
void write_k_scan(const KScan& s, std::ostream& os);  // "K,t,norm"

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Local energy of Phi/(C K) on B_r(z) against r^{mu_exp}.
struct LocalEnergyCheck {
  double scale = 0;  // C with phi-tilde = Phi/(C K)
  double C_fit = 0;  // max over the grid of energy / r^mu
  int samples = 0;
  double mu_exp = 0;
};
LocalEnergyCheck local_energy_check(const MultiplierResult& r, const CoefficientSet& c, int z_grid = 5,
                                    int r_count = 6);

struct MaxPrincipleResult {
  bool subsolution = false;
  double worst_residual = 0;  // max over interior rows of B*[u, phi_i]
  double slack = 0;           // sup_boundary u^+ - sup u
  bool pass = false;
};
MaxPrincipleResult max_principle_check(const ScalarField& u, const CoefficientSet& c, double tol = 1e-9);

}  // namespace llab
