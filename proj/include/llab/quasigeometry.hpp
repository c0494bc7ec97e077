#pragma once

#include <map>
#include <memory>
#include <ostream>
#include <vector>

#include "llab/fem.hpp"

namespace llab {

// G = G0 + c: G0 the closed-form log profile of the frozen matrix at the pole,
// c a P1 correction vanishing on the outer circle. Normalized so that G = log|z| for A = I.
class FundamentalSolution {
 public:
  FundamentalSolution(MatrixFn A, Vec2 pole, double outer_radius, double h);

  double operator()(const Vec2& z) const;  // -inf at the pole, NaN outside the mesh
  double frozen(const Vec2& z) const;      // G0 alone
  Vec2 frozen_gradient(const Vec2& z) const;
  double level(const Vec2& z) const { return std::exp((*this)(z)); }  // l(z) with G = ln l

  const MeshPtr& mesh() const { return mesh_; }
  const Eigen::VectorXd& correction() const { return corr_; }
  Eigen::VectorXd nodal_values() const;  // pole node set to -inf
  Vec2 pole() const { return pole_; }
  double outer_radius() const { return outer_; }
  const Mat2& frozen_matrix() const { return A0_; }
  int pole_node() const { return pole_node_; }
  // max |int A grad G . grad phi_i| over interior nodes whose support stays 2h away from the pole
  double weak_residual() const { return residual_; }

 private:
  MatrixFn A_;
  Vec2 pole_;
  double outer_;
  MeshPtr mesh_;
  std::unique_ptr<PointLocator> loc_;
  Mat2 A0_, A0inv_;
  double sqrt_det_ = 1.0;
  Eigen::VectorXd corr_;
  int pole_node_ = -1;
  double residual_ = 0.0;
};

std::shared_ptr<const FundamentalSolution> fundamental_solution(const MatrixFn& A, double outer_radius, double h,
                                                                 Vec2 pole = Vec2(0, 0), double lambda = 0.0,
                                                                 double Lambda = kInf);

// Closed polyline, vertices ordered by angle about the pole; last vertex connects to the first.
struct QuasiCircle {
  double s = 0.0;
  std::vector<Vec2> vertices;
  double max_level_error = 0.0;  // max |G(vertex) - ln s|
  bool simple = true;
};

QuasiCircle quasi_circle(const FundamentalSolution& fs, double s);

struct SigmaRho {
  double sigma = 0.0, rho = 0.0;
};
SigmaRho sigma_rho(const FundamentalSolution& fs, const QuasiCircle& z);
SigmaRho sigma_rho(const FundamentalSolution& fs, double s);

bool polygon_contains(const std::vector<Vec2>& poly, const Vec2& p);
// Every vertex of `inner` lies in the closed polygon `outer`.
bool polygon_within(const std::vector<Vec2>& inner, const std::vector<Vec2>& outer);
double hausdorff_to_circle(const std::vector<Vec2>& poly, Vec2 center, double radius);

struct QuasiGeometry {
  std::shared_ptr<const FundamentalSolution> fs;
  std::vector<double> s;
  std::vector<QuasiCircle> circles;
  std::vector<double> sigma, rho;
  double d = 0.0, b = 0.0, b_tilde = 0.0;

  std::size_t index_of(double s_value) const;
  bool monotone() const;
  // B_sigma within Q_s within B_rho, and Q_{s1} within Q_{s2} for s1 < s2.
  bool containment_ok() const;
};

// Sample grid is merged with {1, 6/5, 7/5}.
QuasiGeometry build_quasigeometry(std::shared_ptr<const FundamentalSolution> fs, std::vector<double> s_grid);

// Envelope constants for |z| on Z_s in the three regimes split at S1 < 1 < S2.
struct ZsEnvelope {
  double S1 = 0, S2 = 0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;
  bool ok = false;
};
ZsEnvelope fit_zs_envelope(const QuasiGeometry& qg);

// -G(z) between C1 log(1/|z|) and C2 log(1/|z|) for |z| < R1 (and the analogue beyond R2).
struct LogBounds {
  double R1 = 0, C1 = 0, C2 = 0;
  double R2 = 0, C3 = 0, C4 = 0;
  bool ok = false;
};
LogBounds fit_log_bounds(const FundamentalSolution& fs, int rays = 32);

// G strictly increasing along `rays` rays from the pole, sampled between r_min and r_max.
bool monotone_along_rays(const FundamentalSolution& fs, int rays, double r_min, double r_max);

void write_quasi_circles(const QuasiGeometry& qg, std::ostream& os);  // "s,x,y"
void write_sigma_rho(const QuasiGeometry& qg, std::ostream& os);      // "s,sigma,rho"

}  // namespace llab
