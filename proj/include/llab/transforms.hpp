#pragma once

#include <cmath>
#include <iosfwd>
#include <vector>

#include "llab/fields.hpp"

namespace llab {

// N x N cell-centred samples on [-half_width, half_width]^2, x index major: value(i, j) at
// (x_i, y_j) = ((i - N/2 + 0.5) h, (j - N/2 + 0.5) h).
struct UniformComplexGrid {
  int N = 0;
  double h = 0;
  double half_width = 0;
  double mask_radius = 0;
  int padding = 2;  // periodic box side = padding * 2 * half_width

  Vec2 point(int i, int j) const { return {(i - N / 2 + 0.5) * h, (j - N / 2 + 0.5) * h}; }
  bool in_mask(int i, int j) const { return point(i, j).norm() < mask_radius; }
  std::size_t index(int i, int j) const { return std::size_t(i) * std::size_t(N) + std::size_t(j); }
  std::size_t size() const { return std::size_t(N) * std::size_t(N); }
  double torus_area() const { return std::pow(2.0 * half_width * padding, 2); }
};

// Box half-width = margin * mask_radius. N must be a power of two.
UniformComplexGrid make_grid(int N, double mask_radius, double margin = 1.25, int padding = 2);

struct GridField {
  UniformComplexGrid grid;
  Eigen::VectorXcd v;
  cplx operator()(int i, int j) const { return v[Eigen::Index(grid.index(i, j))]; }
  cplx& operator()(int i, int j) { return v[Eigen::Index(grid.index(i, j))]; }
};

GridField grid_zero(const UniformComplexGrid& g);
// Samples f at mask points, zero outside.
GridField sample(const UniformComplexGrid& g, const ComplexFn& f);
// P1 interpolation of a mesh field at mask points, zero outside the mask or the mesh.
GridField sample(const UniformComplexGrid& g, const ComplexField& f);

// Central differences, one-sided at the box edge.
GridField grid_dbar(const GridField& f);
GridField grid_d(const GridField& f);

// L^s norm over mask points (s = kInf for the sup), or over the whole box.
double grid_norm(const GridField& f, double s, bool mask_only = true);

// Periodic spectral Cauchy transform on the padded box. The mean of omega over the period is
// carried by mean * (z + conj z), matching the unit zero-mode of S, and the additive constant
// is fixed by direct quadrature at the sample nearest the origin.
GridField cauchy_transform(const GridField& omega);
// Beurling transform, multiplier conj(k)/k with value 1 at k = 0.
GridField beurling_transform(const GridField& omega);
// ||S omega|| / ||omega|| in L^2 of the whole period.
double beurling_isometry_ratio(const GridField& omega);
// Planar -1/pi int omega(zeta)/(zeta - z) by direct summation over cells (self cell omitted).
cplx cauchy_direct(const GridField& omega, const Vec2& z);

// Largest ||S w||_p / ||w||_p over deterministic probe fields on the grid's mask, at least 1.
double estimate_Cp(const UniformComplexGrid& g, double p);
double working_exponent(double t);

struct SimilarityOptions {
  double tol = 1e-10;
  int max_iter = 500;
  double zero_threshold = 1e-12;
};

struct SimilarityFactorization {
  GridField omega, h_rhs, q0, T_omega, g, f;
  int iterations = 0;
  double residual = 0;  // ||omega + q0 S omega - h||_2 / ||h||_2
  std::vector<double> history;
  double p = 2, Cp = 1, contraction = 0;
  double Dw_residual = 0;  // ||dbar f + q0 d f|| / ||grad f|| on the inner mask
  double product_error = 0;  // max |f g - w| / max |w|
};

// Solves omega + q0 S omega = h for dbar w + q1 d w + q2 conj(d w) = A w + B conj(w).
SimilarityFactorization solve_similarity(const GridField& w, const GridField& q1, const GridField& q2,
                                         const GridField& A, const GridField& B, double t,
                                         const SimilarityOptions& opt = {});
// Same with q0 and h given directly.
SimilarityFactorization solve_integral_equation(const GridField& w, const GridField& q0, const GridField& h,
                                                double t, const SimilarityOptions& opt = {});

struct ExpMoment {
  double log_value = 0;  // log of the average of exp(s|h|) over B_r
  double value = 0;      // exp(log_value), inf on overflow
  int samples = 0;
};
ExpMoment exp_moment(const GridField& hfield, double s, double r);

// Least-squares fit of y against the columns, with the intercept raised so every point lies below.
struct EnvelopeFit {
  std::vector<double> coef;  // intercept first
  double max_violation = 0;  // before raising the intercept
};
EnvelopeFit fit_envelope(const std::vector<std::vector<double>>& columns, const std::vector<double>& y);

// Binary layout: "LLAB", uint32 N, float64 h, then N*N (re, im) float64 pairs, little-endian.
void write_grid_binary(const GridField& f, std::ostream& os);
GridField read_grid_binary(std::istream& is, double mask_radius);
void write_grid_csv(const GridField& f, std::ostream& os);

}  // namespace llab
