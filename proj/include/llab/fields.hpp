#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "llab/common.hpp"
#include "llab/mesh.hpp"

namespace llab {

struct ScalarField {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

struct VectorField {
  MeshPtr mesh;
  Eigen::VectorXd x, y;
  Vec2 at(std::size_t i) const { return Vec2(x[i], y[i]); }
};

struct ComplexField {
  MeshPtr mesh;
  Eigen::VectorXcd values;
  ScalarField re() const { return {mesh, values.real()}; }
  ScalarField im() const { return {mesh, values.imag()}; }
};

ScalarField interpolate(MeshPtr mesh, const ScalarFn& f);
ComplexField interpolate_complex(MeshPtr mesh, const ComplexFn& f);
VectorField interpolate_vector(MeshPtr mesh, const VectorFn& f);

// Piecewise-constant P1 gradient per triangle.
std::vector<Vec2> tri_gradient(const TriMesh& m, const Eigen::VectorXd& nodal);
// Area-weighted recovery of a nodal gradient.
VectorField nodal_gradient(const ScalarField& f);

// Complex derivatives from nodal gradients of the real and imaginary parts.
struct ComplexDerivs {
  Eigen::VectorXcd dz, dzbar;  // d = (dx - i dy)/2, dbar = (dx + i dy)/2
  Eigen::VectorXcd dx, dy;
};
ComplexDerivs complex_derivatives(const ComplexField& f);

void write_csv(const ScalarField& f, std::ostream& os);
void write_csv(const ComplexField& f, std::ostream& os);

}  // namespace llab
