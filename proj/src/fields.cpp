#include "llab/fields.hpp"

#include <ostream>

namespace llab {

ScalarField interpolate(MeshPtr mesh, const ScalarFn& f) {
  ScalarField s{mesh, Eigen::VectorXd(mesh->num_nodes())};
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) s.values[i] = f(mesh->nodes[i]);
  return s;
}

ComplexField interpolate_complex(MeshPtr mesh, const ComplexFn& f) {
  ComplexField s{mesh, Eigen::VectorXcd(mesh->num_nodes())};
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) s.values[i] = f(mesh->nodes[i]);
  return s;
}

VectorField interpolate_vector(MeshPtr mesh, const VectorFn& f) {
  VectorField s{mesh, Eigen::VectorXd(mesh->num_nodes()), Eigen::VectorXd(mesh->num_nodes())};
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    const Vec2 w = f(mesh->nodes[i]);
    s.x[i] = w.x();
    s.y[i] = w.y();
  }
  return s;
}

std::vector<Vec2> tri_gradient(const TriMesh& m, const Eigen::VectorXd& nodal) {
  std::vector<Vec2> g(m.num_tris());
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    g[t] = nodal[T[0]] * m.grad[t][0] + nodal[T[1]] * m.grad[t][1] + nodal[T[2]] * m.grad[t][2];
  }
  return g;
}

VectorField nodal_gradient(const ScalarField& f) {
  const auto& m = *f.mesh;
  const auto g = tri_gradient(m, f.values);
  VectorField out{f.mesh, Eigen::VectorXd::Zero(m.num_nodes()), Eigen::VectorXd::Zero(m.num_nodes())};
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(m.num_nodes());
  for (std::size_t t = 0; t < m.num_tris(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int i = m.tris[t][k];
      out.x[i] += m.area[t] * g[t].x();
      out.y[i] += m.area[t] * g[t].y();
      wsum[i] += m.area[t];
    }
  out.x = out.x.cwiseQuotient(wsum);
  out.y = out.y.cwiseQuotient(wsum);
  return out;
}

ComplexDerivs complex_derivatives(const ComplexField& f) {
  const auto gr = nodal_gradient(f.re());
  const auto gi = nodal_gradient(f.im());
  ComplexDerivs d;
  const cplx I(0, 1);
  d.dx = gr.x.cast<cplx>() + I * gi.x.cast<cplx>();
  d.dy = gr.y.cast<cplx>() + I * gi.y.cast<cplx>();
  d.dz = 0.5 * (d.dx - I * d.dy);
  d.dzbar = 0.5 * (d.dx + I * d.dy);
  return d;
}

void write_csv(const ScalarField& f, std::ostream& os) {
  os.precision(17);
  os << "node_index,value\n";
  for (Eigen::Index i = 0; i < f.values.size(); ++i) os << i << "," << f.values[i] << "\n";
}

void write_csv(const ComplexField& f, std::ostream& os) {
  os.precision(17);
  os << "node,re,im\n";
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    os << i << "," << f.values[i].real() << "," << f.values[i].imag() << "\n";
}

}  // namespace llab
