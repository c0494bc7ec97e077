#include "llab/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/IterativeSolvers>

#include "llab/quadrature.hpp"

namespace llab {

namespace {

Vec2 point_of(const TriMesh& m, std::size_t t, const std::array<double, 3>& b) {
  const auto& T = m.tris[t];
  return b[0] * m.nodes[T[0]] + b[1] * m.nodes[T[1]] + b[2] * m.nodes[T[2]];
}

double min_sym_eig(const Mat2& a) {
  const double s12 = 0.5 * (a(0, 1) + a(1, 0));
  const double d = 0.5 * (a(0, 0) - a(1, 1));
  return 0.5 * (a(0, 0) + a(1, 1)) - std::sqrt(d * d + s12 * s12);
}

struct Split {
  std::vector<int> interior, boundary, pos;  // pos maps node -> index within its group
};

Split split_nodes(const TriMesh& m) {
  Split s;
  s.pos.resize(m.num_nodes());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    if (m.boundary[i]) {
      s.pos[i] = int(s.boundary.size());
      s.boundary.push_back(int(i));
    } else {
      s.pos[i] = int(s.interior.size());
      s.interior.push_back(int(i));
    }
  }
  return s;
}

void extract_blocks(const SpMat& K, const TriMesh& m, const Split& s, SpMat& KII, SpMat& KIB) {
  std::vector<Eigen::Triplet<double>> tii, tib;
  for (int col = 0; col < K.outerSize(); ++col)
    for (SpMat::InnerIterator it(K, col); it; ++it) {
      const int r = int(it.row()), c = int(it.col());
      if (m.boundary[r]) continue;
      if (m.boundary[c])
        tib.emplace_back(s.pos[r], s.pos[c], it.value());
      else
        tii.emplace_back(s.pos[r], s.pos[c], it.value());
    }
  KII.resize(Eigen::Index(s.interior.size()), Eigen::Index(s.interior.size()));
  KIB.resize(Eigen::Index(s.interior.size()), Eigen::Index(s.boundary.size()));
  KII.setFromTriplets(tii.begin(), tii.end());
  KIB.setFromTriplets(tib.begin(), tib.end());
  KII.makeCompressed();
}

}  // namespace

SparseOperator assemble_bilinear(MeshPtr mesh, const CoefficientSet& c0, bool adjoint) {
  const CoefficientSet c = adjoint ? c0.adjoint() : c0;
  const TriMesh& m = *mesh;
  const double cap = 1.0 / m.h;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.num_tris() * 9);
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    double loc[3][3] = {};
    const auto& g = m.grad[t];
    for (const auto& q : quad3()) {
      const Vec2 x = point_of(m, t, q.bary);
      const Mat2 a = c.a(x);
      if (c.has_A()) {
        const double mn = min_sym_eig(a);
        if (!(mn > 0) || mn < c0.lambda * (1.0 - 1e-9)) {
          std::ostringstream os;
          os << "assemble_bilinear: non-elliptic A sample at (" << x.x() << ", " << x.y() << "), min eigenvalue "
             << mn;
          throw PreconditionError(os.str());
        }
      }
      const Vec2 w1 = c.w1(x, cap), w2 = c.w2(x, cap);
      const double v = c.v(x, cap);
      const double wq = q.weight * m.area[t];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double val = (a * g[j]).dot(g[i]) + q.bary[j] * w1.dot(g[i]) + w2.dot(g[j]) * q.bary[i] +
                             v * q.bary[i] * q.bary[j];
          loc[i][j] += wq * val;
        }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(m.tris[t][i], m.tris[t][j], loc[i][j]);
  }
  SparseOperator op;
  op.mesh = mesh;
  op.K.resize(Eigen::Index(m.num_nodes()), Eigen::Index(m.num_nodes()));
  op.K.setFromTriplets(trip.begin(), trip.end());
  op.K.makeCompressed();
  op.has_A = c0.has_A();
  op.has_W1 = c0.has_W1();
  op.has_W2 = c0.has_W2();
  op.has_V = c0.has_V();
  op.adjoint = adjoint;
  const SpMat KT = op.K.transpose();
  const double scale = op.K.coeffs().cwiseAbs().maxCoeff();
  const SpMat diff = op.K - KT;
  op.symmetric = diff.nonZeros() == 0 || diff.coeffs().cwiseAbs().maxCoeff() <= 1e-12 * scale;
  return op;
}

Eigen::VectorXd load_vector(const TriMesh& m, const ScalarFn& f, const VectorFn& G) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  for (std::size_t t = 0; t < m.num_tris(); ++t)
    for (const auto& q : quad3()) {
      const Vec2 x = point_of(m, t, q.bary);
      const double fv = f ? f(x) : 0.0;
      const Vec2 gv = G ? G(x) : Vec2::Zero();
      const double wq = q.weight * m.area[t];
      for (int i = 0; i < 3; ++i) F[m.tris[t][i]] += wq * (fv * q.bary[i] + gv.dot(m.grad[t][i]));
    }
  return F;
}

Eigen::VectorXd load_vector_nodal(const TriMesh& m, const Eigen::VectorXd* f, const Eigen::VectorXd* Gx,
                                  const Eigen::VectorXd* Gy) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad3()) {
      double fv = 0, gx = 0, gy = 0;
      for (int k = 0; k < 3; ++k) {
        if (f) fv += q.bary[k] * (*f)[T[k]];
        if (Gx) gx += q.bary[k] * (*Gx)[T[k]];
        if (Gy) gy += q.bary[k] * (*Gy)[T[k]];
      }
      const double wq = q.weight * m.area[t];
      for (int i = 0; i < 3; ++i) F[T[i]] += wq * (fv * q.bary[i] + gx * m.grad[t][i].x() + gy * m.grad[t][i].y());
    }
  }
  return F;
}

ScalarField solve_dirichlet(const SparseOperator& op, const Eigen::VectorXd& g, const Eigen::VectorXd& rhs,
                            SolveInfo* info, double tol) {
  const TriMesh& m = *op.mesh;
  const Split s = split_nodes(m);
  SpMat KII, KIB;
  extract_blocks(op.K, m, s, KII, KIB);
  Eigen::VectorXd gB(Eigen::Index(s.boundary.size()));
  for (std::size_t k = 0; k < s.boundary.size(); ++k) gB[Eigen::Index(k)] = g[s.boundary[k]];
  Eigen::VectorXd b(Eigen::Index(s.interior.size()));
  for (std::size_t k = 0; k < s.interior.size(); ++k) b[Eigen::Index(k)] = rhs[s.interior[k]];
  b -= KIB * gB;

  SolveInfo local;
  Eigen::VectorXd uI;
  if (op.symmetric) {
    Eigen::SimplicialLDLT<SpMat> ldlt(KII);
    if (ldlt.info() != Eigen::Success) throw NumericalError("solve_dirichlet: LDLT factorization failed");
    uI = ldlt.solve(b);
    local.method = "ldlt";
  } else {
    Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>> gmres;
    gmres.preconditioner().setDroptol(1e-5);
    gmres.preconditioner().setFillfactor(20);
    gmres.set_restart(60);
    gmres.setTolerance(tol);
    gmres.setMaxIterations(2000);
    gmres.compute(KII);
    uI = gmres.solve(b);
    local.method = "gmres-ilut";
    local.iterations = int(gmres.iterations());
    // the preconditioned residual can understate the true one
    const double bn0 = b.norm();
    const double true_res = bn0 > 0 ? (KII * uI - b).norm() / bn0 : (KII * uI).norm();
    if (gmres.info() != Eigen::Success || !(true_res <= std::max(tol * 10.0, 1e-9))) {
      Eigen::SparseLU<SpMat> lu;
      lu.compute(KII);
      if (lu.info() != Eigen::Success) throw NumericalError("solve_dirichlet: GMRES stalled and LU failed");
      uI = lu.solve(b);
      local.method = "sparselu";
    }
  }
  const double bn = b.norm();
  local.residual = bn > 0 ? (KII * uI - b).norm() / bn : (KII * uI).norm();
  local.converged = local.residual <= std::max(tol * 10.0, 1e-9);
  if (!local.converged) {
    std::ostringstream os;
    os << "solve_dirichlet: linear solver did not converge, relative residual " << local.residual;
    throw NumericalError(os.str());
  }
  ScalarField u{op.mesh, Eigen::VectorXd(Eigen::Index(m.num_nodes()))};
  for (std::size_t k = 0; k < s.boundary.size(); ++k) u.values[s.boundary[k]] = gB[Eigen::Index(k)];
  for (std::size_t k = 0; k < s.interior.size(); ++k) u.values[s.interior[k]] = uI[Eigen::Index(k)];
  if (info) *info = local;
  return u;
}

struct InteriorSolver::Impl {
  Split s;
  Eigen::SparseLU<SpMat> lu;
  std::size_t n = 0;
};

InteriorSolver::InteriorSolver(const SparseOperator& op, bool transpose) : impl_(new Impl) {
  const TriMesh& m = *op.mesh;
  impl_->s = split_nodes(m);
  impl_->n = m.num_nodes();
  SpMat KII, KIB;
  extract_blocks(transpose ? SpMat(op.K.transpose()) : op.K, m, impl_->s, KII, KIB);
  impl_->lu.compute(KII);
  if (impl_->lu.info() != Eigen::Success) throw NumericalError("InteriorSolver: LU factorization failed");
}

InteriorSolver::~InteriorSolver() { delete impl_; }

Eigen::VectorXd InteriorSolver::solve(const Eigen::VectorXd& rhs) const {
  const auto& s = impl_->s;
  Eigen::VectorXd b(Eigen::Index(s.interior.size()));
  for (std::size_t k = 0; k < s.interior.size(); ++k) b[Eigen::Index(k)] = rhs[s.interior[k]];
  const Eigen::VectorXd x = impl_->lu.solve(b);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(impl_->n));
  for (std::size_t k = 0; k < s.interior.size(); ++k) out[s.interior[k]] = x[Eigen::Index(k)];
  return out;
}

namespace {

bool tri_may_touch(const TriMesh& m, std::size_t t, const Region& r) {
  if (!std::isfinite(r.r_out) && r.r_in <= 0) return true;
  const Vec2 c = m.centroid(t);
  double rad = 0;
  for (int k = 0; k < 3; ++k) rad = std::max(rad, (m.nodes[m.tris[t][k]] - c).norm());
  const double d = (c - r.center).norm();
  return d - rad < r.r_out && d + rad >= r.r_in;
}

}  // namespace

double lebesgue_norm_integrand(const TriMesh& m, const TriIntegrand& g, double s, const Region& region) {
  if (!(s >= 1.0)) throw PreconditionError("lebesgue_norm: exponent must be >= 1");
  bool any = false;
  double acc = 0.0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    if (!tri_may_touch(m, t, region)) continue;
    for (const auto& q : quad7()) {
      const Vec2 x = point_of(m, t, q.bary);
      if (!region.contains(x)) continue;
      any = true;
      const double val = std::abs(g(t, q.bary, x));
      if (s == kInf)
        acc = std::max(acc, val);
      else
        acc += q.weight * m.area[t] * std::pow(val, s);
    }
  }
  if (!any) throw DomainError("lebesgue_norm: empty region");
  return s == kInf ? acc : std::pow(acc, 1.0 / s);
}

double integral(const TriMesh& m, const TriIntegrand& g, const Region& region) {
  double acc = 0.0;
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    if (!tri_may_touch(m, t, region)) continue;
    for (const auto& q : quad7()) {
      const Vec2 x = point_of(m, t, q.bary);
      if (region.contains(x)) acc += q.weight * m.area[t] * g(t, q.bary, x);
    }
  }
  return acc;
}

double region_measure(const TriMesh& m, const Region& region) {
  return integral(m, [](std::size_t, const std::array<double, 3>&, const Vec2&) { return 1.0; }, region);
}

double lebesgue_norm(const ScalarField& f, double s, const Region& region) {
  const TriMesh& m = *f.mesh;
  return lebesgue_norm_integrand(
      m,
      [&](std::size_t t, const std::array<double, 3>& b, const Vec2&) {
        const auto& T = m.tris[t];
        return b[0] * f.values[T[0]] + b[1] * f.values[T[1]] + b[2] * f.values[T[2]];
      },
      s, region);
}

double lebesgue_norm(const ComplexField& f, double s, const Region& region) {
  const TriMesh& m = *f.mesh;
  return lebesgue_norm_integrand(
      m,
      [&](std::size_t t, const std::array<double, 3>& b, const Vec2&) {
        const auto& T = m.tris[t];
        return std::abs(b[0] * f.values[T[0]] + b[1] * f.values[T[1]] + b[2] * f.values[T[2]]);
      },
      s, region);
}

double lebesgue_norm(const TriMesh& m, const ScalarFn& f, double s, const Region& region) {
  return lebesgue_norm_integrand(
      m, [&](std::size_t, const std::array<double, 3>&, const Vec2& x) { return f(x); }, s, region);
}

double lebesgue_norm(const TriMesh& m, const VectorFn& f, double s, const Region& region, double cap) {
  return lebesgue_norm_integrand(
      m, [&](std::size_t, const std::array<double, 3>&, const Vec2& x) { return clamp_vector(f(x), cap).norm(); },
      s, region);
}

double gradient_norm(const ScalarField& f, double s, const Region& region) {
  const auto g = tri_gradient(*f.mesh, f.values);
  return lebesgue_norm_integrand(
      *f.mesh, [&](std::size_t t, const std::array<double, 3>&, const Vec2&) { return g[t].norm(); }, s, region);
}

double tau0(double q1, double q2, double p) {
  if (p > 1.0 && p < 2.0) return std::min({q1, q2, 2.0 * p / (2.0 - p)});
  return std::min(q1, q2);
}

CaccioppoliResult caccioppoli_check(const ScalarField& u, const CoefficientSet& c, double r, double alpha,
                                    double t) {
  const TriMesh& m = *u.mesh;
  CaccioppoliResult res;
  res.tau0 = tau0(c.q1, c.q2, c.p);
  if (!(alpha > 1.0)) throw PreconditionError("caccioppoli_check: alpha must exceed 1");
  if (!(t >= 2.0) || t > res.tau0) throw PreconditionError("caccioppoli_check: t must lie in [2, tau0]");
  if (alpha * r > m.radius * (1.0 + 1e-12)) throw PreconditionError("caccioppoli_check: alpha r exceeds domain");
  const Region big = Region::disk(alpha * r);
  const double cap = 1.0 / m.h;
  const double K1 = c.W1 ? lebesgue_norm(m, VectorFn([&](const Vec2& x) { return c.w1(x, cap); }), c.q1, big) : 0.0;
  const double K2 = c.W2 ? lebesgue_norm(m, VectorFn([&](const Vec2& x) { return c.w2(x, cap); }), c.q2, big) : 0.0;
  const double M = c.V ? lebesgue_norm(m, ScalarFn([&](const Vec2& x) { return c.v(x, cap); }), c.p, big) : 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    if (big.contains(m.nodes[i])) sup = std::max(sup, std::abs(u.values[i]));
  res.lhs = gradient_norm(u, t, Region::disk(r));
  const double bracket = 1.0 + std::pow(r, 2.0 - 4.0 / c.q1) * K1 * K1 + std::pow(r, 2.0 - 4.0 / c.q2) * K2 * K2 +
                         std::pow(r, 2.0 - 2.0 / c.p) * M;
  res.rhs = std::pow(r, 2.0 / t - 1.0) * bracket * sup;
  res.ratio = res.rhs > 0 ? res.lhs / res.rhs : kInf;
  return res;
}

SpMat mass_matrix(const TriMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.num_tris() * 9);
  for (std::size_t t = 0; t < m.num_tris(); ++t)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(m.tris[t][i], m.tris[t][j], m.area[t] / 12.0 * (i == j ? 2.0 : 1.0));
  SpMat M(Eigen::Index(m.num_nodes()), Eigen::Index(m.num_nodes()));
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

CoercivityResult coercivity_margin(const SparseOperator& op) {
  const TriMesh& m = *op.mesh;
  const Split s = split_nodes(m);
  const SpMat S = 0.5 * (op.K + SpMat(op.K.transpose()));
  CoefficientSet lap;
  const SpMat N = assemble_bilinear(op.mesh, lap).K + mass_matrix(m);
  SpMat SII, SIB, NII, NIB;
  extract_blocks(S, m, s, SII, SIB);
  extract_blocks(N, m, s, NII, NIB);
  CoercivityResult r;
  Eigen::SimplicialLDLT<SpMat> ldlt(SII);
  if (ldlt.info() != Eigen::Success) return r;
  const Eigen::VectorXd D = ldlt.vectorD();
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (!(D[i] > 0)) ++r.negative_pivots;
  if (r.negative_pivots > 0) {
    r.gamma = -1.0;
    return r;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(SII.rows());
  double gamma = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd y = ldlt.solve(NII * x);
    y /= std::sqrt(y.dot(NII * y));
    const double g = y.dot(SII * y);
    x = y;
    if (it > 0 && std::abs(g - gamma) <= 1e-10 * std::abs(g)) {
      gamma = g;
      break;
    }
    gamma = g;
  }
  r.gamma = gamma;
  r.coercive = gamma > 0;
  return r;
}

}  // namespace llab
