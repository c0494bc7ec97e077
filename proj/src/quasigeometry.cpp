#include "llab/quasigeometry.hpp"

#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/ring.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "llab/quadrature.hpp"

namespace llab {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BRing = bg::model::ring<BPoint, false, true>;  // counterclockwise, closed

namespace {

BRing to_ring(const std::vector<Vec2>& poly) {
  BRing r;
  for (const auto& p : poly) r.push_back(BPoint(p.x(), p.y()));
  if (!poly.empty()) r.push_back(BPoint(poly.front().x(), poly.front().y()));
  bg::correct(r);
  return r;
}

double seg_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

}  // namespace

FundamentalSolution::FundamentalSolution(MatrixFn A, Vec2 pole, double outer_radius, double h)
    : A_(std::move(A)), pole_(pole), outer_(outer_radius) {
  if (pole_.norm() >= 0.5 * outer_radius) throw PreconditionError("fundamental_solution: pole too close to the outer circle");
  mesh_ = triangulate_disk(outer_radius, h, RefinementSpec{pole});
  loc_ = std::make_unique<PointLocator>(mesh_);
  const TriMesh& m = *mesh_;
  double best = kInf;
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const double d = (m.nodes[i] - pole_).norm();
    if (d < best) best = d, pole_node_ = int(i);
  }
  const Mat2 a0 = A_ ? A_(pole_) : Mat2::Identity();
  A0_ = 0.5 * (a0 + a0.transpose());
  A0inv_ = A0_.inverse();
  sqrt_det_ = std::sqrt(A0_.determinant());

  CoefficientSet c;
  c.A = A_;
  c.lambda = 0.0;
  const auto op = assemble_bilinear(mesh_, c);

  // rhs: -int (A - A0) grad G0 . grad phi_i
  Eigen::VectorXd F = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));
  Eigen::VectorXd full = Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes()));  // int A grad G0 . grad phi_i
  for (std::size_t t = 0; t < m.num_tris(); ++t) {
    const auto& T = m.tris[t];
    for (const auto& q : quad7()) {
      const Vec2 x = q.bary[0] * m.nodes[T[0]] + q.bary[1] * m.nodes[T[1]] + q.bary[2] * m.nodes[T[2]];
      const Mat2 a = A_ ? A_(x) : Mat2::Identity();
      const Vec2 g0 = frozen_gradient(x);
      const double wq = q.weight * m.area[t];
      for (int i = 0; i < 3; ++i) {
        F[T[i]] -= wq * ((a - A0_) * g0).dot(m.grad[t][i]);
        full[T[i]] += wq * (a * g0).dot(m.grad[t][i]);
      }
    }
  }
  corr_ = solve_dirichlet(op, Eigen::VectorXd::Zero(Eigen::Index(m.num_nodes())), F).values;

  // nodes whose support touches the 2h-neighbourhood of the pole are excluded
  std::vector<char> near(m.num_nodes(), 0);
  for (const auto& T : m.tris) {
    bool touch = false;
    for (int k = 0; k < 3; ++k) touch = touch || (m.nodes[T[k]] - pole_).norm() < 2 * h;
    if (touch)
      for (int k = 0; k < 3; ++k) near[T[k]] = 1;
  }
  const Eigen::VectorXd r = full + op.K * corr_;
  residual_ = 0.0;
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    if (!m.boundary[i] && !near[i]) residual_ = std::max(residual_, std::abs(r[Eigen::Index(i)]));
}

double FundamentalSolution::frozen(const Vec2& z) const {
  const Vec2 d = z - pole_;
  return 0.5 * std::log(d.dot(A0inv_ * d)) / sqrt_det_;
}

Vec2 FundamentalSolution::frozen_gradient(const Vec2& z) const {
  const Vec2 d = z - pole_;
  const Vec2 ad = A0inv_ * d;
  return ad / (d.dot(ad) * sqrt_det_);
}

double FundamentalSolution::operator()(const Vec2& z) const {
  if ((z - pole_).squaredNorm() == 0.0) return -kInf;
  std::array<double, 3> b;
  if (loc_->locate(z, b) < 0) return std::numeric_limits<double>::quiet_NaN();
  return frozen(z) + loc_->interpolate(corr_, z);
}

Eigen::VectorXd FundamentalSolution::nodal_values() const {
  Eigen::VectorXd g(corr_.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    g[i] = i == pole_node_ ? -kInf : frozen(mesh_->nodes[std::size_t(i)]) + corr_[i];
  return g;
}

std::shared_ptr<const FundamentalSolution> fundamental_solution(const MatrixFn& A, double outer_radius, double h,
                                                                 Vec2 pole, double lambda, double Lambda) {
  if (!(outer_radius > 0) || !(h > 0) || h >= outer_radius)
    throw PreconditionError("fundamental_solution: bad radius or mesh size");
  if (A) {
    // ellipticity on a probe grid; assembly re-checks at every quadrature node
    const int n = 41;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec2 x(outer_radius * (2.0 * i / (n - 1) - 1), outer_radius * (2.0 * j / (n - 1) - 1));
        if (x.norm() > outer_radius) continue;
        const Mat2 a = A(x);
        const Mat2 s = 0.5 * (a + a.transpose());
        const double mn = s.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
        if (!(mn > 0) || mn < lambda * (1 - 1e-9) || a.cwiseAbs().maxCoeff() > Lambda * (1 + 1e-9)) {
          std::ostringstream os;
          os << "fundamental_solution: A not elliptic/bounded at (" << x.x() << ", " << x.y() << ")";
          throw PreconditionError(os.str());
        }
      }
  }
  return std::make_shared<const FundamentalSolution>(A, pole, outer_radius, h);
}

QuasiCircle quasi_circle(const FundamentalSolution& fs, double s) {
  if (!(s > 0)) throw DomainError("quasi_circle: s must be positive");
  const TriMesh& m = *fs.mesh();
  const double L = std::log(s);
  const Eigen::VectorXd g = fs.nodal_values();
  const Eigen::VectorXd& c = fs.correction();

  double bmin = kInf, inner = -kInf;
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    if (m.boundary[i]) bmin = std::min(bmin, g[Eigen::Index(i)]);
  for (const auto& T : m.tris)
    for (int k = 0; k < 3; ++k)
      if (T[k] == fs.pole_node())
        for (int j = 0; j < 3; ++j)
          if (j != k) inner = std::max(inner, g[T[j]]);
  if (!(L < bmin) || !(L > inner)) {
    std::ostringstream os;
    os << "quasi_circle: ln s = " << L << " outside the resolved range (" << inner << ", " << bmin << ")";
    throw DomainError(os.str());
  }

  std::vector<std::pair<int, int>> edges;
  for (const auto& T : m.tris)
    for (int k = 0; k < 3; ++k) {
      const int a = T[k], b = T[(k + 1) % 3];
      if ((g[a] >= L) != (g[b] >= L)) edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  QuasiCircle z;
  z.s = s;
  for (const auto& [a, b] : edges) {
    const Vec2 pa = m.nodes[a], pb = m.nodes[b];
    auto f = [&](double t) {
      const Vec2 x = pa + t * (pb - pa);
      const double g0 = (x - fs.pole()).squaredNorm() == 0 ? -kInf : fs.frozen(x);
      return g0 + (1 - t) * c[a] + t * c[b] - L;
    };
    double lo = 0, hi = 1;
    const bool lo_below = f(0) < 0;
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((f(mid) < 0) == lo_below ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    z.vertices.push_back(pa + t * (pb - pa));
    z.max_level_error = std::max(z.max_level_error, std::abs(f(t)));
  }
  const Vec2 p = fs.pole();
  std::sort(z.vertices.begin(), z.vertices.end(), [&](const Vec2& u, const Vec2& v) {
    return std::atan2(u.y() - p.y(), u.x() - p.x()) < std::atan2(v.y() - p.y(), v.x() - p.x());
  });
  z.simple = z.vertices.size() >= 3 && bg::is_simple(to_ring(z.vertices));
  return z;
}

SigmaRho sigma_rho(const FundamentalSolution& fs, const QuasiCircle& z) {
  SigmaRho r{kInf, 0.0};
  const std::size_t n = z.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    r.rho = std::max(r.rho, (z.vertices[i] - fs.pole()).norm());
    r.sigma = std::min(r.sigma, seg_distance(fs.pole(), z.vertices[i], z.vertices[(i + 1) % n]));
  }
  return r;
}

SigmaRho sigma_rho(const FundamentalSolution& fs, double s) { return sigma_rho(fs, quasi_circle(fs, s)); }

bool polygon_contains(const std::vector<Vec2>& poly, const Vec2& p) {
  return bg::covered_by(BPoint(p.x(), p.y()), to_ring(poly));
}

bool polygon_within(const std::vector<Vec2>& inner, const std::vector<Vec2>& outer) {
  return bg::covered_by(to_ring(inner), to_ring(outer));
}

double hausdorff_to_circle(const std::vector<Vec2>& poly, Vec2 center, double radius) {
  // vertex deviation plus the chord sagitta of the longest edge
  double dev = 0, sag = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    dev = std::max(dev, std::abs((poly[i] - center).norm() - radius));
    const Vec2 mid = 0.5 * (poly[i] + poly[(i + 1) % poly.size()]);
    sag = std::max(sag, std::abs((mid - center).norm() - radius));
  }
  return std::max(dev, sag);
}

std::size_t QuasiGeometry::index_of(double v) const {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(s[i] - v) < 1e-12) return i;
  throw DomainError("QuasiGeometry: radius not sampled");
}

bool QuasiGeometry::monotone() const {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (sigma[i] < sigma[i - 1] || rho[i] < rho[i - 1]) return false;
  return true;
}

bool QuasiGeometry::containment_ok() const {
  const Vec2 p = fs->pole();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& poly = circles[i].vertices;
    for (int k = 0; k < 720; ++k) {
      const double th = 2 * kPi * k / 720;
      if (!polygon_contains(poly, p + sigma[i] * (1 - 1e-9) * Vec2(std::cos(th), std::sin(th)))) return false;
    }
    for (const auto& v : poly)
      if ((v - p).norm() > rho[i] * (1 + 1e-12)) return false;
    if (i > 0 && !polygon_within(circles[i - 1].vertices, poly)) return false;
  }
  return true;
}

QuasiGeometry build_quasigeometry(std::shared_ptr<const FundamentalSolution> fs, std::vector<double> grid) {
  grid.insert(grid.end(), {1.0, 1.2, 1.4});
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             grid.end());
  QuasiGeometry qg;
  qg.fs = fs;
  qg.s = grid;
  for (double s : grid) {
    qg.circles.push_back(quasi_circle(*fs, s));
    const auto sr = sigma_rho(*fs, qg.circles.back());
    qg.sigma.push_back(sr.sigma);
    qg.rho.push_back(sr.rho);
  }
  qg.d = qg.rho[qg.index_of(1.4)] + 0.4;
  qg.b = qg.sigma[qg.index_of(1.0)];
  qg.b_tilde = qg.sigma[qg.index_of(1.2)];
  return qg;
}

ZsEnvelope fit_zs_envelope(const QuasiGeometry& qg) {
  ZsEnvelope e;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  e.S1 = nan, e.S2 = nan;
  for (std::size_t i = 0; i < qg.s.size(); ++i) {
    if (qg.s[i] < 1 && qg.rho[i] < 1) e.S1 = qg.s[i];
    if (qg.s[i] > 1 && qg.sigma[i] > 1 && std::isnan(e.S2)) e.S2 = qg.s[i];
  }
  e.c1 = -kInf, e.c2 = kInf, e.c3 = kInf, e.c4 = -kInf;
  bool low = false, high = false;
  for (std::size_t i = 0; i < qg.s.size(); ++i) {
    const double ls = std::log(qg.s[i]);
    if (!std::isnan(e.S1) && qg.s[i] <= e.S1) {
      e.c1 = std::max(e.c1, std::log(qg.sigma[i]) / ls);
      e.c2 = std::min(e.c2, std::log(qg.rho[i]) / ls);
      low = true;
    }
    if (!std::isnan(e.S2) && qg.s[i] >= e.S2) {
      e.c3 = std::min(e.c3, std::log(qg.sigma[i]) / ls);
      e.c4 = std::max(e.c4, std::log(qg.rho[i]) / ls);
      high = true;
    }
  }
  if (!high) e.c3 = e.c4 = nan;
  e.c5 = kInf, e.c6 = 0;
  const double cup = high ? e.c4 : 1.0;
  for (std::size_t i = 0; i < qg.s.size(); ++i) {
    const bool mid = (std::isnan(e.S1) || qg.s[i] > e.S1) && (std::isnan(e.S2) || qg.s[i] < e.S2);
    if (!mid) continue;
    e.c5 = std::min(e.c5, qg.sigma[i] / std::pow(qg.s[i], e.c1));
    e.c6 = std::max(e.c6, qg.rho[i] / std::pow(qg.s[i], cup));
  }
  e.ok = low && e.c2 > 0 && e.c1 >= e.c2 && (!high || (e.c3 > 0 && e.c4 >= e.c3));
  return e;
}

LogBounds fit_log_bounds(const FundamentalSolution& fs, int rays) {
  const double rmax = 0.95 * (fs.outer_radius() - fs.pole().norm());
  const int nr = 400;
  std::vector<double> radii(nr);
  for (int k = 0; k < nr; ++k) radii[k] = 1e-3 * std::pow(rmax / 1e-3, double(k) / (nr - 1));
  // zero crossing of G along each ray
  double zmin = kInf, zmax = 0;
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(rays), std::vector<double>(std::size_t(nr)));
  for (int j = 0; j < rays; ++j) {
    const Vec2 dir(std::cos(2 * kPi * j / rays), std::sin(2 * kPi * j / rays));
    double cross = kInf;
    for (int k = 0; k < nr; ++k) {
      vals[j][k] = fs(fs.pole() + radii[k] * dir);
      if (k > 0 && vals[j][k - 1] < 0 && vals[j][k] >= 0) cross = radii[k];
    }
    zmin = std::min(zmin, cross);
    zmax = std::max(zmax, cross);
  }
  LogBounds b;
  b.R1 = std::min(0.5, 0.5 * zmin);
  b.R2 = std::max(2.0, 2.0 * zmax);
  b.C1 = kInf, b.C2 = 0, b.C3 = kInf, b.C4 = 0;
  bool far = false;
  for (int j = 0; j < rays; ++j)
    for (int k = 0; k < nr; ++k) {
      const double r = radii[k];
      if (r < b.R1) {
        const double ratio = -vals[j][k] / std::log(1 / r);
        b.C1 = std::min(b.C1, ratio);
        b.C2 = std::max(b.C2, ratio);
      } else if (r > b.R2) {
        const double ratio = vals[j][k] / std::log(r);
        b.C3 = std::min(b.C3, ratio);
        b.C4 = std::max(b.C4, ratio);
        far = true;
      }
    }
  if (!far) b.C3 = b.C4 = std::numeric_limits<double>::quiet_NaN();
  b.ok = std::isfinite(zmin) && b.C1 > 0 && b.C2 < kInf && (!far || b.C3 > 0);
  return b;
}

bool monotone_along_rays(const FundamentalSolution& fs, int rays, double r_min, double r_max) {
  for (int j = 0; j < rays; ++j) {
    const Vec2 dir(std::cos(2 * kPi * j / rays), std::sin(2 * kPi * j / rays));
    double prev = -kInf;
    for (int k = 0; k <= 200; ++k) {
      const double g = fs(fs.pole() + (r_min + (r_max - r_min) * k / 200.0) * dir);
      if (!(g > prev)) return false;
      prev = g;
    }
  }
  return true;
}

void write_quasi_circles(const QuasiGeometry& qg, std::ostream& os) {
  os << "s,x,y\n";
  os.precision(12);
  for (const auto& z : qg.circles)
    for (const auto& v : z.vertices) os << z.s << ',' << v.x() << ',' << v.y() << '\n';
}

void write_sigma_rho(const QuasiGeometry& qg, std::ostream& os) {
  os << "s,sigma,rho\n";
  os.precision(12);
  for (std::size_t i = 0; i < qg.s.size(); ++i) os << qg.s[i] << ',' << qg.sigma[i] << ',' << qg.rho[i] << '\n';
}

}  // namespace llab
