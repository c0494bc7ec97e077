#include "llab/mesh.hpp"

#include <algorithm>
#include <boost/polygon/voronoi.hpp>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

namespace llab {

Vec2 TriMesh::centroid(std::size_t t) const {
  const auto& T = tris[t];
  return (nodes[T[0]] + nodes[T[1]] + nodes[T[2]]) / 3.0;
}

void TriMesh::finalize() {
  area.resize(tris.size());
  grad.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Vec2& a = nodes[tris[t][0]];
    const Vec2& b = nodes[tris[t][1]];
    const Vec2& c = nodes[tris[t][2]];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    area[t] = 0.5 * det;
    const std::array<const Vec2*, 3> p{&a, &b, &c};
    for (int i = 0; i < 3; ++i) {
      const Vec2& pj = *p[(i + 1) % 3];
      const Vec2& pk = *p[(i + 2) % 3];
      grad[t][i] = Vec2(pj.y() - pk.y(), pk.x() - pj.x()) / det;
    }
  }
}

namespace {

void add_ring(std::vector<Vec2>& pts, const Vec2& c, double r, int n, double phase) {
  for (int k = 0; k < n; ++k) {
    const double th = phase + 2.0 * kPi * k / n;
    pts.emplace_back(c.x() + r * std::cos(th), c.y() + r * std::sin(th));
  }
}

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts, double extent) {
  namespace bp = boost::polygon;
  const double scale = double(1 << 28) / extent;
  std::vector<bp::point_data<int>> ip;
  ip.reserve(pts.size());
  for (const auto& p : pts)
    ip.emplace_back(int(std::lround(p.x() * scale)), int(std::lround(p.y() * scale)));
  bp::voronoi_diagram<double> vd;
  bp::construct_voronoi(ip.begin(), ip.end(), &vd);

  std::vector<std::array<int, 3>> tris;
  std::vector<int> cyc;
  for (const auto& v : vd.vertices()) {
    cyc.clear();
    const auto* e = v.incident_edge();
    do {
      cyc.push_back(int(e->cell()->source_index()));
      e = e->rot_next();
    } while (e != v.incident_edge());
    for (std::size_t k = 1; k + 1 < cyc.size(); ++k) {
      std::array<int, 3> t{cyc[0], cyc[k], cyc[k + 1]};
      const Vec2& a = pts[t[0]];
      const Vec2& b = pts[t[1]];
      const Vec2& c = pts[t[2]];
      const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
      if (det < 0) std::swap(t[1], t[2]);
      tris.push_back(t);
    }
  }
  return tris;
}

}  // namespace

MeshPtr triangulate_disk(double radius, double h, const std::optional<RefinementSpec>& refine) {
  if (!(radius > 0) || !(h > 0) || !(h < radius))
    throw PreconditionError("triangulate_disk: need radius > 0 and 0 < h < radius");
  const double est_nodes = 2.0 * kPi * radius * radius / (std::sqrt(3.0) * h * h);
  if (est_nodes > 4.0e6) throw ResourceError("triangulate_disk: target_h too small for memory budget");

  std::vector<Vec2> pts;
  const int nb = std::max(8, int(std::ceil(2.0 * kPi * radius / h)));
  add_ring(pts, Vec2(0, 0), radius, nb, 0.0);
  const std::size_t n_boundary = pts.size();

  const double dr = 0.5 * std::sqrt(3.0) * h;
  double r_last = radius;
  for (int j = 1; j <= 2; ++j) {
    const double r = radius - j * dr;
    if (r < 2.0 * h) break;
    const int n = std::max(6, int(std::lround(2.0 * kPi * r / h)));
    add_ring(pts, Vec2(0, 0), r, n, j * kPi / n);
    r_last = r;
  }

  const double r_fill = r_last - 0.6 * h;
  std::vector<Vec2> fill;
  const int kmax = int(std::ceil(r_fill / dr)) + 1;
  const int imax = int(std::ceil(r_fill / h)) + 1;
  for (int k = -kmax; k <= kmax; ++k) {
    const double y = k * dr;
    const double off = (std::abs(k) % 2) ? 0.5 * h : 0.0;
    for (int i = -imax; i <= imax; ++i) {
      const Vec2 p(i * h + off, y);
      if (p.norm() < r_fill) fill.push_back(p);
    }
  }
  if (fill.empty()) fill.emplace_back(0.0, 0.0);

  if (refine) {
    const Vec2 c = refine->center;
    if (c.norm() + 2.2 * h < r_last - 0.6 * h) {
      std::erase_if(fill, [&](const Vec2& p) { return (p - c).norm() < 2.2 * h; });
      fill.push_back(c);
      double r = h;
      for (int k = 0; k < refine->rings; ++k) {
        add_ring(fill, c, r, 8, (k % 2) * kPi / 8);
        r /= refine->ratio;
      }
      add_ring(fill, c, 1.65 * h, 11, 0.1);
    }
  }
  pts.insert(pts.end(), fill.begin(), fill.end());

  auto m = std::make_shared<TriMesh>();
  m->radius = radius;
  m->h = h;
  m->nodes = std::move(pts);
  m->boundary.assign(m->nodes.size(), 0);
  for (std::size_t i = 0; i < n_boundary; ++i) m->boundary[i] = 1;
  m->tris = delaunay(m->nodes, radius * 1.01);
  m->finalize();
  return m;
}

MeshReport check_mesh(const TriMesh& m) {
  MeshReport r;
  r.min_area = kInf;
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    r.min_area = std::min(r.min_area, m.area[t]);
    if (!(m.area[t] > 0)) r.positive_areas = false;
  }
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    if (m.boundary[i] && std::abs(m.nodes[i].norm() - m.radius) > 1e-10 * m.h) r.boundary_on_circle = false;

  std::map<std::pair<int, int>, int> edges;
  for (const auto& T : m.tris)
    for (int i = 0; i < 3; ++i) {
      int a = T[i], b = T[(i + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
      r.max_edge = std::max(r.max_edge, (m.nodes[a] - m.nodes[b]).norm());
    }
  for (const auto& [e, cnt] : edges) {
    if (cnt > 2) r.manifold_edges = false;
    if (cnt == 1 && !(m.boundary[e.first] && m.boundary[e.second])) r.manifold_edges = false;
  }

  std::vector<std::vector<int>> adj(m.nodes.size());
  for (const auto& [e, cnt] : edges) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  std::vector<char> seen(m.nodes.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const int a = q.front();
    q.pop();
    for (int b : adj[a])
      if (!seen[b]) {
        seen[b] = 1;
        ++count;
        q.push(b);
      }
  }
  r.connected = count == m.nodes.size();
  return r;
}

void write_mesh(const TriMesh& m, std::ostream& os) {
  os.precision(17);
  os << "nodes " << m.nodes.size() << "\n";
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    os << m.nodes[i].x() << " " << m.nodes[i].y() << " " << int(m.boundary[i]) << "\n";
  os << "triangles " << m.tris.size() << "\n";
  for (const auto& T : m.tris) os << T[0] << " " << T[1] << " " << T[2] << "\n";
}

MeshPtr read_mesh(std::istream& is, double radius, double h) {
  auto m = std::make_shared<TriMesh>();
  m->radius = radius;
  m->h = h;
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "nodes") throw DomainError("read_mesh: expected 'nodes N'");
  m->nodes.resize(n);
  m->boundary.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int f;
    is >> m->nodes[i].x() >> m->nodes[i].y() >> f;
    m->boundary[i] = char(f);
  }
  std::size_t nt = 0;
  if (!(is >> tag >> nt) || tag != "triangles") throw DomainError("read_mesh: expected 'triangles M'");
  m->tris.resize(nt);
  for (auto& T : m->tris) is >> T[0] >> T[1] >> T[2];
  if (!is) throw DomainError("read_mesh: truncated input");
  m->finalize();
  return m;
}

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const auto& m = *mesh_;
  const double R = m.radius * 1.001;
  x0_ = -R;
  y0_ = -R;
  cell_ = std::max(2.0 * m.h, 2.0 * R / 512.0);
  nx_ = ny_ = int(std::ceil(2.0 * R / cell_)) + 1;
  buckets_.assign(std::size_t(nx_) * ny_, {});
  for (std::size_t t = 0; t < m.tris.size(); ++t) {
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (int i = 0; i < 3; ++i) {
      const Vec2& p = m.nodes[m.tris[t][i]];
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const int i0 = std::clamp(int((xmin - x0_) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(int((xmax - x0_) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(int((ymin - y0_) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(int((ymax - y0_) / cell_), 0, ny_ - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets_[std::size_t(i) * ny_ + j].push_back(int(t));
  }
}

int PointLocator::locate(const Vec2& p, std::array<double, 3>& bary) const {
  const int i = int((p.x() - x0_) / cell_);
  const int j = int((p.y() - y0_) / cell_);
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  const auto& m = *mesh_;
  int best = -1;
  double best_min = -kInf;
  std::array<double, 3> bb{};
  for (int t : buckets_[std::size_t(i) * ny_ + j]) {
    const auto& T = m.tris[t];
    const Vec2& a = m.nodes[T[0]];
    for (int k = 0; k < 3; ++k) bb[k] = 0;
    // barycentric via hat gradients: phi_k(p) = phi_k(a) + grad_k . (p - a)
    const Vec2 d = p - a;
    bb[0] = 1.0 + m.grad[t][0].dot(d);
    bb[1] = m.grad[t][1].dot(d);
    bb[2] = m.grad[t][2].dot(d);
    const double mn = std::min({bb[0], bb[1], bb[2]});
    if (mn > best_min) {
      best_min = mn;
      best = t;
      bary = bb;
    }
    if (mn >= 0) return t;
  }
  if (best >= 0 && best_min > -1e-9) return best;
  return -1;
}

double PointLocator::interpolate(const Eigen::VectorXd& nodal, const Vec2& p, double outside) const {
  std::array<double, 3> b{};
  const int t = locate(p, b);
  if (t < 0) return outside;
  const auto& T = mesh_->tris[t];
  return b[0] * nodal[T[0]] + b[1] * nodal[T[1]] + b[2] * nodal[T[2]];
}

}  // namespace llab
