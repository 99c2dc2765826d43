#include "sqabs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sqabs/errors.hpp"
#include "sqabs/parallel.hpp"

namespace sqabs {

void TriangleMesh::validate() const {
  if (vertices.empty() || triangles.empty()) {
    throw validation_error("mesh is empty");
  }
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (const int v : t) {
      if (v < 0 || v >= n) throw validation_error("triangle index out of range");
    }
  }
}

Eigen::Vector3d TriangleMesh::min_corner() const {
  Eigen::Vector3d lo = vertices.front();
  for (const auto& v : vertices) lo = lo.cwiseMin(v);
  return lo;
}

Eigen::Vector3d TriangleMesh::max_corner() const {
  Eigen::Vector3d hi = vertices.front();
  for (const auto& v : vertices) hi = hi.cwiseMax(v);
  return hi;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw format_error(path.string() + ":" + std::to_string(lineno) +
                           ": bad vertex record");
      }
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const std::size_t slash = tok.find('/');
        const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        int v = 0;
        try {
          v = std::stoi(head);
        } catch (const std::exception&) {
          throw format_error(path.string() + ":" + std::to_string(lineno) +
                             ": bad face index '" + tok + "'");
        }
        if (v < 1) {
          throw format_error(path.string() + ":" + std::to_string(lineno) +
                             ": only positive face indices are supported");
        }
        idx.push_back(v - 1);
      }
      if (idx.size() != 3) {
        throw format_error(path.string() + ":" + std::to_string(lineno) +
                           ": faces must be triangles");
      }
      mesh.triangles.push_back({idx[0], idx[1], idx[2]});
    }
  }
  mesh.validate();
  return mesh;
}

double point_triangle_distance(const Eigen::Vector3d& p,
                               const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c) {
  // Ericson, Real-Time Collision Detection 5.1.5.
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

namespace {

bool point_in_tri_2d(double pu, double pv, double au, double av, double bu,
                     double bv, double cu, double cv) {
  const double s1 = (bu - au) * (pv - av) - (bv - av) * (pu - au);
  const double s2 = (cu - bu) * (pv - bv) - (cv - bv) * (pu - bu);
  const double s3 = (au - cu) * (pv - cv) - (av - cv) * (pu - cu);
  return (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) ||
         (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0);
}

// Crossing coordinates of the axis-parallel line (u, v) with the mesh,
// where `axis` is the free coordinate and (ua, va) the other two axes.
void line_crossings(const TriangleMesh& mesh, int axis, int ua, int va,
                    double u, double v, std::vector<double>& out) {
  out.clear();
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    const Eigen::Vector3d& b = mesh.vertices[tri[1]];
    const Eigen::Vector3d& c = mesh.vertices[tri[2]];
    if (!point_in_tri_2d(u, v, a[ua], a[va], b[ua], b[va], c[ua], c[va])) {
      continue;
    }
    const Eigen::Vector3d n = (b - a).cross(c - a);
    if (std::abs(n[axis]) < 1e-14) continue;  // grazing; jitter keeps this rare
    const double w =
        (n.dot(a) - n[ua] * u - n[va] * v) / n[axis];
    out.push_back(w);
  }
  std::sort(out.begin(), out.end());
}

bool parity_at(const std::vector<double>& crossings, double w) {
  // Odd number of crossings beyond w  <=>  interior.
  const auto it = std::upper_bound(crossings.begin(), crossings.end(), w);
  return ((crossings.end() - it) % 2) != 0;
}

}  // namespace

namespace detail {

std::vector<double> mesh_line_crossings(const TriangleMesh& mesh, int axis,
                                        int ua, int va, double u, double v) {
  std::vector<double> out;
  line_crossings(mesh, axis, ua, va, u, v, out);
  return out;
}

}  // namespace detail

bool mesh_contains(const TriangleMesh& mesh, const Eigen::Vector3d& p) {
  const double jitter = 1e-7 * (mesh.max_corner() - mesh.min_corner()).norm();
  std::vector<double> xs;
  line_crossings(mesh, 0, 1, 2, p.y() + jitter, p.z() + 2.0 * jitter, xs);
  const bool in_x = parity_at(xs, p.x());
  line_crossings(mesh, 1, 0, 2, p.x() + jitter, p.z() + 2.0 * jitter, xs);
  const bool in_y = parity_at(xs, p.y());
  if (in_x == in_y) return in_x;
  line_crossings(mesh, 2, 0, 1, p.x() + jitter, p.y() + 2.0 * jitter, xs);
  return parity_at(xs, p.z());
}

VoxelGrid mesh_to_sdf(const TriangleMesh& mesh, const std::array<int, 3>& dims,
                      const Eigen::Vector3d& origin, double spacing,
                      unsigned threads) {
  mesh.validate();
  VoxelGrid grid = VoxelGrid::make(dims, origin, spacing);
  const std::size_t n = grid.size();

  // Parity along each axis, computed per grid line so every voxel on the
  // line shares one crossing list.
  const double ju = spacing * 1e-5 * 0.37;
  const double jv = spacing * 1e-5 * 0.61;
  std::array<std::vector<std::uint8_t>, 3> parity;
  for (auto& p : parity) p.assign(n, 0);

  const auto fill_parity = [&](int axis, int ua, int va) {
    const std::size_t lines =
        static_cast<std::size_t>(dims[ua]) * static_cast<std::size_t>(dims[va]);
    parallel_for(lines, threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> crossings;
      for (std::size_t line = begin; line < end; ++line) {
        const int iu = static_cast<int>(line % dims[ua]);
        const int iv = static_cast<int>(line / dims[ua]);
        const double u = origin[ua] + spacing * iu + ju;
        const double v = origin[va] + spacing * iv + jv;
        line_crossings(mesh, axis, ua, va, u, v, crossings);
        std::array<int, 3> idx{};
        idx[ua] = iu;
        idx[va] = iv;
        for (int w = 0; w < dims[axis]; ++w) {
          idx[axis] = w;
          const double coord = origin[axis] + spacing * w;
          parity[axis][grid.linear_index(idx[0], idx[1], idx[2])] =
              parity_at(crossings, coord) ? 1 : 0;
        }
      }
    });
  };
  fill_parity(0, 1, 2);
  fill_parity(1, 0, 2);
  fill_parity(2, 0, 1);

  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (parity[0][i] != parity[1][i]) ++disagreements;
  }
  if (disagreements * 1000 > n) {
    throw data_error("mesh looks non-watertight: ray parity disagrees on " +
                     std::to_string(disagreements) + "/" + std::to_string(n) +
                     " voxels");
  }

  std::vector<Eigen::Vector3d> lo(mesh.triangles.size());
  std::vector<Eigen::Vector3d> hi(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    lo[t] = mesh.vertices[tri[0]]
                .cwiseMin(mesh.vertices[tri[1]])
                .cwiseMin(mesh.vertices[tri[2]]);
    hi[t] = mesh.vertices[tri[0]]
                .cwiseMax(mesh.vertices[tri[1]])
                .cwiseMax(mesh.vertices[tri[2]]);
  }

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t lin = begin; lin < end; ++lin) {
      const Eigen::Vector3d p = grid.index_to_world(lin);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Eigen::Vector3d gap =
            (lo[t] - p).cwiseMax(p - hi[t]).cwiseMax(0.0);
        if (gap.squaredNorm() >= best * best) continue;
        const auto& tri = mesh.triangles[t];
        best = std::min(best, point_triangle_distance(p, mesh.vertices[tri[0]],
                                                      mesh.vertices[tri[1]],
                                                      mesh.vertices[tri[2]]));
      }
      const bool inside = parity[0][lin] == parity[1][lin]
                              ? parity[0][lin] != 0
                              : parity[2][lin] != 0;
      grid.values[lin] = static_cast<float>(inside ? -best : best);
    }
  });
  return grid;
}

}  // namespace sqabs
