#include "viewplan/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "viewplan/binio.hpp"
#include "viewplan/error.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path, line_no, "expected a number, got '" + tok + "'");
  }
}

long parse_long(const std::string& tok, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path, line_no, "expected an integer, got '" + tok + "'");
  }
}

}  // namespace

void Mesh::recompute_bbox() {
  bbox.setEmpty();
  for (const auto& v : vertices) bbox.extend(v);
}

void Mesh::validate() const {
  if (vertices.empty()) throw Error("mesh has no vertices");
  if (triangles.empty()) throw Error("mesh has no triangles");
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw Error("mesh has a non-finite vertex");
  }
  const long n = static_cast<long>(vertices.size());
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) {
        throw Error("triangle references vertex " + std::to_string(t[k]) +
                    " outside [0, " + std::to_string(n) + ")");
      }
    }
  }
}

double Mesh::surface_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    const Eigen::Vector3d& a = vertices[t[0]];
    const Eigen::Vector3d& b = vertices[t[1]];
    const Eigen::Vector3d& c = vertices[t[2]];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

Eigen::Vector3d Mesh::triangle_point(int tri, double b0, double b1) const {
  const Eigen::Vector3i& t = triangles[tri];
  const double b2 = 1.0 - b0 - b1;
  return b0 * vertices[t[0]] + b1 * vertices[t[1]] + b2 * vertices[t[2]];
}

void PointCloud::validate() const {
  if (!source_view.empty() && source_view.size() != points.size()) {
    throw Error("point cloud tag count " + std::to_string(source_view.size()) +
                " does not match point count " + std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error("point cloud has a non-finite point");
  }
}

Eigen::AlignedBox3d PointCloud::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& p : points) box.extend(p);
  return box;
}

bool Pose::is_rotation(double tol) const {
  const Eigen::Matrix3d should_be_identity =
      orientation.transpose() * orientation;
  return (should_be_identity - Eigen::Matrix3d::Identity()).norm() <= tol &&
         std::abs(orientation.determinant() - 1.0) <= tol;
}

Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  Pose pose;
  pose.position = position;
  Eigen::Vector3d fwd = target - position;
  const double len = fwd.norm();
  if (len < 1e-12) throw ArgumentError("look_at: position equals target");
  fwd /= len;
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(fwd.dot(up)) > 1.0 - 1e-9) up = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d right = up.cross(fwd).normalized();
  const Eigen::Vector3d down = fwd.cross(right);
  pose.orientation.col(0) = right;
  pose.orientation.col(1) = down;
  pose.orientation.col(2) = fwd;
  return pose;
}

namespace {

Mesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  Mesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw FormatError(path, line_no, "vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(toks[1], path, line_no),
                                 parse_double(toks[2], path, line_no),
                                 parse_double(toks[3], path, line_no));
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw FormatError(path, line_no, "face needs at least 3 vertices");
      std::vector<int> idx;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        std::string head = toks[i].substr(0, toks[i].find('/'));
        long raw = parse_long(head, path, line_no);
        long resolved = raw > 0 ? raw - 1
                                : static_cast<long>(mesh.vertices.size()) + raw;
        if (resolved < 0 || resolved >= static_cast<long>(mesh.vertices.size())) {
          throw FormatError(path, line_no, "face index " + head + " out of range");
        }
        idx.push_back(static_cast<int>(resolved));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
        mesh.triangles.emplace_back(idx[0], idx[i], idx[i + 1]);
      }
    }
    // other OBJ records (vn, vt, o, g, s, usemtl, mtllib) are ignored
  }
  return mesh;
}

struct PlyProperty {
  std::string name;
  std::string type;      // scalar type, or the value type for lists
  std::string count_type;  // nonempty only for list properties
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t, const std::string& path, int line_no) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
  throw FormatError(path, line_no, "unknown property type '" + t + "'");
}

double ply_read_scalar(std::istream& in, const std::string& t, const std::string& path) {
  const std::size_t n = ply_type_size(t, path, 0);
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (!in) throw FormatError(path, 0, "truncated binary body");
  if (t == "float" || t == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  if (t == "double" || t == "float64") {
    double d;
    std::memcpy(&d, buf, 8);
    return d;
  }
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < n; ++i) u |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  const bool is_signed = t[0] == 'c' || t[0] == 's' || (t[0] == 'i');
  if (is_signed) {
    const int bits = static_cast<int>(n * 8);
    const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
    if (u & sign && bits < 64) u |= ~((std::uint64_t{1} << bits) - 1);
    return static_cast<double>(static_cast<std::int64_t>(u));
  }
  return static_cast<double>(u);
}

Mesh load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  int line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw FormatError(path, line_no, "unexpected end of header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") throw FormatError(path, line_no, "missing 'ply' magic");

  std::string format;
  std::vector<PlyElement> elements;
  for (;;) {
    next_line();
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw FormatError(path, line_no, "bad format line");
      format = toks[1];
      if (format != "ascii" && format != "binary_little_endian") {
        throw FormatError(path, line_no, "unsupported format '" + format + "'");
      }
    } else if (toks[0] == "element") {
      if (toks.size() < 3) throw FormatError(path, line_no, "bad element line");
      PlyElement el;
      el.name = toks[1];
      el.count = parse_long(toks[2], path, line_no);
      if (el.count < 0) throw FormatError(path, line_no, "negative element count");
      elements.push_back(el);
    } else if (toks[0] == "property") {
      if (elements.empty()) throw FormatError(path, line_no, "property before element");
      PlyProperty prop;
      if (toks.size() >= 5 && toks[1] == "list") {
        prop.count_type = toks[2];
        prop.type = toks[3];
        prop.name = toks[4];
        ply_type_size(prop.count_type, path, line_no);
      } else if (toks.size() >= 3) {
        prop.type = toks[1];
        prop.name = toks[2];
      } else {
        throw FormatError(path, line_no, "bad property line");
      }
      ply_type_size(prop.type, path, line_no);
      elements.back().props.push_back(prop);
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw FormatError(path, line_no, "unknown header keyword '" + toks[0] + "'");
    }
  }
  if (format.empty()) throw FormatError(path, line_no, "header has no format line");

  Mesh mesh;
  const bool ascii = format == "ascii";
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int xi = -1, yi = -1, zi = -1;
    if (is_vertex) {
      for (std::size_t i = 0; i < el.props.size(); ++i) {
        if (!el.props[i].count_type.empty()) continue;
        if (el.props[i].name == "x") xi = static_cast<int>(i);
        if (el.props[i].name == "y") yi = static_cast<int>(i);
        if (el.props[i].name == "z") zi = static_cast<int>(i);
      }
      if (xi < 0 || yi < 0 || zi < 0) {
        throw FormatError(path, line_no, "vertex element lacks x/y/z");
      }
    }
    for (long row = 0; row < el.count; ++row) {
      std::vector<double> scalars(el.props.size(),
                                  std::numeric_limits<double>::quiet_NaN());
      std::vector<long> list_vals;
      if (ascii) {
        next_line();
        const auto toks = split_ws(line);
        std::size_t cursor = 0;
        auto take = [&]() -> const std::string& {
          if (cursor >= toks.size()) {
            throw FormatError(path, line_no, "row has too few values");
          }
          return toks[cursor++];
        };
        for (std::size_t i = 0; i < el.props.size(); ++i) {
          if (el.props[i].count_type.empty()) {
            scalars[i] = parse_double(take(), path, line_no);
          } else {
            const long cnt = parse_long(take(), path, line_no);
            list_vals.clear();
            for (long k = 0; k < cnt; ++k) {
              list_vals.push_back(parse_long(take(), path, line_no));
            }
          }
        }
      } else {
        for (std::size_t i = 0; i < el.props.size(); ++i) {
          if (el.props[i].count_type.empty()) {
            scalars[i] = ply_read_scalar(in, el.props[i].type, path);
          } else {
            const long cnt =
                static_cast<long>(ply_read_scalar(in, el.props[i].count_type, path));
            list_vals.clear();
            for (long k = 0; k < cnt; ++k) {
              list_vals.push_back(
                  static_cast<long>(ply_read_scalar(in, el.props[i].type, path)));
            }
          }
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(scalars[xi], scalars[yi], scalars[zi]);
      } else if (is_face && !list_vals.empty()) {
        const long nverts = static_cast<long>(mesh.vertices.size());
        std::vector<int> idx;
        for (long raw : list_vals) {
          if (raw < 0 || raw >= nverts) {
            throw FormatError(path, line_no,
                              "face index " + std::to_string(raw) + " out of range");
          }
          idx.push_back(static_cast<int>(raw));
        }
        for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
          mesh.triangles.emplace_back(idx[0], idx[i], idx[i + 1]);
        }
      }
    }
  }
  return mesh;
}

}  // namespace

Mesh load_mesh(const std::string& path) {
  const std::string name = lower(path);
  Mesh mesh;
  if (ends_with(name, ".obj")) {
    mesh = load_obj(path);
  } else if (ends_with(name, ".ply")) {
    mesh = load_ply(path);
  } else {
    throw ArgumentError("unsupported mesh extension in '" + path +
                        "' (expected .obj or .ply)");
  }
  mesh.recompute_bbox();
  mesh.validate();
  return mesh;
}

void save_mesh_ply(const Mesh& mesh, const std::string& path, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  if (binary) {
    for (const auto& v : mesh.vertices) {
      binio::write<double>(out, v.x());
      binio::write<double>(out, v.y());
      binio::write<double>(out, v.z());
    }
    for (const auto& t : mesh.triangles) {
      binio::write<std::uint8_t>(out, 3);
      binio::write<std::int32_t>(out, t[0]);
      binio::write<std::int32_t>(out, t[1]);
      binio::write<std::int32_t>(out, t[2]);
    }
  } else {
    out.precision(17);
    for (const auto& v : mesh.vertices) {
      out << v.x() << " " << v.y() << " " << v.z() << "\n";
    }
    for (const auto& t : mesh.triangles) {
      out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

Mesh normalize_mesh(const Mesh& mesh, double target_diameter,
                    const Eigen::Vector3d& table_origin) {
  if (target_diameter <= 0.0) {
    throw ArgumentError("normalize_mesh: target diameter must be positive");
  }
  mesh.validate();
  Mesh out = mesh;
  out.recompute_bbox();
  const double diag = out.bbox_diagonal();
  if (diag < 1e-12) throw Error("normalize_mesh: degenerate mesh extent");
  const double scale = target_diameter / diag;
  for (auto& v : out.vertices) v *= scale;
  out.recompute_bbox();
  const Eigen::Vector3d center = out.bbox.center();
  Eigen::Vector3d shift = table_origin - center;
  shift.z() = table_origin.z() - out.bbox.min().z();
  for (auto& v : out.vertices) v += shift;
  out.recompute_bbox();
  return out;
}

PointCloud sample_surface(const Mesh& mesh, double spacing, std::uint64_t seed) {
  if (spacing <= 0.0) throw ArgumentError("sample_surface: spacing must be positive");
  mesh.validate();

  std::vector<double> cum_area(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Eigen::Vector3i& t = mesh.triangles[i];
    const Eigen::Vector3d& a = mesh.vertices[t[0]];
    total += 0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
    cum_area[i] = total;
  }
  if (total < 1e-15) throw Error("sample_surface: mesh has zero area");

  const std::size_t draws = static_cast<std::size_t>(
      std::ceil(6.0 * total / (spacing * spacing)));
  Rng rng(seed);

  const Eigen::Vector3d origin = mesh.bbox.min();
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, char, KeyHash> occupied;
  occupied.reserve(draws / 4);

  PointCloud cloud;
  for (std::size_t d = 0; d < draws; ++d) {
    const double u = rng.uniform() * total;
    const auto it = std::lower_bound(cum_area.begin(), cum_area.end(), u);
    const int tri = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(it - cum_area.begin()), cum_area.size() - 1));
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double b0 = 1.0 - r1;
    const double b1 = r1 * (1.0 - r2);
    const Eigen::Vector3d p = mesh.triangle_point(tri, b0, b1);
    const std::array<std::int64_t, 3> key = {
        static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / spacing)),
        static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / spacing)),
        static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / spacing))};
    if (occupied.emplace(key, 1).second) cloud.points.push_back(p);
  }
  return cloud;
}

void save_cloud_ply(const PointCloud& cloud, const std::string& path) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_tags()) out << "property uint16 source_view\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    binio::write<double>(out, cloud.points[i].x());
    binio::write<double>(out, cloud.points[i].y());
    binio::write<double>(out, cloud.points[i].z());
    if (cloud.has_tags()) binio::write<std::uint16_t>(out, cloud.source_view[i]);
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

PointCloud load_cloud_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  int line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw FormatError(path, line_no, "unexpected end of header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") throw FormatError(path, line_no, "missing 'ply' magic");

  long count = -1;
  bool binary = false;
  std::vector<PlyProperty> props;
  for (;;) {
    next_line();
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw FormatError(path, line_no, "bad format line");
      if (toks[1] == "binary_little_endian") binary = true;
      else if (toks[1] != "ascii") {
        throw FormatError(path, line_no, "unsupported format '" + toks[1] + "'");
      }
    } else if (toks[0] == "element") {
      if (toks.size() < 3 || toks[1] != "vertex") {
        throw FormatError(path, line_no, "point cloud PLY must hold a single vertex element");
      }
      count = parse_long(toks[2], path, line_no);
    } else if (toks[0] == "property") {
      if (toks.size() < 3 || toks[1] == "list") {
        throw FormatError(path, line_no, "unsupported property in point cloud PLY");
      }
      props.push_back({toks[2], toks[1], ""});
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw FormatError(path, line_no, "unknown header keyword '" + toks[0] + "'");
    }
  }
  if (count < 0) throw FormatError(path, line_no, "header has no vertex element");

  int xi = -1, yi = -1, zi = -1, ti = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") xi = static_cast<int>(i);
    if (props[i].name == "y") yi = static_cast<int>(i);
    if (props[i].name == "z") zi = static_cast<int>(i);
    if (props[i].name == "source_view") ti = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0) throw FormatError(path, line_no, "missing x/y/z properties");

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(count));
  if (ti >= 0) cloud.source_view.reserve(static_cast<std::size_t>(count));
  for (long row = 0; row < count; ++row) {
    std::vector<double> vals(props.size());
    if (binary) {
      for (std::size_t i = 0; i < props.size(); ++i) {
        vals[i] = ply_read_scalar(in, props[i].type, path);
      }
    } else {
      next_line();
      const auto toks = split_ws(line);
      if (toks.size() < props.size()) {
        throw FormatError(path, line_no, "row has too few values");
      }
      for (std::size_t i = 0; i < props.size(); ++i) {
        vals[i] = parse_double(toks[i], path, line_no);
      }
    }
    cloud.points.emplace_back(vals[xi], vals[yi], vals[zi]);
    if (ti >= 0) cloud.source_view.push_back(static_cast<std::uint16_t>(vals[ti]));
  }
  return cloud;
}

}  // namespace viewplan
