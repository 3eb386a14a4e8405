#include "tactex/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tactex/raster.hpp"

namespace tactex {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

struct ObjData {
  std::vector<Vec3f> positions;
  std::vector<Vec3f> colors;
  std::vector<Vec2f> uvs;
  std::vector<std::array<int, 3>> tri_pos;
  std::vector<std::array<int, 3>> tri_uv;  // -1 when absent
  bool any_missing_uv = false;
};

int resolve_index(int idx, size_t n) {
  if (idx > 0) return idx - 1;
  if (idx < 0) return int(n) + idx;
  fail("OBJ: zero index");
}

ObjData parse_obj(std::istream& in) {
  ObjData d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      float x, y, z;
      ls >> x >> y >> z;
      d.positions.push_back({x, y, z});
      float r, g, b;
      if (ls >> r >> g >> b) d.colors.push_back({r, g, b});
    } else if (tag == "vt") {
      float u, v;
      ls >> u >> v;
      d.uvs.push_back({u, v});
    } else if (tag == "f") {
      std::vector<int> vp, vt;
      std::string corner;
      while (ls >> corner) {
        int pi = 0, ti = 0;
        size_t s1 = corner.find('/');
        pi = std::stoi(corner.substr(0, s1));
        if (s1 != std::string::npos) {
          size_t s2 = corner.find('/', s1 + 1);
          std::string t = corner.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
          if (!t.empty()) ti = std::stoi(t);
        }
        vp.push_back(resolve_index(pi, d.positions.size()));
        vt.push_back(ti == 0 ? -1 : resolve_index(ti, d.uvs.size()));
      }
      for (size_t k = 2; k < vp.size(); k++) {
        d.tri_pos.push_back({vp[0], vp[k - 1], vp[k]});
        d.tri_uv.push_back({vt[0], vt[k - 1], vt[k]});
        if (vt[0] < 0 || vt[k - 1] < 0 || vt[k] < 0) d.any_missing_uv = true;
      }
    }
  }
  return d;
}

struct PlyProperty {
  std::string name;
  int size = 0;       // bytes
  bool is_float = false;
  bool is_list = false;
  int count_size = 0;
  int item_size = 0;
};

size_t type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  fail("PLY: unknown type " + t);
}

bool type_is_float(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

double read_scalar(std::istream& in, int size, bool is_float) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), size);
  if (!in) fail("PLY: truncated body");
  if (is_float) {
    if (size == 4) {
      float f;
      std::memcpy(&f, buf, 4);
      return f;
    }
    double dv;
    std::memcpy(&dv, buf, 8);
    return dv;
  }
  uint64_t v = 0;
  for (int i = 0; i < size; i++) v |= uint64_t(buf[i]) << (8 * i);
  return double(v);
}

Mesh parse_ply(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) fail("not a PLY file");

  size_t n_vertices = 0, n_faces = 0;
  std::vector<PlyProperty> vertex_props;
  PlyProperty face_prop;
  bool in_vertex = false, in_face = false, binary_le = false;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
      if (!binary_le) fail("PLY: only binary_little_endian is supported");
    } else if (tag == "element") {
      std::string name;
      size_t count;
      ls >> name >> count;
      in_vertex = name == "vertex";
      in_face = name == "face";
      if (in_vertex) n_vertices = count;
      if (in_face) n_faces = count;
    } else if (tag == "property") {
      std::string type;
      ls >> type;
      PlyProperty p;
      if (type == "list") {
        std::string ctype, itype;
        ls >> ctype >> itype >> p.name;
        p.is_list = true;
        p.count_size = int(type_size(ctype));
        p.item_size = int(type_size(itype));
      } else {
        ls >> p.name;
        p.size = int(type_size(type));
        p.is_float = type_is_float(type);
      }
      if (in_vertex) vertex_props.push_back(p);
      if (in_face) face_prop = p;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (n_vertices == 0) fail("PLY: no vertices");

  Mesh m;
  m.positions.resize(n_vertices);
  std::vector<Vec2f> vert_uv;
  bool has_uv = false, has_color = false;
  for (const PlyProperty& p : vertex_props) {
    if (p.name == "u" || p.name == "s" || p.name == "texture_u") has_uv = true;
    if (p.name == "red") has_color = true;
  }
  if (has_uv) vert_uv.resize(n_vertices);
  if (has_color) m.vertex_colors.resize(n_vertices);

  for (size_t v = 0; v < n_vertices; v++) {
    for (const PlyProperty& p : vertex_props) {
      double val = read_scalar(in, p.size, p.is_float);
      if (p.name == "x") m.positions[v].x = float(val);
      else if (p.name == "y") m.positions[v].y = float(val);
      else if (p.name == "z") m.positions[v].z = float(val);
      else if (p.name == "u" || p.name == "s" || p.name == "texture_u") vert_uv[v].x = float(val);
      else if (p.name == "v" || p.name == "t" || p.name == "texture_v") vert_uv[v].y = float(val);
      else if (has_color && p.name == "red") m.vertex_colors[v].x = float(p.is_float ? val : val / 255.0);
      else if (has_color && p.name == "green") m.vertex_colors[v].y = float(p.is_float ? val : val / 255.0);
      else if (has_color && p.name == "blue") m.vertex_colors[v].z = float(p.is_float ? val : val / 255.0);
    }
  }

  for (size_t f = 0; f < n_faces; f++) {
    if (!face_prop.is_list) fail("PLY: face element must be an index list");
    int count = int(read_scalar(in, face_prop.count_size, false));
    std::vector<int> idx(count);
    for (int i = 0; i < count; i++) idx[i] = int(read_scalar(in, face_prop.item_size, false));
    for (int k = 2; k < count; k++) {
      m.triangles.push_back({idx[0], idx[k - 1], idx[k]});
      if (has_uv)
        m.corner_uvs.push_back({vert_uv[idx[0]], vert_uv[idx[k - 1]], vert_uv[idx[k]]});
    }
  }
  return m;
}

}  // namespace

Vec3f orthogonal_axis(const Vec3f& n) {
  float ax = std::fabs(n.x), ay = std::fabs(n.y), az = std::fabs(n.z);
  Vec3f e;
  if (ax <= ay && ax <= az)
    e = {1, 0, 0};
  else if (ay <= az)
    e = {0, 1, 0};
  else
    e = {0, 0, 1};
  return normalize(e - n * dot(n, e));
}

void normalize_to_unit_box(Mesh& m) {
  if (m.positions.empty()) fail("empty mesh");
  Vec3f lo = m.positions[0], hi = m.positions[0];
  for (const Vec3f& p : m.positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  Vec3f center = (lo + hi) * 0.5f;
  float extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  if (extent <= 0) fail("mesh has zero extent");
  float scale = 2.0f / extent;
  for (Vec3f& p : m.positions) p = (p - center) * scale;
}

void compute_vertex_normals(Mesh& m) {
  m.normals.assign(m.positions.size(), {0, 0, 0});
  for (const auto& t : m.triangles) {
    Vec3f e1 = m.positions[t[1]] - m.positions[t[0]];
    Vec3f e2 = m.positions[t[2]] - m.positions[t[0]];
    Vec3f fn = cross(e1, e2);  // magnitude = 2 * area
    for (int k = 0; k < 3; k++) m.normals[t[k]] += fn;
  }
  for (Vec3f& n : m.normals) {
    float len = length(n);
    n = len > 1e-20f ? n / len : Vec3f{0, 0, 1};
  }
}

void compute_tangents(Mesh& m) {
  if (!m.has_uvs()) fail("compute_tangents: mesh has no UVs");
  std::vector<Vec3f> accum(m.positions.size(), {0, 0, 0});
  for (size_t i = 0; i < m.triangles.size(); i++) {
    const auto& t = m.triangles[i];
    const auto& uv = m.corner_uvs[i];
    Vec3f e1 = m.positions[t[1]] - m.positions[t[0]];
    Vec3f e2 = m.positions[t[2]] - m.positions[t[0]];
    Vec2f d1 = uv[1] - uv[0];
    Vec2f d2 = uv[2] - uv[0];
    float det = d1.x * d2.y - d2.x * d1.y;
    if (std::fabs(det) < 1e-12f) continue;
    float r = 1.0f / det;
    Vec3f tan = (e1 * d2.y - e2 * d1.y) * r;
    for (int k = 0; k < 3; k++) accum[t[k]] += tan;
  }
  m.tangents.resize(m.positions.size());
  for (size_t v = 0; v < m.positions.size(); v++) {
    const Vec3f& n = m.normals[v];
    // Double-precision projection; near-parallel accumulations cancel badly
    // in float and fall back to the deterministic axis frame.
    Vec3d nd(n), ad(accum[v]);
    Vec3d t = ad - nd * dot(nd, ad);
    double len = length(t);
    if (len < 1e-8 || len < 1e-6 * length(ad)) {
      m.tangents[v] = orthogonal_axis(n);
      continue;
    }
    t = t / len;
    t = normalize(t - nd * dot(nd, t));
    m.tangents[v] = Vec3f{float(t.x), float(t.y), float(t.z)};
  }
}

void build_fallback_atlas(Mesh& m) {
  size_t k = m.triangles.size();
  int grid = int(std::ceil(std::sqrt(double(k))));
  float cell = 1.0f / float(grid);
  float margin = 0.1f * cell;
  m.corner_uvs.resize(k);
  for (size_t i = 0; i < k; i++) {
    float ox = float(int(i) % grid) * cell;
    float oy = float(int(i) / grid) * cell;
    m.corner_uvs[i] = {Vec2f{ox + margin, oy + margin}, Vec2f{ox + cell - margin, oy + margin},
                       Vec2f{ox + margin, oy + cell - margin}};
  }
}

void finalize_mesh(Mesh& m) {
  if (m.triangles.empty()) fail("mesh has no triangles");
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; k++)
      if (t[k] < 0 || size_t(t[k]) >= m.positions.size()) fail("triangle index out of range");

  normalize_to_unit_box(m);

  // Drop degenerate triangles (keeps per-corner attributes aligned).
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<Vec2f, 3>> uvs;
  bool had_uvs = m.corner_uvs.size() == m.triangles.size();
  for (size_t i = 0; i < m.triangles.size(); i++) {
    const auto& t = m.triangles[i];
    Vec3f e1 = m.positions[t[1]] - m.positions[t[0]];
    Vec3f e2 = m.positions[t[2]] - m.positions[t[0]];
    if (0.5f * length(cross(e1, e2)) <= 1e-12f) continue;
    tris.push_back(t);
    if (had_uvs) uvs.push_back(m.corner_uvs[i]);
  }
  if (tris.empty()) fail("mesh has no non-degenerate triangles");
  m.triangles = std::move(tris);
  m.corner_uvs = std::move(uvs);

  compute_vertex_normals(m);
  if (!m.has_uvs()) build_fallback_atlas(m);
  compute_tangents(m);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open mesh: " + path);

  Mesh m;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") {
    m = parse_ply(in);
  } else {
    ObjData d = parse_obj(in);
    m.positions = std::move(d.positions);
    m.triangles = std::move(d.tri_pos);
    if (d.colors.size() == m.positions.size()) m.vertex_colors = std::move(d.colors);
    if (!d.any_missing_uv && !d.tri_uv.empty()) {
      m.corner_uvs.resize(m.triangles.size());
      for (size_t i = 0; i < m.triangles.size(); i++)
        for (int k = 0; k < 3; k++) m.corner_uvs[i][k] = d.uvs[d.tri_uv[i][k]];
    }
  }
  finalize_mesh(m);
  return m;
}

UvImage project_vertex_albedo(const Mesh& m, int resolution) {
  if (!m.has_colors()) fail("project_vertex_albedo: mesh has no vertex colors");
  UvGBuffer uvg = rasterize_uv(m, resolution);

  UvImage out;
  out.image = ImageF(resolution, resolution, 3);
  out.coverage = uvg.coverage;
  for (int y = 0; y < resolution; y++) {
    for (int x = 0; x < resolution; x++) {
      if (!uvg.coverage.at(x, y)) continue;
      size_t i = size_t(y) * resolution + x;
      const auto& t = m.triangles[uvg.triangle[i]];
      Vec3f b = uvg.bary[i];
      Vec3f c = m.vertex_colors[t[0]] * b.x + m.vertex_colors[t[1]] * b.y +
                m.vertex_colors[t[2]] * b.z;
      out.image.set_pixel3(x, y, c);
    }
  }
  dilate_gutter(out.image, out.coverage, 4);
  return out;
}

void dilate_gutter(ImageF& img, Mask& coverage, int pixels) {
  const int w = img.width, h = img.height, ch = img.channels;
  for (int it = 0; it < pixels; it++) {
    Mask next = coverage;
    ImageF next_img = img;
    for (int y = 0; y < h; y++) {
      for (int x = 0; x < w; x++) {
        if (coverage.at(x, y)) continue;
        int n = 0;
        std::vector<float> acc(ch, 0.0f);
        for (int dy = -1; dy <= 1; dy++) {
          for (int dx = -1; dx <= 1; dx++) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!coverage.at(nx, ny)) continue;
            for (int c = 0; c < ch; c++) acc[c] += img.at(nx, ny, c);
            n++;
          }
        }
        if (n == 0) continue;
        for (int c = 0; c < ch; c++) next_img.at(x, y, c) = acc[c] / float(n);
        next.at(x, y) = 1;
      }
    }
    img = std::move(next_img);
    coverage = std::move(next);
  }
}

Mesh make_icosphere(int subdivisions) {
  const float phi = (1.0f + std::sqrt(5.0f)) * 0.5f;
  std::vector<Vec3f> pos = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                            {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                            {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3f& p : pos) p = normalize(p);
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; s++) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      pos.push_back(normalize((pos[a] + pos[b]) * 0.5f));
      int idx = int(pos.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  Mesh m;
  m.positions = std::move(pos);
  m.triangles = std::move(tris);
  return m;
}

Mesh make_uv_sphere(int rings, int segments) {
  Mesh m;
  auto vid = [&](int i, int j) { return i * (segments + 1) + j; };
  for (int i = 0; i <= rings; i++) {
    float theta = float(M_PI) * float(i) / float(rings);
    for (int j = 0; j <= segments; j++) {
      float phi = 2.0f * float(M_PI) * float(j) / float(segments);
      m.positions.push_back(
          {std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)});
    }
  }
  auto uv = [&](int i, int j) {
    return Vec2f{float(j) / float(segments), float(i) / float(rings)};
  };
  for (int i = 0; i < rings; i++) {
    for (int j = 0; j < segments; j++) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      m.triangles.push_back({a, b, c});
      m.corner_uvs.push_back({uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)});
      m.triangles.push_back({a, c, d});
      m.corner_uvs.push_back({uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)});
    }
  }
  return m;
}

Mesh make_quad() {
  Mesh m;
  m.positions = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.corner_uvs = {{Vec2f{0, 0}, Vec2f{1, 0}, Vec2f{1, 1}},
                  {Vec2f{0, 0}, Vec2f{1, 1}, Vec2f{0, 1}}};
  return m;
}

void save_obj(const std::string& path, const Mesh& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("cannot write OBJ: " + path);
  out << "# tactex mesh\n";
  bool colors = m.has_colors();
  for (size_t v = 0; v < m.positions.size(); v++) {
    const Vec3f& p = m.positions[v];
    out << "v " << p.x << " " << p.y << " " << p.z;
    if (colors) {
      const Vec3f& c = m.vertex_colors[v];
      out << " " << c.x << " " << c.y << " " << c.z;
    }
    out << "\n";
  }
  for (const auto& uv : m.corner_uvs)
    for (int k = 0; k < 3; k++) out << "vt " << uv[k].x << " " << uv[k].y << "\n";
  for (size_t i = 0; i < m.triangles.size(); i++) {
    const auto& t = m.triangles[i];
    if (m.has_uvs()) {
      size_t base = i * 3 + 1;
      out << "f " << t[0] + 1 << "/" << base << " " << t[1] + 1 << "/" << base + 1 << " "
          << t[2] + 1 << "/" << base + 2 << "\n";
    } else {
      out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    }
  }
}

}  // namespace tactex
