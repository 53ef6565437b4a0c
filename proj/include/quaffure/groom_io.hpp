#pragma once

// Groom file formats and ingestion helpers.
//
// Text format: a JSON document {version, n_strands, verts_per_strand,
//   strands: [{uv: [u, v], positions: [[x, y, z], ...]}]}.
// Binary format: magic "QFGR", little-endian, header (u32 version,
//   u32 n_strands, u32 N), then per strand 2 x f32 uv and N x 3 x f32
//   positions.
//
// Also hosts uniform arc-length resampling and the polyline-soup converter
// that projects roots onto a scalp mesh to recover UVs and attachments.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quaffure/groom.hpp"
#include "quaffure/spatial.hpp"

static_assert(std::endian::native == std::endian::little,
              "groom binary IO assumes a little-endian host");

namespace quaffure {

constexpr std::uint32_t kGroomFormatVersion = 1;

inline void save_groom_text(const Groom& groom, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kGroomFormatVersion;
  doc["n_strands"] = groom.strand_count();
  doc["verts_per_strand"] = groom.verts_per_strand();
  if (!groom.name.empty()) doc["name"] = groom.name;
  nlohmann::json strands = nlohmann::json::array();
  for (const Strand& s : groom.strands) {
    nlohmann::json js;
    js["uv"] = {s.root_uv.x(), s.root_uv.y()};
    nlohmann::json pos = nlohmann::json::array();
    for (const Vec3& p : s.positions) pos.push_back({p.x(), p.y(), p.z()});
    js["positions"] = std::move(pos);
    strands.push_back(std::move(js));
  }
  doc["strands"] = std::move(strands);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(1, '\t') << "\n";
}

inline Groom load_groom_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open groom file: " + path);
  nlohmann::json doc;
  in >> doc;
  if (doc.value("version", 0u) != kGroomFormatVersion)
    throw std::runtime_error("unsupported groom format version in " + path);
  Groom groom;
  groom.name = doc.value("name", std::string());
  const int n_strands = doc.at("n_strands").get<int>();
  const int N = doc.at("verts_per_strand").get<int>();
  const auto& strands = doc.at("strands");
  if (int(strands.size()) != n_strands)
    throw std::runtime_error("strand count mismatch in " + path);
  groom.strands.resize(n_strands);
  for (int s = 0; s < n_strands; ++s) {
    const auto& js = strands[s];
    const auto& uv = js.at("uv");
    groom.strands[s].root_uv = Vec2(uv[0].get<double>(), uv[1].get<double>());
    const auto& pos = js.at("positions");
    if (int(pos.size()) != N) throw std::runtime_error("vertex count mismatch in " + path);
    groom.strands[s].positions.resize(N);
    for (int v = 0; v < N; ++v)
      groom.strands[s].positions[v] =
          Vec3(pos[v][0].get<double>(), pos[v][1].get<double>(), pos[v][2].get<double>());
    groom.strands[s].derive_rest_data();
  }
  groom.validate();
  return groom;
}

inline void save_groom_binary(const Groom& groom, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write("QFGR", 4);
  const std::uint32_t header[4] = {kGroomFormatVersion, std::uint32_t(groom.strand_count()),
                                   std::uint32_t(groom.verts_per_strand()),
                                   std::uint32_t(groom.name.size())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(groom.name.data(), std::streamsize(groom.name.size()));
  std::vector<float> buf;
  for (const Strand& s : groom.strands) {
    buf.clear();
    buf.push_back(float(s.root_uv.x()));
    buf.push_back(float(s.root_uv.y()));
    for (const Vec3& p : s.positions)
      for (int k = 0; k < 3; ++k) buf.push_back(float(p[k]));
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Groom load_groom_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open groom file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "QFGR", 4) != 0)
    throw std::runtime_error("not a groom binary file: " + path);
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != kGroomFormatVersion)
    throw std::runtime_error("unsupported groom binary version in " + path);
  if (header[3] > 4096) throw std::runtime_error("implausible name length in " + path);
  Groom groom;
  groom.name.resize(header[3]);
  in.read(groom.name.data(), std::streamsize(header[3]));
  groom.strands.resize(header[1]);
  const int N = int(header[2]);
  std::vector<float> buf(2 + size_t(N) * 3);
  for (Strand& s : groom.strands) {
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated groom binary: " + path);
    s.root_uv = Vec2(buf[0], buf[1]);
    s.positions.resize(N);
    for (int v = 0; v < N; ++v)
      s.positions[v] = Vec3(buf[2 + 3 * v], buf[2 + 3 * v + 1], buf[2 + 3 * v + 2]);
    s.derive_rest_data();
  }
  groom.validate();
  return groom;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline void save_groom(const Groom& groom, const std::string& path) {
  if (has_suffix(path, ".qgr"))
    save_groom_binary(groom, path);
  else
    save_groom_text(groom, path);
}

inline Groom load_groom(const std::string& path) {
  return has_suffix(path, ".qgr") ? load_groom_binary(path) : load_groom_text(path);
}

// Uniform arc-length resampling of a polyline to n vertices.
inline std::vector<Vec3> resample_polyline(const std::vector<Vec3>& points, int n) {
  if (points.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
  if (n < 2) throw std::invalid_argument("resample target needs at least 2 vertices");
  std::vector<double> cum(points.size(), 0.0);
  for (size_t i = 1; i < points.size(); ++i)
    cum[i] = cum[i - 1] + (points[i] - points[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0)) throw std::invalid_argument("polyline has zero length");
  std::vector<Vec3> out(n);
  size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double target = total * double(i) / double(n - 1);
    while (seg + 2 < points.size() && cum[seg + 1] < target) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double t = span > 0 ? (target - cum[seg]) / span : 0.0;
    out[i] = points[seg] + t * (points[seg + 1] - points[seg]);
  }
  return out;
}

// Converter for external strand data: takes a polyline soup plus a scalp
// mesh with per-corner UVs, resamples every polyline to `verts_per_strand`,
// projects each root onto the scalp to recover the attachment triangle,
// barycentric coordinates, and root UV.
inline Groom convert_polylines_to_groom(const std::vector<std::vector<Vec3>>& polylines,
                                        const TriMesh& scalp,
                                        const std::vector<std::array<Vec2, 3>>& corner_uvs,
                                        int verts_per_strand, const std::string& name = "") {
  if (polylines.empty()) throw std::invalid_argument("no polylines to convert");
  if (corner_uvs.size() != scalp.triangles.size())
    throw std::invalid_argument("scalp mesh needs per-corner UVs on every triangle");
  TriangleBVH bvh(scalp);
  Groom groom;
  groom.name = name;
  groom.strands.reserve(polylines.size());
  for (const auto& line : polylines) {
    Strand s;
    s.positions = resample_polyline(line, verts_per_strand);
    const ClosestPointResult cp = bvh.closest_point(s.positions[0]);
    const auto& tri = scalp.triangles[cp.triangle];
    const Vec3 bary = barycentric_on_triangle(cp.point, scalp.vertices[tri[0]],
                                              scalp.vertices[tri[1]], scalp.vertices[tri[2]]);
    const Vec3 clamped = bary.cwiseMax(0.0);
    s.attachment.triangle = cp.triangle;
    s.attachment.barycentric = clamped / clamped.sum();
    const auto& uvs = corner_uvs[cp.triangle];
    Vec2 uv = s.attachment.barycentric[0] * uvs[0] + s.attachment.barycentric[1] * uvs[1] +
              s.attachment.barycentric[2] * uvs[2];
    uv = uv.cwiseMax(0.0).cwiseMin(1.0 - 1e-9);
    s.root_uv = uv;
    s.derive_rest_data();
    groom.strands.push_back(std::move(s));
  }
  groom.validate();
  return groom;
}

}  // namespace quaffure
