#pragma once

// Skinned body model: triangle mesh + skeleton + linear blend skinning with
// additive shape blendshapes, plus the on-disk formats (OBJ mesh, JSON rig
// sidecar, whitespace pose-sequence rows).

#include <Eigen/Geometry>
#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quaffure/math.hpp"
#include "quaffure/spatial.hpp"

namespace quaffure {

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 bind_translation = Vec3::Zero();
  Vec4 bind_rotation = quat_identity();  // (w, x, y, z)
};

struct BodyModel {
  TriMesh mesh;  // rest geometry, outward-facing winding
  std::vector<Joint> joints;
  std::vector<std::vector<std::pair<int, double>>> skin_weights;  // per vertex, sparse
  std::vector<std::vector<Vec3>> blendshapes;                     // S fields of per-vertex offsets

  int vertex_count() const { return int(mesh.vertices.size()); }
  int joint_count() const { return int(joints.size()); }
  int pose_dim() const { return 3 * joint_count(); }   // axis-angle per joint
  int shape_dim() const { return int(blendshapes.size()); }

  void validate() const {
    if (skin_weights.size() != mesh.vertices.size())
      throw std::invalid_argument("skin weights must cover every vertex");
    for (const auto& w : skin_weights) {
      double sum = 0;
      for (const auto& [j, wj] : w) {
        if (j < 0 || j >= joint_count()) throw std::invalid_argument("skin weight joint out of range");
        if (wj < 0) throw std::invalid_argument("skin weights must be non-negative");
        sum += wj;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("skin weights must sum to 1 per vertex");
    }
    for (size_t j = 0; j < joints.size(); ++j)
      if (joints[j].parent >= int(j))
        throw std::invalid_argument("joints must be ordered parent-before-child");
    for (const auto& bs : blendshapes)
      if (bs.size() != mesh.vertices.size())
        throw std::invalid_argument("blendshape must cover every vertex");
  }
};

struct PoseParams {
  VecX joint_rotations;  // 3 per joint, axis-angle (radians)
  Vec3 root_translation = Vec3::Zero();

  static PoseParams rest(int pose_dim) {
    PoseParams p;
    p.joint_rotations = VecX::Zero(pose_dim);
    return p;
  }

  void validate(int pose_dim) const {
    if (joint_rotations.size() != pose_dim)
      throw std::invalid_argument("pose parameter dimension mismatch");
    if (!joint_rotations.allFinite() || !root_translation.allFinite())
      throw std::invalid_argument("non-finite pose parameters");
    for (Eigen::Index j = 0; j + 2 < joint_rotations.size(); j += 3)
      if (joint_rotations.segment<3>(j).norm() >= 2 * M_PI)
        throw std::invalid_argument("joint rotation magnitude must stay below 2*pi");
  }
};

struct ShapeParams {
  VecX coefficients;

  static ShapeParams rest(int shape_dim) {
    ShapeParams s;
    s.coefficients = VecX::Zero(shape_dim);
    return s;
  }

  void validate(int shape_dim) const {
    if (coefficients.size() != shape_dim)
      throw std::invalid_argument("shape parameter dimension mismatch");
    if (!coefficients.allFinite()) throw std::invalid_argument("non-finite shape parameters");
  }
};

struct PosedBody {
  TriMesh mesh;
  std::vector<Vec3> face_normals;  // unit, recomputed from posed triangles
};

// Linear blend skinning with blendshapes applied before skinning.
inline PosedBody skin_body(const BodyModel& body, const ShapeParams& shape,
                           const PoseParams& pose) {
  shape.validate(body.shape_dim());
  pose.validate(body.pose_dim());

  const int nj = body.joint_count();
  std::vector<Eigen::Affine3d> bind_world(nj), posed_world(nj), skin(nj);
  for (int j = 0; j < nj; ++j) {
    Eigen::Affine3d bind_local = Eigen::Translation3d(body.joints[j].bind_translation) *
                                 Eigen::Affine3d(quat_to_matrix(body.joints[j].bind_rotation));
    Eigen::Affine3d posed_local =
        bind_local * Eigen::Affine3d(axis_angle_to_matrix(pose.joint_rotations.segment<3>(3 * j)));
    const int p = body.joints[j].parent;
    bind_world[j] = p < 0 ? bind_local : bind_world[p] * bind_local;
    posed_world[j] = p < 0 ? posed_local : posed_world[p] * posed_local;
    skin[j] = posed_world[j] * bind_world[j].inverse();
  }

  PosedBody out;
  out.mesh.triangles = body.mesh.triangles;
  out.mesh.vertices.resize(body.mesh.vertices.size());
  for (size_t v = 0; v < body.mesh.vertices.size(); ++v) {
    Vec3 rest = body.mesh.vertices[v];
    for (int s = 0; s < body.shape_dim(); ++s)
      rest += shape.coefficients[s] * body.blendshapes[s][v];
    Vec3 posed = Vec3::Zero();
    for (const auto& [j, w] : body.skin_weights[v]) posed += w * (skin[j] * rest);
    out.mesh.vertices[v] = posed + pose.root_translation;
  }
  out.face_normals.resize(out.mesh.triangles.size());
  for (size_t t = 0; t < out.mesh.triangles.size(); ++t)
    out.face_normals[t] = out.mesh.triangle_normal(int(t));
  return out;
}

// ---------------------------------------------------------------------------
// OBJ + sidecar IO

struct ObjData {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uvs;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 3>> triangle_uvs;  // uv index per corner, -1 when absent
  std::vector<std::vector<Vec3>> polylines;      // 'l' records, materialized

  TriMesh mesh() const {
    TriMesh m;
    m.vertices = vertices;
    m.triangles = triangles;
    return m;
  }

  // Per-corner UVs for every triangle; throws when any corner lacks one.
  std::vector<std::array<Vec2, 3>> corner_uvs() const {
    std::vector<std::array<Vec2, 3>> out(triangles.size());
    for (size_t t = 0; t < triangles.size(); ++t)
      for (int k = 0; k < 3; ++k) {
        const int uv = triangle_uvs[t][k];
        if (uv < 0) throw std::runtime_error("mesh triangle lacks per-corner UVs");
        out[t][k] = uvs[uv];
      }
    return out;
  }
};

inline ObjData load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OBJ file: " + path);
  ObjData obj;
  std::string line;
  auto parse_corner = [](const std::string& token, int& v, int& vt) {
    v = std::stoi(token);
    const size_t slash = token.find('/');
    vt = 0;
    if (slash != std::string::npos && slash + 1 < token.size() && token[slash + 1] != '/')
      vt = std::stoi(token.substr(slash + 1));
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      ls >> p.x() >> p.y() >> p.z();
      obj.vertices.push_back(p);
    } else if (tag == "vt") {
      Vec2 uv;
      ls >> uv.x() >> uv.y();
      obj.uvs.push_back(uv);
    } else if (tag == "f") {
      std::vector<int> vs, vts;
      std::string token;
      while (ls >> token) {
        int v = 0, vt = 0;
        parse_corner(token, v, vt);
        vs.push_back(v > 0 ? v - 1 : int(obj.vertices.size()) + v);
        vts.push_back(vt > 0 ? vt - 1 : (vt < 0 ? int(obj.uvs.size()) + vt : -1));
      }
      for (size_t k = 2; k < vs.size(); ++k) {  // fan triangulation
        obj.triangles.push_back({vs[0], vs[k - 1], vs[k]});
        obj.triangle_uvs.push_back({vts[0], vts[k - 1], vts[k]});
      }
    } else if (tag == "l") {
      std::vector<Vec3> poly;
      int idx = 0;
      while (ls >> idx) poly.push_back(obj.vertices[idx > 0 ? idx - 1 : int(obj.vertices.size()) + idx]);
      if (poly.size() >= 2) obj.polylines.push_back(std::move(poly));
    }
  }
  return obj;
}

inline void save_obj(const ObjData& obj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  for (const Vec3& v : obj.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const Vec2& uv : obj.uvs) out << "vt " << uv.x() << " " << uv.y() << "\n";
  for (size_t t = 0; t < obj.triangles.size(); ++t) {
    out << "f";
    for (int k = 0; k < 3; ++k) {
      out << " " << obj.triangles[t][k] + 1;
      if (!obj.triangle_uvs.empty() && obj.triangle_uvs[t][k] >= 0)
        out << "/" << obj.triangle_uvs[t][k] + 1;
    }
    out << "\n";
  }
}

inline void save_body_sidecar(const BodyModel& body, const std::string& path) {
  nlohmann::json doc;
  nlohmann::json joints = nlohmann::json::array();
  for (const Joint& j : body.joints) {
    joints.push_back({{"name", j.name},
                      {"parent", j.parent},
                      {"bind_translation", {j.bind_translation.x(), j.bind_translation.y(),
                                            j.bind_translation.z()}},
                      {"bind_rotation", {j.bind_rotation[0], j.bind_rotation[1],
                                         j.bind_rotation[2], j.bind_rotation[3]}}});
  }
  doc["joints"] = std::move(joints);
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& w : body.skin_weights) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& [j, wj] : w) row.push_back({j, wj});
    weights.push_back(std::move(row));
  }
  doc["weights"] = std::move(weights);
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& bs : body.blendshapes) {
    nlohmann::json offsets = nlohmann::json::array();
    for (const Vec3& o : bs) offsets.push_back({o.x(), o.y(), o.z()});
    shapes.push_back({{"offsets", std::move(offsets)}});
  }
  doc["blendshapes"] = std::move(shapes);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump() << "\n";
}

inline void load_body_sidecar(BodyModel& body, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open body sidecar: " + path);
  nlohmann::json doc;
  in >> doc;
  body.joints.clear();
  for (const auto& jj : doc.at("joints")) {
    Joint j;
    j.name = jj.at("name").get<std::string>();
    j.parent = jj.at("parent").get<int>();
    const auto& t = jj.at("bind_translation");
    j.bind_translation = Vec3(t[0], t[1], t[2]);
    const auto& r = jj.at("bind_rotation");
    j.bind_rotation = Vec4(r[0], r[1], r[2], r[3]);
    body.joints.push_back(std::move(j));
  }
  body.skin_weights.clear();
  for (const auto& row : doc.at("weights")) {
    std::vector<std::pair<int, double>> w;
    for (const auto& e : row) w.emplace_back(e[0].get<int>(), e[1].get<double>());
    body.skin_weights.push_back(std::move(w));
  }
  body.blendshapes.clear();
  for (const auto& bs : doc.at("blendshapes")) {
    std::vector<Vec3> offsets;
    for (const auto& o : bs.at("offsets")) offsets.push_back(Vec3(o[0], o[1], o[2]));
    body.blendshapes.push_back(std::move(offsets));
  }
  body.validate();
}

inline BodyModel load_body(const std::string& obj_path, const std::string& sidecar_path) {
  BodyModel body;
  body.mesh = load_obj(obj_path).mesh();
  load_body_sidecar(body, sidecar_path);
  return body;
}

// Pose sequence rows: frame index, P pose values, optional root translation.
inline std::vector<PoseParams> load_pose_sequence(const std::string& path, int pose_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose sequence: " + path);
  std::vector<PoseParams> frames;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == '#') continue;
    PoseParams p = PoseParams::rest(pose_dim);
    for (int i = 0; i < pose_dim; ++i)
      if (!(ls >> p.joint_rotations[i]))
        throw std::runtime_error("pose sequence row too short in " + path);
    double tx;
    if (ls >> tx) {
      p.root_translation.x() = tx;
      if (!(ls >> p.root_translation.y() >> p.root_translation.z()))
        throw std::runtime_error("incomplete root translation in " + path);
    }
    frames.push_back(std::move(p));
  }
  return frames;
}

inline void save_pose_sequence(const std::vector<PoseParams>& frames, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  for (size_t f = 0; f < frames.size(); ++f) {
    out << f;
    for (Eigen::Index i = 0; i < frames[f].joint_rotations.size(); ++i)
      out << " " << frames[f].joint_rotations[i];
    const Vec3& t = frames[f].root_translation;
    if (t != Vec3::Zero()) out << " " << t.x() << " " << t.y() << " " << t.z();
    out << "\n";
  }
}

}  // namespace quaffure
