#pragma once

// Learnable per-groom embeddings, the MLP deformation decoder with manual
// reverse-mode gradients, procedural pose sampling, the self-supervised
// training loop, and checkpoint IO (JSON manifest + little-endian f64 blob).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quaffure/drape.hpp"
#include "quaffure/groom_io.hpp"

namespace quaffure {

struct GroomEmbedding {
  MatX table;  // one row per groom
  std::vector<std::string> names;

  int rows() const { return int(table.rows()); }
  int dim() const { return int(table.cols()); }

  int index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return int(i);
    return -1;
  }
};

struct DecoderNet {
  std::vector<MatX> weights;  // weights[l]: rows = out, cols = in
  std::vector<VecX> biases;
  int z_dim = 0, shape_dim = 0, pose_dim = 0;

  int input_dim() const { return z_dim + shape_dim + pose_dim; }
  int output_dim() const { return weights.empty() ? 0 : int(weights.back().rows()); }
  int layer_count() const { return int(weights.size()); }

  void init(int z, int s, int p, const std::vector<int>& hidden, int out, Rng& rng) {
    z_dim = z;
    shape_dim = s;
    pose_dim = p;
    weights.clear();
    biases.clear();
    std::vector<int> dims;
    dims.push_back(input_dim());
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
      const double limit = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
      MatX w(dims[l + 1], dims[l]);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
      weights.push_back(std::move(w));
      biases.push_back(VecX::Zero(dims[l + 1]));
    }
  }

  long long parameter_count() const {
    long long n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }
};

struct DecoderCache {
  std::vector<VecX> inputs;  // inputs[l] feeds layer l; inputs[0] is the net input
  VecX output;
};

// Hidden layers tanh, last layer linear.
inline VecX decoder_forward_flat(const DecoderNet& net, const VecX& input,
                                 DecoderCache* cache = nullptr) {
  if (input.size() != net.input_dim())
    throw std::invalid_argument("decoder input dimension mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(net.weights.size());
  }
  VecX h = input;
  for (int l = 0; l < net.layer_count(); ++l) {
    if (cache) cache->inputs.push_back(h);
    h = net.weights[l] * h + net.biases[l];
    if (l + 1 < net.layer_count()) h = h.array().tanh().matrix();
  }
  if (cache) cache->output = h;
  return h;
}

struct DecoderGrads {
  std::vector<MatX> weights;
  std::vector<VecX> biases;

  void zero_like(const DecoderNet& net) {
    weights.clear();
    biases.clear();
    for (int l = 0; l < net.layer_count(); ++l) {
      weights.push_back(MatX::Zero(net.weights[l].rows(), net.weights[l].cols()));
      biases.push_back(VecX::Zero(net.biases[l].size()));
    }
  }
};

// Accumulates parameter gradients; returns the gradient w.r.t. the net input.
inline VecX decoder_backward(const DecoderNet& net, const DecoderCache& cache,
                             const VecX& upstream, DecoderGrads& grads) {
  if (int(cache.inputs.size()) != net.layer_count())
    throw std::invalid_argument("decoder backward requires a cached forward pass");
  VecX delta = upstream;  // d loss / d pre-activation of layer l
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    if (l + 1 < net.layer_count()) {
      // cache.inputs[l+1] is tanh(pre_l)
      delta = (delta.array() * (1.0 - cache.inputs[l + 1].array().square())).matrix();
    }
    grads.weights[l] += delta * cache.inputs[l].transpose();
    grads.biases[l] += delta;
    delta = net.weights[l].transpose() * delta;
  }
  return delta;
}

// ---------------------------------------------------------------------------
// Pose sampling

struct PoseWindow {
  std::vector<PoseParams> frames;
};

// Emits windows of n_frames consecutive poses, either sliced from a loaded
// sequence or interpolated procedurally between bounded random joint targets.
class PoseSampler {
 public:
  static PoseSampler procedural(int pose_dim, std::vector<int> active_joints,
                                double max_angle_rad, double max_frame_delta_rad,
                                int n_frames) {
    PoseSampler s;
    s.pose_dim_ = pose_dim;
    s.active_joints_ = std::move(active_joints);
    s.max_angle_ = max_angle_rad;
    s.max_frame_delta_ = max_frame_delta_rad;
    s.n_frames_ = n_frames;
    if (n_frames < 2) throw std::invalid_argument("pose window needs at least 2 frames");
    for (int j : s.active_joints_)
      if (j < 0 || 3 * j + 2 >= pose_dim)
        throw std::invalid_argument("active joint outside pose dimension");
    return s;
  }

  static PoseSampler from_sequence(std::vector<PoseParams> frames, int n_frames) {
    if (int(frames.size()) < n_frames)
      throw std::invalid_argument("pose sequence shorter than the window length");
    PoseSampler s;
    s.sequence_ = std::move(frames);
    s.n_frames_ = n_frames;
    s.pose_dim_ = int(s.sequence_[0].joint_rotations.size());
    return s;
  }

  int window_length() const { return n_frames_; }
  int pose_dim() const { return pose_dim_; }

  PoseWindow sample(Rng& rng) const {
    PoseWindow window;
    if (!sequence_.empty()) {
      const int start = int(rng.uniform_int(0, std::int64_t(sequence_.size()) - n_frames_));
      window.frames.assign(sequence_.begin() + start, sequence_.begin() + start + n_frames_);
      return window;
    }
    PoseParams a = PoseParams::rest(pose_dim_);
    VecX delta = VecX::Zero(pose_dim_);
    for (int j : active_joints_)
      for (int k = 0; k < 3; ++k) {
        a.joint_rotations[3 * j + k] = rng.uniform(-max_angle_, max_angle_);
        delta[3 * j + k] = rng.uniform(-max_frame_delta_, max_frame_delta_);
      }
    for (int f = 0; f < n_frames_; ++f) {
      PoseParams p = a;
      p.joint_rotations = a.joint_rotations + double(f) * delta;
      // stay inside the sampling box regardless of the drawn step
      for (int j : active_joints_)
        for (int k = 0; k < 3; ++k)
          p.joint_rotations[3 * j + k] =
              std::clamp(p.joint_rotations[3 * j + k], -max_angle_, max_angle_);
      window.frames.push_back(std::move(p));
    }
    return window;
  }

 private:
  int pose_dim_ = 0;
  std::vector<int> active_joints_;
  double max_angle_ = 30.0 * M_PI / 180.0;
  double max_frame_delta_ = 2.0 * M_PI / 180.0;
  int n_frames_ = 4;
  std::vector<PoseParams> sequence_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int steps = 2000;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // per-step multiplier
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int z_dim = 16;
  std::vector<int> hidden = {256, 256, 256};
  double embedding_init = 0.1;
  int checkpoint_every = 500;
  std::uint64_t seed = 42;
  int threads = 1;
  bool deterministic = true;
  std::string out_dir;  // checkpoints + logs; empty disables writing

  void validate() const {
    if (steps <= 0 || checkpoint_every <= 0) throw std::invalid_argument("step counts must be positive");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
    if (!(lr_decay > 0) || lr_decay > 1) throw std::invalid_argument("lr decay must be in (0, 1]");
    if (z_dim <= 0) throw std::invalid_argument("latent dimension must be positive");
    for (int h : hidden)
      if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
  }
};

struct LossRecord {
  int step = 0;
  double total = 0;
  double elastic = 0, gravity = 0, body_collision = 0, self_collision = 0, pose_reg = 0;
  double wall_seconds = 0;
};

struct TrainedModel {
  DecoderNet net;
  GroomEmbedding embedding;
  MatX rest_signatures;  // one flattened rest-position row per groom
  int n_strands = 0, verts = 0;
  std::uint64_t seed = 42;
  int step = 0;
  std::vector<LossRecord> history;
  // optimizer state, kept for exact resume
  DecoderGrads m_net, v_net;
  MatX m_emb, v_emb;
  std::string rng_state;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_f64(std::ostream& out, const double* data, std::streamsize n) {
  out.write(reinterpret_cast<const char*>(data), n * std::streamsize(sizeof(double)));
}

inline void read_f64(std::istream& in, double* data, std::streamsize n) {
  in.read(reinterpret_cast<char*>(data), n * std::streamsize(sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint blob truncated");
}

inline void adam_update(MatX& p, MatX& m, MatX& v, const MatX& g, double lr, double b1, double b2,
                        double eps, int t) {
  m = b1 * m + (1 - b1) * g;
  v = b2 * v + (1 - b2) * g.cwiseProduct(g);
  const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

inline void adam_update(VecX& p, VecX& m, VecX& v, const VecX& g, double lr, double b1, double b2,
                        double eps, int t) {
  m = b1 * m + (1 - b1) * g;
  v = b2 * v + (1 - b2) * g.cwiseProduct(g);
  const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace detail

// Zeroes the displacement rows of root vertices so strands stay attached.
inline void mask_root_rows(VecX& deformation, int n_strands, int verts) {
  for (int s = 0; s < n_strands; ++s) deformation.segment<3>(3 * (s * verts)) = Vec3::Zero();
}

inline void save_checkpoint(const TrainedModel& model, const std::string& prefix);
inline TrainedModel load_checkpoint(const std::string& prefix);

inline void write_training_log(const std::vector<LossRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  out << "step,total,elastic,gravity,body_collision,self_collision,pose_reg,wall_seconds\n";
  for (const LossRecord& r : history)
    out << r.step << "," << r.total << "," << r.elastic << "," << r.gravity << ","
        << r.body_collision << "," << r.self_collision << "," << r.pose_reg << ","
        << r.wall_seconds << "\n";
}

// Self-supervised training: each step samples a groom and a pose window,
// evaluates the physics loss on every frame plus the pose regularizer across
// the window, and applies Adam to the decoder and the embedding table.
// Pass a model from load_checkpoint to resume; its step counter continues.
inline TrainedModel train_decoder(const std::vector<Groom>& grooms, const BodyModel& body,
                                  const PoseSampler& sampler, const MaterialParams& material,
                                  const TrainConfig& config,
                                  TrainedModel* resume_from = nullptr) {
  config.validate();
  material.validate();
  if (grooms.empty()) throw std::invalid_argument("training needs at least one groom");
  const int n_strands = int(grooms[0].strands.size());
  const int verts = grooms[0].verts_per_strand();
  for (const Groom& g : grooms)
    if (int(g.strands.size()) != n_strands || g.verts_per_strand() != verts)
      throw std::invalid_argument("training grooms must share strand count and vertex count");
  if (sampler.pose_dim() != body.pose_dim())
    throw std::invalid_argument("pose sampler dimension does not match the body");

  const int out_dim = 3 * n_strands * verts;
  const ShapeParams shape = ShapeParams::rest(body.shape_dim());

  TrainedModel model;
  Rng rng(config.seed);
  if (resume_from) {
    model = std::move(*resume_from);
    if (model.n_strands != n_strands || model.verts != verts ||
        model.embedding.rows() != int(grooms.size()))
      throw std::invalid_argument("checkpoint does not match the training grooms");
    rng.deserialize(model.rng_state);
  } else {
    model.seed = config.seed;
    model.n_strands = n_strands;
    model.verts = verts;
    model.net.init(config.z_dim, body.shape_dim(), body.pose_dim(), config.hidden, out_dim, rng);
    model.embedding.table = MatX(grooms.size(), config.z_dim);
    for (Eigen::Index r = 0; r < model.embedding.table.rows(); ++r)
      for (Eigen::Index c = 0; c < model.embedding.table.cols(); ++c)
        model.embedding.table(r, c) = config.embedding_init * rng.normal();
    for (const Groom& g : grooms) model.embedding.names.push_back(g.name);
    model.rest_signatures = MatX(grooms.size(), out_dim);
    for (size_t g = 0; g < grooms.size(); ++g)
      model.rest_signatures.row(g) = grooms[g].flatten_positions().transpose();
    model.m_net.zero_like(model.net);
    model.v_net.zero_like(model.net);
    model.m_emb = MatX::Zero(grooms.size(), config.z_dim);
    model.v_emb = MatX::Zero(grooms.size(), config.z_dim);
  }

  const auto t0 = std::chrono::steady_clock::now();
  DecoderGrads grads;
  const int target_step = model.step + config.steps;

  while (model.step < target_step) {
    const int gi = int(rng.uniform_int(0, int(grooms.size()) - 1));
    const PoseWindow window = sampler.sample(rng);
    const Groom& groom = grooms[gi];

    // forward: per-frame scenes, predictions, and physics losses
    std::vector<std::unique_ptr<DrapeScene>> scenes;
    std::vector<DecoderCache> caches(window.frames.size());
    std::vector<VecX> deformations(window.frames.size());
    LossRecord rec;
    rec.step = model.step;
    std::vector<VecX> frame_grads(window.frames.size());
    for (size_t f = 0; f < window.frames.size(); ++f) {
      scenes.push_back(std::make_unique<DrapeScene>(build_scene(
          groom, body, shape, window.frames[f], material, config.threads, config.deterministic)));
      VecX input(model.net.input_dim());
      input << model.embedding.table.row(gi).transpose(), shape.coefficients,
          window.frames[f].joint_rotations;
      deformations[f] = decoder_forward_flat(model.net, input, &caches[f]);
      mask_root_rows(deformations[f], n_strands, verts);
      const VecX x_hair = scenes[f]->x_posed + deformations[f];
      EnergyReport report = total_energy(x_hair, scenes[f]->ctx);
      rec.total += report.total;
      for (const auto& [name, value] : report.terms) {
        if (name == "gravity") rec.gravity += value;
        else if (name == "body_collision") rec.body_collision += value;
        else if (name == "self_collision") rec.self_collision += value;
        else rec.elastic += value;
      }
      frame_grads[f] = std::move(report.gradient);
    }
    std::vector<VecX> reg_grads;
    const double reg = pose_reg_energy(deformations, material.k_pr, &reg_grads);
    rec.pose_reg = reg;
    rec.total += reg;

    if (!std::isfinite(rec.total)) {
      if (!config.out_dir.empty()) {
        nlohmann::json dump;
        dump["step"] = model.step;
        dump["groom"] = groom.name;
        std::vector<std::vector<double>> poses;
        for (const PoseParams& p : window.frames)
          poses.emplace_back(p.joint_rotations.data(),
                             p.joint_rotations.data() + p.joint_rotations.size());
        dump["pose_window"] = poses;
        std::ofstream dump_out(config.out_dir + "/nan_dump.json");
        dump_out << dump.dump(2) << "\n";
      }
      throw TrainingError("non-finite training loss at step " + std::to_string(model.step));
    }

    // backward
    grads.zero_like(model.net);
    VecX emb_grad = VecX::Zero(model.net.z_dim);
    for (size_t f = 0; f < window.frames.size(); ++f) {
      VecX upstream = frame_grads[f] + reg_grads[f];
      mask_root_rows(upstream, n_strands, verts);
      const VecX input_grad = decoder_backward(model.net, caches[f], upstream, grads);
      emb_grad += input_grad.head(model.net.z_dim);
    }

    ++model.step;
    const double lr = config.learning_rate * std::pow(config.lr_decay, model.step - 1);
    for (int l = 0; l < model.net.layer_count(); ++l) {
      detail::adam_update(model.net.weights[l], model.m_net.weights[l], model.v_net.weights[l],
                          grads.weights[l], lr, config.beta1, config.beta2, config.eps,
                          model.step);
      detail::adam_update(model.net.biases[l], model.m_net.biases[l], model.v_net.biases[l],
                          grads.biases[l], lr, config.beta1, config.beta2, config.eps,
                          model.step);
    }
    {
      MatX g = MatX::Zero(model.embedding.table.rows(), model.embedding.table.cols());
      g.row(gi) = emb_grad.transpose();
      detail::adam_update(model.embedding.table, model.m_emb, model.v_emb, g, lr, config.beta1,
                          config.beta2, config.eps, model.step);
    }

    rec.wall_seconds = detail::elapsed_seconds(t0);
    model.history.push_back(rec);

    if (!config.out_dir.empty() &&
        (model.step % config.checkpoint_every == 0 || model.step == target_step)) {
      model.rng_state = rng.serialize();
      save_checkpoint(model, config.out_dir + "/checkpoint");
      write_training_log(model.history, config.out_dir + "/training_log.csv");
    }
  }
  model.rng_state = rng.serialize();
  return model;
}

// ---------------------------------------------------------------------------
// Inference

struct InferenceResult {
  VecX x_hair;
  double seconds = 0;  // prediction time, scene posing included
};

class UnknownGroomError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int resolve_embedding_row(const TrainedModel& model, const Groom& groom,
                                 bool nearest_fallback) {
  const int row = model.embedding.index_of(groom.name);
  if (row >= 0) return row;
  if (!nearest_fallback)
    throw UnknownGroomError("groom '" + groom.name + "' is not in the embedding table");
  const VecX sig = groom.flatten_positions();
  if (sig.size() != model.rest_signatures.cols())
    throw UnknownGroomError("groom '" + groom.name + "' does not match the trained resolution");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < model.rest_signatures.rows(); ++r) {
    const double d = (model.rest_signatures.row(r).transpose() - sig).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = int(r);
    }
  }
  return best;
}

// x_hair = x_posed + decoded deformation; pure given frozen weights.
inline InferenceResult infer_drape(const TrainedModel& model, int embedding_row,
                                   const ShapeParams& shape, const PoseParams& pose,
                                   const Groom& groom, const BodyModel& body) {
  if (embedding_row < 0 || embedding_row >= model.embedding.rows())
    throw std::out_of_range("embedding row out of range");
  const auto t0 = std::chrono::steady_clock::now();
  PosedBody posed = skin_body(body, shape, pose);
  std::vector<RootFrame> frames_rest = build_root_frames(groom, body.mesh);
  std::vector<RootFrame> frames_posed = build_root_frames(groom, posed.mesh);
  const RestEmbedding emb = embed_strands(groom, frames_rest);
  const VecX x_posed = pose_groom(groom, emb, frames_posed);

  VecX input(model.net.input_dim());
  input << model.embedding.table.row(embedding_row).transpose(), shape.coefficients,
      pose.joint_rotations;
  VecX deformation = decoder_forward_flat(model.net, input);
  mask_root_rows(deformation, int(groom.strands.size()), groom.verts_per_strand());

  InferenceResult result;
  result.x_hair = x_posed + deformation;
  result.seconds = detail::elapsed_seconds(t0);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint IO: <prefix>.json manifest + <prefix>.bin little-endian f64 blob
// holding parameters, optimizer moments, and rest signatures in declared order.

inline void save_checkpoint(const TrainedModel& model, const std::string& prefix) {
  if (int(model.m_net.weights.size()) != model.net.layer_count() ||
      int(model.v_net.weights.size()) != model.net.layer_count() ||
      model.m_emb.rows() != model.embedding.table.rows() ||
      model.v_emb.rows() != model.embedding.table.rows())
    throw std::invalid_argument("optimizer state does not match the model");
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["step"] = model.step;
  manifest["seed"] = model.seed;
  manifest["rng_state"] = model.rng_state;
  manifest["z_dim"] = model.net.z_dim;
  manifest["shape_dim"] = model.net.shape_dim;
  manifest["pose_dim"] = model.net.pose_dim;
  manifest["n_strands"] = model.n_strands;
  manifest["verts"] = model.verts;
  std::vector<int> hidden;
  for (int l = 0; l + 1 < model.net.layer_count(); ++l)
    hidden.push_back(int(model.net.weights[l].rows()));
  manifest["hidden"] = hidden;
  manifest["output_dim"] = model.net.output_dim();
  manifest["grooms"] = model.embedding.names;
  nlohmann::json hist = nlohmann::json::array();
  for (const LossRecord& r : model.history)
    hist.push_back({r.step, r.total, r.elastic, r.gravity, r.body_collision, r.self_collision,
                    r.pose_reg, r.wall_seconds});
  manifest["history"] = std::move(hist);
  std::ofstream mout(prefix + ".json");
  if (!mout) throw std::runtime_error("cannot open for writing: " + prefix + ".json");
  mout << manifest.dump(2) << "\n";

  std::ofstream bout(prefix + ".bin", std::ios::binary);
  if (!bout) throw std::runtime_error("cannot open for writing: " + prefix + ".bin");
  auto put_mat = [&](const MatX& m) { detail::write_f64(bout, m.data(), m.size()); };
  auto put_vec = [&](const VecX& v) { detail::write_f64(bout, v.data(), v.size()); };
  for (int l = 0; l < model.net.layer_count(); ++l) {
    put_mat(model.net.weights[l]);
    put_vec(model.net.biases[l]);
  }
  put_mat(model.embedding.table);
  for (int l = 0; l < model.net.layer_count(); ++l) {
    put_mat(model.m_net.weights[l]);
    put_vec(model.m_net.biases[l]);
    put_mat(model.v_net.weights[l]);
    put_vec(model.v_net.biases[l]);
  }
  put_mat(model.m_emb);
  put_mat(model.v_emb);
  put_mat(model.rest_signatures);
}

inline TrainedModel load_checkpoint(const std::string& prefix) {
  std::ifstream min(prefix + ".json");
  if (!min) throw std::runtime_error("cannot open checkpoint manifest: " + prefix + ".json");
  nlohmann::json manifest;
  min >> manifest;
  if (manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint version");

  TrainedModel model;
  model.step = manifest.at("step").get<int>();
  model.seed = manifest.at("seed").get<std::uint64_t>();
  model.rng_state = manifest.at("rng_state").get<std::string>();
  model.n_strands = manifest.at("n_strands").get<int>();
  model.verts = manifest.at("verts").get<int>();
  const int z = manifest.at("z_dim").get<int>();
  const int s = manifest.at("shape_dim").get<int>();
  const int p = manifest.at("pose_dim").get<int>();
  const std::vector<int> hidden = manifest.at("hidden").get<std::vector<int>>();
  const int out = manifest.at("output_dim").get<int>();
  model.embedding.names = manifest.at("grooms").get<std::vector<std::string>>();
  for (const auto& row : manifest.at("history")) {
    LossRecord r;
    r.step = row[0].get<int>();
    r.total = row[1].get<double>();
    r.elastic = row[2].get<double>();
    r.gravity = row[3].get<double>();
    r.body_collision = row[4].get<double>();
    r.self_collision = row[5].get<double>();
    r.pose_reg = row[6].get<double>();
    r.wall_seconds = row[7].get<double>();
    model.history.push_back(r);
  }

  model.net.z_dim = z;
  model.net.shape_dim = s;
  model.net.pose_dim = p;
  std::vector<int> dims;
  dims.push_back(z + s + p);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);

  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open checkpoint blob: " + prefix + ".bin");
  auto get_mat = [&](Eigen::Index r, Eigen::Index c) {
    MatX m(r, c);
    detail::read_f64(bin, m.data(), m.size());
    return m;
  };
  auto get_vec = [&](Eigen::Index n) {
    VecX v(n);
    detail::read_f64(bin, v.data(), v.size());
    return v;
  };
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    model.net.weights.push_back(get_mat(dims[l + 1], dims[l]));
    model.net.biases.push_back(get_vec(dims[l + 1]));
  }
  const Eigen::Index n_grooms = Eigen::Index(model.embedding.names.size());
  model.embedding.table = get_mat(n_grooms, z);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    model.m_net.weights.push_back(get_mat(dims[l + 1], dims[l]));
    model.m_net.biases.push_back(get_vec(dims[l + 1]));
    model.v_net.weights.push_back(get_mat(dims[l + 1], dims[l]));
    model.v_net.biases.push_back(get_vec(dims[l + 1]));
  }
  model.m_emb = get_mat(n_grooms, z);
  model.v_emb = get_mat(n_grooms, z);
  model.rest_signatures = get_mat(n_grooms, out);
  return model;
}

// Spec'd texture-shaped view of one decoded deformation.
inline DisplacementTexture decoder_forward(const DecoderNet& net, const VecX& z,
                                           const ShapeParams& shape, const PoseParams& pose,
                                           const TextureLayout& layout, int verts) {
  VecX input(net.input_dim());
  if (z.size() != net.z_dim || shape.coefficients.size() != net.shape_dim ||
      pose.joint_rotations.size() != net.pose_dim)
    throw std::invalid_argument("decoder input dimension mismatch");
  input << z, shape.coefficients, pose.joint_rotations;
  const VecX flat = decoder_forward_flat(net, input);
  const int n_strands = int(layout.texel_of_strand.size());
  if (flat.size() != 3 * Eigen::Index(n_strands) * verts)
    throw std::invalid_argument("decoder output does not match the texture layout");
  DisplacementTexture tex;
  tex.resolution = layout.resolution;
  tex.verts = verts;
  tex.data.assign(size_t(layout.resolution) * layout.resolution * verts * 3, 0.0);
  for (int s = 0; s < n_strands; ++s) {
    const auto [r, c] = layout.texel_of_strand[s];
    for (int v = 0; v < verts; ++v)
      for (int k = 0; k < 3; ++k)
        tex.data[tex.offset(r, c, v, k)] = flat[3 * (s * verts + v) + k];
  }
  return tex;
}

}  // namespace quaffure
