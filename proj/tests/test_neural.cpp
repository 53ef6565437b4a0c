#include "quaffure/neural.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "quaffure/fixtures.hpp"
#include "test_util.hpp"

using namespace quaffure;

namespace {

std::string temp_dir(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

void expect_bitwise(const MatX& a, const MatX& b, const std::string& what) {
  ASSERT_EQ(a.rows(), b.rows()) << what;
  ASSERT_EQ(a.cols(), b.cols()) << what;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    ASSERT_EQ(a.data()[i], b.data()[i]) << what << " element " << i;
}

void expect_bitwise(const VecX& a, const VecX& b, const std::string& what) {
  ASSERT_EQ(a.size(), b.size()) << what;
  for (Eigen::Index i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << what << " element " << i;
}

void expect_models_equal(const TrainedModel& a, const TrainedModel& b, bool compare_history) {
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.n_strands, b.n_strands);
  EXPECT_EQ(a.verts, b.verts);
  EXPECT_EQ(a.embedding.names, b.embedding.names);
  ASSERT_EQ(a.net.layer_count(), b.net.layer_count());
  for (int l = 0; l < a.net.layer_count(); ++l) {
    expect_bitwise(a.net.weights[l], b.net.weights[l], "weights " + std::to_string(l));
    expect_bitwise(a.net.biases[l], b.net.biases[l], "biases " + std::to_string(l));
    expect_bitwise(a.m_net.weights[l], b.m_net.weights[l], "m_net " + std::to_string(l));
    expect_bitwise(a.v_net.weights[l], b.v_net.weights[l], "v_net " + std::to_string(l));
    expect_bitwise(a.m_net.biases[l], b.m_net.biases[l], "m_net bias " + std::to_string(l));
    expect_bitwise(a.v_net.biases[l], b.v_net.biases[l], "v_net bias " + std::to_string(l));
  }
  expect_bitwise(a.embedding.table, b.embedding.table, "embedding");
  expect_bitwise(a.m_emb, b.m_emb, "m_emb");
  expect_bitwise(a.v_emb, b.v_emb, "v_emb");
  expect_bitwise(a.rest_signatures, b.rest_signatures, "rest_signatures");
  if (!compare_history) return;
  ASSERT_EQ(a.history.size(), b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].step, b.history[i].step);
    EXPECT_EQ(a.history[i].total, b.history[i].total);
    EXPECT_EQ(a.history[i].elastic, b.history[i].elastic);
    EXPECT_EQ(a.history[i].gravity, b.history[i].gravity);
    EXPECT_EQ(a.history[i].body_collision, b.history[i].body_collision);
    EXPECT_EQ(a.history[i].self_collision, b.history[i].self_collision);
    EXPECT_EQ(a.history[i].pose_reg, b.history[i].pose_reg);
  }
}

struct TrainSetup {
  FixtureBody fx;
  std::vector<Groom> grooms;
  MaterialParams material;
  TrainConfig config;

  TrainSetup() {
    fx = make_fixture_body();
    grooms.push_back(make_scalp_groom(fx, 4, 6, 0.08, StrandShape::straight, "straight"));
    grooms.push_back(make_scalp_groom(fx, 4, 6, 0.08, StrandShape::wavy, "wavy"));
    config.steps = 10;
    config.z_dim = 4;
    config.hidden = {16, 16};
    config.checkpoint_every = 5;
    config.seed = 7;
  }

  PoseSampler sampler() const {
    return PoseSampler::procedural(fx.body.pose_dim(), {2}, 0.3, 0.03, 2);
  }
};

}  // namespace

TEST(DecoderNet, ForwardMatchesHandComputation) {
  DecoderNet net;
  net.z_dim = 1;
  net.shape_dim = 1;
  net.pose_dim = 0;
  net.weights.push_back((MatX(2, 2) << 0.5, -0.25, 1.0, 0.75).finished());
  net.biases.push_back((VecX(2) << 0.1, -0.2).finished());
  net.weights.push_back((MatX(1, 2) << 2.0, -1.0).finished());
  net.biases.push_back((VecX(1) << 0.3).finished());

  const VecX input = (VecX(2) << 0.4, -0.6).finished();
  const VecX out = decoder_forward_flat(net, input);

  const double h0 = std::tanh(0.5 * 0.4 - 0.25 * -0.6 + 0.1);
  const double h1 = std::tanh(1.0 * 0.4 + 0.75 * -0.6 - 0.2);
  ASSERT_EQ(out.size(), 1);
  EXPECT_NEAR(out[0], 2.0 * h0 - 1.0 * h1 + 0.3, 1e-15);

  EXPECT_THROW(decoder_forward_flat(net, VecX::Zero(3)), std::invalid_argument);
}

TEST(DecoderNet, XavierInitBoundsAndParameterCount) {
  DecoderNet net;
  Rng rng(11);
  net.init(3, 2, 6, {8, 5}, 12, rng);
  ASSERT_EQ(net.layer_count(), 3);
  EXPECT_EQ(net.input_dim(), 11);
  EXPECT_EQ(net.output_dim(), 12);
  const std::vector<int> dims = {11, 8, 5, 12};
  for (int l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
    EXPECT_EQ(net.weights[l].rows(), dims[l + 1]);
    EXPECT_EQ(net.weights[l].cols(), dims[l]);
    EXPECT_LE(net.weights[l].cwiseAbs().maxCoeff(), limit);
    EXPECT_GT(net.weights[l].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(net.biases[l].cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(net.parameter_count(), 11 * 8 + 8 + 8 * 5 + 5 + 5 * 12 + 12);
}

TEST(DecoderNet, BackwardMatchesFiniteDifferences) {
  DecoderNet net;
  Rng rng(5);
  net.init(2, 1, 3, {7, 5}, 4, rng);
  const VecX input = [&] {
    VecX v(net.input_dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
  }();
  VecX c(4);
  for (int i = 0; i < 4; ++i) c[i] = rng.uniform(-1.0, 1.0);

  DecoderCache cache;
  decoder_forward_flat(net, input, &cache);
  DecoderGrads grads;
  grads.zero_like(net);
  const VecX input_grad = decoder_backward(net, cache, c, grads);

  const double h = 1e-6;
  auto loss = [&] { return c.dot(decoder_forward_flat(net, input)); };
  for (int l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
      double& w = net.weights[l].data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double dn = loss();
      w = saved;
      const double fd = (up - dn) / (2 * h);
      EXPECT_NEAR(grads.weights[l].data()[i], fd, 1e-4 * std::max(1.0, std::abs(fd)))
          << "weight layer " << l << " index " << i;
    }
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
      double& b = net.biases[l][i];
      const double saved = b;
      b = saved + h;
      const double up = loss();
      b = saved - h;
      const double dn = loss();
      b = saved;
      const double fd = (up - dn) / (2 * h);
      EXPECT_NEAR(grads.biases[l][i], fd, 1e-4 * std::max(1.0, std::abs(fd)))
          << "bias layer " << l << " index " << i;
    }
  }
  const VecX fd_input = testutil::fd_gradient(
      [&](const VecX& x) { return c.dot(decoder_forward_flat(net, x)); }, input);
  EXPECT_LT(testutil::max_rel_err(input_grad, fd_input), 1e-4);
}

TEST(DecoderNet, BackwardRequiresCache) {
  DecoderNet net;
  Rng rng(3);
  net.init(1, 1, 1, {4}, 2, rng);
  DecoderCache empty;
  DecoderGrads grads;
  grads.zero_like(net);
  EXPECT_THROW(decoder_backward(net, empty, VecX::Zero(2), grads), std::invalid_argument);
}

TEST(DecoderNet, TextureForwardScattersFlatOutput) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 5, 6, 0.1, StrandShape::straight, "texture");
  const TextureLayout layout = layout_for_groom(groom, 4);

  DecoderNet net;
  Rng rng(9);
  net.init(3, fx.body.shape_dim(), fx.body.pose_dim(), {8},
           3 * int(groom.strands.size()) * groom.verts_per_strand(), rng);
  VecX z(3);
  z << 0.1, -0.2, 0.3;
  const ShapeParams shape = ShapeParams::rest(fx.body.shape_dim());
  const PoseParams pose = PoseParams::rest(fx.body.pose_dim());

  VecX input(net.input_dim());
  input << z, shape.coefficients, pose.joint_rotations;
  const VecX flat = decoder_forward_flat(net, input);
  const DisplacementTexture tex = decoder_forward(net, z, shape, pose, layout, 6);

  EXPECT_EQ(tex.resolution, 4);
  EXPECT_EQ(tex.verts, 6);
  for (size_t s = 0; s < groom.strands.size(); ++s) {
    const auto [r, c] = layout.texel_of_strand[s];
    for (int v = 0; v < 6; ++v)
      for (int k = 0; k < 3; ++k)
        EXPECT_EQ(tex.at(r, c, v, k), flat[3 * (int(s) * 6 + v) + k]);
  }
  double inactive_sum = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      if (layout.occupancy[layout.index(r, c)] >= 0) continue;
      for (int v = 0; v < 6; ++v)
        for (int k = 0; k < 3; ++k) inactive_sum += std::abs(tex.at(r, c, v, k));
    }
  EXPECT_EQ(inactive_sum, 0.0);

  EXPECT_THROW(decoder_forward(net, VecX::Zero(2), shape, pose, layout, 6),
               std::invalid_argument);
  EXPECT_THROW(decoder_forward(net, z, shape, pose, layout, 7), std::invalid_argument);
}

TEST(MaskRoots, ZeroesOnlyRootRows) {
  const int n_strands = 3, verts = 4;
  VecX def(3 * n_strands * verts);
  for (Eigen::Index i = 0; i < def.size(); ++i) def[i] = double(i) + 1.0;
  const VecX before = def;
  mask_root_rows(def, n_strands, verts);
  for (int s = 0; s < n_strands; ++s)
    for (int v = 0; v < verts; ++v)
      for (int k = 0; k < 3; ++k) {
        const Eigen::Index i = 3 * (s * verts + v) + k;
        if (v == 0)
          EXPECT_EQ(def[i], 0.0);
        else
          EXPECT_EQ(def[i], before[i]);
      }
}

TEST(PoseSampler, ProceduralBoundsAndWindow) {
  const int pose_dim = 9;
  const double max_angle = 0.4, max_delta = 0.05;
  const PoseSampler sampler = PoseSampler::procedural(pose_dim, {2}, max_angle, max_delta, 5);
  EXPECT_EQ(sampler.window_length(), 5);
  EXPECT_EQ(sampler.pose_dim(), pose_dim);
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const PoseWindow window = sampler.sample(rng);
    ASSERT_EQ(window.frames.size(), 5u);
    for (const PoseParams& p : window.frames) {
      ASSERT_EQ(p.joint_rotations.size(), pose_dim);
      for (int i = 0; i < 6; ++i) EXPECT_EQ(p.joint_rotations[i], 0.0);
      for (int i = 6; i < 9; ++i) EXPECT_LE(std::abs(p.joint_rotations[i]), max_angle);
    }
    for (size_t f = 1; f < window.frames.size(); ++f) {
      const VecX step =
          window.frames[f].joint_rotations - window.frames[f - 1].joint_rotations;
      EXPECT_LE(step.lpNorm<Eigen::Infinity>(), max_delta + 1e-15);
    }
  }
}

TEST(PoseSampler, DeterministicGivenSeed) {
  const PoseSampler sampler = PoseSampler::procedural(9, {1, 2}, 0.3, 0.02, 4);
  Rng a(77), b(77);
  for (int trial = 0; trial < 10; ++trial) {
    const PoseWindow wa = sampler.sample(a);
    const PoseWindow wb = sampler.sample(b);
    ASSERT_EQ(wa.frames.size(), wb.frames.size());
    for (size_t f = 0; f < wa.frames.size(); ++f)
      expect_bitwise(wa.frames[f].joint_rotations, wb.frames[f].joint_rotations, "pose");
  }
}

TEST(PoseSampler, RejectsBadConfiguration) {
  EXPECT_THROW(PoseSampler::procedural(9, {2}, 0.3, 0.02, 1), std::invalid_argument);
  EXPECT_THROW(PoseSampler::procedural(9, {3}, 0.3, 0.02, 4), std::invalid_argument);
  EXPECT_THROW(PoseSampler::procedural(9, {-1}, 0.3, 0.02, 4), std::invalid_argument);
}

TEST(PoseSampler, SequenceWindowsSliceLoadedFrames) {
  std::vector<PoseParams> frames;
  for (int f = 0; f < 12; ++f) {
    PoseParams p = PoseParams::rest(6);
    p.joint_rotations[3] = 0.01 * f;
    frames.push_back(p);
  }
  const PoseSampler sampler = PoseSampler::from_sequence(frames, 3);
  EXPECT_EQ(sampler.pose_dim(), 6);
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const PoseWindow window = sampler.sample(rng);
    ASSERT_EQ(window.frames.size(), 3u);
    const int start = int(std::lround(window.frames[0].joint_rotations[3] / 0.01));
    ASSERT_GE(start, 0);
    ASSERT_LE(start, 9);
    for (int f = 0; f < 3; ++f)
      expect_bitwise(window.frames[f].joint_rotations, frames[start + f].joint_rotations,
                     "slice");
  }
  EXPECT_THROW(PoseSampler::from_sequence(frames, 13), std::invalid_argument);
}

TEST(TrainConfig, ValidateRejectsBadValues) {
  TrainConfig c;
  c.steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.z_dim = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.hidden = {16, 0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.checkpoint_every = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Training, SmokeRunWritesHistoryAndFiles) {
  TrainSetup setup;
  setup.config.out_dir = temp_dir("quaffure_train_smoke");
  const TrainedModel model =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, setup.config);

  EXPECT_EQ(model.step, 10);
  ASSERT_EQ(model.history.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(model.history[i].step, i);
    EXPECT_TRUE(std::isfinite(model.history[i].total));
    EXPECT_GE(model.history[i].pose_reg, 0.0);
    if (i > 0) EXPECT_GE(model.history[i].wall_seconds, model.history[i - 1].wall_seconds);
  }
  EXPECT_EQ(model.embedding.rows(), 2);
  EXPECT_EQ(model.embedding.dim(), 4);
  EXPECT_EQ(model.embedding.names[0], "straight");
  EXPECT_EQ(model.net.output_dim(), 3 * 4 * 6);

  EXPECT_TRUE(std::filesystem::exists(setup.config.out_dir + "/checkpoint.json"));
  EXPECT_TRUE(std::filesystem::exists(setup.config.out_dir + "/checkpoint.bin"));
  EXPECT_TRUE(std::filesystem::exists(setup.config.out_dir + "/training_log.csv"));
  std::ifstream log(setup.config.out_dir + "/training_log.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "step,total,elastic,gravity,body_collision,self_collision,pose_reg,wall_seconds");
  int rows = 0;
  for (std::string line; std::getline(log, line);)
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 10);
}

TEST(Training, BitwiseDeterministicAcrossRuns) {
  TrainSetup setup;
  const TrainedModel a =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, setup.config);
  const TrainedModel b =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, setup.config);
  expect_models_equal(a, b, true);
  EXPECT_EQ(a.rng_state, b.rng_state);
}

TEST(Training, RejectsMismatchedInputs) {
  TrainSetup setup;
  std::vector<Groom> uneven = setup.grooms;
  uneven[1] = make_scalp_groom(setup.fx, 4, 7, 0.08, StrandShape::wavy, "wavy7");
  EXPECT_THROW(train_decoder(uneven, setup.fx.body, setup.sampler(), setup.material,
                             setup.config),
               std::invalid_argument);
  const PoseSampler wrong_dim = PoseSampler::procedural(6, {1}, 0.3, 0.03, 2);
  EXPECT_THROW(
      train_decoder(setup.grooms, setup.fx.body, wrong_dim, setup.material, setup.config),
      std::invalid_argument);
  EXPECT_THROW(train_decoder({}, setup.fx.body, setup.sampler(), setup.material, setup.config),
               std::invalid_argument);
}

TEST(Checkpoint, RoundTripRestoresEverything) {
  TrainSetup setup;
  TrainedModel model =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, setup.config);
  const std::string prefix = temp_dir("quaffure_ckpt_rt") + "/checkpoint";
  save_checkpoint(model, prefix);
  const TrainedModel back = load_checkpoint(prefix);
  expect_models_equal(model, back, true);
  EXPECT_EQ(model.rng_state, back.rng_state);
  for (size_t i = 0; i < model.history.size(); ++i)
    EXPECT_EQ(model.history[i].wall_seconds, back.history[i].wall_seconds);
  EXPECT_THROW(load_checkpoint(prefix + "_missing"), std::runtime_error);

  TrainedModel hollow = model;
  hollow.m_net.weights.clear();
  EXPECT_THROW(save_checkpoint(hollow, prefix + "_hollow"), std::invalid_argument);
}

TEST(Training, ResumeMatchesStraightRun) {
  TrainSetup setup;
  TrainConfig straight = setup.config;
  straight.steps = 6;
  const TrainedModel whole =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, straight);

  TrainConfig half = setup.config;
  half.steps = 3;
  half.checkpoint_every = 3;
  half.out_dir = temp_dir("quaffure_resume");
  train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, half);
  TrainedModel loaded = load_checkpoint(half.out_dir + "/checkpoint");
  EXPECT_EQ(loaded.step, 3);
  TrainConfig rest = half;
  rest.out_dir.clear();
  const TrainedModel resumed = train_decoder(setup.grooms, setup.fx.body, setup.sampler(),
                                             setup.material, rest, &loaded);

  EXPECT_EQ(resumed.step, 6);
  expect_models_equal(whole, resumed, true);
  EXPECT_EQ(whole.rng_state, resumed.rng_state);
}

TEST(Training, ResumeRejectsMismatchedGrooms) {
  TrainSetup setup;
  TrainedModel model =
      train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material, setup.config);
  std::vector<Groom> other = {setup.grooms[0]};
  EXPECT_THROW(train_decoder(other, setup.fx.body, setup.sampler(), setup.material,
                             setup.config, &model),
               std::invalid_argument);
}

TEST(Training, NonFiniteLossDumpsAndThrows) {
  TrainSetup setup;
  setup.config.learning_rate = 1e120;
  setup.config.steps = 5;
  setup.config.out_dir = temp_dir("quaffure_nan_dump");
  EXPECT_THROW(train_decoder(setup.grooms, setup.fx.body, setup.sampler(), setup.material,
                             setup.config),
               TrainingError);
  const std::string dump_path = setup.config.out_dir + "/nan_dump.json";
  ASSERT_TRUE(std::filesystem::exists(dump_path));
  std::ifstream in(dump_path);
  nlohmann::json dump;
  in >> dump;
  EXPECT_TRUE(dump.contains("step"));
  EXPECT_TRUE(dump.contains("groom"));
  ASSERT_TRUE(dump.contains("pose_window"));
  EXPECT_GT(dump["pose_window"].size(), 0u);
}

namespace {

// Trained shape with the final layer zeroed, so the decoder emits exactly
// zero deformation.
TrainedModel zero_deformation_model(const Groom& groom, const BodyModel& body) {
  TrainedModel model;
  Rng rng(31);
  const int out = 3 * int(groom.strands.size()) * groom.verts_per_strand();
  model.net.init(4, body.shape_dim(), body.pose_dim(), {8}, out, rng);
  model.net.weights.back().setZero();
  model.net.biases.back().setZero();
  model.embedding.table = MatX::Constant(1, 4, 0.2);
  model.embedding.names = {groom.name};
  model.rest_signatures = MatX(1, out);
  model.rest_signatures.row(0) = groom.flatten_positions().transpose();
  model.n_strands = int(groom.strands.size());
  model.verts = groom.verts_per_strand();
  model.m_net.zero_like(model.net);
  model.v_net.zero_like(model.net);
  model.m_emb = MatX::Zero(1, 4);
  model.v_emb = MatX::Zero(1, 4);
  return model;
}

}  // namespace

TEST(Inference, ZeroNetReturnsPosedPositions) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 5, 7, 0.1, StrandShape::wavy, "inference");
  const TrainedModel model = zero_deformation_model(groom, fx.body);

  PoseParams pose = PoseParams::rest(fx.body.pose_dim());
  pose.joint_rotations[6] = 0.3;
  const ShapeParams shape = ShapeParams::rest(fx.body.shape_dim());

  const InferenceResult result = infer_drape(model, 0, shape, pose, groom, fx.body);
  ASSERT_EQ(result.x_hair.size(), 3 * 5 * 7);
  EXPECT_GE(result.seconds, 0.0);

  const PosedBody posed = skin_body(fx.body, shape, pose);
  const std::vector<RootFrame> rest_frames = build_root_frames(groom, fx.body.mesh);
  const std::vector<RootFrame> posed_frames = build_root_frames(groom, posed.mesh);
  const RestEmbedding emb = embed_strands(groom, rest_frames);
  const VecX x_posed = pose_groom(groom, emb, posed_frames);
  expect_bitwise(result.x_hair, x_posed, "zero-deformation inference");

  EXPECT_THROW(infer_drape(model, 1, shape, pose, groom, fx.body), std::out_of_range);
  EXPECT_THROW(infer_drape(model, -1, shape, pose, groom, fx.body), std::out_of_range);
}

TEST(Inference, ResolveEmbeddingRowPaths) {
  const FixtureBody fx = make_fixture_body();
  const Groom a = make_scalp_groom(fx, 4, 6, 0.08, StrandShape::straight, "alpha");
  const Groom b = make_scalp_groom(fx, 4, 6, 0.08, StrandShape::helical, "beta");

  TrainedModel model;
  model.embedding.names = {"alpha", "beta"};
  model.embedding.table = MatX::Zero(2, 3);
  model.rest_signatures = MatX(2, a.flatten_positions().size());
  model.rest_signatures.row(0) = a.flatten_positions().transpose();
  model.rest_signatures.row(1) = b.flatten_positions().transpose();

  EXPECT_EQ(resolve_embedding_row(model, a, false), 0);
  EXPECT_EQ(resolve_embedding_row(model, b, false), 1);

  Groom renamed = b;
  renamed.name = "unknown";
  EXPECT_THROW(resolve_embedding_row(model, renamed, false), UnknownGroomError);
  EXPECT_EQ(resolve_embedding_row(model, renamed, true), 1);

  const Groom small = make_scalp_groom(fx, 3, 6, 0.08, StrandShape::straight, "small");
  EXPECT_THROW(resolve_embedding_row(model, small, true), UnknownGroomError);
}
