#include "quaffure/evaluate.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "quaffure/drape.hpp"
#include "quaffure/fixtures.hpp"
#include "test_util.hpp"

using namespace quaffure;

namespace {

// Brute-force replacement for the BVH query: nearest point over every
// triangle, sign along the owning triangle's normal.
double reference_signed_distance(const Vec3& p, const TriMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_point = Vec3::Zero(), best_normal = Vec3::Zero();
  for (const auto& tri : mesh.triangles) {
    const Vec3 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    const Vec3 q = testutil::closest_point_reference(p, a, b, c);
    const double d = (p - q).norm();
    if (d < best) {
      best = d;
      best_point = q;
      best_normal = (b - a).cross(c - a).normalized();
    }
  }
  return (p - best_point).dot(best_normal);
}

}  // namespace

TEST(Metrics, MatchesIndependentRecomputation) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 4, 6, 0.09, StrandShape::wavy, "metrics");
  const MaterialParams material;
  const DrapeScene scene = build_scene(groom, fx.body, ShapeParams::rest(fx.body.shape_dim()),
                                       PoseParams::rest(fx.body.pose_dim()), material);

  Rng rng(17);
  VecX x = scene.x_posed;
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += rng.uniform(-5e-3, 5e-3);

  const MetricsRecord rec = compute_metrics(x, scene.ctx);

  int inside = 0;
  const int n_verts = scene.ctx.topo.vertex_count();
  for (int i = 0; i < n_verts; ++i)
    if (reference_signed_distance(x.segment<3>(3 * i), *scene.ctx.body) < 0) ++inside;
  EXPECT_NEAR(rec.body_intersection_pct, 100.0 * inside / n_verts, 1e-12);

  double length = 0, orientation = 0;
  for (int s = 0; s < 4; ++s)
    for (int v = 0; v + 1 < 6; ++v) {
      const Vec3 posed_edge = scene.x_posed.segment<3>(3 * scene.ctx.topo.vertex(s, v + 1)) -
                              scene.x_posed.segment<3>(3 * scene.ctx.topo.vertex(s, v));
      const Vec3 edge = x.segment<3>(3 * scene.ctx.topo.vertex(s, v + 1)) -
                        x.segment<3>(3 * scene.ctx.topo.vertex(s, v));
      length += std::abs(edge.norm() - groom.strands[s].rest_lengths[v]);
      orientation += std::acos(
          std::clamp(edge.normalized().dot(posed_edge.normalized()), -1.0, 1.0));
    }
  EXPECT_NEAR(rec.length_preservation, length, 1e-12);
  EXPECT_NEAR(rec.orientation_preservation, orientation, 1e-10);

  double gravity = 0;
  for (int i = 0; i < n_verts; ++i)
    gravity -= material.vertex_mass * material.gravity.dot(x.segment<3>(3 * i));
  EXPECT_NEAR(rec.gravity_potential, gravity, 1e-12);
}

TEST(Metrics, PosedRestIsClean) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 5, 7, 0.1, StrandShape::straight, "clean");
  const MaterialParams material;
  const DrapeScene scene = build_scene(groom, fx.body, ShapeParams::rest(fx.body.shape_dim()),
                                       PoseParams::rest(fx.body.pose_dim()), material);
  const MetricsRecord rec = compute_metrics(scene.x_posed, scene.ctx);
  EXPECT_EQ(rec.body_intersection_pct, 0.0);
  EXPECT_LE(rec.length_preservation, 1e-10);
  EXPECT_LE(rec.orientation_preservation, 1e-5);
  double gravity = 0;
  for (int i = 0; i < scene.ctx.topo.vertex_count(); ++i)
    gravity -= material.vertex_mass * material.gravity.dot(scene.x_posed.segment<3>(3 * i));
  EXPECT_NEAR(rec.gravity_potential, gravity, 1e-12);
}

TEST(Metrics, RejectsWrongPositionSize) {
  const Groom groom = make_single_strand(Vec3::Zero(), Vec3(0, 0, 1), 0.1, 5);
  const DrapeScene scene = build_free_scene(groom, MaterialParams{});
  EXPECT_THROW(compute_metrics(VecX::Zero(7), scene.ctx), std::invalid_argument);
}

TEST(LinearFit, PerfectLineScoresOne) {
  const std::vector<double> xs = {1, 2, 5, 9};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.5 * x - 2.0);
  EXPECT_NEAR(linear_fit_r2(xs, ys), 1.0, 1e-12);
  const std::vector<double> flat = {4.0, 4.0, 4.0, 4.0};
  EXPECT_EQ(linear_fit_r2(xs, flat), 1.0);
}

TEST(LinearFit, MatchesCorrelationIdentity) {
  const std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  const std::vector<double> ys = {2.1, 3.9, 6.2, 7.8, 10.3, 11.7};
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = double(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    syy += ys[i] * ys[i];
    sxy += xs[i] * ys[i];
  }
  const double num = (n * sxy - sx * sy) * (n * sxy - sx * sy);
  const double den = (n * sxx - sx * sx) * (n * syy - sy * sy);
  EXPECT_NEAR(linear_fit_r2(xs, ys), num / den, 1e-12);
}

TEST(LinearFit, RejectsDegenerateInputs) {
  EXPECT_THROW(linear_fit_r2({1.0}, {2.0}), std::invalid_argument);
  EXPECT_THROW(linear_fit_r2({3.0, 3.0, 3.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST(MetricsCsv, HeaderAndRowFormat) {
  std::ostringstream out;
  write_metrics_csv_header(out);
  MetricsRecord rec;
  rec.time_seconds = 0.5;
  rec.body_intersection_pct = 1.25;
  rec.length_preservation = 0.0125;  // meters, written as millimeters
  rec.orientation_preservation = 0.75;
  rec.gravity_potential = -3.5;
  write_metrics_csv_row(out, "lbfgs", rec);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header,
            "label,time_seconds,body_intersection_pct,length_preservation_mm,"
            "orientation_preservation_rad,gravity_potential");
  EXPECT_EQ(row, "lbfgs,0.5,1.25,12.5,0.75,-3.5");
}

TEST(BenchCsv, RowsAndFitLine) {
  BenchResult bench;
  bench.rows.push_back({1, 2.0, 2.0});
  bench.rows.push_back({10, 20.0, 2.0});
  bench.linear_fit_r2 = 0.5;
  const auto path = (std::filesystem::temp_directory_path() / "quaffure_bench.csv").string();
  write_bench_csv(bench, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "batch,total_ms,per_item_ms");
  std::getline(in, line);
  EXPECT_EQ(line, "1,2,2");
  std::getline(in, line);
  EXPECT_EQ(line, "10,20,2");
  std::getline(in, line);
  EXPECT_EQ(line, "# linear_fit_r2,0.5");
}

namespace {

TrainedModel minimal_model(const Groom& groom, const BodyModel& body) {
  TrainedModel model;
  Rng rng(29);
  const int out = 3 * int(groom.strands.size()) * groom.verts_per_strand();
  model.net.init(4, body.shape_dim(), body.pose_dim(), {8}, out, rng);
  model.embedding.table = MatX::Constant(1, 4, 0.1);
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

TEST(Bench, ScalingRunsAndFits) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 4, 6, 0.08, StrandShape::straight, "bench");
  const TrainedModel model = minimal_model(groom, fx.body);

  PoseParams turned = PoseParams::rest(fx.body.pose_dim());
  turned.joint_rotations[6] = 0.2;
  const std::vector<PoseParams> poses = {PoseParams::rest(fx.body.pose_dim()), turned};

  const BenchResult bench = bench_scaling(model, {groom}, fx.body, poses, {1, 2, 4}, 1, 3);
  ASSERT_EQ(bench.rows.size(), 3u);
  const int expected_batches[] = {1, 2, 4};
  for (size_t i = 0; i < bench.rows.size(); ++i) {
    EXPECT_EQ(bench.rows[i].batch, expected_batches[i]);
    EXPECT_GE(bench.rows[i].total_ms, 0.0);
    EXPECT_DOUBLE_EQ(bench.rows[i].per_item_ms, bench.rows[i].total_ms / bench.rows[i].batch);
  }
  EXPECT_TRUE(std::isfinite(bench.linear_fit_r2));
  EXPECT_LE(bench.linear_fit_r2, 1.0 + 1e-12);

  EXPECT_THROW(bench_scaling(model, {}, fx.body, poses, {1}), std::invalid_argument);
  EXPECT_THROW(bench_scaling(model, {groom}, fx.body, poses, {0}), std::invalid_argument);
  EXPECT_THROW(bench_scaling(model, {groom}, fx.body, poses, {1}, 0, 0),
               std::invalid_argument);
}
