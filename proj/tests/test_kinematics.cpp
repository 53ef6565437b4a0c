#include <gtest/gtest.h>

#include "quaffure/body.hpp"
#include "quaffure/fixtures.hpp"
#include "quaffure/kinematics.hpp"
#include "test_util.hpp"

using namespace quaffure;

TEST(RootFrames, OrthonormalRightHanded) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 12, 8, 0.1, StrandShape::straight, "frames");
  const auto frames = build_root_frames(groom, fx.body.mesh);
  ASSERT_EQ(frames.size(), 12u);
  for (const RootFrame& f : frames) {
    EXPECT_LT((f.basis * f.basis.transpose() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(f.basis.determinant(), 1.0, 1e-12);
    // third column is the triangle normal
    const Vec3 n = f.basis.col(2);
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  }
}

TEST(RootFrames, OriginAtBarycentricPoint) {
  const FixtureBody fx = make_fixture_body();
  const TriMesh& mesh = fx.body.mesh;
  const Vec3 bary(0.2, 0.3, 0.5);
  const RootFrame f = root_frame_on_triangle(mesh, 0, bary);
  const auto& tri = mesh.triangles[0];
  const Vec3 expect = bary[0] * mesh.vertices[size_t(tri[0])] +
                      bary[1] * mesh.vertices[size_t(tri[1])] +
                      bary[2] * mesh.vertices[size_t(tri[2])];
  EXPECT_LT((f.origin - expect).norm(), 1e-15);
}

TEST(RootFrames, ThrowsOnMissingAttachment) {
  const FixtureBody fx = make_fixture_body();
  Groom groom = make_scalp_groom(fx, 3, 6, 0.1, StrandShape::straight, "detached");
  groom.strands[1].attachment.triangle = -1;
  EXPECT_THROW(build_root_frames(groom, fx.body.mesh), std::runtime_error);
}

TEST(Transport, IdentityAtRestPose) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 10, 12, 0.15, StrandShape::wavy, "identity");
  const auto rest_frames = build_root_frames(groom, fx.body.mesh);
  const RestEmbedding emb = embed_strands(groom, rest_frames);
  const VecX x = pose_groom(groom, emb, rest_frames);
  EXPECT_LT((x - groom.flatten_positions()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transport, RigidMotionOfScalpIsRigidMotionOfStrands) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 8, 10, 0.12, StrandShape::helical, "rigid");
  const auto rest_frames = build_root_frames(groom, fx.body.mesh);
  const RestEmbedding emb = embed_strands(groom, rest_frames);

  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 R = axis_angle_to_matrix(rng.normal_vec3());
    const Vec3 t = 0.3 * rng.normal_vec3();
    TriMesh moved = fx.body.mesh;
    for (Vec3& v : moved.vertices) v = R * v + t;
    const auto posed_frames = build_root_frames(groom, moved);
    const VecX x = pose_groom(groom, emb, posed_frames);
    const VecX x0 = groom.flatten_positions();
    for (int i = 0; i < groom.total_vertices(); ++i) {
      const Vec3 expect = R * Vec3(x0.segment<3>(3 * i)) + t;
      EXPECT_LT((Vec3(x.segment<3>(3 * i)) - expect).norm(), 1e-10);
    }
  }
}

TEST(Transport, PreservesSegmentLengthsUnderPosing) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 6, 9, 0.1, StrandShape::wavy, "lengths");
  const auto rest_frames = build_root_frames(groom, fx.body.mesh);
  const RestEmbedding emb = embed_strands(groom, rest_frames);

  PoseParams pose = PoseParams::rest(fx.body.pose_dim());
  pose.joint_rotations.segment<3>(6) = Vec3(0.3, 0.1, -0.2);
  const PosedBody posed = skin_body(fx.body, ShapeParams::rest(fx.body.shape_dim()), pose);
  const auto posed_frames = build_root_frames(groom, posed.mesh);
  const VecX x = pose_groom(groom, emb, posed_frames);

  const int n = groom.verts_per_strand();
  for (int s = 0; s < groom.strand_count(); ++s)
    for (int e = 0; e + 1 < n; ++e) {
      const Vec3 a = x.segment<3>(3 * (s * n + e));
      const Vec3 b = x.segment<3>(3 * (s * n + e + 1));
      EXPECT_NEAR((b - a).norm(), groom.strands[s].rest_lengths[size_t(e)], 1e-12);
    }
}

TEST(Compose, TextureAndFlatAgree) {
  const FixtureBody fx = make_fixture_body();
  Groom groom = make_scalp_groom(fx, 5, 7, 0.1, StrandShape::straight, "compose");
  const TextureLayout layout = layout_for_groom(groom, 8);
  const DisplacementTexture posed_tex = texture_encode(groom, layout);

  Rng rng(52);
  Groom disp = groom;
  for (Strand& s : disp.strands)
    for (Vec3& p : s.positions) p = 0.01 * rng.normal_vec3();
  const DisplacementTexture disp_tex = texture_encode(disp, layout);

  const DisplacementTexture sum_tex = compose_drape(posed_tex, disp_tex, layout);
  const VecX flat = compose_drape(groom.flatten_positions(), disp.flatten_positions());

  const auto decoded = texture_decode(sum_tex, layout);
  const int n = groom.verts_per_strand();
  for (int s = 0; s < groom.strand_count(); ++s)
    for (int v = 0; v < n; ++v)
      EXPECT_LT((decoded[size_t(s)][size_t(v)] - Vec3(flat.segment<3>(3 * (s * n + v)))).norm(),
                1e-15);

  EXPECT_THROW(compose_drape(VecX::Zero(3), VecX::Zero(6)), std::invalid_argument);
}

TEST(AttachRoots, RecoversProjectedAttachment) {
  const FixtureBody fx = make_fixture_body();
  Groom groom = make_scalp_groom(fx, 15, 6, 0.08, StrandShape::straight, "attach");
  const Groom original = groom;
  for (Strand& s : groom.strands) s.attachment = ScalpAttachment{};
  attach_roots(groom, fx.body.mesh);
  for (int s = 0; s < groom.strand_count(); ++s) {
    ASSERT_GE(groom.strands[s].attachment.triangle, 0);
    // roots sit on the analytic sphere, so the mesh projection lands within
    // the chord sagitta of the 12x24 tessellation (about 1mm at r = 0.1)
    const RootFrame f = root_frame_on_triangle(fx.body.mesh, groom.strands[s].attachment.triangle,
                                               groom.strands[s].attachment.barycentric);
    EXPECT_LT((f.origin - original.strands[s].positions[0]).norm(), 1.5e-3);
  }
  groom.validate();
}

TEST(EdgeDirectors, UnitAndOrdered) {
  const FixtureBody fx = make_fixture_body();
  const Groom groom = make_scalp_groom(fx, 4, 6, 0.1, StrandShape::wavy, "dirs");
  const VecX x = groom.flatten_positions();
  const auto dirs = edge_directors(x, 4, 6);
  ASSERT_EQ(dirs.size(), size_t(4) * 5);
  const int n = 6;
  for (int s = 0; s < 4; ++s)
    for (int e = 0; e < 5; ++e) {
      const Vec3 a = x.segment<3>(3 * (s * n + e));
      const Vec3 b = x.segment<3>(3 * (s * n + e + 1));
      EXPECT_LT((dirs[size_t(s * 5 + e)] - (b - a).normalized()).norm(), 1e-12);
    }
  EXPECT_THROW(edge_directors(VecX::Zero(10), 4, 6), std::invalid_argument);
}
