// Writes the procedural body, synthetic grooms, and pose sweeps used by the
// example configs and end-to-end tests.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "quaffure/quaffure.hpp"

namespace fs = std::filesystem;
using namespace quaffure;

int main(int argc, char** argv) {
  CLI::App app{"generate procedural body, groom, and pose fixtures"};
  std::string out = "fixtures/generated";
  int n_strands = 20, verts = 24;
  double length = 0.25;
  app.add_option("--out", out, "output directory");
  app.add_option("--strands", n_strands, "strands per groom");
  app.add_option("--verts", verts, "vertices per strand");
  app.add_option("--length", length, "strand length in meters");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    fs::create_directories(out);
    const FixtureBody fx = make_fixture_body();
    save_obj(fixture_body_obj(fx), out + "/body.obj");
    save_body_sidecar(fx.body, out + "/body.rig.json");

    save_groom(make_scalp_groom(fx, n_strands, verts, length, StrandShape::straight, "straight"),
               out + "/groom_straight.qgr");
    save_groom(make_scalp_groom(fx, n_strands, verts, length, StrandShape::wavy, "wavy"),
               out + "/groom_wavy.qgr");
    save_groom(make_scalp_groom(fx, n_strands, verts, length, StrandShape::helical, "helical"),
               out + "/groom_helix.qgr");
    save_groom(make_single_strand(Vec3(0, 0, 0), Vec3(1, 0, 0), 0.24, verts, "hanging"),
               out + "/single_strand.json");

    save_pose_sequence(make_joint_sweep(fx.body.pose_dim(), 2, 0, -0.5, 0.5, 60),
                       out + "/head_sweep.txt");

    std::cout << "fixtures written to " << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
