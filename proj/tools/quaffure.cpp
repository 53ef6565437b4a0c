// Command-line front end: drape, train, infer, gradcheck, metrics, bench,
// convert. Settings come from an INI-style config file; the shared flags
// --config/--solver/--iters/--seed/--threads/--out/--deterministic override
// file keys. Exit codes: 0 success, 1 runtime failure, 2 usage/validation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quaffure/quaffure.hpp"

namespace fs = std::filesystem;
using namespace quaffure;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string solver;
  int iters = -1;
  std::int64_t seed = -1;
  int threads = 0;
  std::string out;
  bool deterministic = false;
  bool nearest_embedding = false;
};

RunConfig merged_config(const CliOverrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig() : RunConfig::from_file(o.config_path);
  if (!o.solver.empty()) cfg.set("solver", "method", o.solver);
  if (o.iters >= 0) {
    cfg.set("solver", "max_iterations", std::to_string(o.iters));
    cfg.set("train", "steps", std::to_string(o.iters));
  }
  if (o.seed >= 0) cfg.set("run", "seed", std::to_string(o.seed));
  if (o.threads > 0) cfg.set("run", "threads", std::to_string(o.threads));
  if (!o.out.empty()) cfg.set("paths", "out_dir", o.out);
  if (o.deterministic) cfg.set("run", "deterministic", "true");
  if (o.nearest_embedding) cfg.set("infer", "nearest_embedding", "true");
  return cfg;
}

struct RunContext {
  std::uint64_t seed = 42;
  int threads = 1;
  bool deterministic = true;
  std::string out_dir;
};

RunContext run_context(const RunConfig& cfg) {
  RunContext rc;
  rc.seed = std::uint64_t(cfg.get_int("run", "seed", 42));
  rc.threads = resolve_threads(cfg.get_int("run", "threads", 0));
  rc.deterministic = cfg.get_bool("run", "deterministic", true);
  rc.out_dir = cfg.get("paths", "out_dir", ".");
  fs::create_directories(rc.out_dir);
  return rc;
}

std::string require_file(const RunConfig& cfg, const std::string& section,
                         const std::string& key) {
  const std::string path = cfg.require(section, key);
  if (!fs::exists(path))
    throw ConfigError("file not found: " + path + " (from [" + section + "] " + key + ")");
  return path;
}

std::optional<BodyModel> maybe_load_body(const RunConfig& cfg) {
  if (!cfg.has("paths", "body_obj")) return std::nullopt;
  return load_body(require_file(cfg, "paths", "body_obj"), require_file(cfg, "paths", "body_rig"));
}

// Groom interchange files carry root UVs and positions only; recover scalp
// attachments by projection when a body is in play.
void ensure_attached(Groom& groom, const BodyModel& body) {
  for (const Strand& s : groom.strands)
    if (s.attachment.triangle < 0) {
      attach_roots(groom, body.mesh);
      return;
    }
}

PoseParams select_pose(const RunConfig& cfg, const BodyModel& body) {
  if (!cfg.has("paths", "pose_sequence")) return PoseParams::rest(body.pose_dim());
  const auto frames =
      load_pose_sequence(require_file(cfg, "paths", "pose_sequence"), body.pose_dim());
  const int frame = cfg.get_int("pose", "frame", 0);
  if (frame < 0 || frame >= int(frames.size()))
    throw ConfigError("pose frame " + std::to_string(frame) + " outside sequence of " +
                      std::to_string(frames.size()));
  return frames[size_t(frame)];
}

DrapeScene scene_from_config(const RunConfig& cfg, Groom groom, const MaterialParams& material,
                             const RunContext& rc) {
  const std::optional<BodyModel> body = maybe_load_body(cfg);
  if (!body) return build_free_scene(groom, material, rc.threads, rc.deterministic);
  ensure_attached(groom, *body);
  const PoseParams pose = select_pose(cfg, *body);
  pose.validate(body->pose_dim());
  return build_scene(groom, *body, ShapeParams::rest(body->shape_dim()), pose, material,
                     rc.threads, rc.deterministic);
}

// ---------------------------------------------------------------------------

int cmd_drape(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const MaterialParams material = material_from_config(cfg);
  const SolveConfig solve = solve_config_from_config(cfg);
  const Groom groom = load_groom(require_file(cfg, "paths", "groom"));
  DrapeScene scene = scene_from_config(cfg, groom, material, rc);

  const std::string drape_path = cfg.get("paths", "drape_out", rc.out_dir + "/drape.qgr");
  const std::string trace_path = rc.out_dir + "/trace.csv";
  try {
    const EquilibriumResult result = solve_drape(scene, solve);
    Groom out = scene.groom;
    out.set_positions(result.positions);
    save_groom(out, drape_path);
    write_trace_csv(result.trace, trace_path);

    MetricsRecord metrics = compute_metrics(result.positions, scene.ctx);
    metrics.time_seconds = result.duration_seconds;
    std::ofstream mcsv(rc.out_dir + "/metrics.csv");
    write_metrics_csv_header(mcsv);
    write_metrics_csv_row(mcsv, groom.name.empty() ? "drape" : groom.name, metrics);

    std::cout << "drape: " << solve_method_name(solve.method) << " finished in "
              << result.iterations << " iterations ("
              << (result.converged ? "converged" : "iteration cap") << "), energy "
              << result.trace.back().total << ", wrote " << drape_path << "\n";
    return 0;
  } catch (const SolverError& err) {
    write_trace_csv(err.trace(), trace_path);
    std::cerr << "drape failed: " << err.what() << "; trace written to " << trace_path << "\n";
    return 1;
  }
}

int cmd_train(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const MaterialParams material = material_from_config(cfg);
  TrainConfig tc = train_config_from_config(cfg);
  tc.seed = rc.seed;
  tc.threads = rc.threads;
  tc.deterministic = rc.deterministic;
  tc.out_dir = rc.out_dir;

  std::vector<std::string> groom_paths = cfg.get_list("paths", "grooms");
  if (groom_paths.empty() && cfg.has("paths", "groom"))
    groom_paths.push_back(cfg.get("paths", "groom", ""));
  if (groom_paths.empty()) throw ConfigError("missing required config key [paths] grooms");
  std::vector<Groom> grooms;
  for (const std::string& p : groom_paths) {
    if (!fs::exists(p)) throw ConfigError("file not found: " + p + " (from [paths] grooms)");
    grooms.push_back(load_groom(p));
  }

  const std::optional<BodyModel> body = maybe_load_body(cfg);
  if (!body) throw ConfigError("training requires [paths] body_obj and body_rig");
  for (Groom& g : grooms) ensure_attached(g, *body);

  const int window = material.n_pose_reg;
  PoseSampler sampler = [&] {
    const std::string source = cfg.get("sampler", "source", "procedural");
    if (source == "sequence") {
      auto frames =
          load_pose_sequence(require_file(cfg, "paths", "pose_sequence"), body->pose_dim());
      return PoseSampler::from_sequence(std::move(frames), window);
    }
    if (source != "procedural") throw ConfigError("unknown sampler source: " + source);
    std::vector<int> joints;
    if (cfg.has("sampler", "active_joints")) {
      for (const std::string& j : cfg.get_list("sampler", "active_joints")) {
        try {
          joints.push_back(std::stoi(j));
        } catch (const std::exception&) {
          throw ConfigError("config key [sampler] active_joints has a non-integer entry: " + j);
        }
      }
    } else {
      for (int j = 0; j < int(body->joints.size()); ++j) joints.push_back(j);
    }
    const double max_angle = cfg.get_double("sampler", "max_angle_deg", 30.0) * M_PI / 180.0;
    const double max_step = cfg.get_double("sampler", "max_step_deg", 2.0) * M_PI / 180.0;
    return PoseSampler::procedural(body->pose_dim(), std::move(joints), max_angle, max_step,
                                   window);
  }();

  TrainedModel resume_model;
  TrainedModel* resume = nullptr;
  if (cfg.has("train", "resume")) {
    resume_model = load_checkpoint(cfg.require("train", "resume"));
    resume = &resume_model;
  }

  const TrainedModel model = train_decoder(grooms, *body, sampler, material, tc, resume);
  std::cout << "train: " << model.step << " steps, loss "
            << (model.history.empty() ? 0.0 : model.history.front().total) << " -> "
            << (model.history.empty() ? 0.0 : model.history.back().total) << ", checkpoint "
            << rc.out_dir << "/checkpoint.{json,bin}\n";
  return 0;
}

int cmd_infer(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const std::string prefix = cfg.require("paths", "checkpoint");
  if (!fs::exists(prefix + ".json"))
    throw ConfigError("checkpoint manifest not found: " + prefix + ".json");
  const TrainedModel model = load_checkpoint(prefix);

  Groom groom = load_groom(require_file(cfg, "paths", "groom"));
  if (int(groom.strands.size()) != model.n_strands || groom.verts_per_strand() != model.verts)
    throw ConfigError("groom resolution does not match the checkpoint (" +
                      std::to_string(groom.strands.size()) + "x" +
                      std::to_string(groom.verts_per_strand()) + " vs " +
                      std::to_string(model.n_strands) + "x" + std::to_string(model.verts) + ")");
  const std::optional<BodyModel> body = maybe_load_body(cfg);
  if (!body) throw ConfigError("inference requires [paths] body_obj and body_rig");
  ensure_attached(groom, *body);

  std::vector<PoseParams> frames;
  if (cfg.has("paths", "pose_sequence"))
    frames = load_pose_sequence(require_file(cfg, "paths", "pose_sequence"), body->pose_dim());
  else
    frames.push_back(PoseParams::rest(body->pose_dim()));

  const bool nearest = cfg.get_bool("infer", "nearest_embedding", false);
  const int row = resolve_embedding_row(model, groom, nearest);
  const ShapeParams shape = ShapeParams::rest(body->shape_dim());

  std::ofstream tcsv(rc.out_dir + "/timing.csv");
  if (!tcsv) throw std::runtime_error("cannot open for writing: " + rc.out_dir + "/timing.csv");
  tcsv.precision(17);
  tcsv << "frame,seconds\n";
  double total_s = 0;
  for (size_t f = 0; f < frames.size(); ++f) {
    const InferenceResult r = infer_drape(model, row, shape, frames[f], groom, *body);
    Groom out = groom;
    out.set_positions(r.x_hair);
    char name[32];
    std::snprintf(name, sizeof name, "drape_%04zu.qgr", f);
    save_groom(out, rc.out_dir + "/" + name);
    tcsv << f << "," << r.seconds << "\n";
    total_s += r.seconds;
  }
  std::cout << "infer: " << frames.size() << " frames (embedding row " << row << ", "
            << total_s / double(frames.size()) << " s/frame mean) -> " << rc.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck: finite-difference validation of every analytic gradient.

struct TermCheck {
  std::string term;
  int configs = 0;
  double max_rel_err = 0;
};

// Test hook: QUAFFURE_GRADCHECK_FAULT=<term> corrupts that term's analytic
// gradient so the harness itself can be validated end to end.
void apply_fault(const std::string& term, VecX& grad) {
  const char* f = std::getenv("QUAFFURE_GRADCHECK_FAULT");
  if (f && term == f && grad.size() > 0)
    grad[0] += 1e-2 * (1.0 + grad.cwiseAbs().maxCoeff());
}

int cmd_gradcheck(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const MaterialParams mp = material_from_config(cfg);
  const int n_configs = cfg.get_int("gradcheck", "configs", 100);
  const double tolerance = cfg.get_double("gradcheck", "tolerance", 1e-5);
  const double step = cfg.get_double("gradcheck", "fd_step", 1e-6);
  Rng rng(rc.seed);

  const StrandTopology topo{2, 5};
  const auto random_rest = [&] {
    std::vector<double> rl(size_t(topo.edge_count()));
    for (double& l : rl) l = rng.uniform(0.05, 0.15);
    return rl;
  };
  const auto random_directors = [&] {
    std::vector<Vec3> d(size_t(topo.edge_count()));
    for (Vec3& v : d) {
      const VecX q = random_unit_quaternions(rng, 1);
      v = quat_sandwich_e3(q.head<4>());
    }
    return d;
  };

  // Each entry produces one random configuration's relative error.
  std::vector<std::pair<std::string, std::function<double()>>> checks;

  checks.emplace_back("stretch", [&] {
    const auto rl = random_rest();
    const VecX x0 = random_positions(rng, topo.vertex_count());
    VecX g(x0.size());
    g.setZero();
    stretch_energy(x0, topo, rl, mp.k_stretch, &g);
    apply_fault("stretch", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& x) { return stretch_energy(x, topo, rl, mp.k_stretch, nullptr); }, x0,
        step);
    return gradient_relative_error(g, fd);
  });

  const auto cosserat_check = [&](CosseratVariant variant, const std::string& term) {
    return [&, variant, term] {
      const auto rl = random_rest();
      const auto dirs = random_directors();
      const VecX x0 = random_positions(rng, topo.vertex_count());
      VecX g(x0.size());
      g.setZero();
      cosserat_energy(x0, topo, rl, dirs, mp.k_cosserat, variant, &g);
      apply_fault(term, g);
      const VecX fd = finite_difference_gradient(
          [&](const VecX& x) {
            return cosserat_energy(x, topo, rl, dirs, mp.k_cosserat, variant, nullptr);
          },
          x0, step);
      return gradient_relative_error(g, fd);
    };
  };
  checks.emplace_back("cosserat", cosserat_check(CosseratVariant::modified, "cosserat"));
  checks.emplace_back("cosserat_shear_only",
                      cosserat_check(CosseratVariant::shear_only, "cosserat_shear_only"));

  checks.emplace_back("mass_spring", [&] {
    const auto rl = random_rest();
    std::vector<double> bend(size_t(topo.n_strands * (topo.verts - 2)));
    for (double& l : bend) l = rng.uniform(0.1, 0.3);
    const VecX x0 = random_positions(rng, topo.vertex_count());
    VecX g(x0.size());
    g.setZero();
    mass_spring_energy(x0, topo, rl, bend, mp.k_edge, mp.k_bend, &g);
    apply_fault("mass_spring", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& x) {
          return mass_spring_energy(x, topo, rl, bend, mp.k_edge, mp.k_bend, nullptr);
        },
        x0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("stretch_shear", [&] {
    const auto rl = random_rest();
    const int nx = 3 * topo.vertex_count(), nq = 4 * topo.edge_count();
    VecX z0(nx + nq);
    z0.head(nx) = random_positions(rng, topo.vertex_count());
    z0.tail(nq) = random_unit_quaternions(rng, topo.edge_count());
    for (int e = 0; e < topo.edge_count(); ++e)
      z0.segment<4>(nx + 4 * e) *= rng.uniform(0.9, 1.1);
    const auto energy = [&](const VecX& z, VecX* grad) {
      VecX gx, gq;
      if (grad) {
        gx.setZero(nx);
        gq.setZero(nq);
      }
      const double e = full_cosserat_stretch_shear(z.head(nx), z.tail(nq), topo, rl,
                                                   mp.k_stretch_shear, grad ? &gx : nullptr,
                                                   grad ? &gq : nullptr);
      if (grad) *grad << gx, gq;
      return e;
    };
    VecX g(z0.size());
    energy(z0, &g);
    apply_fault("stretch_shear", g);
    const VecX fd =
        finite_difference_gradient([&](const VecX& z) { return energy(z, nullptr); }, z0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("bend_twist", [&] {
    const auto rl = random_rest();
    VecX q0 = random_unit_quaternions(rng, topo.edge_count());
    const VecX qrest = random_unit_quaternions(rng, topo.edge_count());
    for (int e = 0; e < topo.edge_count(); ++e) q0.segment<4>(4 * e) *= rng.uniform(0.9, 1.1);
    VecX g(q0.size());
    g.setZero();
    full_cosserat_bend_twist(q0, qrest, topo, rl, mp.k_bend_twist, &g);
    apply_fault("bend_twist", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& q) {
          return full_cosserat_bend_twist(q, qrest, topo, rl, mp.k_bend_twist, nullptr);
        },
        q0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("unit_quaternion", [&] {
    VecX q0 = random_unit_quaternions(rng, topo.edge_count());
    for (int e = 0; e < topo.edge_count(); ++e) q0.segment<4>(4 * e) *= rng.uniform(0.7, 1.3);
    VecX g(q0.size());
    g.setZero();
    unit_quaternion_energy(q0, mp.k_unit_quaternion, &g);
    apply_fault("unit_quaternion", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& q) { return unit_quaternion_energy(q, mp.k_unit_quaternion, nullptr); },
        q0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("gravity", [&] {
    const VecX x0 = random_positions(rng, topo.vertex_count());
    VecX g(x0.size());
    g.setZero();
    gravity_energy(x0, mp.vertex_mass, mp.gravity, &g);
    apply_fault("gravity", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& x) { return gravity_energy(x, mp.vertex_mass, mp.gravity, nullptr); },
        x0, step);
    return gradient_relative_error(g, fd);
  });

  const FixtureBody fx = make_fixture_body();
  const TriangleBVH body_bvh(fx.body.mesh);
  checks.emplace_back("body_collision", [&] {
    // keep samples away from the contact-band kink and from closest-feature
    // switches, where the energy itself is not differentiable
    const int n_pts = 8;
    VecX x0(3 * n_pts);
    for (int i = 0; i < n_pts; ++i) {
      for (int attempt = 0;; ++attempt) {
        const VecX q = random_unit_quaternions(rng, 1);
        const Vec3 dir = quat_sandwich_e3(q.head<4>());
        const Vec3 p = fx.head_center + rng.uniform(0.85, 1.3) * fx.head_radius * dir;
        const ClosestPointResult cp = body_bvh.closest_point(p);
        const Vec3 n = fx.body.mesh.triangle_normal(cp.triangle);
        const double d = n.dot(p - cp.point);
        bool stable = std::abs(mp.collision_margin - d) > 1e-4;
        for (int axis = 0; axis < 3 && stable; ++axis)
          for (int sign = -1; sign <= 1 && stable; sign += 2)
            for (double scale : {1.0, 10.0}) {
              Vec3 probe = p;
              probe[axis] += sign * scale * step;
              if (body_bvh.closest_point(probe).triangle != cp.triangle) {
                stable = false;
                break;
              }
            }
        if (stable || attempt > 200) {
          x0.segment<3>(3 * i) = p;
          break;
        }
      }
    }
    VecX g(x0.size());
    g.setZero();
    body_collision_energy(x0, fx.body.mesh, body_bvh, mp.collision_margin, mp.k_bc,
                          &g, rc.threads, rc.deterministic);
    apply_fault("body_collision", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& x) {
          return body_collision_energy(x, fx.body.mesh, body_bvh, mp.collision_margin,
                                       mp.k_bc, nullptr, rc.threads,
                                       rc.deterministic);
        },
        x0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("self_collision", [&] {
    const int n_pts = 12;
    const double h = 0.03;
    const std::vector<double> masses(size_t(n_pts), mp.vertex_mass);
    VecX x0;
    std::vector<double> rho, rho_rest(static_cast<size_t>(n_pts));
    for (int attempt = 0;; ++attempt) {
      x0 = random_positions(rng, n_pts, 0.025);
      rho = sph_density(x0, masses, h, rc.threads);
      double lo = rho[0], hi = rho[0];
      for (double r : rho) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      const double pivot = 0.5 * (lo + hi);
      bool clear = true;
      for (double r : rho)
        if (std::abs(r - pivot) < 1e-3 * pivot) clear = false;
      if (clear || attempt > 200) {
        rho_rest.assign(size_t(n_pts), pivot);
        break;
      }
    }
    VecX g(x0.size());
    g.setZero();
    self_collision_energy(x0, masses, h, rho_rest, mp.k_sc, &g, rc.threads,
                          rc.deterministic);
    apply_fault("self_collision", g);
    const VecX fd = finite_difference_gradient(
        [&](const VecX& x) {
          return self_collision_energy(x, masses, h, rho_rest, mp.k_sc, nullptr,
                                       rc.threads, rc.deterministic);
        },
        x0, step);
    return gradient_relative_error(g, fd);
  });

  checks.emplace_back("pose_reg", [&] {
    const int n_frames = mp.n_pose_reg, dof = 3 * topo.vertex_count();
    VecX z0(n_frames * dof);
    for (int f = 0; f < n_frames; ++f) z0.segment(f * dof, dof) = random_positions(rng, topo.vertex_count());
    const auto energy = [&](const VecX& z, VecX* grad) {
      std::vector<VecX> frames(static_cast<size_t>(n_frames));
      for (int f = 0; f < n_frames; ++f) frames[size_t(f)] = z.segment(f * dof, dof);
      std::vector<VecX> grads;
      const double e = pose_reg_energy(frames, mp.k_pr, grad ? &grads : nullptr);
      if (grad)
        for (int f = 0; f < n_frames; ++f) grad->segment(f * dof, dof) = grads[size_t(f)];
      return e;
    };
    VecX g(z0.size());
    energy(z0, &g);
    apply_fault("pose_reg", g);
    const VecX fd =
        finite_difference_gradient([&](const VecX& z) { return energy(z, nullptr); }, z0, step);
    return gradient_relative_error(g, fd);
  });

  std::vector<TermCheck> report;
  bool all_ok = true;
  for (auto& [term, check] : checks) {
    TermCheck tc;
    tc.term = term;
    tc.configs = n_configs;
    for (int c = 0; c < n_configs; ++c) tc.max_rel_err = std::max(tc.max_rel_err, check());
    all_ok = all_ok && tc.max_rel_err <= tolerance;
    report.push_back(tc);
  }

  std::printf("%-20s %8s %14s  %s\n", "term", "configs", "max_rel_err", "status");
  for (const TermCheck& tc : report)
    std::printf("%-20s %8d %14.3e  %s\n", tc.term.c_str(), tc.configs, tc.max_rel_err,
                tc.max_rel_err <= tolerance ? "ok" : "FAIL");
  if (!all_ok) {
    std::string bad;
    for (const TermCheck& tc : report)
      if (tc.max_rel_err > tolerance) bad += (bad.empty() ? "" : ", ") + tc.term;
    std::cerr << "gradcheck: FAILED terms: " << bad << "\n";
    return 1;
  }
  std::cout << "gradcheck: all " << report.size() << " terms within " << tolerance << "\n";
  (void)rc;
  return 0;
}

int cmd_metrics(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const MaterialParams material = material_from_config(cfg);
  const Groom rest = load_groom(require_file(cfg, "paths", "groom"));
  const DrapeScene scene = scene_from_config(cfg, rest, material, rc);

  std::vector<std::string> drape_paths = cfg.get_list("paths", "drape");
  if (drape_paths.empty()) throw ConfigError("missing required config key [paths] drape");

  const std::string out_path = rc.out_dir + "/metrics.csv";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  write_metrics_csv_header(out);
  for (const std::string& path : drape_paths) {
    if (!fs::exists(path)) throw ConfigError("file not found: " + path + " (from [paths] drape)");
    const Groom drape = load_groom(path);
    if (drape.strand_count() != rest.strand_count() ||
        drape.verts_per_strand() != rest.verts_per_strand())
      throw ConfigError("drape resolution in " + path + " does not match the rest groom");
    const MetricsRecord m = compute_metrics(drape.flatten_positions(), scene.ctx);
    write_metrics_csv_row(out, fs::path(path).stem().string(), m);
  }
  std::cout << "metrics: " << drape_paths.size() << " rows -> " << out_path << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const std::string prefix = cfg.require("paths", "checkpoint");
  if (!fs::exists(prefix + ".json"))
    throw ConfigError("checkpoint manifest not found: " + prefix + ".json");
  const TrainedModel model = load_checkpoint(prefix);

  std::vector<std::string> groom_paths = cfg.get_list("paths", "grooms");
  if (groom_paths.empty() && cfg.has("paths", "groom"))
    groom_paths.push_back(cfg.get("paths", "groom", ""));
  if (groom_paths.empty()) throw ConfigError("missing required config key [paths] grooms");
  std::vector<Groom> grooms;
  for (const std::string& p : groom_paths) {
    if (!fs::exists(p)) throw ConfigError("file not found: " + p + " (from [paths] grooms)");
    grooms.push_back(load_groom(p));
  }
  const std::optional<BodyModel> body = maybe_load_body(cfg);
  if (!body) throw ConfigError("bench requires [paths] body_obj and body_rig");
  for (Groom& g : grooms) ensure_attached(g, *body);

  std::vector<PoseParams> poses;
  if (cfg.has("paths", "pose_sequence"))
    poses = load_pose_sequence(require_file(cfg, "paths", "pose_sequence"), body->pose_dim());
  else
    poses = make_joint_sweep(body->pose_dim(), int(body->joints.size()) - 1, 0, -0.4, 0.4, 100);

  std::vector<int> batches;
  if (cfg.has("bench", "batches")) {
    for (const std::string& b : cfg.get_list("bench", "batches")) {
      try {
        batches.push_back(std::stoi(b));
      } catch (const std::exception&) {
        throw ConfigError("config key [bench] batches has a non-integer entry: " + b);
      }
    }
  } else {
    batches = {1, 10, 100, 1000};
  }

  const BenchResult bench =
      bench_scaling(model, grooms, *body, poses, batches, cfg.get_int("bench", "warmup", 5),
                    cfg.get_int("bench", "reps", 10));
  const std::string out_path = rc.out_dir + "/bench.csv";
  write_bench_csv(bench, out_path);
  for (const BenchRow& row : bench.rows)
    std::cout << "bench: batch " << row.batch << " -> " << row.total_ms << " ms ("
              << row.per_item_ms << " ms/item)\n";
  std::cout << "bench: linear fit R^2 = " << bench.linear_fit_r2 << ", wrote " << out_path
            << "\n";
  return 0;
}

int cmd_convert(const RunConfig& cfg) {
  const RunContext rc = run_context(cfg);
  const std::string in_path = require_file(cfg, "paths", "polylines_obj");
  const ObjData strands_obj = load_obj(in_path);
  if (strands_obj.polylines.empty())
    throw ConfigError("no polylines ('l' records) in " + in_path);

  const ObjData scalp_obj = load_obj(require_file(cfg, "paths", "body_obj"));
  const int verts = cfg.get_int("convert", "verts_per_strand", 24);
  if (verts < 2) throw ConfigError("[convert] verts_per_strand must be at least 2");
  const std::string out_path = cfg.get("paths", "groom_out", rc.out_dir + "/converted.qgr");
  const std::string name =
      cfg.get("convert", "name", fs::path(out_path).stem().string());

  const Groom groom = convert_polylines_to_groom(strands_obj.polylines, scalp_obj.mesh(),
                                                 scalp_obj.corner_uvs(), verts, name);
  save_groom(groom, out_path);
  std::cout << "convert: " << groom.strand_count() << " strands x " << verts << " vertices -> "
            << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strand-based quasi-static hair drape toolkit"};
  app.require_subcommand(1);

  CliOverrides o;
  const auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI-style configuration file");
    sub->add_option("--solver", o.solver, "equilibrium solver: adam, lbfgs, xpbd");
    sub->add_option("--iters", o.iters, "iteration/step cap override");
    sub->add_option("--seed", o.seed, "random seed override");
    sub->add_option("--threads", o.threads, "worker thread cap (QUAFFURE_THREADS as fallback)");
    sub->add_option("--out", o.out, "output directory override");
    sub->add_flag("--deterministic", o.deterministic, "force deterministic reductions");
    return sub;
  };

  const auto drape = add_shared(app.add_subcommand("drape", "solve one groom to equilibrium"));
  const auto train = add_shared(app.add_subcommand("train", "train the deformation decoder"));
  const auto infer = add_shared(app.add_subcommand("infer", "predict drapes from a checkpoint"));
  infer->add_flag("--nearest-embedding", o.nearest_embedding,
                  "fall back to the nearest trained groom embedding");
  const auto gradcheck =
      add_shared(app.add_subcommand("gradcheck", "finite-difference gradient validation"));
  const auto metrics = add_shared(app.add_subcommand("metrics", "evaluate drapes against a groom"));
  const auto bench = add_shared(app.add_subcommand("bench", "inference batch-scaling benchmark"));
  const auto convert =
      add_shared(app.add_subcommand("convert", "polyline OBJ to groom conversion"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = merged_config(o);
    if (drape->parsed()) return cmd_drape(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (infer->parsed()) return cmd_infer(cfg);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg);
    if (metrics->parsed()) return cmd_metrics(cfg);
    if (bench->parsed()) return cmd_bench(cfg);
    if (convert->parsed()) return cmd_convert(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
