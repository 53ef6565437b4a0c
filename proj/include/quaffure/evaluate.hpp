#pragma once

// Quantitative drape metrics and the inference scaling benchmark.

#include <chrono>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quaffure/neural.hpp"
#include "quaffure/potentials.hpp"

namespace quaffure {

struct MetricsRecord {
  double time_seconds = 0;
  double body_intersection_pct = 0;   // vertices with signed distance < 0
  double length_preservation = 0;     // sum |l - l_rest|, meters
  double orientation_preservation = 0;  // sum angle(edge, d3), radians
  double gravity_potential = 0;
};

inline MetricsRecord compute_metrics(const VecX& x_hair, const EnergyContext& ctx) {
  ctx.topo.check_positions(x_hair);
  MetricsRecord rec;
  const int n_verts = ctx.topo.vertex_count();
  if (ctx.has_body()) {
    int inside = 0;
    for (int i = 0; i < n_verts; ++i)
      if (ctx.body_bvh->closest_point(x_hair.segment<3>(3 * i)).signed_distance < 0) ++inside;
    rec.body_intersection_pct = 100.0 * inside / n_verts;
  }
  for (int s = 0; s < ctx.topo.n_strands; ++s)
    for (int v = 0; v + 1 < ctx.topo.verts; ++v) {
      const int e = ctx.topo.edge(s, v);
      const Vec3 edge = x_hair.segment<3>(3 * ctx.topo.vertex(s, v + 1)) -
                        x_hair.segment<3>(3 * ctx.topo.vertex(s, v));
      const double l = edge.norm();
      rec.length_preservation += std::abs(l - ctx.rest_lengths[e]);
      if (l > 1e-12) {
        const double c = std::clamp(edge.dot(ctx.directors[e]) / l, -1.0, 1.0);
        rec.orientation_preservation += std::acos(c);
      }
    }
  rec.gravity_potential = gravity_energy(x_hair, ctx.material.vertex_mass, ctx.material.gravity);
  return rec;
}

inline void write_metrics_csv_header(std::ostream& out) {
  out << "label,time_seconds,body_intersection_pct,length_preservation_mm,"
         "orientation_preservation_rad,gravity_potential\n";
}

inline void write_metrics_csv_row(std::ostream& out, const std::string& label,
                                  const MetricsRecord& rec) {
  out << label << "," << rec.time_seconds << "," << rec.body_intersection_pct << ","
      << rec.length_preservation * 1000.0 << "," << rec.orientation_preservation << ","
      << rec.gravity_potential << "\n";
}

// ---------------------------------------------------------------------------
// Inference scaling benchmark

struct BenchRow {
  int batch = 0;
  double total_ms = 0;
  double per_item_ms = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double linear_fit_r2 = 0;  // of total time vs batch size
};

inline double linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("linear fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("degenerate abscissae in linear fit");
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (size_t i = 0; i < n; ++i) {
    const double fit = a + b * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  if (ss_tot == 0) return 1.0;
  return 1.0 - ss_res / ss_tot;
}

// Times batched inference over cycled (groom, pose) items; median of `reps`
// timed repetitions after `warmup` discarded ones.
inline BenchResult bench_scaling(const TrainedModel& model, const std::vector<Groom>& grooms,
                                 const BodyModel& body, const std::vector<PoseParams>& poses,
                                 const std::vector<int>& batch_sizes, int warmup = 5,
                                 int reps = 10) {
  if (grooms.empty() || poses.empty()) throw std::invalid_argument("benchmark needs inputs");
  if (reps < 1) throw std::invalid_argument("benchmark needs at least one repetition");
  const ShapeParams shape = ShapeParams::rest(body.shape_dim());
  BenchResult result;
  std::vector<double> xs, ys;
  for (int batch : batch_sizes) {
    if (batch <= 0) throw std::invalid_argument("batch sizes must be positive");
    auto run_batch = [&]() {
      for (int i = 0; i < batch; ++i) {
        const Groom& g = grooms[i % grooms.size()];
        const int row = resolve_embedding_row(model, g, false);
        infer_drape(model, row, shape, poses[i % poses.size()], g, body);
      }
    };
    for (int i = 0; i < warmup; ++i) run_batch();
    std::vector<double> times;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      run_batch();
      times.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count());
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    result.rows.push_back({batch, median, median / batch});
    xs.push_back(batch);
    ys.push_back(median);
  }
  result.linear_fit_r2 = linear_fit_r2(xs, ys);
  return result;
}

inline void write_bench_csv(const BenchResult& bench, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  out << "batch,total_ms,per_item_ms\n";
  for (const BenchRow& row : bench.rows)
    out << row.batch << "," << row.total_ms << "," << row.per_item_ms << "\n";
  out << "# linear_fit_r2," << bench.linear_fit_r2 << "\n";
}

}  // namespace quaffure
