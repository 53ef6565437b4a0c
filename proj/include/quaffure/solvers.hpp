#pragma once

// Quasi-static equilibrium solvers: adaptive first-order descent (Adam),
// L-BFGS with Armijo backtracking, and XPBD constraint projection with
// per-step velocity reset. The generic minimizers operate on a callback
// returning an EnergyReport; XPBD compiles constraints from an EnergyContext.

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "quaffure/potentials.hpp"

namespace quaffure {

enum class SolveMethod { adam, lbfgs, xpbd };

inline SolveMethod parse_solve_method(const std::string& name) {
  if (name == "adam") return SolveMethod::adam;
  if (name == "lbfgs") return SolveMethod::lbfgs;
  if (name == "xpbd") return SolveMethod::xpbd;
  throw std::invalid_argument("unknown solver: " + name);
}

inline const char* solve_method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::adam: return "adam";
    case SolveMethod::lbfgs: return "lbfgs";
    default: return "xpbd";
  }
}

struct SolveConfig {
  SolveMethod method = SolveMethod::lbfgs;
  int max_iterations = 2000;
  double grad_tolerance = 1e-6;  // infinity norm
  // Adam
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // per-iteration exponential factor
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool auto_tune_lr = true;  // halve and restart on non-finite energy
  // L-BFGS
  int lbfgs_memory = 10;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  // XPBD
  int xpbd_steps = 30;
  int xpbd_iterations = 200;
  double xpbd_dt = 1.0 / 30.0;

  void validate() const {
    if (max_iterations <= 0 || lbfgs_memory <= 0 || xpbd_steps <= 0 || xpbd_iterations <= 0)
      throw std::invalid_argument("solver iteration counts must be positive");
    if (!(grad_tolerance > 0) || !(learning_rate > 0) || !(xpbd_dt > 0))
      throw std::invalid_argument("solver tolerances and steps must be positive");
    if (!(backtrack > 0 && backtrack < 1) || !(armijo_c > 0 && armijo_c < 1))
      throw std::invalid_argument("line-search parameters must lie in (0,1)");
    if (!(lr_decay > 0 && lr_decay <= 1))
      throw std::invalid_argument("learning-rate decay must lie in (0,1]");
  }
};

struct IterationRecord {
  int iteration = 0;
  double total = 0;
  std::vector<std::pair<std::string, double>> terms;
};

struct EquilibriumResult {
  VecX positions;
  std::vector<IterationRecord> trace;
  int iterations = 0;
  double duration_seconds = 0;
  bool converged = false;
  long long n_evaluations = 0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<IterationRecord> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

class DivergedError : public SolverError {
 public:
  using SolverError::SolverError;
};

class StagnationError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Objective callback: returns value, per-term breakdown, and (when asked)
// the gradient. Gradient may be left empty when need_grad is false.
using ObjectiveFn = std::function<EnergyReport(const VecX&, bool need_grad)>;

inline void write_trace_csv(const std::vector<IterationRecord>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  out << "iteration,total";
  if (!trace.empty())
    for (const auto& [name, value] : trace.front().terms) out << "," << name;
  out << "\n";
  for (const IterationRecord& row : trace) {
    out << row.iteration << "," << row.total;
    for (const auto& [name, value] : row.terms) out << "," << value;
    out << "\n";
  }
}

namespace detail {

inline IterationRecord record_of(int iteration, const EnergyReport& report) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.total = report.total;
  rec.terms = report.terms;
  return rec;
}

inline double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline EquilibriumResult minimize_first_order(const ObjectiveFn& objective, const VecX& x0,
                                              const SolveConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  double lr = config.learning_rate;
  int restarts_left = config.auto_tune_lr ? 16 : 0;

  EquilibriumResult result;
  for (;;) {
    VecX x = x0;
    VecX m = VecX::Zero(x.size()), v = VecX::Zero(x.size());
    result.trace.clear();
    result.converged = false;
    bool diverged = false;
    int t = 0;
    for (t = 1; t <= config.max_iterations; ++t) {
      EnergyReport report = objective(x, true);
      ++result.n_evaluations;
      if (!std::isfinite(report.total) || !report.gradient.allFinite()) {
        diverged = true;
        break;
      }
      result.trace.push_back(detail::record_of(t - 1, report));
      if (report.gradient.lpNorm<Eigen::Infinity>() < config.grad_tolerance) {
        result.converged = true;
        break;
      }
      m = config.adam_beta1 * m + (1 - config.adam_beta1) * report.gradient;
      v = config.adam_beta2 * v.array().matrix() +
          (1 - config.adam_beta2) * report.gradient.cwiseProduct(report.gradient);
      const double bias1 = 1 - std::pow(config.adam_beta1, t);
      const double bias2 = 1 - std::pow(config.adam_beta2, t);
      const double step = lr * std::pow(config.lr_decay, t - 1);
      x -= (step / bias1) *
           (m.array() / ((v.array() / bias2).sqrt() + config.adam_eps)).matrix();
      if (!x.allFinite()) {
        diverged = true;
        break;
      }
    }
    if (!diverged) {
      result.positions = x;
      result.iterations = std::min(t, config.max_iterations);
      result.duration_seconds = detail::elapsed_seconds(t0);
      return result;
    }
    if (restarts_left-- <= 0)
      throw DivergedError("first-order solver diverged (non-finite energy)", result.trace);
    lr *= 0.5;
  }
}

inline EquilibriumResult minimize_lbfgs(const ObjectiveFn& objective, const VecX& x0,
                                        const SolveConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  EquilibriumResult result;
  VecX x = x0;
  EnergyReport report = objective(x, true);
  ++result.n_evaluations;
  if (!std::isfinite(report.total) || !report.gradient.allFinite())
    throw DivergedError("non-finite energy at initial point", result.trace);

  std::deque<std::pair<VecX, VecX>> history;  // (s, y)
  int consecutive_failures = 0;

  int t = 0;
  for (t = 0; t < config.max_iterations; ++t) {
    result.trace.push_back(detail::record_of(t, report));
    const VecX& g = report.gradient;
    if (g.lpNorm<Eigen::Infinity>() < config.grad_tolerance) {
      result.converged = true;
      break;
    }

    // two-loop recursion
    VecX d = -g;
    std::vector<double> alpha(history.size());
    for (int i = int(history.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = history[i];
      alpha[i] = s.dot(d) / y.dot(s);
      d -= alpha[i] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      d *= y.dot(s) / y.dot(y);
    }
    for (size_t i = 0; i < history.size(); ++i) {
      const auto& [s, y] = history[i];
      d += (alpha[i] - y.dot(d) / y.dot(s)) * s;
    }

    double slope = g.dot(d);
    if (slope >= 0) {  // not a descent direction; drop curvature info
      history.clear();
      d = -g;
      slope = g.dot(d);
    }

    double step = history.empty() ? 1.0 / (1.0 + g.lpNorm<Eigen::Infinity>()) : 1.0;
    bool accepted = false;
    VecX x_new;
    EnergyReport report_new;
    while (step > 1e-16) {
      x_new = x + step * d;
      report_new = objective(x_new, false);
      ++result.n_evaluations;
      if (std::isfinite(report_new.total) &&
          report_new.total <= report.total + config.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= config.backtrack;
    }

    if (!accepted) {
      if (++consecutive_failures >= 50)
        throw StagnationError("line search failed 50 consecutive times", result.trace);
      history.clear();  // retry from steepest descent next iteration
      continue;
    }
    consecutive_failures = 0;

    EnergyReport report_full = objective(x_new, true);
    ++result.n_evaluations;
    if (!std::isfinite(report_full.total) || !report_full.gradient.allFinite())
      throw DivergedError("non-finite energy after line search", result.trace);

    VecX s = x_new - x;
    VecX y = report_full.gradient - report.gradient;
    if (y.dot(s) > 1e-12) {
      history.emplace_back(std::move(s), std::move(y));
      if (int(history.size()) > config.lbfgs_memory) history.pop_front();
    }
    x = std::move(x_new);
    report = std::move(report_full);
  }
  if (!result.converged) result.trace.push_back(detail::record_of(t, report));
  result.positions = x;
  result.iterations = t;
  result.duration_seconds = detail::elapsed_seconds(t0);
  return result;
}

// ---------------------------------------------------------------------------
// XPBD

// Gauss-Seidel XPBD with velocity reset each outer step; quasi-static use
// only. Constraints are compiled from the context: per-edge distance
// (compliance 1/k_stretch), per-edge direction (1/k_cosserat), unilateral
// body plane at the collision margin (1/k_bc), and unilateral per-vertex SPH
// density (1/k_sc). A stiffness of zero disables its constraint family;
// +infinity gives exact (zero-compliance) projection.
inline EquilibriumResult xpbd_quasistatic(const VecX& x0, const EnergyContext& ctx,
                                          const std::vector<uint8_t>& pinned,
                                          const SolveConfig& config) {
  config.validate();
  ctx.topo.check_positions(x0);
  const int n_verts = ctx.topo.vertex_count();
  if (int(pinned.size()) != n_verts)
    throw std::invalid_argument("one pinned flag per vertex required");
  const auto t0 = std::chrono::steady_clock::now();
  const MaterialParams& mat = ctx.material;
  const double dt2 = config.xpbd_dt * config.xpbd_dt;

  std::vector<double> w(n_verts);
  for (int i = 0; i < n_verts; ++i) w[i] = pinned[i] ? 0.0 : 1.0 / mat.vertex_mass;

  const int n_edges = ctx.topo.edge_count();
  const bool use_stretch = mat.k_stretch > 0;
  const bool use_dir = mat.k_cosserat > 0;
  const bool use_body = mat.enable_body_collision && ctx.has_body() && mat.k_bc > 0;
  const bool use_density = mat.enable_self_collision && mat.k_sc > 0;
  const double alpha_stretch = use_stretch ? 1.0 / (mat.k_stretch * dt2) : 0;
  const double alpha_dir = use_dir ? 1.0 / (mat.k_cosserat * dt2) : 0;
  const double alpha_body = use_body ? 1.0 / (mat.k_bc * dt2) : 0;
  const double alpha_density = use_density ? 1.0 / (mat.k_sc * dt2) : 0;

  EquilibriumResult result;
  VecX x = x0;
  std::vector<double> lambda_stretch(n_edges), lambda_body(n_verts), lambda_density(n_verts);
  std::vector<Vec3> lambda_dir(n_edges);
  double last_step_move = std::numeric_limits<double>::infinity();

  for (int step = 0; step < config.xpbd_steps; ++step) {
    // velocity reset: prediction is purely gravity from the current state
    VecX x_prev = x;
    for (int i = 0; i < n_verts; ++i)
      if (!pinned[i]) x.segment<3>(3 * i) += dt2 * mat.gravity;

    std::fill(lambda_stretch.begin(), lambda_stretch.end(), 0.0);
    std::fill(lambda_body.begin(), lambda_body.end(), 0.0);
    std::fill(lambda_density.begin(), lambda_density.end(), 0.0);
    std::fill(lambda_dir.begin(), lambda_dir.end(), Vec3::Zero().eval());

    std::vector<Vec3> pts(n_verts);
    HashGrid grid;
    std::vector<int> nbr;

    for (int iter = 0; iter < config.xpbd_iterations; ++iter) {
      if (use_stretch) {
        for (int s = 0; s < ctx.topo.n_strands; ++s)
          for (int v = 0; v + 1 < ctx.topo.verts; ++v) {
            const int e = ctx.topo.edge(s, v);
            const int a = ctx.topo.vertex(s, v), b = ctx.topo.vertex(s, v + 1);
            const double wsum = w[a] + w[b];
            if (wsum == 0) continue;
            Vec3 diff = x.segment<3>(3 * b) - x.segment<3>(3 * a);
            const double l = diff.norm();
            if (l < 1e-12) continue;
            const Vec3 n = diff / l;
            const double c = l - ctx.rest_lengths[e];
            const double dl = (-c - alpha_stretch * lambda_stretch[e]) / (wsum + alpha_stretch);
            lambda_stretch[e] += dl;
            x.segment<3>(3 * b) += w[b] * dl * n;
            x.segment<3>(3 * a) -= w[a] * dl * n;
          }
      }
      if (use_dir) {
        for (int s = 0; s < ctx.topo.n_strands; ++s)
          for (int v = 0; v + 1 < ctx.topo.verts; ++v) {
            const int e = ctx.topo.edge(s, v);
            const int a = ctx.topo.vertex(s, v), b = ctx.topo.vertex(s, v + 1);
            const double lr = ctx.rest_lengths[e];
            const double denom = (w[a] + w[b]) / (lr * lr) + alpha_dir;
            if (denom == 0 || (w[a] == 0 && w[b] == 0)) continue;
            const Vec3 c =
                (x.segment<3>(3 * b) - x.segment<3>(3 * a)) / lr - ctx.directors[e];
            const Vec3 dl = (-c - alpha_dir * lambda_dir[e]) / denom;
            lambda_dir[e] += dl;
            x.segment<3>(3 * b) += w[b] / lr * dl;
            x.segment<3>(3 * a) -= w[a] / lr * dl;
          }
      }
      if (use_body) {
        for (int i = 0; i < n_verts; ++i) {
          if (w[i] == 0) continue;
          const ClosestPointResult hit = ctx.body_bvh->closest_point(x.segment<3>(3 * i));
          const Vec3 normal = ctx.body->triangle_normal(hit.triangle);
          const double c = hit.signed_distance - mat.collision_margin;
          const double dl_raw =
              (-c - alpha_body * lambda_body[i]) / (w[i] + alpha_body);
          const double lam_new = std::max(0.0, lambda_body[i] + dl_raw);
          const double dl = lam_new - lambda_body[i];
          if (dl == 0) continue;
          lambda_body[i] = lam_new;
          x.segment<3>(3 * i) += w[i] * dl * normal;
        }
      }
      if (use_density) {
        for (int i = 0; i < n_verts; ++i) pts[i] = x.segment<3>(3 * i);
        grid.build(pts, 2 * mat.smoothing_length);
        for (int i = 0; i < n_verts; ++i) {
          grid.neighbors(pts[i], 2 * mat.smoothing_length, nbr);
          double rho = 0;
          for (int j : nbr)
            rho += ctx.masses[j] * sph_kernel((pts[i] - pts[j]).norm(), mat.smoothing_length);
          const double c = ctx.rho_rest[i] - rho;  // satisfied when >= 0
          if (c >= 0 && lambda_density[i] == 0) continue;
          double denom = alpha_density;
          std::vector<std::pair<int, Vec3>> grads;
          Vec3 grad_i = Vec3::Zero();
          for (int j : nbr) {
            if (j == i) continue;
            const Vec3 d = pts[i] - pts[j];
            const double r = d.norm();
            if (r < 1e-12) continue;
            const Vec3 gj =
                ctx.masses[j] * sph_kernel_derivative(r, mat.smoothing_length) / r * d;
            grad_i += gj;           // d rho_i / d x_i
            if (w[j] > 0) {
              grads.emplace_back(j, (-gj).eval());  // d rho_i / d x_j
              denom += w[j] * gj.squaredNorm();
            }
          }
          // constraint is -rho, so gradients flip sign; squared norms do not
          if (w[i] > 0) denom += w[i] * grad_i.squaredNorm();
          if (denom == 0) continue;
          const double dl_raw = (-c - alpha_density * lambda_density[i]) / denom;
          const double lam_new = std::max(0.0, lambda_density[i] + dl_raw);
          const double dl = lam_new - lambda_density[i];
          if (dl == 0) continue;
          lambda_density[i] = lam_new;
          if (w[i] > 0) x.segment<3>(3 * i) += w[i] * dl * (-grad_i);
          for (const auto& [j, gc] : grads) x.segment<3>(3 * j) += w[j] * dl * (-gc);
          for (int j : nbr) pts[j] = x.segment<3>(3 * j);
        }
      }
    }

    if (!x.allFinite()) throw DivergedError("XPBD produced non-finite positions", result.trace);
    last_step_move = 0;
    for (int i = 0; i < n_verts; ++i)
      last_step_move =
          std::max(last_step_move, (x.segment<3>(3 * i) - x_prev.segment<3>(3 * i)).norm());
    result.trace.push_back(detail::record_of(step, total_energy(x, ctx)));
  }

  result.positions = x;
  result.iterations = config.xpbd_steps;
  result.converged = last_step_move < 1e-6;
  result.n_evaluations = long(config.xpbd_steps) * config.xpbd_iterations;
  result.duration_seconds = detail::elapsed_seconds(t0);
  return result;
}

}  // namespace quaffure
