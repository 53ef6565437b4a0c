#pragma once

// Sectioned key-value run configuration. Files use INI-style sections with
// '#' or ';' comments; CLI flags overwrite file values before validation.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quaffure/material.hpp"
#include "quaffure/neural.hpp"
#include "quaffure/solvers.hpp"

namespace quaffure {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const size_t comment = line.find_first_of("#;");
      if (comment != std::string::npos) line.erase(comment);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[' && trimmed.back() == ']') {
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("malformed line " + std::to_string(line_no) + " in " + path);
      cfg.set(section, trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section + "." + key] = value;
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    const auto it = values_.find(section + "." + key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end())
      throw ConfigError("missing required config key [" + section + "] " + key);
    return it->second;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    return parse_double(section, key, it->second);
  }

  int get_int(const std::string& section, const std::string& key, int fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const int v = std::stoi(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key [" + section + "] " + key + " is not an integer: " +
                        it->second);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "off") return false;
    throw ConfigError("config key [" + section + "] " + key + " is not a boolean: " + it->second);
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    const auto it = values_.find(section + "." + key);
    if (it == values_.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  double parse_double(const std::string& section, const std::string& key,
                      const std::string& raw) const {
    try {
      size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key [" + section + "] " + key + " is not a number: " + raw);
    }
  }

  std::map<std::string, std::string> values_;
};

inline MaterialParams material_from_config(const RunConfig& cfg) {
  MaterialParams m;
  m.k_stretch = cfg.get_double("material", "k_stretch", m.k_stretch);
  m.k_cosserat = cfg.get_double("material", "k_cosserat", m.k_cosserat);
  m.k_stretch_shear = cfg.get_double("material", "k_stretch_shear", m.k_stretch_shear);
  m.k_bend_twist = cfg.get_double("material", "k_bend_twist", m.k_bend_twist);
  m.k_unit_quaternion = cfg.get_double("material", "k_unit_quaternion", m.k_unit_quaternion);
  m.k_bc = cfg.get_double("material", "k_bc", m.k_bc);
  m.k_sc = cfg.get_double("material", "k_sc", m.k_sc);
  m.k_pr = cfg.get_double("material", "k_pr", m.k_pr);
  m.k_edge = cfg.get_double("material", "k_edge", m.k_edge);
  m.k_bend = cfg.get_double("material", "k_bend", m.k_bend);
  m.collision_margin = cfg.get_double("material", "collision_margin", m.collision_margin);
  m.smoothing_length = cfg.get_double("material", "smoothing_length", m.smoothing_length);
  m.vertex_mass = cfg.get_double("material", "vertex_mass", m.vertex_mass);
  m.gravity.x() = cfg.get_double("material", "gravity_x", m.gravity.x());
  m.gravity.y() = cfg.get_double("material", "gravity_y", m.gravity.y());
  m.gravity.z() = cfg.get_double("material", "gravity_z", m.gravity.z());
  m.n_pose_reg = cfg.get_int("material", "n_pose_reg", m.n_pose_reg);
  const std::string variant = cfg.get("material", "variant", "modified");
  if (variant == "modified") m.variant = CosseratVariant::modified;
  else if (variant == "shear_only") m.variant = CosseratVariant::shear_only;
  else throw ConfigError("unknown Cosserat variant: " + variant);
  const std::string elastic = cfg.get("material", "elastic", "cosserat");
  if (elastic == "cosserat") m.elastic = ElasticStack::cosserat;
  else if (elastic == "full_cosserat") m.elastic = ElasticStack::full_cosserat;
  else if (elastic == "mass_spring") m.elastic = ElasticStack::mass_spring;
  else throw ConfigError("unknown elastic stack: " + elastic);
  m.enable_gravity = cfg.get_bool("material", "enable_gravity", m.enable_gravity);
  m.enable_body_collision =
      cfg.get_bool("material", "enable_body_collision", m.enable_body_collision);
  m.enable_self_collision =
      cfg.get_bool("material", "enable_self_collision", m.enable_self_collision);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid material: ") + e.what());
  }
  return m;
}

inline SolveConfig solve_config_from_config(const RunConfig& cfg) {
  SolveConfig s;
  try {
    s.method = parse_solve_method(cfg.get("solver", "method", "lbfgs"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.max_iterations = cfg.get_int("solver", "max_iterations", s.max_iterations);
  s.grad_tolerance = cfg.get_double("solver", "grad_tolerance", s.grad_tolerance);
  s.learning_rate = cfg.get_double("solver", "learning_rate", s.learning_rate);
  s.lr_decay = cfg.get_double("solver", "lr_decay", s.lr_decay);
  s.adam_beta1 = cfg.get_double("solver", "adam_beta1", s.adam_beta1);
  s.adam_beta2 = cfg.get_double("solver", "adam_beta2", s.adam_beta2);
  s.adam_eps = cfg.get_double("solver", "adam_eps", s.adam_eps);
  s.auto_tune_lr = cfg.get_bool("solver", "auto_tune_lr", s.auto_tune_lr);
  s.lbfgs_memory = cfg.get_int("solver", "lbfgs_memory", s.lbfgs_memory);
  s.armijo_c = cfg.get_double("solver", "armijo_c", s.armijo_c);
  s.backtrack = cfg.get_double("solver", "backtrack", s.backtrack);
  s.xpbd_steps = cfg.get_int("solver", "xpbd_steps", s.xpbd_steps);
  s.xpbd_iterations = cfg.get_int("solver", "xpbd_iterations", s.xpbd_iterations);
  s.xpbd_dt = cfg.get_double("solver", "xpbd_dt", s.xpbd_dt);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid solver config: ") + e.what());
  }
  return s;
}

inline TrainConfig train_config_from_config(const RunConfig& cfg) {
  TrainConfig t;
  t.steps = cfg.get_int("train", "steps", t.steps);
  t.learning_rate = cfg.get_double("train", "learning_rate", t.learning_rate);
  t.lr_decay = cfg.get_double("train", "lr_decay", t.lr_decay);
  t.beta1 = cfg.get_double("train", "beta1", t.beta1);
  t.beta2 = cfg.get_double("train", "beta2", t.beta2);
  t.eps = cfg.get_double("train", "eps", t.eps);
  t.z_dim = cfg.get_int("train", "z_dim", t.z_dim);
  t.embedding_init = cfg.get_double("train", "embedding_init", t.embedding_init);
  t.checkpoint_every = cfg.get_int("train", "checkpoint_every", t.checkpoint_every);
  if (cfg.has("train", "hidden")) {
    t.hidden.clear();
    for (const std::string& h : cfg.get_list("train", "hidden")) {
      try {
        t.hidden.push_back(std::stoi(h));
      } catch (const std::exception&) {
        throw ConfigError("config key [train] hidden has a non-integer entry: " + h);
      }
    }
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid training config: ") + e.what());
  }
  return t;
}

// --threads flag, then QUAFFURE_THREADS, then 1.
inline int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("QUAFFURE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
      throw ConfigError("QUAFFURE_THREADS is not a positive integer");
    }
  }
  return 1;
}

}  // namespace quaffure
