#include "evoes/config.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace evoes {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                        std::string(expected));
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::int64_t parse_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::string fmt_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string algo_name(Estimator e) {
  switch (e) {
    case Estimator::es: return "standard_es";
    case Estimator::maxvar: return "maxvar_ees";
    case Estimator::maxent: return "maxent_ees";
  }
  return "?";
}

struct Field {
  std::string key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <class T>
Field real_field(std::string key, T TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_double(key, v); },
          [member](const TrainConfig& c) { return fmt_double(c.*member); }};
}

Field int_field(std::string key, std::int64_t TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_int(key, v); },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field bool_field(std::string key, bool TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_bool(key, v); },
          [member](const TrainConfig& c) { return fmt_bool(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"algo",
                 [](TrainConfig& c, std::string_view v) {
                   try {
                     c.algo = estimator_from_string(v);
                   } catch (const ValidationError&) {
                     bad_value("algo", v, "standard_es, maxvar_ees or maxent_ees");
                   }
                 },
                 [](const TrainConfig& c) { return algo_name(c.algo); }});
    f.push_back({"env", [](TrainConfig& c, std::string_view v) { c.env = std::string(v); },
                 [](const TrainConfig& c) { return c.env; }});
    f.push_back(int_field("population_size", &TrainConfig::population_size));
    f.push_back(real_field("sigma", &TrainConfig::sigma));
    f.push_back(real_field("learning_rate", &TrainConfig::learning_rate));
    f.push_back(real_field("l2_coef", &TrainConfig::l2_coef));
    f.push_back(real_field("kernel_bandwidth", &TrainConfig::kernel_bandwidth));
    f.push_back(int_field("generations", &TrainConfig::generations));
    f.push_back({"optimizer",
                 [](TrainConfig& c, std::string_view v) {
                   if (v == "sgd") {
                     c.optimizer = OptimizerKind::sgd;
                   } else if (v == "adam") {
                     c.optimizer = OptimizerKind::adam;
                   } else {
                     bad_value("optimizer", v, "sgd or adam");
                   }
                 },
                 [](const TrainConfig& c) { return std::string(to_string(c.optimizer)); }});
    f.push_back(real_field("adam_beta1", &TrainConfig::adam_beta1));
    f.push_back(real_field("adam_beta2", &TrainConfig::adam_beta2));
    f.push_back(real_field("adam_eps", &TrainConfig::adam_eps));
    f.push_back(bool_field("mirrored", &TrainConfig::mirrored));
    f.push_back({"run_seed", [](TrainConfig& c, std::string_view v) { c.run_seed = parse_uint("run_seed", v); },
                 [](const TrainConfig& c) { return std::to_string(c.run_seed); }});
    f.push_back(int_field("mixture_k", &TrainConfig::mixture_k));
    f.push_back(bool_field("whiten_bcs", &TrainConfig::whiten_bcs));
    f.push_back({"objective",
                 [](TrainConfig& c, std::string_view v) {
                   try {
                     c.objective = objective_from_string(v);
                   } catch (const ValidationError&) {
                     bad_value("objective", v, "+x, -x, +y or -y");
                   }
                 },
                 [](const TrainConfig& c) { return std::string(to_string(c.objective)); }});
    f.push_back(real_field("init_mean", &TrainConfig::init_mean));
    f.push_back(int_field("init_seed", &TrainConfig::init_seed));
    f.push_back(real_field("output_init_scale", &TrainConfig::output_init_scale));
    f.push_back(bool_field("obs_norm", &TrainConfig::obs_norm));
    f.push_back(real_field("obs_sample_prob", &TrainConfig::obs_sample_prob));
    f.push_back(bool_field("grad_clip", &TrainConfig::grad_clip));
    f.push_back(int_field("checkpoint_every", &TrainConfig::checkpoint_every));
    f.push_back(bool_field("log_wall_time", &TrainConfig::log_wall_time));
    f.push_back({"mlp.hidden",
                 [](TrainConfig& c, std::string_view v) {
                   std::vector<int> widths;
                   std::string s(v);
                   std::stringstream ss(s);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     const std::string t = trim(item);
                     if (t.empty()) continue;
                     widths.push_back(static_cast<int>(parse_int("mlp.hidden", t)));
                   }
                   c.mlp.hidden = std::move(widths);
                 },
                 [](const TrainConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.mlp.hidden.size(); ++i) {
                     if (i) out += ',';
                     out += std::to_string(c.mlp.hidden[i]);
                   }
                   return out;
                 }});
    f.push_back({"mlp.activation",
                 [](TrainConfig& c, std::string_view v) {
                   if (v != "tanh" && v != "relu") bad_value("mlp.activation", v, "tanh or relu");
                   c.mlp.activation = activation_from_string(v);
                 },
                 [](const TrainConfig& c) { return std::string(to_string(c.mlp.activation)); }});
    f.push_back({"mlp.output_activation",
                 [](TrainConfig& c, std::string_view v) {
                   if (v != "tanh" && v != "linear") bad_value("mlp.output_activation", v, "tanh or linear");
                   c.mlp.output_activation = activation_from_string(v);
                 },
                 [](const TrainConfig& c) { return std::string(to_string(c.mlp.output_activation)); }});
    f.push_back({"pointwalker.horizon",
                 [](TrainConfig& c, std::string_view v) {
                   c.walker.horizon = static_cast<int>(parse_int("pointwalker.horizon", v));
                 },
                 [](const TrainConfig& c) { return std::to_string(c.walker.horizon); }});
    f.push_back({"pointwalker.dt",
                 [](TrainConfig& c, std::string_view v) { c.walker.dt = parse_double("pointwalker.dt", v); },
                 [](const TrainConfig& c) { return fmt_double(c.walker.dt); }});
    f.push_back({"pointwalker.accel_bound",
                 [](TrainConfig& c, std::string_view v) {
                   c.walker.accel_bound = parse_double("pointwalker.accel_bound", v);
                 },
                 [](const TrainConfig& c) { return fmt_double(c.walker.accel_bound); }});
    f.push_back({"pointwalker.speed_bound",
                 [](TrainConfig& c, std::string_view v) {
                   c.walker.speed_bound = parse_double("pointwalker.speed_bound", v);
                 },
                 [](const TrainConfig& c) { return fmt_double(c.walker.speed_bound); }});
    return f;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

[[noreturn]] void violation(std::string_view key, std::string_view what) {
  throw ValidationError("config key '" + std::string(key) + "' " + std::string(what));
}

}  // namespace

std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }

void validate(const TrainConfig& c) {
  const auto names = environment_names();
  if (std::find(names.begin(), names.end(), c.env) == names.end()) {
    violation("env", "must be one of interference, pointwalker1d, pointwalker2d (got '" + c.env + "')");
  }
  if (c.population_size < 2) violation("population_size", "must be >= 2");
  if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) violation("sigma", "must be > 0");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) violation("learning_rate", "must be > 0");
  if (!(c.l2_coef >= 0.0) || !std::isfinite(c.l2_coef)) violation("l2_coef", "must be >= 0");
  if (!(c.kernel_bandwidth > 0.0) || !std::isfinite(c.kernel_bandwidth)) violation("kernel_bandwidth", "must be > 0");
  if (c.generations < 0) violation("generations", "must be >= 0");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0)) violation("adam_beta1", "must be in [0, 1)");
  if (!(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0)) violation("adam_beta2", "must be in [0, 1)");
  if (!(c.adam_eps > 0.0)) violation("adam_eps", "must be > 0");
  if (c.mixture_k < 1) violation("mixture_k", "must be >= 1");
  if (!std::isfinite(c.init_mean)) violation("init_mean", "must be finite");
  if (c.init_seed < -1) violation("init_seed", "must be >= -1");
  if (!std::isfinite(c.output_init_scale)) violation("output_init_scale", "must be finite");
  if (!(c.obs_sample_prob >= 0.0 && c.obs_sample_prob <= 1.0)) violation("obs_sample_prob", "must be in [0, 1]");
  if (c.checkpoint_every < 0) violation("checkpoint_every", "must be >= 0");
  for (int h : c.mlp.hidden) {
    if (h < 1) violation("mlp.hidden", "widths must be >= 1");
  }
  if (c.walker.horizon < 1) violation("pointwalker.horizon", "must be >= 1");
  if (!(c.walker.dt > 0.0)) violation("pointwalker.dt", "must be > 0");
  if (!(c.walker.accel_bound > 0.0)) violation("pointwalker.accel_bound", "must be > 0");
  if (!(c.walker.speed_bound > 0.0)) violation("pointwalker.speed_bound", "must be > 0");
  const bool two_d = c.env == "pointwalker2d";
  if (!two_d && (c.objective == Objective::plus_y || c.objective == Objective::minus_y)) {
    violation("objective", "uses the y axis, which only pointwalker2d has");
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  field(key).set(config, trim(value));
}

std::string get_config_value(const TrainConfig& config, std::string_view key) { return field(key).get(config); }

std::string serialize_config(const TrainConfig& config) {
  std::string top;
  std::map<std::string, std::string> tables;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string value = f.get(config);
    if (dot == std::string::npos) {
      top += f.key + " = " + value + "\n";
    } else {
      tables[f.key.substr(0, dot)] += f.key.substr(dot + 1) + " = " + value + "\n";
    }
  }
  std::string out = top;
  for (const auto& name : {"mlp", "pointwalker"}) out += "\n[" + std::string(name) + "]\n" + tables[name];
  return out;
}

TrainConfig parse_config_text(std::string_view text, TrainConfig base) {
  std::string table;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("config line " + std::to_string(line_no) + ": bad table header");
      table = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!table.empty()) key = table + "." + key;
    set_config_value(base, key, value);
  }
  return base;
}

TrainConfig parse_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

TrainConfig apply_overrides(TrainConfig config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ValidationError("override '" + a + "' is not of the form key=value");
    set_config_value(config, trim(a.substr(0, eq)), a.substr(eq + 1));
  }
  return config;
}

std::vector<std::string> preset_names() {
  return {"interference-maxvar", "interference-maxent", "locomotion-maxvar", "locomotion-maxent", "locomotion-es"};
}

TrainConfig preset(std::string_view name) {
  TrainConfig c;
  if (name == "interference-maxvar" || name == "interference-maxent") {
    c.env = "interference";
    c.population_size = 500;
    c.sigma = 0.5;
    c.l2_coef = 0.0;
    c.generations = 300;
    c.optimizer = OptimizerKind::adam;
    c.init_mean = 1.0;
    if (name == "interference-maxvar") {
      c.algo = Estimator::maxvar;
      c.learning_rate = 0.03;
      c.whiten_bcs = false;
    } else {
      c.algo = Estimator::maxent;
      c.learning_rate = 0.1;
      c.kernel_bandwidth = 1.0;
    }
    return c;
  }
  if (name == "locomotion-maxvar" || name == "locomotion-maxent" || name == "locomotion-es") {
    c.env = "pointwalker1d";
    c.population_size = 10000;
    c.sigma = 0.02;
    c.learning_rate = 0.01;
    c.l2_coef = 0.05;
    c.kernel_bandwidth = 1.0;
    c.generations = 150;
    c.optimizer = OptimizerKind::adam;
    c.algo = name == "locomotion-maxvar"   ? Estimator::maxvar
             : name == "locomotion-maxent" ? Estimator::maxent
                                           : Estimator::es;
    return c;
  }
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

std::map<std::string, std::string> config_to_map(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

TrainConfig config_from_map(const std::map<std::string, std::string>& values) {
  TrainConfig c;
  for (const auto& [k, v] : values) set_config_value(c, k, v);
  return c;
}

std::uint64_t effective_init_seed(const TrainConfig& config) {
  if (config.init_seed >= 0) return static_cast<std::uint64_t>(config.init_seed);
  return mix(config.run_seed, 0x696e6974ULL);
}

MlpSpec policy_spec(const TrainConfig& config) {
  if (config.env == "pointwalker2d") return walker_policy(2, config.mlp);
  return walker_policy(1, config.mlp);
}

}  // namespace evoes
