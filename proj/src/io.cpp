// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffopt/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace diffopt {

namespace {

constexpr const char* kModelFormat = "diffopt.diffusion_model";
constexpr const char* kSurrogateFormat = "diffopt.surrogate";
constexpr int kFormatVersion = 1;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + ": missing key \"" + key + "\"");
  return *it;
}

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return get_as<T>(*it, where + "." + key);
}

json vec_to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd vec_from_json(const json& j, const std::string& where) {
  const auto v = get_as<std::vector<double>>(j, where);
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json transform_to_json(const StandardizeTransform& t) {
  return {{"mean", vec_to_json(t.mean)}, {"std", vec_to_json(t.std)}};
}

StandardizeTransform transform_from_json(const json& j, const std::string& where) {
  check_keys(j, {"mean", "std"}, where);
  StandardizeTransform t{vec_from_json(require(j, "mean", where), where + ".mean"),
                         vec_from_json(require(j, "std", where), where + ".std")};
  if (t.mean.size() != t.std.size()) throw ConfigError(where + ": mean/std length mismatch");
  return t;
}

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

const char* mode_name(ScoreMode m) { return m == ScoreMode::score ? "score" : "energy"; }

ScoreMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "score") return ScoreMode::score;
  if (s == "energy") return ScoreMode::energy;
  throw ConfigError(where + ": mode must be score or energy");
}

const char* scaling_name(OutputScaling s) { return s == OutputScaling::none ? "none" : "inv_sigma"; }

OutputScaling parse_scaling(const std::string& s, const std::string& where) {
  if (s == "none") return OutputScaling::none;
  if (s == "inv_sigma") return OutputScaling::inv_sigma;
  throw ConfigError(where + ": output_scaling must be none or inv_sigma");
}

json beta_schedule_to_json(const BetaSchedule& s) {
  static const char* names[] = {"constant", "linear", "exponential", "reciprocal"};
  return {{"kind", names[static_cast<int>(s.kind)]}, {"beta_max", s.beta_max}, {"rate", s.rate}, {"beta0", s.beta0}};
}

BetaSchedule beta_schedule_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kind", "beta_max", "rate", "beta0"}, where);
  BetaSchedule s;
  const auto kind = get_or<std::string>(j, "kind", "constant", where);
  if (kind == "constant") s.kind = BetaSchedule::Kind::constant;
  else if (kind == "linear") s.kind = BetaSchedule::Kind::linear;
  else if (kind == "exponential") s.kind = BetaSchedule::Kind::exponential;
  else if (kind == "reciprocal") s.kind = BetaSchedule::Kind::reciprocal;
  else throw ConfigError(where + ": unknown beta schedule \"" + kind + "\"");
  s.beta_max = get_or(j, "beta_max", 5.0, where);
  s.rate = get_or(j, "rate", s.rate, where);
  s.beta0 = get_or(j, "beta0", s.beta0, where);
  return s;
}

json halfspaces_to_json(const std::vector<Halfspace>& hs) {
  json out = json::array();
  for (const auto& h : hs) out.push_back({{"normal", vec_to_json(h.normal)}, {"offset", h.offset}});
  return out;
}

std::vector<Halfspace> halfspaces_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<Halfspace> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    check_keys(j[i], {"normal", "offset"}, w);
    out.push_back({vec_from_json(require(j[i], "normal", w), w + ".normal"),
                   get_as<double>(require(j[i], "offset", w), w + ".offset")});
  }
  return out;
}

json objective_decl_to_json(const ObjectiveDecl& d) {
  json j;
  switch (d.kind) {
    case ObjectiveDecl::Kind::branin:
      j["kind"] = "branin";
      break;
    case ObjectiveDecl::Kind::quadratic:
      j["kind"] = "quadratic";
      j["center"] = d.center;
      j["scale"] = d.scale;
      break;
    case ObjectiveDecl::Kind::surrogate:
      j["kind"] = "surrogate";
      j["path"] = d.path;
      break;
  }
  j["offset"] = d.offset;
  return j;
}

ObjectiveDecl objective_decl_from_json(const json& j, const std::string& where) {
  ObjectiveDecl d;
  const auto kind = get_as<std::string>(require(j, "kind", where), where + ".kind");
  if (kind == "branin") {
    check_keys(j, {"kind", "offset"}, where);
  } else if (kind == "quadratic") {
    check_keys(j, {"kind", "offset", "center", "scale"}, where);
    d.kind = ObjectiveDecl::Kind::quadratic;
    d.center = get_as<std::vector<double>>(require(j, "center", where), where + ".center");
    d.scale = get_or(j, "scale", 1.0, where);
  } else if (kind == "surrogate") {
    check_keys(j, {"kind", "offset", "path"}, where);
    d.kind = ObjectiveDecl::Kind::surrogate;
    d.path = get_as<std::string>(require(j, "path", where), where + ".path");
  } else {
    throw ConfigError(where + ": unknown objective kind \"" + kind + "\"");
  }
  d.offset = get_or(j, "offset", 0.0, where);
  return d;
}

json expert_decl_to_json(const ExpertDecl& d) {
  if (d.kind == ExpertDecl::Kind::boltzmann) {
    return {{"kind", "boltzmann"}, {"objective", objective_decl_to_json(d.objective)}, {"beta", d.beta}};
  }
  return {{"kind", "hinge"}, {"halfspaces", halfspaces_to_json(d.halfspaces)}, {"beta_prime", d.beta_prime}};
}

ExpertDecl expert_decl_from_json(const json& j, const std::string& where) {
  ExpertDecl d;
  const auto kind = get_as<std::string>(require(j, "kind", where), where + ".kind");
  if (kind == "boltzmann") {
    check_keys(j, {"kind", "objective", "beta"}, where);
    d.objective = objective_decl_from_json(require(j, "objective", where), where + ".objective");
    d.beta = get_or(j, "beta", 5.0, where);
  } else if (kind == "hinge") {
    check_keys(j, {"kind", "halfspaces", "beta_prime"}, where);
    d.kind = ExpertDecl::Kind::hinge;
    d.halfspaces = halfspaces_from_json(require(j, "halfspaces", where), where + ".halfspaces");
    d.beta_prime = get_or(j, "beta_prime", d.beta_prime, where);
  } else {
    throw ConfigError(where + ": unknown expert kind \"" + kind + "\"");
  }
  return d;
}

double parse_real(const std::string& cell, std::size_t line) {
  if (cell == "nan" || cell == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw ConfigError("csv line " + std::to_string(line) + ": bad number \"" + cell + "\"");
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string points_to_csv(const std::vector<VectorXd>& points, const std::vector<double>* labels) {
  if (points.empty()) throw std::invalid_argument("points_to_csv: no points");
  if (labels && labels->size() != points.size()) throw std::invalid_argument("points_to_csv: label count mismatch");
  const auto d = points.front().size();
  std::string out;
  for (Eigen::Index i = 0; i < d; ++i) out += (i ? ",x" : "x") + std::to_string(i);
  if (labels) out += ",y";
  out += '\n';
  for (std::size_t r = 0; r < points.size(); ++r) {
    if (points[r].size() != d) throw std::invalid_argument("points_to_csv: ragged points");
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i) out += ',';
      out += format_real(points[r][i]);
    }
    if (labels) out += ',' + format_real((*labels)[r]);
    out += '\n';
  }
  return out;
}

PointTable parse_points_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line.empty()) throw ConfigError("csv: empty file");
  if (line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  std::size_t d = 0;
  while (d < header.size() && header[d] == "x" + std::to_string(d)) ++d;
  const bool has_y = d + 1 == header.size() && header[d] == "y";
  if (d == 0 || (d != header.size() && !has_y)) throw ConfigError("csv: header must be x0,x1,...[,y]");

  PointTable table;
  if (has_y) table.labels.emplace();
  std::size_t lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ConfigError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " columns");
    }
    VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) x[static_cast<Eigen::Index>(i)] = parse_real(cells[i], lineno);
    table.points.push_back(std::move(x));
    if (has_y) table.labels->push_back(parse_real(cells[d], lineno));
  }
  if (table.points.empty()) throw ConfigError("csv: no data rows");
  return table;
}

PointTable read_points_csv(const std::filesystem::path& path) { return parse_points_csv(read_text(path)); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw ConfigError("write failed: " + path.string());
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json mlp_spec_to_json(const MlpSpec& spec) {
  json t;
  switch (spec.time_input.kind) {
    case TimeInput::Kind::none:
      t = {{"kind", "none"}};
      break;
    case TimeInput::Kind::scalar_concat:
      t = {{"kind", "scalar_concat"}};
      break;
    case TimeInput::Kind::fourier_concat:
      t = {{"kind", "fourier_concat"}, {"num_features", spec.time_input.num_features}, {"scale", spec.time_input.scale}};
      break;
  }
  return {{"layer_widths", spec.layer_widths}, {"activation", activation_name(spec.activation)}, {"time_input", t}};
}

MlpSpec mlp_spec_from_json(const json& j, TimeInput::Kind default_time) {
  const std::string w = "network";
  check_keys(j, {"layer_widths", "activation", "time_input"}, w);
  MlpSpec spec;
  spec.time_input.kind = default_time;
  spec.layer_widths = get_as<std::vector<int>>(require(j, "layer_widths", w), w + ".layer_widths");
  const auto act = get_or<std::string>(j, "activation", "relu", w);
  if (act == "relu") spec.activation = Activation::relu;
  else if (act == "tanh") spec.activation = Activation::tanh;
  else throw ConfigError(w + ": activation must be relu or tanh");
  if (auto it = j.find("time_input"); it != j.end()) {
    const std::string wt = w + ".time_input";
    check_keys(*it, {"kind", "num_features", "scale"}, wt);
    const auto kind = get_as<std::string>(require(*it, "kind", wt), wt + ".kind");
    if (kind == "none") spec.time_input.kind = TimeInput::Kind::none;
    else if (kind == "scalar_concat") spec.time_input.kind = TimeInput::Kind::scalar_concat;
    else if (kind == "fourier_concat") spec.time_input.kind = TimeInput::Kind::fourier_concat;
    else throw ConfigError(wt + ": unknown kind \"" + kind + "\"");
    spec.time_input.num_features = get_or(*it, "num_features", spec.time_input.num_features, wt);
    spec.time_input.scale = get_or(*it, "scale", spec.time_input.scale, wt);
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return spec;
}

json schedule_to_json(const NoiseSchedule& s) {
  return {{"kind", "vp_linear"}, {"noise_min", s.noise_min}, {"noise_max", s.noise_max}, {"horizon", s.horizon}};
}

NoiseSchedule schedule_from_json(const json& j) {
  const std::string w = "schedule";
  check_keys(j, {"kind", "noise_min", "noise_max", "horizon"}, w);
  if (get_or<std::string>(j, "kind", "vp_linear", w) != "vp_linear") throw ConfigError(w + ": kind must be vp_linear");
  NoiseSchedule s;
  s.noise_min = get_or(j, "noise_min", s.noise_min, w);
  s.noise_max = get_or(j, "noise_max", s.noise_max, w);
  s.horizon = get_or(j, "horizon", s.horizon, w);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return s;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},   {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"seed", c.seed},       {"t_min", c.t_min},           {"output_scaling", scaling_name(c.scaling)}};
}

TrainConfig train_config_from_json(const json& j, std::uint64_t default_seed) {
  const std::string w = "train";
  check_keys(j, {"epochs", "batch_size", "learning_rate", "seed", "t_min", "output_scaling"}, w);
  TrainConfig c;
  c.epochs = get_or(j, "epochs", c.epochs, w);
  c.batch_size = get_or(j, "batch_size", c.batch_size, w);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate, w);
  c.seed = get_or(j, "seed", default_seed, w);
  c.t_min = get_or(j, "t_min", c.t_min, w);
  c.scaling = parse_scaling(get_or<std::string>(j, "output_scaling", "none", w), w);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return c;
}

json sampler_config_to_json(const SamplerConfig& c) {
  return {{"stage1_steps", c.stage1_steps},
          {"stage1_dt", c.stage1_dt},
          {"stage2_steps", c.stage2_steps},
          {"stage2_dt", c.stage2_dt},
          {"stage2_beta", c.stage2_beta},
          {"beta_schedule", beta_schedule_to_json(c.schedule)},
          {"use_mh", c.use_mh},
          {"num_chains", c.num_chains},
          {"seed", c.seed},
          {"record_every", c.record_every},
          {"grad_clip", c.grad_clip}};
}

SamplerConfig sampler_config_from_json(const json& j, std::uint64_t default_seed) {
  const std::string w = "sampler";
  check_keys(j,
             {"stage1_steps", "stage1_dt", "stage2_steps", "stage2_dt", "stage2_beta", "beta_schedule", "use_mh",
              "num_chains", "seed", "record_every", "grad_clip"},
             w);
  SamplerConfig c;
  c.stage1_steps = get_or(j, "stage1_steps", c.stage1_steps, w);
  c.stage1_dt = get_or(j, "stage1_dt", c.stage1_dt, w);
  c.stage2_steps = get_or(j, "stage2_steps", c.stage2_steps, w);
  c.stage2_dt = get_or(j, "stage2_dt", c.stage2_dt, w);
  c.stage2_beta = get_or(j, "stage2_beta", c.stage2_beta, w);
  if (auto it = j.find("beta_schedule"); it != j.end()) c.schedule = beta_schedule_from_json(*it, w + ".beta_schedule");
  c.use_mh = get_or(j, "use_mh", c.use_mh, w);
  c.num_chains = get_or(j, "num_chains", c.num_chains, w);
  c.seed = get_or(j, "seed", default_seed, w);
  c.record_every = get_or(j, "record_every", c.record_every, w);
  c.grad_clip = get_or(j, "grad_clip", c.grad_clip, w);
  return c;
}

json model_to_json(const DiffusionModel& model) {
  const auto& flat = model.params.flat();
  return {{"format", kModelFormat},
          {"version", kFormatVersion},
          {"spec", mlp_spec_to_json(model.spec)},
          {"mode", mode_name(model.mode)},
          {"schedule", schedule_to_json(model.schedule)},
          {"transform", transform_to_json(model.transform)},
          {"t_min", model.t_min},
          {"output_scaling", scaling_name(model.scaling)},
          {"params", vec_to_json(flat)}};
}

DiffusionModel model_from_json(const json& j) {
  const std::string w = "model";
  check_keys(j, {"format", "version", "spec", "mode", "schedule", "transform", "t_min", "output_scaling", "params"}, w);
  if (get_as<std::string>(require(j, "format", w), w + ".format") != kModelFormat) {
    throw ConfigError(w + ": not a diffusion model file");
  }
  if (get_as<int>(require(j, "version", w), w + ".version") != kFormatVersion) {
    throw ConfigError(w + ": unsupported version");
  }
  DiffusionModel m;
  m.spec = mlp_spec_from_json(require(j, "spec", w), TimeInput::Kind::scalar_concat);
  m.mode = parse_mode(get_as<std::string>(require(j, "mode", w), w + ".mode"), w);
  m.schedule = schedule_from_json(require(j, "schedule", w));
  m.transform = transform_from_json(require(j, "transform", w), w + ".transform");
  m.t_min = get_as<double>(require(j, "t_min", w), w + ".t_min");
  m.scaling = parse_scaling(get_or<std::string>(j, "output_scaling", "none", w), w);
  const VectorXd flat = vec_from_json(require(j, "params", w), w + ".params");
  try {
    m.params = ParamSet<double>::from_flat(m.spec, flat);
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return m;
}

void save_model(const std::filesystem::path& path, const DiffusionModel& model) {
  write_text(path, dump_json(model_to_json(model)));
}

DiffusionModel load_model(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return model_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json surrogate_to_json(const Surrogate& s) {
  return {{"format", kSurrogateFormat},
          {"version", kFormatVersion},
          {"spec", mlp_spec_to_json(s.spec)},
          {"transform", transform_to_json(s.x_transform)},
          {"y_transform", {{"mean", s.y_mean}, {"std", s.y_std}}},
          {"params", vec_to_json(s.params.flat())}};
}

Surrogate surrogate_from_json(const json& j) {
  const std::string w = "surrogate";
  check_keys(j, {"format", "version", "spec", "transform", "y_transform", "params"}, w);
  if (get_as<std::string>(require(j, "format", w), w + ".format") != kSurrogateFormat) {
    throw ConfigError(w + ": not a surrogate file");
  }
  if (get_as<int>(require(j, "version", w), w + ".version") != kFormatVersion) {
    throw ConfigError(w + ": unsupported version");
  }
  Surrogate s;
  s.spec = mlp_spec_from_json(require(j, "spec", w));
  s.x_transform = transform_from_json(require(j, "transform", w), w + ".transform");
  const auto& y = require(j, "y_transform", w);
  check_keys(y, {"mean", "std"}, w + ".y_transform");
  s.y_mean = get_as<double>(require(y, "mean", w), w + ".y_transform.mean");
  s.y_std = get_as<double>(require(y, "std", w), w + ".y_transform.std");
  if (s.spec.output_width() != 1 || s.spec.time_width() != 0) {
    throw ConfigError(w + ": network must be time-free with a scalar output");
  }
  if (s.x_transform.dim() != s.spec.data_width()) throw ConfigError(w + ": transform width mismatch");
  try {
    s.params = ParamSet<double>::from_flat(s.spec, vec_from_json(require(j, "params", w), w + ".params"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return s;
}

RunConfig run_config_from_json(const json& j) {
  const std::string w = "config";
  check_keys(j,
             {"dataset", "model", "output_dir", "seed", "network", "schedule", "train", "sampler", "experts",
              "surrogate", "run_info"},
             w);
  RunConfig c;
  c.dataset = get_or<std::string>(j, "dataset", "", w);
  c.model = get_or<std::string>(j, "model", "", w);
  c.output_dir = get_or<std::string>(j, "output_dir", "", w);
  c.seed = get_or<std::uint64_t>(j, "seed", 0, w);
  if (auto it = j.find("network"); it != j.end()) c.network = mlp_spec_from_json(*it, TimeInput::Kind::scalar_concat);
  if (auto it = j.find("schedule"); it != j.end()) c.schedule = schedule_from_json(*it);
  c.train = train_config_from_json(j.value("train", json::object()), c.seed);
  c.sampler = sampler_config_from_json(j.value("sampler", json::object()), c.seed);
  if (auto it = j.find("experts"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(w + ".experts: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.experts.push_back(expert_decl_from_json((*it)[i], w + ".experts[" + std::to_string(i) + "]"));
    }
  }
  c.surrogate_train.epochs = 500;
  c.surrogate_train.seed = c.seed;
  if (auto it = j.find("surrogate"); it != j.end()) {
    check_keys(*it, {"network", "train"}, w + ".surrogate");
    if (auto n = it->find("network"); n != it->end()) c.surrogate_network = mlp_spec_from_json(*n);
    if (auto t = it->find("train"); t != it->end()) {
      json merged = train_config_to_json(c.surrogate_train);
      merged.update(*t);
      c.surrogate_train = train_config_from_json(merged, c.seed);
    }
  }
  if (auto it = j.find("run_info"); it != j.end()) c.run_info = *it;
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json experts = json::array();
  for (const auto& d : c.experts) experts.push_back(expert_decl_to_json(d));
  json j = {{"dataset", c.dataset},
            {"model", c.model},
            {"output_dir", c.output_dir},
            {"seed", c.seed},
            {"network", mlp_spec_to_json(c.network)},
            {"schedule", schedule_to_json(c.schedule)},
            {"train", train_config_to_json(c.train)},
            {"sampler", sampler_config_to_json(c.sampler)},
            {"experts", experts},
            {"surrogate",
             {{"network", mlp_spec_to_json(c.surrogate_network)}, {"train", train_config_to_json(c.surrogate_train)}}}};
  if (c.run_info) j["run_info"] = *c.run_info;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return run_config_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<Expert> build_experts(const std::vector<ExpertDecl>& decls) {
  std::vector<Expert> out;
  for (const auto& d : decls) {
    if (d.kind == ExpertDecl::Kind::hinge) {
      out.emplace_back(HingeExpert{d.halfspaces, d.beta_prime});
      continue;
    }
    Objective obj;
    switch (d.objective.kind) {
      case ObjectiveDecl::Kind::branin:
        obj = Objective::branin();
        break;
      case ObjectiveDecl::Kind::quadratic: {
        const auto& c = d.objective.center;
        obj = Objective::quadratic(Eigen::Map<const VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())),
                                   d.objective.scale);
        break;
      }
      case ObjectiveDecl::Kind::surrogate: {
        const auto text = read_text(d.objective.path);
        try {
          obj = Objective{surrogate_from_json(json::parse(text)), 0.0};
        } catch (const json::parse_error& e) {
          throw ConfigError(d.objective.path + ": " + e.what());
        }
        break;
      }
    }
    obj.offset = d.objective.offset;
    out.emplace_back(BoltzmannExpert{std::move(obj), d.beta});
  }
  return out;
}

}  // namespace diffopt
