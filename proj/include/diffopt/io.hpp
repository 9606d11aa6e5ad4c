// Copyright 2026 The diffopt Authors
// SPDX-License-Identifier: Apache-2.0

// Point-set CSV plus the JSON formats for models and run configs.

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffopt/sampler.hpp"

namespace diffopt {

using json = nlohmann::json;

/// Malformed input files or configs (maps to exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 17 significant digits; "nan" / "inf" / "-inf" for non-finite values.
std::string format_real(double v);

struct PointTable {
  std::vector<VectorXd> points;
  std::optional<std::vector<double>> labels;  // the optional trailing y column
};

/// Header x0,...,x{d-1}[,y], one row per point.
std::string points_to_csv(const std::vector<VectorXd>& points, const std::vector<double>* labels = nullptr);
PointTable parse_points_csv(const std::string& text);
PointTable read_points_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

json mlp_spec_to_json(const MlpSpec& spec);
/// A missing time_input falls back to `default_time`.
MlpSpec mlp_spec_from_json(const json& j, TimeInput::Kind default_time = TimeInput::Kind::none);
json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const json& j);
json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j, std::uint64_t default_seed);
json sampler_config_to_json(const SamplerConfig& c);
SamplerConfig sampler_config_from_json(const json& j, std::uint64_t default_seed);

json model_to_json(const DiffusionModel& model);
DiffusionModel model_from_json(const json& j);
std::string dump_json(const json& j);
void save_model(const std::filesystem::path& path, const DiffusionModel& model);
DiffusionModel load_model(const std::filesystem::path& path);

json surrogate_to_json(const Surrogate& s);
Surrogate surrogate_from_json(const json& j);

/// An expert as declared in a config; surrogates are referenced by path.
struct ObjectiveDecl {
  enum class Kind { branin, quadratic, surrogate };
  Kind kind = Kind::branin;
  std::vector<double> center;  // quadratic
  double scale = 1.0;          // quadratic
  std::string path;            // surrogate
  double offset = 0.0;
};

struct ExpertDecl {
  enum class Kind { boltzmann, hinge };
  Kind kind = Kind::boltzmann;
  ObjectiveDecl objective;
  double beta = 1.0;
  std::vector<Halfspace> halfspaces;
  double beta_prime = 10.0;
};

struct RunConfig {
  std::string dataset;
  std::string model;
  std::string output_dir;
  std::uint64_t seed = 0;
  MlpSpec network{{3, 256, 256, 2}, Activation::relu, {TimeInput::Kind::scalar_concat}};
  NoiseSchedule schedule;
  TrainConfig train;
  SamplerConfig sampler;
  std::vector<ExpertDecl> experts;
  MlpSpec surrogate_network{{2, 64, 64, 1}, Activation::tanh, {}};
  TrainConfig surrogate_train;
  std::optional<json> run_info;  // written into manifests; ignored on input
};

/// Strict: unknown keys anywhere are errors.
RunConfig run_config_from_json(const json& j);
json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolve declarations into experts (loading surrogate files).
std::vector<Expert> build_experts(const std::vector<ExpertDecl>& decls);

}  // namespace diffopt
