#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "relclass/features.hpp"
#include "relclass/relation_head.hpp"

namespace relclass {

// Dimensions and optimizer constants. epsilon, max_epochs and patience
// have no canonical values; the defaults here are our own.
struct HyperParams {
  int n_pre = 200;
  int n_ran = 50;
  int n_char = 50;  // per-direction char hidden = n_char / 2
  int n_pos = 50;
  int n_wnh = 50;
  int n_lstm = 200;
  int n_h = 200;
  double alpha = 0.01;
  double beta = 1e-8;
  double epsilon = 1e-6;
  double init_lo = -0.01;
  double init_hi = 0.01;
  int max_epochs = 50;
  int patience = 5;

  bool operator==(const HyperParams&) const = default;
};

struct Paths {
  std::string train;
  std::string dev;
  std::string test;
  std::string embeddings;
  std::string checkpoint;

  bool operator==(const Paths&) const = default;
};

// One declarative document drives every command. Precedence at the CLI is
// flag > file > default.
struct RunConfig {
  std::string task = "semeval";  // semeval | bb3
  std::uint64_t seed = 42;
  int window = 1;
  Paths paths;
  HyperParams hp;
  ChannelFlags channels;
  ContextFlags contexts;
  bool char_lowercase = false;

  bool operator==(const RunConfig&) const = default;

  static RunConfig defaults() { return RunConfig{}; }
  // Missing keys fall back to defaults; unknown keys are ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  // Structural checks only (dims, task name, window); path existence is
  // checked per command because not every command needs every path.
  void validate() const;
};

}  // namespace relclass
