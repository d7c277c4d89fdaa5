#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "advmt/model.hpp"
#include "advmt/trainer.hpp"

namespace advmt {

struct TaskConfig {
  std::string name;
  std::filesystem::path corpus;
  int min_frequency = 1;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
  std::vector<TaskConfig> tasks;
};

// Plain `key = value` lines; `#` starts a comment. Tasks are given as
// repeated `task = <name> <corpus path> [min_frequency]` lines; relative
// corpus paths are resolved against `base_dir`. Unknown keys and invalid
// values throw ConfigError naming the key.
Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
Config read_config(const std::filesystem::path& path);

// Checks the value invariants (positive sizes, eval_interval <= max_steps,
// at least one task). Throws ConfigError.
void validate(const Config& config);

}  // namespace advmt
