#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "advmt/config.hpp"
#include "advmt/optim.hpp"
#include "advmt/trainer.hpp"

namespace advmt {

enum ExitStatus : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

// Reads every task corpus, builds its vocabulary and applies the dev split.
std::vector<TaskData> load_tasks(const Config& config);

// Trains from `config` and writes the best checkpoint to `checkpoint`. When
// `log` is non-empty the training log is written there as TSV.
TrainResult train_from_config(const Config& config, const std::string& checkpoint, const std::string& log);

struct GradCheckOptions {
  std::uint64_t seed = 7;
  std::size_t embedding_dim = 4;
  std::size_t hidden_dim = 3;
  std::size_t mlp_hidden_dim = 5;
  std::size_t tasks = 2;
  std::size_t max_length = 5;
  std::size_t batch_size = 2;
  double step = 1e-5;
};

// Finite-difference check of the full objective (summed over one random
// batch per task) on a small random adversarial model, with every
// parameter trainable on one tape.
GradCheckResult check_model_gradient(const GradCheckOptions& options);

// Entry point shared by the `advmt` executable and the tests. `args`
// excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advmt
