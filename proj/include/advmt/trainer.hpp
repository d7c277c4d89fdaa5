#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advmt/model.hpp"
#include "advmt/optim.hpp"

namespace advmt {

struct LossWeights {
  double eval = 1.0;
  double adv_discriminator = 1.0;
  double adv_shared = 1.0;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 128;
  double margin = 0.5;
  long max_steps = 2000;
  long eval_interval = 200;
  std::uint64_t seed = 1;
  LossWeights weights;
  double dev_fraction = 0.05;
  bool resample_negatives = true;
};

// Loss values of one step. The adversarial terms are batch means of the
// per-sample sums, on the same scale as the batch-mean hinge loss.
struct StepReport {
  double eval = 0.0;
  double adv_discriminator = 0.0;
  double adv_shared = 0.0;
  double total = 0.0;
  bool log_clamped = false;
};

// One alternating update on a single-task batch.
//   Phase D: discriminator loss on the current shared features; only the
//            discriminator is updated.
//   Phase S: batch-mean hinge loss plus the shared adversarial loss; the
//            shared encoder, the active task's shared embedding, its private
//            encoders and its scorer are updated. The discriminator is held
//            constant.
// Without a discriminator only phase S runs and both adversarial terms are 0.
// Throws DivergenceError naming the offending term on a non-finite loss.
StepReport train_step(const Batch& batch, Model& model, Adam& optimizer, double margin,
                      const LossWeights& weights = {});

// The two phases of train_step, exposed for tests. discriminator_phase
// requires a discriminator and fills adv_discriminator; task_phase fills eval
// and adv_shared.
StepReport discriminator_phase(const Batch& batch, Model& model, Adam& optimizer, const LossWeights& weights = {});
StepReport task_phase(const Batch& batch, Model& model, Adam& optimizer, double margin,
                      const LossWeights& weights = {});

// Whether a parameter is updated in phase S for `task`.
bool in_task_phase_scope(const Scope& scope, int task);

// The whole objective J = J_eval + J_adv1 + J_adv2 on one tape, with every
// gradient path the tape allows (used for gradient checking).
struct CombinedLoss {
  Var eval;
  Var adv_discriminator;
  Var adv_shared;
  Var total;
};
CombinedLoss combined_loss(Tape& tape, Model& model, const Batch& batch, double margin,
                           const LossWeights& weights = {});

struct TaskData {
  std::string name;
  Vocabulary vocab;
  std::vector<QueryReplyPair> train;
  std::vector<QueryReplyPair> dev;
};

struct LogRow {
  long step = 0;
  std::string task;
  StepReport losses;
  std::optional<double> dev_accuracy;
};

// step, task, J_eval, J_adv1, J_adv2, J, dev_rank_acc ("-" when the dev set
// was not evaluated at that step). Doubles use round-trip precision.
void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const LogRow& row);

struct TrainResult {
  Model model;  // parameters at the best dev ranking accuracy
  std::vector<LogRow> log;
  long best_step = 0;
  double best_dev_accuracy = 0.0;
  std::vector<std::string> warnings;
};

// Fraction of triples with score(q, r+) > score(q, r-).
double ranking_accuracy(const Model& model, std::span<const TrainingTriple> triples);

// Round-robin over tasks, one batch per step. Negatives are redrawn at every
// epoch of a task when `resample_negatives` is set. The dev set (pooled over
// tasks) is evaluated every `eval_interval` steps and after the last step;
// ties in dev accuracy go to the later step.
TrainResult train(std::vector<TaskData> tasks, ModelConfig model_config, const TrainConfig& config,
                  const std::function<void(const LogRow&)>& on_row = {});

}  // namespace advmt
