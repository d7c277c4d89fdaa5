#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advmt/corpus.hpp"
#include "advmt/encoder.hpp"
#include "advmt/scorer.hpp"

namespace advmt {

enum class Architecture {
  SingleTask,   // private Bi-LSTMs only
  MultiTask,    // shared + private, no adversary
  Adversarial,  // shared + private + task discriminator
};

std::string architecture_str(Architecture a);
Architecture parse_architecture(const std::string& text);

struct ModelConfig {
  std::size_t embedding_dim = 128;
  std::size_t hidden_dim = 256;
  std::size_t mlp_hidden_dim = 50;
  Architecture architecture = Architecture::Adversarial;

  // Width of q_k and r_k: 2 d_h per encoder, two encoders when shared.
  std::size_t sentence_dim() const {
    return (architecture == Architecture::SingleTask ? 2 : 4) * hidden_dim;
  }
  std::size_t feature_dim() const { return 2 * sentence_dim() + 1; }
};

struct TaskModel {
  std::string name;
  Vocabulary vocab;
  Parameter* private_embedding = nullptr;
  BiLstmParams private_query;
  BiLstmParams private_reply;
  // Task-specific table feeding the shared encoder; null for SingleTask.
  Parameter* shared_embedding = nullptr;
  ScorerParams scorer;
};

struct SharedSpace {
  BiLstmParams query;
  BiLstmParams reply;
};

struct Discriminator {
  Parameter* weight = nullptr;  // K x 4 d_h
  Parameter* bias = nullptr;    // K
};

struct TaskSpec {
  std::string name;
  Vocabulary vocab;
};

struct SentenceEncoding {
  Var full;    // shared (+) private, or private alone for SingleTask
  Var shared;  // invalid (id -1) when the model has no shared space
};

struct PairEncoding {
  Var query;
  Var reply;
  Var shared_query;
  Var shared_reply;
};

// All trainable state. Parameters are created in a fixed order from the
// seed, so the same (config, vocabularies, seed) always yields the same
// initial model.
class Model {
 public:
  Model(ModelConfig config, std::vector<TaskSpec> tasks, std::uint64_t seed);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  std::size_t task_count() const { return tasks_.size(); }
  const TaskModel& task(int k) const;
  // Throws std::out_of_range for an unknown name.
  int task_index(const std::string& name) const;
  bool has_shared() const { return config_.architecture != Architecture::SingleTask; }
  bool has_discriminator() const { return discriminator_.weight != nullptr; }

  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const SharedSpace& shared() const { return shared_; }
  const Discriminator& discriminator() const { return discriminator_; }

  SentenceEncoding encode_query(Tape& tape, int task, const TokenIds& ids);
  SentenceEncoding encode_reply(Tape& tape, int task, const TokenIds& ids);
  PairEncoding encode_pair(Tape& tape, int task, const QueryReplyPair& pair);
  // Only the shared halves (s_q, s_r); skips the private encoders.
  std::pair<Var, Var> encode_shared(Tape& tape, int task, const QueryReplyPair& pair);
  Var score(Tape& tape, int task, Var query, Var reply);
  // softmax(W (s_q (+) s_r) + b), length K.
  Var discriminate(Tape& tape, Var shared_query, Var shared_reply);

  // Inference helpers; they never modify the model.
  double score(int task, const TokenIds& query, const TokenIds& reply) const;
  Tensor shared_features(int task, const QueryReplyPair& pair) const;
  Tensor discriminator_probabilities(int task, const QueryReplyPair& pair) const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  void check_task(int task) const;

  ModelConfig config_;
  ParameterStore store_;
  std::vector<TaskModel> tasks_;
  SharedSpace shared_;
  Discriminator discriminator_;
};

// Builds a Model around existing parameter values (checkpoint loading).
// `values` must follow the manifest order of a freshly constructed model.
Model make_model_with_values(ModelConfig config, std::vector<TaskSpec> tasks, const std::vector<Tensor>& values);

Var discriminator_forward(Var shared_query, Var shared_reply, Var weight, Var bias);
Tensor discriminator_forward(const Tensor& shared_query, const Tensor& shared_reply, const Tensor& weight,
                             const Tensor& bias);

struct AdversarialLoss {
  Var value;
  // Some true-class probability hit the log floor.
  bool clamped = false;
};

inline constexpr double kLogFloor = -700.0;

// -sum_i log P(task_i | s_i).
AdversarialLoss adv_loss_discriminator(std::span<const Var> probabilities, std::span<const int> tasks);
// sum_i sum_k P(k | s_i) log P(k | s_i), i.e. the negated entropy summed
// over samples; 0 log 0 = 0.
AdversarialLoss adv_loss_shared(std::span<const Var> probabilities);

double adv_loss_discriminator(std::span<const Tensor> probabilities, std::span<const int> tasks,
                              bool* clamped = nullptr);
double adv_loss_shared(std::span<const Tensor> probabilities);

}  // namespace advmt
