#include "advmt/model.hpp"

#include <cmath>

namespace advmt {

std::string architecture_str(Architecture a) {
  switch (a) {
    case Architecture::SingleTask: return "single";
    case Architecture::MultiTask: return "multitask";
    case Architecture::Adversarial: return "advmt";
  }
  return "?";
}

Architecture parse_architecture(const std::string& text) {
  if (text == "single") return Architecture::SingleTask;
  if (text == "multitask") return Architecture::MultiTask;
  if (text == "advmt") return Architecture::Adversarial;
  throw ConfigError("unknown architecture '" + text + "' (expected single, multitask or advmt)");
}

Model::Model(ModelConfig config, std::vector<TaskSpec> tasks, std::uint64_t seed) : config_(config) {
  if (tasks.empty()) throw ConfigError("model needs at least one task");
  if (config_.embedding_dim == 0 || config_.hidden_dim == 0 || config_.mlp_hidden_dim == 0)
    throw ConfigError("model dimensions must be positive");
  if (config_.architecture == Architecture::Adversarial && tasks.size() < 2)
    throw ConfigError("adversarial training needs at least two tasks");

  Rng rng(seed);
  const std::size_t de = config_.embedding_dim, dh = config_.hidden_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dh));

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const int id = static_cast<int>(k);
    const std::string prefix = "task" + std::to_string(k);
    TaskModel t;
    t.name = std::move(tasks[k].name);
    t.vocab = std::move(tasks[k].vocab);
    for (const auto& other : tasks_)
      if (other.name == t.name) throw ConfigError("duplicate task name '" + t.name + "'");
    const std::size_t v = t.vocab.size();
    t.private_embedding = &make_embedding(store_, prefix + ".private.embedding", v, de, Scope::private_to(id), rng);
    t.private_query = make_bilstm(store_, prefix + ".private.query", de, dh, Scope::private_to(id), rng);
    t.private_reply = make_bilstm(store_, prefix + ".private.reply", de, dh, Scope::private_to(id), rng);
    if (has_shared())
      t.shared_embedding = &make_embedding(store_, prefix + ".shared.embedding", v, de, Scope::shared_for(id), rng);
    t.scorer = make_scorer(store_, prefix + ".scorer", config_.sentence_dim(), config_.sentence_dim(),
                           config_.mlp_hidden_dim, bound, Scope::task_head(id), rng);
    tasks_.push_back(std::move(t));
  }

  if (has_shared()) {
    shared_.query = make_bilstm(store_, "shared.query", de, dh, Scope::shared(), rng);
    shared_.reply = make_bilstm(store_, "shared.reply", de, dh, Scope::shared(), rng);
  }
  if (config_.architecture == Architecture::Adversarial) {
    const std::size_t k = tasks_.size();
    Tensor w(Shape{k, 4 * dh});
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : w.values()) x = dist(rng);
    discriminator_.weight = &store_.add("discriminator.weight", std::move(w), Scope::discriminator());
    discriminator_.bias = &store_.add("discriminator.bias", Tensor(Shape{k}), Scope::discriminator());
  }
}

const TaskModel& Model::task(int k) const {
  check_task(k);
  return tasks_[k];
}

int Model::task_index(const std::string& name) const {
  for (std::size_t k = 0; k < tasks_.size(); ++k)
    if (tasks_[k].name == name) return static_cast<int>(k);
  throw std::out_of_range("unknown task '" + name + "'");
}

void Model::check_task(int task) const {
  if (task < 0 || static_cast<std::size_t>(task) >= tasks_.size())
    throw std::out_of_range("unknown task id " + std::to_string(task));
}

namespace {

SentenceEncoding encode_side(Tape& tape, const TaskModel& t, const BiLstmParams& priv, const BiLstmParams* shared,
                             const TokenIds& ids) {
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= t.vocab.size())
      throw ShapeError("token id " + std::to_string(id) + " outside vocabulary of task '" + t.name + "'");
  Var p = bilstm_encode(tape, *t.private_embedding, ids, priv);
  if (!shared) return {p, Var{}};
  Var s = bilstm_encode(tape, *t.shared_embedding, ids, *shared);
  return {ops::concat(s, p), s};
}

}  // namespace

SentenceEncoding Model::encode_query(Tape& tape, int task, const TokenIds& ids) {
  check_task(task);
  return encode_side(tape, tasks_[task], tasks_[task].private_query, has_shared() ? &shared_.query : nullptr, ids);
}

SentenceEncoding Model::encode_reply(Tape& tape, int task, const TokenIds& ids) {
  check_task(task);
  return encode_side(tape, tasks_[task], tasks_[task].private_reply, has_shared() ? &shared_.reply : nullptr, ids);
}

PairEncoding Model::encode_pair(Tape& tape, int task, const QueryReplyPair& pair) {
  auto q = encode_query(tape, task, pair.query);
  auto r = encode_reply(tape, task, pair.reply);
  return {q.full, r.full, q.shared, r.shared};
}

std::pair<Var, Var> Model::encode_shared(Tape& tape, int task, const QueryReplyPair& pair) {
  check_task(task);
  if (!has_shared()) throw std::logic_error("model has no shared space");
  const TaskModel& t = tasks_[task];
  for (const TokenIds* seq : {&pair.query, &pair.reply})
    for (int id : *seq)
      if (id < 0 || static_cast<std::size_t>(id) >= t.vocab.size())
        throw ShapeError("token id " + std::to_string(id) + " outside vocabulary of task '" + t.name + "'");
  return {bilstm_encode(tape, *t.shared_embedding, pair.query, shared_.query),
          bilstm_encode(tape, *t.shared_embedding, pair.reply, shared_.reply)};
}

Var Model::score(Tape&, int task, Var query, Var reply) {
  check_task(task);
  return mlp_score(query, reply, tasks_[task].scorer);
}

Var Model::discriminate(Tape& tape, Var shared_query, Var shared_reply) {
  if (!has_discriminator()) throw std::logic_error("model has no discriminator");
  return discriminator_forward(shared_query, shared_reply, tape.param(*discriminator_.weight),
                               tape.param(*discriminator_.bias));
}

// The const helpers below run on frozen tapes, which only read parameters.
double Model::score(int task, const TokenIds& query, const TokenIds& reply) const {
  auto& self = const_cast<Model&>(*this);
  Tape tape = Tape::frozen();
  auto q = self.encode_query(tape, task, query);
  auto r = self.encode_reply(tape, task, reply);
  return self.score(tape, task, q.full, r.full).item();
}

Tensor Model::shared_features(int task, const QueryReplyPair& pair) const {
  if (!has_shared()) throw std::logic_error("model has no shared space");
  auto& self = const_cast<Model&>(*this);
  Tape tape = Tape::frozen();
  auto [sq, sr] = self.encode_shared(tape, task, pair);
  return ops::concat(sq, sr).value();
}

Tensor Model::discriminator_probabilities(int task, const QueryReplyPair& pair) const {
  auto& self = const_cast<Model&>(*this);
  Tape tape = Tape::frozen();
  auto [sq, sr] = self.encode_shared(tape, task, pair);
  return self.discriminate(tape, sq, sr).value();
}

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(store_.size());
  for (std::size_t i = 0; i < store_.size(); ++i) out.push_back(store_[i].value);
  return out;
}

void Model::restore(const std::vector<Tensor>& values) {
  if (values.size() != store_.size())
    throw ShapeError("restore: " + std::to_string(values.size()) + " tensors for " + std::to_string(store_.size()) +
                     " parameters");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i].shape() != store_[i].shape())
      throw ShapeError("restore: " + store_[i].name() + " expects " + shape_str(store_[i].shape()) + ", got " +
                       shape_str(values[i].shape()));
  for (std::size_t i = 0; i < values.size(); ++i) store_[i].value = values[i];
}

Model make_model_with_values(ModelConfig config, std::vector<TaskSpec> tasks, const std::vector<Tensor>& values) {
  Model m(config, std::move(tasks), 0);
  m.restore(values);
  return m;
}

Var discriminator_forward(Var shared_query, Var shared_reply, Var weight, Var bias) {
  const auto& w = weight.value();
  const std::size_t half = shared_query.value().size();
  if (shared_query.value().rank() != 1 || shared_reply.value().shape() != shared_query.value().shape() ||
      w.rank() != 2 || w.cols() != 2 * half || bias.value().shape() != Shape{w.rows()})
    throw ShapeError("discriminator: inputs " + shape_str(shared_query.value().shape()) + " + " +
                     shape_str(shared_reply.value().shape()) + " vs W " + shape_str(w.shape()) + ", b " +
                     shape_str(bias.value().shape()));
  return ops::softmax(ops::add(ops::matmul(weight, ops::concat(shared_query, shared_reply)), bias));
}

Tensor discriminator_forward(const Tensor& shared_query, const Tensor& shared_reply, const Tensor& weight,
                             const Tensor& bias) {
  Tape tape = Tape::frozen();
  return discriminator_forward(tape.constant(shared_query), tape.constant(shared_reply), tape.constant(weight),
                               tape.constant(bias))
      .value();
}

namespace {

const double kProbFloor = std::exp(kLogFloor);

}  // namespace

AdversarialLoss adv_loss_discriminator(std::span<const Var> probabilities, std::span<const int> tasks) {
  if (probabilities.empty() || probabilities.size() != tasks.size())
    throw std::invalid_argument("adv_loss_discriminator: need one task id per probability vector");
  AdversarialLoss out;
  std::vector<Var> terms;
  terms.reserve(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const Tensor& p = probabilities[i].value();
    const int k = tasks[i];
    if (k < 0 || static_cast<std::size_t>(k) >= p.size())
      throw std::out_of_range("adv_loss_discriminator: task id " + std::to_string(k) + " outside " +
                              shape_str(p.shape()));
    if (!(p[k] > kProbFloor)) out.clamped = true;
    terms.push_back(ops::log(ops::slice(probabilities[i], static_cast<std::size_t>(k), 1), kLogFloor));
  }
  out.value = ops::scale(ops::sum(ops::concat(terms)), -1.0);
  return out;
}

AdversarialLoss adv_loss_shared(std::span<const Var> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("adv_loss_shared: no samples");
  AdversarialLoss out;
  std::vector<Var> terms;
  terms.reserve(probabilities.size());
  for (const Var& p : probabilities) {
    for (double v : p.value().values())
      if (v > 0 && !(v > kProbFloor)) out.clamped = true;
    terms.push_back(ops::reshape(ops::sum(ops::mul(p, ops::log(p, kLogFloor))), Shape{1}));
  }
  out.value = ops::sum(ops::concat(terms));
  return out;
}

double adv_loss_discriminator(std::span<const Tensor> probabilities, std::span<const int> tasks, bool* clamped) {
  Tape tape = Tape::frozen();
  std::vector<Var> ps;
  for (const auto& p : probabilities) ps.push_back(tape.constant(p));
  auto loss = adv_loss_discriminator(ps, tasks);
  if (clamped) *clamped = loss.clamped;
  return loss.value.item();
}

double adv_loss_shared(std::span<const Tensor> probabilities) {
  Tape tape = Tape::frozen();
  std::vector<Var> ps;
  for (const auto& p : probabilities) ps.push_back(tape.constant(p));
  return adv_loss_shared(ps).value.item();
}

}  // namespace advmt
