#include "advmt/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace advmt {

namespace {

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + term + " loss");
}

QueryReplyPair gold_pair(const TrainingTriple& t) { return {t.query, t.positive_reply}; }

struct EvalTerms {
  Var eval;
  std::vector<Var> probabilities;
};

// Batch-mean hinge loss; also collects discriminator outputs on the gold
// pairs when the model has a discriminator.
EvalTerms eval_terms(Tape& tape, Model& model, const Batch& batch, double margin) {
  const int k = batch.task;
  EvalTerms out;
  std::vector<Var> hinges;
  for (const auto& t : batch.triples) {
    auto q = model.encode_query(tape, k, t.query);
    auto pos = model.encode_reply(tape, k, t.positive_reply);
    auto neg = model.encode_reply(tape, k, t.negative_reply);
    Var sp = model.score(tape, k, q.full, pos.full);
    Var sn = model.score(tape, k, q.full, neg.full);
    hinges.push_back(ops::reshape(hinge_loss(sp, sn, margin), Shape{1}));
    if (model.has_discriminator()) out.probabilities.push_back(model.discriminate(tape, q.shared, pos.shared));
  }
  out.eval = ops::scale(ops::sum(ops::concat(hinges)), 1.0 / static_cast<double>(batch.size()));
  return out;
}

}  // namespace

bool in_task_phase_scope(const Scope& scope, int task) {
  switch (scope.kind) {
    case ScopeKind::Shared: return scope.task < 0 || scope.task == task;
    case ScopeKind::Private:
    case ScopeKind::TaskHead: return scope.task == task;
    case ScopeKind::Discriminator: return false;
  }
  return false;
}

StepReport discriminator_phase(const Batch& batch, Model& model, Adam& optimizer, const LossWeights& weights) {
  if (batch.triples.empty()) throw std::invalid_argument("discriminator_phase: empty batch");
  if (!model.has_discriminator()) throw std::logic_error("model has no discriminator");
  const int k = batch.task;
  StepReport report;
  Tape tape([](const Scope& s) { return s.kind == ScopeKind::Discriminator; });
  std::vector<Var> probs;
  for (const auto& t : batch.triples) {
    auto [sq, sr] = model.encode_shared(tape, k, gold_pair(t));
    probs.push_back(model.discriminate(tape, sq, sr));
  }
  const std::vector<int> tasks(batch.size(), k);
  auto adv = adv_loss_discriminator(probs, tasks);
  Var loss = ops::scale(adv.value, 1.0 / static_cast<double>(batch.size()));
  report.adv_discriminator = loss.item();
  report.log_clamped = adv.clamped;
  require_finite(report.adv_discriminator, "J_adv1");
  tape.backward(ops::scale(loss, weights.adv_discriminator));
  auto params = model.parameters().select([](const Parameter& p) { return p.scope().kind == ScopeKind::Discriminator; });
  optimizer.step(params);
  report.total = weights.adv_discriminator * report.adv_discriminator;
  return report;
}

StepReport task_phase(const Batch& batch, Model& model, Adam& optimizer, double margin, const LossWeights& weights) {
  if (batch.triples.empty()) throw std::invalid_argument("task_phase: empty batch");
  const int k = batch.task;
  StepReport report;
  Tape tape([k](const Scope& s) { return in_task_phase_scope(s, k); });
  auto terms = eval_terms(tape, model, batch, margin);
  report.eval = terms.eval.item();
  require_finite(report.eval, "J_eval");
  Var loss = ops::scale(terms.eval, weights.eval);
  if (!terms.probabilities.empty()) {
    auto adv = adv_loss_shared(terms.probabilities);
    Var mean = ops::scale(adv.value, 1.0 / static_cast<double>(batch.size()));
    report.adv_shared = mean.item();
    report.log_clamped = adv.clamped;
    require_finite(report.adv_shared, "J_adv2");
    loss = ops::add(loss, ops::scale(mean, weights.adv_shared));
  }
  tape.backward(loss);
  auto params = model.parameters().select([k](const Parameter& p) { return in_task_phase_scope(p.scope(), k); });
  optimizer.step(params);
  report.total = weights.eval * report.eval + weights.adv_shared * report.adv_shared;
  return report;
}

StepReport train_step(const Batch& batch, Model& model, Adam& optimizer, double margin, const LossWeights& weights) {
  StepReport report;
  if (model.has_discriminator()) report = discriminator_phase(batch, model, optimizer, weights);
  const StepReport s = task_phase(batch, model, optimizer, margin, weights);
  report.eval = s.eval;
  report.adv_shared = s.adv_shared;
  report.log_clamped = report.log_clamped || s.log_clamped;
  report.total = weights.eval * report.eval + weights.adv_discriminator * report.adv_discriminator +
                 weights.adv_shared * report.adv_shared;
  return report;
}

CombinedLoss combined_loss(Tape& tape, Model& model, const Batch& batch, double margin, const LossWeights& weights) {
  const double n = static_cast<double>(batch.size());
  auto terms = eval_terms(tape, model, batch, margin);
  CombinedLoss out;
  out.eval = terms.eval;
  if (terms.probabilities.empty()) {
    out.adv_discriminator = tape.constant(Tensor::scalar(0.0));
    out.adv_shared = tape.constant(Tensor::scalar(0.0));
  } else {
    const std::vector<int> tasks(batch.size(), batch.task);
    out.adv_discriminator = ops::scale(adv_loss_discriminator(terms.probabilities, tasks).value, 1.0 / n);
    out.adv_shared = ops::scale(adv_loss_shared(terms.probabilities).value, 1.0 / n);
  }
  const Var parts[] = {ops::reshape(ops::scale(out.eval, weights.eval), Shape{1}),
                       ops::reshape(ops::scale(out.adv_discriminator, weights.adv_discriminator), Shape{1}),
                       ops::reshape(ops::scale(out.adv_shared, weights.adv_shared), Shape{1})};
  out.total = ops::sum(ops::concat(parts));
  return out;
}

void write_log_header(std::ostream& os) { os << "# step\ttask\tJ_eval\tJ_adv1\tJ_adv2\tJ\tdev_rank_acc\n"; }

void write_log_row(std::ostream& os, const LogRow& row) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << row.step << '\t' << row.task << '\t' << row.losses.eval << '\t' << row.losses.adv_discriminator << '\t'
     << row.losses.adv_shared << '\t' << row.losses.total << '\t';
  if (row.dev_accuracy) os << *row.dev_accuracy;
  else os << '-';
  os << '\n';
  os.precision(old);
}

double ranking_accuracy(const Model& model, std::span<const TrainingTriple> triples) {
  if (triples.empty()) return std::numeric_limits<double>::quiet_NaN();
  auto& m = const_cast<Model&>(model);  // frozen tapes only read parameters
  std::size_t wins = 0;
  for (const auto& t : triples) {
    Tape tape = Tape::frozen();
    auto q = m.encode_query(tape, t.task, t.query);
    auto pos = m.encode_reply(tape, t.task, t.positive_reply);
    auto neg = m.encode_reply(tape, t.task, t.negative_reply);
    if (m.score(tape, t.task, q.full, pos.full).item() > m.score(tape, t.task, q.full, neg.full).item()) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(triples.size());
}

TrainResult train(std::vector<TaskData> tasks, ModelConfig model_config, const TrainConfig& config,
                  const std::function<void(const LogRow&)>& on_row) {
  if (tasks.empty()) throw ConfigError("training needs at least one task");
  if (config.batch_size < 1 || config.max_steps < 1 || config.eval_interval < 1)
    throw ConfigError("batch_size, max_steps and eval_interval must be positive");
  if (!(config.margin > 0)) throw ConfigError("margin must be positive");
  for (const auto& t : tasks)
    if (t.train.empty()) throw DataError("empty training corpus for task '" + t.name + "'");

  std::vector<std::string> warnings;
  if (model_config.architecture == Architecture::Adversarial && tasks.size() < 2) {
    warnings.push_back("only one task configured: adversarial training disabled");
    model_config.architecture = Architecture::MultiTask;
  }

  std::vector<TaskSpec> specs;
  for (const auto& t : tasks) specs.push_back({t.name, t.vocab});
  Model model(model_config, std::move(specs), config.seed);
  Rng rng(config.seed ^ 0x5DEECE66DULL);

  std::vector<TrainingTriple> dev;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    std::vector<QueryReplyPair> pool = tasks[k].train;
    pool.insert(pool.end(), tasks[k].dev.begin(), tasks[k].dev.end());
    for (const auto& p : tasks[k].dev)
      dev.push_back({p.query, p.reply, sample_negative(pool, p.reply, rng), static_cast<int>(k)});
  }

  struct Queue {
    std::vector<TrainingTriple> fixed;
    std::vector<Batch> batches;
    std::size_t cursor = 0;
  };
  std::vector<Queue> queues(tasks.size());
  auto next_batch = [&](int k) -> const Batch& {
    Queue& q = queues[k];
    if (q.cursor >= q.batches.size()) {
      std::vector<TrainingTriple> triples;
      if (config.resample_negatives) {
        triples = make_triples(tasks[k].train, k, rng);
      } else {
        if (q.fixed.empty()) q.fixed = make_triples(tasks[k].train, k, rng);
        triples = q.fixed;
      }
      q.batches = make_batches(triples, config.batch_size, rng);
      q.cursor = 0;
    }
    return q.batches[q.cursor++];
  };

  Adam optimizer(config.adam);
  std::vector<LogRow> log;
  std::optional<std::vector<Tensor>> best;
  double best_acc = -1.0;
  long best_step = config.max_steps;
  const long k_tasks = static_cast<long>(tasks.size());

  for (long step = 1; step <= config.max_steps; ++step) {
    const int k = static_cast<int>((step - 1) % k_tasks);
    LogRow row;
    row.step = step;
    row.task = tasks[k].name;
    row.losses = train_step(next_batch(k), model, optimizer, config.margin, config.weights);
    if (!dev.empty() && (step % config.eval_interval == 0 || step == config.max_steps)) {
      const double acc = ranking_accuracy(model, dev);
      row.dev_accuracy = acc;
      if (acc >= best_acc) {
        best_acc = acc;
        best_step = step;
        best = model.snapshot();
      }
    }
    if (on_row) on_row(row);
    log.push_back(std::move(row));
  }

  if (best) model.restore(*best);
  TrainResult result{std::move(model), std::move(log), best_step,
                     dev.empty() ? std::numeric_limits<double>::quiet_NaN() : best_acc, std::move(warnings)};
  return result;
}

}  // namespace advmt
