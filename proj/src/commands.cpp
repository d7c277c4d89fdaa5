#include "advmt/commands.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "advmt/checkpoint.hpp"
#include "advmt/evaluation.hpp"

namespace advmt {

std::vector<TaskData> load_tasks(const Config& config) {
  std::vector<TaskData> out;
  for (const auto& t : config.tasks) {
    const auto pairs = read_pair_file(t.corpus);
    if (pairs.empty()) throw DataError("empty corpus for task '" + t.name + "': " + t.corpus.string());
    Vocabulary vocab = build_vocab(pairs, t.min_frequency);
    auto split = split_dev(encode_pairs(pairs, vocab), config.train.dev_fraction);
    out.push_back({t.name, std::move(vocab), std::move(split.train), std::move(split.dev)});
  }
  return out;
}

TrainResult train_from_config(const Config& config, const std::string& checkpoint, const std::string& log) {
  std::ofstream log_out;
  if (!log.empty()) {
    log_out.open(log, std::ios::trunc);
    if (!log_out) throw DataError("cannot write training log " + log);
    write_log_header(log_out);
  }
  auto result = train(load_tasks(config), config.model, config.train, [&](const LogRow& row) {
    if (log_out) {
      write_log_row(log_out, row);
      log_out.flush();
    }
  });
  save_checkpoint(checkpoint, result.model, config);
  return result;
}

GradCheckResult check_model_gradient(const GradCheckOptions& o) {
  Rng rng(o.seed);
  std::vector<TaskSpec> specs;
  for (std::size_t k = 0; k < o.tasks; ++k) {
    std::vector<std::string> toks;
    for (int i = 0; i < 6; ++i) toks.push_back("t" + std::to_string(k) + "_" + std::to_string(i));
    specs.push_back({"task" + std::to_string(k), Vocabulary::from_tokens(toks, 1)});
  }
  ModelConfig mc{o.embedding_dim, o.hidden_dim, o.mlp_hidden_dim,
                 o.tasks >= 2 ? Architecture::Adversarial : Architecture::MultiTask};
  Model model(mc, specs, o.seed);

  std::vector<Batch> batches;
  for (std::size_t k = 0; k < o.tasks; ++k) {
    const int vocab_size = static_cast<int>(model.task(static_cast<int>(k)).vocab.size());
    std::uniform_int_distribution<std::size_t> len(1, o.max_length);
    std::uniform_int_distribution<int> tok(1, vocab_size - 1);
    auto seq = [&] {
      TokenIds s(len(rng));
      for (auto& id : s) id = tok(rng);
      return s;
    };
    std::vector<TrainingTriple> triples;
    for (std::size_t i = 0; i < o.batch_size; ++i) {
      TrainingTriple t{seq(), seq(), {}, static_cast<int>(k)};
      do t.negative_reply = seq();
      while (t.negative_reply == t.positive_reply);
      triples.push_back(std::move(t));
    }
    batches.push_back(make_batches(triples, triples.size(), rng).front());
  }

  auto build = [&](Tape& tape) {
    std::vector<Var> totals;
    for (const auto& b : batches) totals.push_back(ops::reshape(combined_loss(tape, model, b, 0.5).total, Shape{1}));
    return ops::sum(ops::concat(totals));
  };
  auto params = model.parameters().all();
  return finite_difference_check(
      params,
      [&] {
        Tape tape;
        return build(tape).item();
      },
      [&] {
        Tape tape;
        tape.backward(build(tape));
      },
      o.step);
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const Tokens& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ' ';
    s += t[i];
  }
  return s;
}

int resolve_task(const Model& model, const std::string& name) {
  try {
    return model.task_index(name);
  } catch (const std::out_of_range&) {
    throw ConfigError("unknown task '" + name + "'");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial multi-task neural dialogue evaluation metric"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, log_path, task, input, output, metrics = "advmt", blends = "geometric",
                                                                       scores_path, embeddings, corpus;
  unsigned threads = 1;
  bool no_smoothing = false;
  int min_frequency = 1;
  GradCheckOptions gc;
  double tolerance = 1e-4;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", config_path, "Config file (key = value)")->required();
  train_cmd->add_option("--out", checkpoint, "Checkpoint to write")->required();
  train_cmd->add_option("--log", log_path, "Training log TSV");

  auto* score_cmd = app.add_subcommand("score", "Append an unreferenced score to query/reply rows");
  score_cmd->add_option("--checkpoint", checkpoint)->required();
  score_cmd->add_option("--task", task)->required();
  score_cmd->add_option("--input", input, "TSV: query<TAB>reply")->required();
  score_cmd->add_option("--output", output)->required();
  score_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("eval", "Correlate metrics with human scores");
  eval_cmd->add_option("--checkpoint", checkpoint);
  eval_cmd->add_option("--task", task);
  eval_cmd->add_option("--input", input, "TSV: query<TAB>generated<TAB>reference<TAB>human_score")->required();
  eval_cmd->add_option("--metrics", metrics, "Comma list: bleu1..bleu4, rouge, gm, advmt, a+b blends");
  eval_cmd->add_option("--blend", blends, "Comma list of min, max, geometric, arithmetic");
  eval_cmd->add_option("--output", output, "Correlation report TSV")->required();
  eval_cmd->add_option("--scores", scores_path, "Per-row metric scores TSV");
  eval_cmd->add_option("--embeddings", embeddings, "Word vectors for gm: token v1 .. vd per line");
  eval_cmd->add_flag("--no-smoothing", no_smoothing, "Unsmoothed sentence BLEU");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full training objective");
  grad_cmd->add_option("--seed", gc.seed);
  grad_cmd->add_option("--d-e", gc.embedding_dim)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--d-h", gc.hidden_dim)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tasks", gc.tasks)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--max-length", gc.max_length)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--step", gc.step)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tolerance", tolerance)->check(CLI::PositiveNumber);

  auto* vocab_cmd = app.add_subcommand("vocab", "Export the vocabulary of a corpus");
  vocab_cmd->add_option("--corpus", corpus)->required();
  vocab_cmd->add_option("--min-frequency", min_frequency)->check(CLI::PositiveNumber);
  vocab_cmd->add_option("--out", output)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      const Config config = read_config(config_path);
      auto result = train_from_config(config, checkpoint, log_path);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      out << "trained " << result.log.size() << " steps; best dev ranking accuracy " << result.best_dev_accuracy
          << " at step " << result.best_step << "; checkpoint " << checkpoint << '\n';
    } else if (*score_cmd) {
      const auto ck = load_checkpoint(checkpoint);
      const int k = resolve_task(ck.model, task);
      const auto pairs = read_score_file(input);
      const auto scores = score_pairs(ck.model, k, pairs, threads);
      std::ofstream os(output, std::ios::trunc);
      if (!os) throw DataError("cannot write " + output);
      os.precision(std::numeric_limits<double>::max_digits10);
      for (std::size_t i = 0; i < pairs.size(); ++i)
        os << join(pairs[i].query) << '\t' << join(pairs[i].reply) << '\t' << scores[i] << '\n';
    } else if (*eval_cmd) {
      std::optional<LoadedCheckpoint> ck;
      int k = 0;
      if (!checkpoint.empty()) {
        ck.emplace(load_checkpoint(checkpoint));
        if (task.empty()) throw ConfigError("--task is required with --checkpoint");
        k = resolve_task(ck->model, task);
      }
      std::optional<WordVectors> vectors;
      if (!embeddings.empty()) vectors.emplace(WordVectors::read(embeddings));

      EvalOptions opts;
      opts.metrics = split_list(metrics);
      opts.blends.clear();
      for (const auto& b : split_list(blends)) {
        try {
          opts.blends.push_back(parse_blend_strategy(b));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      opts.smoothing = no_smoothing ? BleuSmoothing::None : BleuSmoothing::AddOne;

      auto rows = read_eval_file(input);
      const auto names = compute_metrics(rows, opts, ck ? &ck->model : nullptr, k, vectors ? &*vectors : nullptr);
      const auto report = correlate(rows, names);
      for (const auto& r : report.rows)
        if (!r.error.empty()) err << "metric " << r.metric << ": " << r.error << '\n';

      std::ofstream os(output, std::ios::trunc);
      if (!os) throw DataError("cannot write " + output);
      write_report(os, report);
      if (!scores_path.empty()) {
        std::ofstream ss(scores_path, std::ios::trunc);
        if (!ss) throw DataError("cannot write " + scores_path);
        ss.precision(std::numeric_limits<double>::max_digits10);
        ss << "human";
        for (const auto& n : names) ss << '\t' << n;
        ss << '\n';
        for (const auto& r : rows) {
          ss << r.human;
          for (const auto& n : names) ss << '\t' << r.metrics.at(n);
          ss << '\n';
        }
      }
    } else if (*grad_cmd) {
      const auto r = check_model_gradient(gc);
      out << "coordinates " << r.coordinates << " max_relative_error " << r.max_relative_error << " worst "
          << r.worst_parameter << '\n';
      if (!(r.max_relative_error < tolerance)) {
        err << "gradient check failed: " << r.max_relative_error << " >= " << tolerance << '\n';
        return kExitNumerical;
      }
    } else if (*vocab_cmd) {
      const Vocabulary v = build_vocab(std::filesystem::path(corpus), min_frequency);
      std::ofstream os(output, std::ios::trunc);
      if (!os) throw DataError("cannot write " + output);
      v.write(os);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace advmt
