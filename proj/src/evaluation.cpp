#include "advmt/evaluation.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace advmt {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

double parse_human(const std::string& field, const std::string& where) {
  try {
    if (field.find(',') != std::string::npos) {
      std::vector<int> ratings;
      std::istringstream is(field);
      std::string part;
      while (std::getline(is, part, ',')) {
        std::size_t used = 0;
        const int r = std::stoi(part, &used);
        if (part.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(part);
        ratings.push_back(r);
      }
      return normalize_ratings(ratings);
    }
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (field.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(field);
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(where + ": human score " + field + " outside [0, 1]");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    throw DataError(where + ": bad human score '" + field + "'");
  }
}

template <typename F>
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, F&& check_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cols = split_tabs(line);
    check_columns(cols, path.string() + ":" + std::to_string(lineno));
    rows.push_back(std::move(cols));
  }
  return rows;
}

}  // namespace

std::vector<ScoredPair> read_eval_file(const std::filesystem::path& path) {
  std::vector<ScoredPair> out;
  read_rows(path, [&](const std::vector<std::string>& cols, const std::string& where) {
    if (cols.size() != 3 && cols.size() != 4) throw DataError(where + ": expected 3 or 4 tab-separated columns");
    ScoredPair p;
    p.query = split_tokens(cols[0]);
    p.generated = split_tokens(cols[1]);
    if (p.query.empty() || p.generated.empty()) throw DataError(where + ": empty query or generated reply");
    if (cols.size() == 4) {
      auto ref = split_tokens(cols[2]);
      if (!ref.empty()) p.reference = std::move(ref);
    }
    p.human = parse_human(cols.back(), where);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<TokenizedPair> read_score_file(const std::filesystem::path& path) {
  std::vector<TokenizedPair> out;
  read_rows(path, [&](const std::vector<std::string>& cols, const std::string& where) {
    if (cols.size() != 2) throw DataError(where + ": expected 2 tab-separated columns");
    TokenizedPair p{split_tokens(cols[0]), split_tokens(cols[1])};
    if (p.query.empty() || p.reply.empty()) throw DataError(where + ": empty query or reply");
    out.push_back(std::move(p));
  });
  return out;
}

bool is_referenced_metric(const std::string& name) {
  return name == "bleu1" || name == "bleu2" || name == "bleu3" || name == "bleu4" || name == "rouge" || name == "gm";
}

namespace {

bool is_base_metric(const std::string& name) { return is_referenced_metric(name) || name == "advmt"; }

double base_metric(const std::string& name, const ScoredPair& row, const Model* model, int task,
                   const WordVectors* vectors, BleuSmoothing smoothing) {
  if (name == "advmt") {
    const Vocabulary& v = model->task(task).vocab;
    return model->score(task, v.encode(row.query), v.encode(row.generated));
  }
  const Tokens& ref = *row.reference;
  if (name == "rouge") return rouge_l(row.generated, ref);
  if (name == "gm") return greedy_matching(row.generated, ref, *vectors);
  return bleu(row.generated, ref, name.back() - '0', smoothing);
}

}  // namespace

std::vector<std::string> compute_metrics(std::vector<ScoredPair>& rows, const EvalOptions& options, const Model* model,
                                         int task, const WordVectors* vectors) {
  // Resolve which base metrics are needed, in first-mention order.
  std::vector<std::string> base;
  auto need = [&](const std::string& m) {
    if (!is_base_metric(m)) throw ConfigError("unknown metric '" + m + "'");
    if (std::find(base.begin(), base.end(), m) == base.end()) base.push_back(m);
  };
  for (const auto& m : options.metrics) {
    if (auto plus = m.find('+'); plus != std::string::npos) {
      need(m.substr(0, plus));
      need(m.substr(plus + 1));
    } else {
      need(m);
    }
  }
  if (options.metrics.empty()) throw ConfigError("no metrics requested");

  std::optional<WordVectors> model_vectors;
  for (const auto& m : base) {
    if (m == "advmt" && !model) throw ConfigError("metric 'advmt' needs a checkpoint");
    if (m == "gm" && !vectors) {
      if (!model) throw ConfigError("metric 'gm' needs a checkpoint or an embedding file");
      model_vectors = WordVectors::from_model(*model, task);
      vectors = &*model_vectors;
    }
    if (is_referenced_metric(m))
      for (const auto& r : rows)
        if (!r.reference) throw DataError("metric '" + m + "' needs a reference reply on every row");
  }

  std::map<std::string, std::vector<double>> columns;
  for (const auto& m : base) {
    auto& col = columns[m];
    for (auto& r : rows) col.push_back(base_metric(m, r, model, task, vectors, options.smoothing));
  }

  std::vector<std::string> names;
  for (const auto& m : options.metrics) {
    const auto plus = m.find('+');
    if (plus == std::string::npos) {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i].metrics[m] = columns[m][i];
      names.push_back(m);
      continue;
    }
    const auto unref = minmax_normalize(columns[m.substr(0, plus)]);
    const auto ref = minmax_normalize(columns[m.substr(plus + 1)]);
    for (auto strategy : options.blends) {
      const std::string name = m + ":" + blend_strategy_str(strategy);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i].metrics[name] = blend(ref[i], unref[i], strategy);
      names.push_back(name);
    }
  }
  return names;
}

std::vector<double> score_pairs(const Model& model, int task, const std::vector<TokenizedPair>& pairs,
                                unsigned threads) {
  const Vocabulary& vocab = model.task(task).vocab;
  std::vector<double> out(pairs.size());
  std::vector<std::exception_ptr> failures(std::max(1u, threads));
  auto work = [&](std::size_t begin, std::size_t step) {
    try {
      for (std::size_t i = begin; i < pairs.size(); i += step)
        out[i] = model.score(task, vocab.encode(pairs[i].query), vocab.encode(pairs[i].reply));
    } catch (...) {
      failures[begin] = std::current_exception();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, pairs.size()))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace advmt
