#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advmt/baselines.hpp"
#include "advmt/evalkit.hpp"
#include "advmt/model.hpp"

namespace advmt {

// Reads `query<TAB>generated<TAB>reference<TAB>human_score` rows. The
// reference column may be empty, or left out entirely (three columns). The
// human score is either one value already in [0, 1] or a comma-separated
// list of 0/1/2 annotator ratings, which is averaged and halved.
std::vector<ScoredPair> read_eval_file(const std::filesystem::path& path);

// Reads `query<TAB>reply` rows for scoring.
std::vector<TokenizedPair> read_score_file(const std::filesystem::path& path);

struct EvalOptions {
  // bleu1..bleu4, rouge, gm, advmt, or a blend "<unreferenced>+<referenced>"
  // such as advmt+gm.
  std::vector<std::string> metrics;
  std::vector<BlendStrategy> blends{BlendStrategy::Geometric};
  BleuSmoothing smoothing = BleuSmoothing::AddOne;
};

bool is_referenced_metric(const std::string& name);

// Fills `metrics` on every row. Blend components are min-max normalized over
// the whole set before blending; blended columns are named
// "<a>+<b>:<strategy>". Returns the column names in output order.
// `model` is only needed for advmt and for gm without `vectors`.
std::vector<std::string> compute_metrics(std::vector<ScoredPair>& rows, const EvalOptions& options, const Model* model,
                                         int task, const WordVectors* vectors);

// Scores every pair with the model; `threads` workers share the read-only
// model. Output order matches input order.
std::vector<double> score_pairs(const Model& model, int task, const std::vector<TokenizedPair>& pairs,
                                 unsigned threads = 1);

}  // namespace advmt
