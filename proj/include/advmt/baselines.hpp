#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advmt/corpus.hpp"

namespace advmt {

class Model;

// Counts of every n-gram of one order.
using NGramProfile = std::map<std::vector<std::string>, int>;
NGramProfile ngram_profile(std::span<const std::string> tokens, std::size_t order);

enum class BleuSmoothing {
  None,
  AddOne,  // (matches + 1) / (total + 1) for orders >= 2
};

// Sentence-level BLEU with uniform weights over orders 1..max_n and the
// brevity penalty exp(1 - |ref| / |hyp|) when the hypothesis is shorter.
double bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference, int max_n,
            BleuSmoothing smoothing = BleuSmoothing::AddOne);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
// LCS-based F1.
double rouge_l(std::span<const std::string> hypothesis, std::span<const std::string> reference);

// Token -> vector lookup for greedy matching. Unknown tokens map to the
// `unknown` vector (all zeros unless set).
class WordVectors {
 public:
  explicit WordVectors(std::size_t dim) : dim_(dim), unknown_(dim, 0.0) {}

  // `token v1 ... v_d` per line; every line must have the same width.
  static WordVectors read(const std::filesystem::path& path);
  // Rows of the task's shared and private embedding tables, concatenated
  // (private only for a single-task model). UNK tokens use the UNK rows.
  static WordVectors from_model(const Model& model, int task);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void set(const std::string& token, std::vector<double> v);
  void set_unknown(std::vector<double> v);
  const std::vector<double>& lookup(const std::string& token) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<double> unknown_;
};

// Mean over hypothesis tokens of the best cosine similarity against the
// reference tokens, symmetrised. Zero-norm vectors have similarity 0.
double greedy_matching(std::span<const std::string> hypothesis, std::span<const std::string> reference,
                       const WordVectors& vectors);

}  // namespace advmt
