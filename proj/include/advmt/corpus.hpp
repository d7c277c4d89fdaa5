#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "advmt/errors.hpp"

namespace advmt {

using Rng = std::mt19937_64;
using TokenIds = std::vector<int>;
using Tokens = std::vector<std::string>;

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

// Token <-> id map. Ids are dense; 0 and 1 are reserved for padding and
// unknown tokens. Immutable once built.
class Vocabulary {
 public:
  Vocabulary();

  // Ordering: descending frequency, ties broken lexicographically (bytewise).
  static Vocabulary from_counts(const std::unordered_map<std::string, long>& counts, int min_frequency);
  // `tokens` excludes the two reserved entries.
  static Vocabulary from_tokens(std::span<const std::string> tokens, int min_frequency);

  std::size_t size() const { return tokens_.size(); }
  int min_frequency() const { return min_frequency_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int id) const;

  // Throws std::invalid_argument on an empty token list.
  TokenIds encode(std::span<const std::string> text) const;

  // One token per line after a '#' header line; line k (0-based, header
  // excluded) holds id k + 2.
  void write(std::ostream& os) const;
  static Vocabulary read(std::istream& is);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.min_frequency_ == b.min_frequency_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int min_frequency_ = 1;
};

struct TokenizedPair {
  Tokens query;
  Tokens reply;
};

struct QueryReplyPair {
  TokenIds query;
  TokenIds reply;
};

struct TrainingTriple {
  TokenIds query;
  TokenIds positive_reply;
  TokenIds negative_reply;
  int task = 0;
};

// Sequences of one batch padded with kPadId to the widest row.
struct PaddedIds {
  std::size_t width = 0;
  std::vector<int> ids;  // rows x width, row-major
  std::vector<std::size_t> lengths;

  std::size_t rows() const { return lengths.size(); }
  TokenIds row(std::size_t i) const;
};

struct Batch {
  int task = 0;
  std::vector<TrainingTriple> triples;
  PaddedIds queries;
  PaddedIds positives;
  PaddedIds negatives;

  std::size_t size() const { return triples.size(); }
};

Tokens split_tokens(const std::string& text);

// Reads `query<TAB>reply` lines. Blank lines are skipped; anything else with
// a column count other than two, or an empty side, is a DataError naming the
// line number.
std::vector<TokenizedPair> read_pair_file(const std::filesystem::path& path);

Vocabulary build_vocab(std::span<const TokenizedPair> pairs, int min_frequency);
Vocabulary build_vocab(const std::filesystem::path& corpus_path, int min_frequency);

TokenIds encode_sequence(std::span<const std::string> text, const Vocabulary& vocab);
std::vector<QueryReplyPair> encode_pairs(std::span<const TokenizedPair> pairs, const Vocabulary& vocab);

// Uniform draw over the replies in `pool`, redrawn until it differs from the
// gold reply of pairs[index]. Throws DataError if no reply differs.
TokenIds sample_negative(std::span<const QueryReplyPair> pairs, std::size_t index, Rng& rng);
TokenIds sample_negative(std::span<const QueryReplyPair> pool, const TokenIds& gold, Rng& rng);

std::vector<TrainingTriple> make_triples(std::span<const QueryReplyPair> pairs, int task, Rng& rng);

PaddedIds pad_sequences(std::span<const TokenIds> seqs);

// Shuffles a copy of `triples` and chunks it; the last batch may be short.
std::vector<Batch> make_batches(std::span<const TrainingTriple> triples, std::size_t batch_size, Rng& rng);

// Deterministic split: the last round(n * dev_fraction) pairs (at least one
// when n >= 2 and the fraction is positive) form the dev set.
struct Split {
  std::vector<QueryReplyPair> train;
  std::vector<QueryReplyPair> dev;
};
Split split_dev(std::span<const QueryReplyPair> pairs, double dev_fraction);

}  // namespace advmt
