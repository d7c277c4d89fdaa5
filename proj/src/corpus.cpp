#include "advmt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace advmt {

Vocabulary::Vocabulary() : tokens_{kPadToken, kUnkToken} {
  index_.emplace(kPadToken, kPadId);
  index_.emplace(kUnkToken, kUnkId);
}

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, long>& counts, int min_frequency) {
  if (min_frequency < 1) throw std::invalid_argument("min_frequency must be >= 1");
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : counts)
    if (n >= min_frequency && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> toks;
  toks.reserve(kept.size());
  for (auto& [tok, n] : kept) toks.push_back(std::move(tok));
  return from_tokens(toks, min_frequency);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens, int min_frequency) {
  Vocabulary v;
  v.min_frequency_ = min_frequency;
  for (const auto& t : tokens) {
    if (t.empty() || t == kPadToken || t == kUnkToken)
      throw DataError("vocabulary: invalid or reserved token '" + t + "'");
    if (!v.index_.emplace(t, static_cast<int>(v.tokens_.size())).second)
      throw DataError("vocabulary: duplicate token '" + t + "'");
    v.tokens_.push_back(t);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

TokenIds Vocabulary::encode(std::span<const std::string> text) const {
  if (text.empty()) throw std::invalid_argument("encode_sequence: empty token list");
  TokenIds ids;
  ids.reserve(text.size());
  for (const auto& t : text) ids.push_back(id(t));
  return ids;
}

void Vocabulary::write(std::ostream& os) const {
  os << "# advmt vocabulary min_frequency=" << min_frequency_
     << "; line k after this header is id k+2; ids 0=" << kPadToken << " 1=" << kUnkToken << " reserved\n";
  for (std::size_t i = 2; i < tokens_.size(); ++i) os << tokens_[i] << '\n';
}

Vocabulary Vocabulary::read(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.empty() || header[0] != '#')
    throw DataError("vocabulary file: missing '#' header line");
  int min_freq = 1;
  if (auto pos = header.find("min_frequency="); pos != std::string::npos)
    min_freq = std::stoi(header.substr(pos + 14));
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    toks.push_back(line);
  }
  return from_tokens(toks, min_freq);
}

TokenIds PaddedIds::row(std::size_t i) const {
  const auto begin = ids.begin() + static_cast<std::ptrdiff_t>(i * width);
  return TokenIds(begin, begin + static_cast<std::ptrdiff_t>(lengths[i]));
}

Tokens split_tokens(const std::string& text) {
  Tokens out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<TokenizedPair> read_pair_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  std::vector<TokenizedPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 2 tab-separated columns");
    TokenizedPair p{split_tokens(line.substr(0, tab)), split_tokens(line.substr(tab + 1))};
    if (p.query.empty() || p.reply.empty())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty query or reply");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

Vocabulary build_vocab(std::span<const TokenizedPair> pairs, int min_frequency) {
  std::unordered_map<std::string, long> counts;
  for (const auto& p : pairs) {
    for (const auto& t : p.query) ++counts[t];
    for (const auto& t : p.reply) ++counts[t];
  }
  return Vocabulary::from_counts(counts, min_frequency);
}

Vocabulary build_vocab(const std::filesystem::path& corpus_path, int min_frequency) {
  return build_vocab(read_pair_file(corpus_path), min_frequency);
}

TokenIds encode_sequence(std::span<const std::string> text, const Vocabulary& vocab) { return vocab.encode(text); }

std::vector<QueryReplyPair> encode_pairs(std::span<const TokenizedPair> pairs, const Vocabulary& vocab) {
  std::vector<QueryReplyPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({vocab.encode(p.query), vocab.encode(p.reply)});
  return out;
}

TokenIds sample_negative(std::span<const QueryReplyPair> pool, const TokenIds& gold, Rng& rng) {
  if (std::none_of(pool.begin(), pool.end(), [&](const auto& p) { return p.reply != gold; }))
    throw DataError("cannot sample a negative reply: every reply in the pool equals the gold reply");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (;;) {
    const auto& cand = pool[pick(rng)].reply;
    if (cand != gold) return cand;
  }
}

TokenIds sample_negative(std::span<const QueryReplyPair> pairs, std::size_t index, Rng& rng) {
  if (index >= pairs.size()) throw std::out_of_range("sample_negative: index out of range");
  return sample_negative(pairs, pairs[index].reply, rng);
}

std::vector<TrainingTriple> make_triples(std::span<const QueryReplyPair> pairs, int task, Rng& rng) {
  std::vector<TrainingTriple> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out.push_back({pairs[i].query, pairs[i].reply, sample_negative(pairs, i, rng), task});
  return out;
}

PaddedIds pad_sequences(std::span<const TokenIds> seqs) {
  PaddedIds p;
  for (const auto& s : seqs) p.width = std::max(p.width, s.size());
  p.ids.assign(seqs.size() * p.width, kPadId);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::copy(seqs[i].begin(), seqs[i].end(), p.ids.begin() + static_cast<std::ptrdiff_t>(i * p.width));
    p.lengths.push_back(seqs[i].size());
  }
  return p;
}

std::vector<Batch> make_batches(std::span<const TrainingTriple> triples, std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  if (triples.empty()) throw DataError("make_batches: no training triples");
  std::vector<TrainingTriple> order(triples.begin(), triples.end());
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    const std::size_t end = std::min(order.size(), start + batch_size);
    b.triples.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    b.task = b.triples.front().task;
    std::vector<TokenIds> q, pos, neg;
    for (const auto& t : b.triples) {
      if (t.task != b.task) throw std::invalid_argument("make_batches: triples from different tasks");
      q.push_back(t.query);
      pos.push_back(t.positive_reply);
      neg.push_back(t.negative_reply);
    }
    b.queries = pad_sequences(q);
    b.positives = pad_sequences(pos);
    b.negatives = pad_sequences(neg);
    batches.push_back(std::move(b));
  }
  return batches;
}

Split split_dev(std::span<const QueryReplyPair> pairs, double dev_fraction) {
  if (dev_fraction < 0 || dev_fraction >= 1) throw std::invalid_argument("dev_fraction must be in [0, 1)");
  std::size_t n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(pairs.size()) * dev_fraction));
  if (n_dev == 0 && dev_fraction > 0 && pairs.size() >= 2) n_dev = 1;
  const std::size_t n_train = pairs.size() - n_dev;
  Split s;
  s.train.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.dev.assign(pairs.begin() + static_cast<std::ptrdiff_t>(n_train), pairs.end());
  return s;
}

}  // namespace advmt
