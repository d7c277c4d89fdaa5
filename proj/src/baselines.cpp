#include "advmt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <fstream>
#include <sstream>

#include "advmt/model.hpp"

namespace advmt {

namespace {

void require_nonempty(std::span<const std::string> hyp, std::span<const std::string> ref, const char* metric) {
  if (hyp.empty() || ref.empty()) throw std::invalid_argument(std::string(metric) + ": empty hypothesis or reference");
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const std::vector<double>& a, double na, const std::vector<double>& b, double nb) {
  if (na == 0 || nb == 0) return 0.0;
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

}  // namespace

NGramProfile ngram_profile(std::span<const std::string> tokens, std::size_t order) {
  NGramProfile profile;
  if (order == 0 || tokens.size() < order) return profile;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i)
    ++profile[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + order)];
  return profile;
}

double bleu(std::span<const std::string> hypothesis, std::span<const std::string> reference, int max_n,
            BleuSmoothing smoothing) {
  require_nonempty(hypothesis, reference, "bleu");
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("bleu: max_n must be in 1..4");

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto hyp = ngram_profile(hypothesis, n);
    const auto ref = ngram_profile(reference, n);
    long matched = 0;
    for (const auto& [gram, count] : hyp)
      if (auto it = ref.find(gram); it != ref.end()) matched += std::min(count, it->second);
    const long total = std::max<long>(0, static_cast<long>(hypothesis.size()) - n + 1);
    double p;
    if (n >= 2 && smoothing == BleuSmoothing::AddOne)
      p = (matched + 1.0) / (total + 1.0);
    else
      p = total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double h = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(reference.size());
  const double bp = h < r ? std::exp(1.0 - r / h) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> hypothesis, std::span<const std::string> reference) {
  require_nonempty(hypothesis, reference, "rouge_l");
  const double lcs = static_cast<double>(lcs_length(hypothesis, reference));
  if (lcs == 0) return 0.0;
  const double p = lcs / static_cast<double>(hypothesis.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2 * p * r / (p + r);
}

void WordVectors::set(const std::string& token, std::vector<double> v) {
  if (v.size() != dim_)
    throw std::invalid_argument("word vector for '" + token + "' has width " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dim_));
  vectors_[token] = std::move(v);
}

void WordVectors::set_unknown(std::vector<double> v) {
  if (v.size() != dim_) throw std::invalid_argument("unknown-token vector has the wrong width");
  unknown_ = std::move(v);
}

const std::vector<double>& WordVectors::lookup(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? unknown_ : it->second;
}

WordVectors WordVectors::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read embedding file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::optional<WordVectors> out;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string token;
    if (!(is >> token)) continue;
    std::vector<double> v;
    std::string field;
    while (is >> field) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (v.empty()) throw DataError(path.string() + ":" + std::to_string(lineno) + ": no vector values");
    if (!out) out.emplace(v.size());
    if (v.size() != out->dim())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(out->dim()) +
                      " values, got " + std::to_string(v.size()));
    out->set(token, std::move(v));
  }
  if (!out) throw DataError("embedding file " + path.string() + " has no vectors");
  return std::move(*out);
}

WordVectors WordVectors::from_model(const Model& model, int task) {
  const TaskModel& t = model.task(task);
  std::vector<const Tensor*> tables;
  if (t.shared_embedding) tables.push_back(&t.shared_embedding->value);
  tables.push_back(&t.private_embedding->value);
  std::size_t dim = 0;
  for (const auto* tab : tables) dim += tab->cols();

  auto row = [&](std::size_t id) {
    std::vector<double> v;
    v.reserve(dim);
    for (const auto* tab : tables)
      for (std::size_t j = 0; j < tab->cols(); ++j) v.push_back(tab->at(id, j));
    return v;
  };
  WordVectors out(dim);
  for (std::size_t id = 2; id < t.vocab.size(); ++id) out.set(t.vocab.token(static_cast<int>(id)), row(id));
  out.set_unknown(row(kUnkId));
  return out;
}

double greedy_matching(std::span<const std::string> hypothesis, std::span<const std::string> reference,
                       const WordVectors& vectors) {
  require_nonempty(hypothesis, reference, "greedy_matching");
  std::vector<const std::vector<double>*> hv, rv;
  std::vector<double> hn, rn;
  for (const auto& t : hypothesis) {
    hv.push_back(&vectors.lookup(t));
    hn.push_back(norm(*hv.back()));
  }
  for (const auto& t : reference) {
    rv.push_back(&vectors.lookup(t));
    rn.push_back(norm(*rv.back()));
  }
  auto directed = [](const auto& av, const auto& an, const auto& bv, const auto& bn) {
    double total = 0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < bv.size(); ++j) best = std::max(best, cosine(*av[i], an[i], *bv[j], bn[j]));
      total += best;
    }
    return total / static_cast<double>(av.size());
  };
  return 0.5 * (directed(hv, hn, rv, rn) + directed(rv, rn, hv, hn));
}

}  // namespace advmt
