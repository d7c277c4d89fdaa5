// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 1 if
// any criterion fails, unless --report-only is given (used by ctest, which
// then only requires every criterion to run to completion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "advmt/baselines.hpp"
#include "advmt/checkpoint.hpp"
#include "advmt/commands.hpp"
#include "advmt/evalkit.hpp"
#include "advmt/trainer.hpp"
#include "synthetic.hpp"

using namespace advmt;
namespace at = advmt::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- gradients

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  GradCheckOptions o;  // d_e=4, d_h=3, K=2, lengths 1..5, h=1e-5
  const auto r = check_model_gradient(o);
  const double secs = seconds_since(t0);
  return {r.max_relative_error < 1e-4 && secs < 60.0,
          fmt("max relative error %.3g over %zu coordinates (worst %s), %.1fs", r.max_relative_error, r.coordinates,
              r.worst_parameter.c_str(), secs)};
}

// ------------------------------------------------------------------ overfit

at::TopicCorpusSpec overfit_spec(int task) {
  at::TopicCorpusSpec spec;
  spec.prefix = "t" + std::to_string(task) + "w";
  spec.pairs = 64;
  // One word per topic keeps same-topic negatives rare (about 1 in 32).
  spec.topics = 32;
  spec.words_per_topic = 1;
  return spec;
}

Outcome overfit() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::vector<TaskData> tasks;
  for (int k = 0; k < 2; ++k) {
    const auto spec = overfit_spec(k);
    const auto train = at::topic_pairs(spec, rng);
    const auto dev = at::topic_pairs(spec, rng);
    Vocabulary v = build_vocab(train, 1);
    tasks.push_back({"task" + std::to_string(k), v, encode_pairs(train, v), encode_pairs(dev, v)});
  }
  TrainConfig c;
  c.adam.learning_rate = 0.003;
  c.batch_size = 16;
  c.margin = 0.5;
  c.max_steps = 500;
  c.eval_interval = 50;
  c.seed = 17;
  auto result = train(std::move(tasks), ModelConfig{16, 16, 50, Architecture::Adversarial}, c);
  // Mean J_eval over the final epoch: 4 batches per task.
  double j = 0.0;
  const std::size_t last = 8;
  for (std::size_t i = result.log.size() - last; i < result.log.size(); ++i) j += result.log[i].losses.eval / last;
  const double secs = seconds_since(t0);
  return {j < 0.05 && result.best_dev_accuracy >= 0.95 && secs < 300.0,
          fmt("final-epoch mean J_eval %.4f, best dev ranking accuracy %.4f at step %ld, %.1fs", j,
              result.best_dev_accuracy, result.best_step, secs)};
}

// ------------------------------------------------------ adversarial probe

// Two languages over one shared token list with disjoint id ranges: task 0
// only uses the first half of the ids, task 1 only the second half.
struct ProbeWorld {
  std::vector<std::string> tokens;
  std::size_t per_language = 32;

  ProbeWorld() {
    for (int k = 0; k < 2; ++k)
      for (std::size_t i = 0; i < per_language; ++i) tokens.push_back("l" + std::to_string(k) + "_" + std::to_string(i));
  }

  std::vector<QueryReplyPair> pairs(int task, std::size_t n, Rng& rng) const {
    // 8 topics of 4 words per language; same topic for query and reply.
    std::uniform_int_distribution<int> topic(0, 7), word(0, 3), len(2, 5);
    std::vector<QueryReplyPair> out;
    for (std::size_t i = 0; i < n; ++i) {
      const int t = topic(rng);
      auto sentence = [&] {
        TokenIds s(len(rng));
        for (auto& id : s) id = 2 + task * static_cast<int>(per_language) + 4 * t + word(rng);
        return s;
      };
      auto q = sentence();
      out.push_back({std::move(q), sentence()});
    }
    return out;
  }
};

double probe_after_training(Architecture arch, long steps, std::uint64_t seed) {
  ProbeWorld world;
  Rng rng(seed);
  const Vocabulary vocab = Vocabulary::from_tokens(world.tokens, 1);
  std::vector<TaskData> tasks;
  for (int k = 0; k < 2; ++k)
    tasks.push_back({"lang" + std::to_string(k), vocab, world.pairs(k, 128, rng), world.pairs(k, 16, rng)});
  TrainConfig c;
  c.adam.learning_rate = 0.003;
  c.batch_size = 16;
  c.max_steps = steps;
  c.eval_interval = steps;
  c.seed = seed;
  auto result = train(std::move(tasks), ModelConfig{16, 16, 20, arch}, c);
  const Model& m = result.model;

  // Fresh pairs; the probe is fit on half and scored on the other half.
  std::vector<Tensor> fit_x, test_x;
  std::vector<int> fit_y, test_y;
  for (int k = 0; k < 2; ++k) {
    const auto held_out = world.pairs(k, 400, rng);
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      Tensor f = m.shared_features(k, held_out[i]);
      if (i % 2 == 0) {
        fit_x.push_back(std::move(f));
        fit_y.push_back(k);
      } else {
        test_x.push_back(std::move(f));
        test_y.push_back(k);
      }
    }
  }
  return at::probe_accuracy(fit_x, fit_y, test_x, test_y);
}

Outcome adversarial_separation() {
  const auto t0 = Clock::now();
  const long steps = 1000;
  const double with_adv = probe_after_training(Architecture::Adversarial, steps, 31);
  const double without = probe_after_training(Architecture::MultiTask, steps, 31);
  return {with_adv <= 0.65 && without >= 0.85,
          fmt("probe accuracy with adversary %.4f (need <= 0.65), without %.4f (need >= 0.85), %.1fs", with_adv,
              without, seconds_since(t0))};
}

// ----------------------------------------------------------- update scopes

Outcome update_scope_exclusivity() {
  std::vector<TaskSpec> specs;
  for (int k = 0; k < 3; ++k) {
    std::vector<std::string> toks;
    for (int i = 0; i < 8; ++i) toks.push_back("k" + std::to_string(k) + "_" + std::to_string(i));
    specs.push_back({"task" + std::to_string(k), Vocabulary::from_tokens(toks, 1)});
  }
  Model m(ModelConfig{5, 4, 6, Architecture::Adversarial}, specs, 77);
  Adam adam;
  Rng rng(5);
  std::uniform_int_distribution<int> id(1, 9), len(1, 6);
  auto seq = [&] {
    TokenIds s(len(rng));
    for (auto& x : s) x = id(rng);
    return s;
  };

  std::size_t checks = 0, violations = 0;
  std::string first;
  auto compare = [&](const std::vector<Tensor>& before, const std::function<bool(const Scope&)>& may_change,
                     const char* phase) {
    const auto after = m.snapshot();
    for (std::size_t i = 0; i < before.size(); ++i) {
      const Parameter& p = m.parameters()[i];
      const bool changed = before[i] != after[i];
      ++checks;
      // Out-of-scope tensors must be bit-identical; in-scope tensors must move
      // (every in-scope tensor receives a non-zero gradient here).
      if (changed != may_change(p.scope())) {
        ++violations;
        if (first.empty()) first = std::string(phase) + ": " + p.name();
      }
    }
  };

  for (int round = 0; round < 6; ++round)
    for (int k = 0; k < 3; ++k) {
      std::vector<TrainingTriple> triples;
      for (int i = 0; i < 4; ++i) triples.push_back({seq(), seq(), seq(), k});
      const Batch b = make_batches(triples, 4, rng).front();

      auto before = m.snapshot();
      discriminator_phase(b, m, adam);
      compare(before, [](const Scope& s) { return s.kind == ScopeKind::Discriminator; }, "phase D");

      before = m.snapshot();
      task_phase(b, m, adam, 0.5);
      compare(before, [k](const Scope& s) { return in_task_phase_scope(s, k); }, "phase S");
    }
  return {violations == 0, fmt("%zu tensor comparisons over 36 phases, %zu violations%s%s", checks, violations,
                               first.empty() ? "" : ", first: ", first.c_str())};
}

// ----------------------------------------------------------- BLEU / ROUGE

// Clipped n-gram matches by direct scanning: each distinct hypothesis n-gram
// is counted at its first position.
struct NGramCounts {
  long matched = 0;
  long total = 0;
};

bool same_gram(const Tokens& a, std::size_t i, const Tokens& b, std::size_t j, int n) {
  for (int t = 0; t < n; ++t)
    if (a[i + t] != b[j + t]) return false;
  return true;
}

long occurrences(const Tokens& s, const Tokens& g, std::size_t gi, int n) {
  long c = 0;
  for (std::size_t j = 0; j + n <= s.size(); ++j) c += same_gram(g, gi, s, j, n);
  return c;
}

NGramCounts oracle_counts(const Tokens& hyp, const Tokens& ref, int n) {
  NGramCounts out;
  if (hyp.size() < static_cast<std::size_t>(n)) return out;
  out.total = static_cast<long>(hyp.size()) - n + 1;
  for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) seen = same_gram(hyp, i, hyp, j, n);
    if (!seen) out.matched += std::min(occurrences(hyp, hyp, i, n), occurrences(ref, hyp, i, n));
  }
  return out;
}

double oracle_bleu(const Tokens& hyp, const Tokens& ref, int max_n, bool add_one) {
  double product = 1.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto c = oracle_counts(hyp, ref, n);
    const double p = (add_one && n >= 2) ? (c.matched + 1.0) / (c.total + 1.0)
                                         : (c.total == 0 ? 0.0 : double(c.matched) / double(c.total));
    product *= p;
  }
  if (product == 0.0) return 0.0;
  const double bp = hyp.size() < ref.size() ? std::exp(1.0 - double(ref.size()) / double(hyp.size())) : 1.0;
  return bp * std::pow(product, 1.0 / max_n);
}

// Longest common subsequence by enumerating every subsequence of the shorter
// side (lengths are at most 12).
std::size_t oracle_lcs(const Tokens& a, const Tokens& b) {
  const Tokens& s = a.size() <= b.size() ? a : b;
  const Tokens& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1u << s.size()); ++mask) {
    const std::size_t bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < t.size() && t[j] != s[i]) ++j;
      if (j == t.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

double oracle_rouge(const Tokens& hyp, const Tokens& ref) {
  const double l = static_cast<double>(oracle_lcs(hyp, ref));
  if (l == 0) return 0.0;
  const double p = l / hyp.size(), r = l / ref.size();
  return 2 * p * r / (p + r);
}

Outcome baseline_oracles() {
  Rng rng(99);
  std::uniform_int_distribution<int> len(1, 12), word(0, 19);
  auto sentence = [&] {
    Tokens s(len(rng));
    for (auto& w : s) w = "v" + std::to_string(word(rng));
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Tokens h = sentence(), r = sentence();
    for (int n = 1; n <= 4; ++n) {
      worst = std::max(worst, std::abs(bleu(h, r, n, BleuSmoothing::None) - oracle_bleu(h, r, n, false)));
      worst = std::max(worst, std::abs(bleu(h, r, n, BleuSmoothing::AddOne) - oracle_bleu(h, r, n, true)));
    }
    worst = std::max(worst, std::abs(rouge_l(h, r) - oracle_rouge(h, r)));
  }
  return {worst <= 1e-12, fmt("1000 pairs, BLEU-1..4 (both smoothing modes) and ROUGE-L, max deviation %.3g", worst)};
}

// ------------------------------------------------------------- correlation

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// Tie-free Spearman: 1 - 6 sum d^2 / (n (n^2 - 1)) with ranks from sorting.
double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i + 1);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Outcome correlation_oracle() {
  Rng rng(4242);
  std::uniform_int_distribution<int> len(3, 60);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int j = 0; j < n; ++j) {
      x[j] = u(rng);
      y[j] = 0.5 * x[j] + u(rng);
    }
    worst = std::max(worst, std::abs(pearson(x, y).coefficient - oracle_pearson(x, y)));
    worst = std::max(worst, std::abs(spearman(x, y).coefficient - oracle_spearman(x, y)));
  }
  const double tie = spearman(std::vector<double>{1, 1, 2}, std::vector<double>{3, 5, 9}).coefficient;
  const double tie_err = std::abs(tie - std::sqrt(3.0) / 2.0);
  return {worst <= 1e-12 && tie_err <= 1e-9,
          fmt("1000 tie-free vectors, max deviation %.3g; tie case spearman %.12f (|err| %.3g)", worst, tie, tie_err)};
}

// ------------------------------------------------------------------ blends

Outcome blend_ordering() {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const double mn = blend(a, b, BlendStrategy::Min), g = blend(a, b, BlendStrategy::Geometric),
                 ar = blend(a, b, BlendStrategy::Arithmetic), mx = blend(a, b, BlendStrategy::Max);
    if (!(mn <= g && g <= ar && ar <= mx)) ++bad;
  }
  return {bad == 0, fmt("10000 random pairs, %d ordering violations", bad)};
}

// ------------------------------------------------------------- determinism

Outcome determinism() {
  at::TempDir dir;
  Rng rng(12);
  std::string conf = "d_e = 6\nd_h = 5\nd_m2 = 7\nbatch_size = 8\nmax_steps = 40\neval_interval = 20\nseed = 8\n";
  for (int k = 0; k < 2; ++k) {
    at::TopicCorpusSpec spec;
    spec.prefix = "d" + std::to_string(k) + "_";
    spec.pairs = 40;
    spec.topics = 5;
    at::write_pairs(dir / ("c" + std::to_string(k) + ".tsv"), at::topic_pairs(spec, rng));
    conf += "task = t" + std::to_string(k) + " c" + std::to_string(k) + ".tsv\n";
  }
  at::write_text(dir / "run.conf", conf);
  const Config config = read_config(dir / "run.conf");
  train_from_config(config, (dir / "a.ckpt").string(), "");
  auto second = train_from_config(config, (dir / "b.ckpt").string(), "");
  const bool identical = at::read_bytes(dir / "a.ckpt") == at::read_bytes(dir / "b.ckpt");

  const auto loaded = load_checkpoint(dir / "a.ckpt");
  const bool resaved = serialize_checkpoint(loaded.model, loaded.config) == at::read_bytes(dir / "a.ckpt");
  std::size_t compared = 0, mismatches = 0;
  for (int k = 0; k < 2; ++k) {
    at::TopicCorpusSpec spec;
    spec.prefix = "d" + std::to_string(k) + "_";
    spec.pairs = 50;
    spec.topics = 5;
    for (const auto& p : at::topic_pairs(spec, rng)) {
      const auto& v = second.model.task(k).vocab;
      const auto q = v.encode(p.query), r = v.encode(p.reply);
      ++compared;
      if (second.model.score(k, q, r) != loaded.model.score(k, q, r)) ++mismatches;
    }
  }
  return {identical && resaved && mismatches == 0,
          fmt("checkpoints byte-identical: %s; reload+resave identical: %s; %zu scores compared, %zu mismatches",
              identical ? "yes" : "no", resaved ? "yes" : "no", compared, mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool report_only = argc > 1 && std::string(argv[1]) == "--report-only";
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"gradient-suite", gradient_suite},
      {"overfit", overfit},
      {"adversarial-separation", adversarial_separation},
      {"update-scope-exclusivity", update_scope_exclusivity},
      {"baseline-oracles", baseline_oracles},
      {"correlation-oracle", correlation_oracle},
      {"blend-ordering", blend_ordering},
      {"determinism-persistence", determinism},
  };
  std::cout << "SKIP table-correlations: needs private dialogue corpora and human annotations; out of scope\n";
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion/criteria failed") << '\n';
  return failed == 0 || report_only ? 0 : 1;
}
