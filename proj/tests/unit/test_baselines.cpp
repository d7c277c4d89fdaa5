#include <doctest.h>

#include <cmath>

#include "advmt/baselines.hpp"
#include "advmt/model.hpp"
#include "synthetic.hpp"

using namespace advmt;

TEST_CASE("bleu examples") {
  const Tokens s{"the", "cat", "sat", "on", "the", "mat"};
  for (int n = 1; n <= 4; ++n) CHECK(bleu(s, s, n) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bleu(Tokens{"the", "the", "the"}, Tokens{"the", "cat"}, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(bleu(Tokens{"a", "b"}, Tokens{"c", "d"}, 1) == 0.0);
  CHECK_THROWS(bleu(Tokens{}, Tokens{"a"}, 1));
  CHECK_THROWS(bleu(Tokens{"a"}, Tokens{"a"}, 0));
}

TEST_CASE("bleu brevity penalty and smoothing") {
  const Tokens ref{"a", "b", "c", "d"};
  CHECK(bleu(Tokens{"a", "b"}, ref, 1) == doctest::Approx(std::exp(1.0 - 2.0)).epsilon(1e-15));
  const Tokens hyp{"a", "x", "c", "y"};
  CHECK(bleu(hyp, ref, 2, BleuSmoothing::None) == 0.0);
  // p1 = 2/4, p2 = (0+1)/(3+1)
  CHECK(bleu(hyp, ref, 2, BleuSmoothing::AddOne) == doctest::Approx(std::sqrt(0.5 * 0.25)).epsilon(1e-15));
}

TEST_CASE("ngram profile counts overlapping ngrams") {
  auto p = ngram_profile(Tokens{"a", "a", "a"}, 2);
  CHECK(p.size() == 1);
  CHECK(p.begin()->second == 2);
  CHECK(ngram_profile(Tokens{"a"}, 2).empty());
}

TEST_CASE("rouge-l examples") {
  CHECK(rouge_l(Tokens{"a", "b"}, Tokens{"a", "b"}) == 1.0);
  CHECK(rouge_l(Tokens{"a", "b"}, Tokens{"c"}) == 0.0);
  CHECK(lcs_length(Tokens{"a", "b", "c"}, Tokens{"a", "c", "d"}) == 2);
  CHECK(rouge_l(Tokens{"a", "b", "c"}, Tokens{"a", "c", "d"}) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK_THROWS(rouge_l(Tokens{}, Tokens{"a"}));
}

TEST_CASE("greedy matching examples") {
  WordVectors v(3);
  v.set("x", {1, 0, 0});
  v.set("y", {0, 1, 0});
  v.set("z", {0, 0, 2});
  CHECK(greedy_matching(Tokens{"x", "z"}, Tokens{"x", "z"}, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(greedy_matching(Tokens{"x"}, Tokens{"y", "z"}, v) == 0.0);
  CHECK(greedy_matching(Tokens{"x"}, Tokens{"x", "y"}, v) == doctest::Approx(0.75).epsilon(1e-15));
  // unknown tokens use the zero UNK vector and contribute 0
  CHECK(greedy_matching(Tokens{"q"}, Tokens{"x"}, v) == 0.0);
  CHECK_THROWS(greedy_matching(Tokens{}, Tokens{"x"}, v));
  CHECK_THROWS(v.set("w", {1, 2}));
}

TEST_CASE("word vectors from a text file") {
  advmt::testing::TempDir dir;
  advmt::testing::write_text(dir / "v.txt", "a 1 0\nb 0 1\n");
  WordVectors v = WordVectors::read(dir / "v.txt");
  CHECK(v.dim() == 2);
  CHECK(v.lookup("b") == std::vector<double>{0, 1});
  advmt::testing::write_text(dir / "bad.txt", "a 1 0\nb 0\n");
  CHECK_THROWS(WordVectors::read(dir / "bad.txt"));
}

TEST_CASE("word vectors from a trained model's embeddings") {
  std::vector<TaskSpec> specs{{"t", Vocabulary::from_tokens(std::vector<std::string>{"a", "b"}, 1)}};
  Model m(ModelConfig{3, 2, 2, Architecture::MultiTask}, specs, 1);
  WordVectors v = WordVectors::from_model(m, 0);
  CHECK(v.dim() == 6);
  CHECK(v.lookup("a")[0] == m.task(0).shared_embedding->value.at(2, 0));
  CHECK(v.lookup("a")[3] == m.task(0).private_embedding->value.at(2, 0));
  CHECK(v.lookup("never")[5] == m.task(0).private_embedding->value.at(1, 2));
}
