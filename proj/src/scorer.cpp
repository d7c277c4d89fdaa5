#include "advmt/scorer.hpp"

#include <algorithm>

namespace advmt {

ScorerParams make_scorer(ParameterStore& store, const std::string& prefix, std::size_t query_size,
                         std::size_t reply_size, std::size_t hidden_size, double init_bound, Scope scope,
                         Rng& rng) {
  std::uniform_real_distribution<double> dist(-init_bound, init_bound);
  auto uniform = [&](Shape s) {
    Tensor t(std::move(s));
    for (auto& v : t.values()) v = dist(rng);
    return t;
  };
  ScorerParams p;
  p.quadratic = &store.add(prefix + ".quadratic", uniform({query_size, reply_size}), scope);
  p.w_hidden = &store.add(prefix + ".w_hidden", uniform({query_size + reply_size + 1, hidden_size}), scope);
  p.b_hidden = &store.add(prefix + ".b_hidden", Tensor(Shape{hidden_size}), scope);
  p.w_out = &store.add(prefix + ".w_out", uniform({hidden_size, 1}), scope);
  p.b_out = &store.add(prefix + ".b_out", Tensor(Shape{1}), scope);
  return p;
}

Var quadratic_feature(Var q, Var r, Var m) {
  const Tensor& M = m.value();
  if (q.value().rank() != 1 || r.value().rank() != 1 || M.rank() != 2 || M.rows() != q.value().size() ||
      M.cols() != r.value().size())
    throw ShapeError("quadratic_feature: q " + shape_str(q.value().shape()) + ", M " + shape_str(M.shape()) +
                     ", r " + shape_str(r.value().shape()));
  return ops::sum(ops::mul(q, ops::matmul(m, r)));
}

double quadratic_feature(const Tensor& q, const Tensor& r, const Tensor& m) {
  Tape tape = Tape::frozen();
  return quadratic_feature(tape.constant(q), tape.constant(r), tape.constant(m)).item();
}

Var mlp_score(Var q, Var r, const ScorerParams& params) {
  Tape& tape = *q.tape;
  if (q.value().shape() != Shape{params.query_size()} || r.value().shape() != Shape{params.reply_size()})
    throw ShapeError("mlp_score: inputs " + shape_str(q.value().shape()) + " and " + shape_str(r.value().shape()) +
                     " vs scorer [" + std::to_string(params.query_size()) + "] and [" +
                     std::to_string(params.reply_size()) + "]");
  Var qmr = ops::reshape(quadratic_feature(q, r, tape.param(*params.quadratic)), Shape{1});
  const Var parts[] = {q, r, qmr};
  Var features = ops::concat(parts);
  Var hidden = ops::tanh(ops::add(ops::matmul(features, tape.param(*params.w_hidden)), tape.param(*params.b_hidden)));
  Var out = ops::sigmoid(ops::add(ops::matmul(hidden, tape.param(*params.w_out)), tape.param(*params.b_out)));
  return ops::reshape(out, Shape{});
}

Var hinge_loss(Var positive, Var negative, double margin) {
  return ops::relu(ops::add_scalar(ops::sub(negative, positive), margin));
}

double hinge_loss(double positive, double negative, double margin) {
  return std::max(0.0, margin - positive + negative);
}

}  // namespace advmt
