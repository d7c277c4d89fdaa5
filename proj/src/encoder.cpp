#include "advmt/encoder.hpp"

#include <cmath>

namespace advmt {

namespace {

Tensor uniform(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Var gate(Var xh, Parameter* w, Parameter* b, Tape& tape) {
  return ops::add(ops::matmul(tape.param(*w), xh), tape.param(*b));
}

}  // namespace

LstmParams make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                     std::size_t hidden_size, Scope scope, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  const Shape w{hidden_size, input_size + hidden_size};
  const Shape b{hidden_size};
  LstmParams p;
  p.w_input = &store.add(prefix + ".w_input", uniform(w, bound, rng), scope);
  p.w_forget = &store.add(prefix + ".w_forget", uniform(w, bound, rng), scope);
  p.w_output = &store.add(prefix + ".w_output", uniform(w, bound, rng), scope);
  p.w_candidate = &store.add(prefix + ".w_candidate", uniform(w, bound, rng), scope);
  p.b_input = &store.add(prefix + ".b_input", Tensor(b, 0.0), scope);
  p.b_forget = &store.add(prefix + ".b_forget", Tensor(b, 1.0), scope);
  p.b_output = &store.add(prefix + ".b_output", Tensor(b, 0.0), scope);
  p.b_candidate = &store.add(prefix + ".b_candidate", Tensor(b, 0.0), scope);
  return p;
}

BiLstmParams make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                         std::size_t hidden_size, Scope scope, Rng& rng) {
  BiLstmParams p;
  p.forward = make_lstm(store, prefix + ".fwd", input_size, hidden_size, scope, rng);
  p.backward = make_lstm(store, prefix + ".bwd", input_size, hidden_size, scope, rng);
  return p;
}

Parameter& make_embedding(ParameterStore& store, const std::string& name, std::size_t vocab_size,
                          std::size_t dim, Scope scope, Rng& rng) {
  Tensor t = uniform(Shape{vocab_size, dim}, 0.1, rng);
  for (std::size_t j = 0; j < dim; ++j) t.at(kPadId, j) = 0.0;
  return store.add(name, std::move(t), scope);
}

std::vector<Var> embed(Tape& tape, Parameter& table, const TokenIds& ids) {
  if (ids.empty()) throw std::invalid_argument("embed: empty sequence");
  Var t = tape.param(table);
  std::vector<Var> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0) throw ShapeError("embed: negative token id " + std::to_string(id));
    rows.push_back(ops::gather_row(t, static_cast<std::size_t>(id), /*skip_row0_grad=*/true));
  }
  return rows;
}

Tensor embed_matrix(const Parameter& table, const TokenIds& ids) {
  if (ids.empty()) throw std::invalid_argument("embed: empty sequence");
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  Tensor out(Shape{ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= v)
      throw ShapeError("embed: token id " + std::to_string(ids[t]) + " outside table " + shape_str(table.shape()));
    for (std::size_t j = 0; j < d; ++j) out.at(t, j) = table.value.at(ids[t], j);
  }
  return out;
}

LstmState lstm_cell(Var x, const LstmState& prev, const LstmParams& params) {
  Tape& tape = *x.tape;
  const std::size_t dh = params.hidden_size();
  if (x.value().rank() != 1 || x.value().size() != params.input_size())
    throw ShapeError("lstm_cell: input " + shape_str(x.value().shape()) + " vs expected [" +
                     std::to_string(params.input_size()) + "]");
  if (prev.h.value().shape() != Shape{dh} || prev.c.value().shape() != Shape{dh})
    throw ShapeError("lstm_cell: state " + shape_str(prev.h.value().shape()) + "/" +
                     shape_str(prev.c.value().shape()) + " vs expected [" + std::to_string(dh) + "]");

  Var xh = ops::concat(x, prev.h);
  Var i = ops::sigmoid(gate(xh, params.w_input, params.b_input, tape));
  Var f = ops::sigmoid(gate(xh, params.w_forget, params.b_forget, tape));
  Var o = ops::sigmoid(gate(xh, params.w_output, params.b_output, tape));
  Var g = ops::tanh(gate(xh, params.w_candidate, params.b_candidate, tape));
  Var c = ops::add(ops::mul(f, prev.c), ops::mul(i, g));
  Var h = ops::mul(o, ops::tanh(c));
  return {h, c};
}

Var lstm_final_state(Tape& tape, const std::vector<Var>& inputs, const LstmParams& params, bool reverse) {
  if (inputs.empty()) throw std::invalid_argument("lstm: empty sequence");
  const Shape hs{params.hidden_size()};
  LstmState s{tape.constant(Tensor(hs)), tape.constant(Tensor(hs))};
  const std::size_t n = inputs.size();
  for (std::size_t k = 0; k < n; ++k) s = lstm_cell(inputs[reverse ? n - 1 - k : k], s, params);
  return s.h;
}

Var bilstm_encode(Tape& tape, const std::vector<Var>& inputs, const BiLstmParams& params) {
  Var fwd = lstm_final_state(tape, inputs, params.forward, false);
  Var bwd = lstm_final_state(tape, inputs, params.backward, true);
  return ops::concat(fwd, bwd);
}

Var bilstm_encode(Tape& tape, Parameter& table, const TokenIds& ids, const BiLstmParams& params) {
  return bilstm_encode(tape, embed(tape, table, ids), params);
}

}  // namespace advmt
