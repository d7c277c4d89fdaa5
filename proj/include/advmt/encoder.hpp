#pragma once

#include <string>

#include "advmt/autodiff.hpp"
#include "advmt/corpus.hpp"

namespace advmt {

// One direction of an LSTM: gate weights act on [x_t ; h_{t-1}].
struct LstmParams {
  Parameter* w_input = nullptr;      // d_h x (d_e + d_h)
  Parameter* w_forget = nullptr;
  Parameter* w_output = nullptr;
  Parameter* w_candidate = nullptr;
  Parameter* b_input = nullptr;      // d_h
  Parameter* b_forget = nullptr;
  Parameter* b_output = nullptr;
  Parameter* b_candidate = nullptr;

  std::size_t hidden_size() const { return b_input->shape()[0]; }
  std::size_t input_size() const { return w_input->shape()[1] - hidden_size(); }
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;
};

// Weights uniform in [-1/sqrt(d_h), 1/sqrt(d_h)], forget bias 1, other
// biases 0.
LstmParams make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                     std::size_t hidden_size, Scope scope, Rng& rng);
BiLstmParams make_bilstm(ParameterStore& store, const std::string& prefix, std::size_t input_size,
                         std::size_t hidden_size, Scope scope, Rng& rng);

// V x d_e, uniform in [-0.1, 0.1] with the padding row zeroed.
Parameter& make_embedding(ParameterStore& store, const std::string& name, std::size_t vocab_size,
                          std::size_t dim, Scope scope, Rng& rng);

// One Var per token: row ids[t] of the table. Throws ShapeError for an id
// outside the table, std::invalid_argument for an empty sequence.
std::vector<Var> embed(Tape& tape, Parameter& table, const TokenIds& ids);
// Same as embed() but returns the T x d_e matrix as a plain tensor.
Tensor embed_matrix(const Parameter& table, const TokenIds& ids);

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_cell(Var x, const LstmState& prev, const LstmParams& params);

// Runs `params` forward over `inputs` (or in reverse when `reverse` is set)
// from a zero state and returns the final hidden state.
Var lstm_final_state(Tape& tape, const std::vector<Var>& inputs, const LstmParams& params, bool reverse);

// Forward scan over x_1..x_T, backward scan over x_T..x_1; returns the
// concatenation of both final hidden states (length 2 * d_h).
Var bilstm_encode(Tape& tape, const std::vector<Var>& inputs, const BiLstmParams& params);
Var bilstm_encode(Tape& tape, Parameter& table, const TokenIds& ids, const BiLstmParams& params);

}  // namespace advmt
