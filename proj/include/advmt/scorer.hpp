#pragma once

#include "advmt/autodiff.hpp"
#include "advmt/corpus.hpp"

namespace advmt {

// Two-layer MLP over [q ; r ; q^T M r]: tanh hidden layer, sigmoid output.
struct ScorerParams {
  Parameter* quadratic = nullptr;  // M: d_q x d_r
  Parameter* w_hidden = nullptr;   // (d_q + d_r + 1) x d_m2
  Parameter* b_hidden = nullptr;   // d_m2
  Parameter* w_out = nullptr;      // d_m2 x 1
  Parameter* b_out = nullptr;      // 1

  std::size_t query_size() const { return quadratic->shape()[0]; }
  std::size_t reply_size() const { return quadratic->shape()[1]; }
  std::size_t feature_size() const { return w_hidden->shape()[0]; }
  std::size_t hidden_size() const { return w_hidden->shape()[1]; }
};

// Weights uniform in [-init_bound, init_bound], biases 0.
ScorerParams make_scorer(ParameterStore& store, const std::string& prefix, std::size_t query_size,
                         std::size_t reply_size, std::size_t hidden_size, double init_bound, Scope scope,
                         Rng& rng);

// q^T M r as a scalar.
Var quadratic_feature(Var q, Var r, Var m);
double quadratic_feature(const Tensor& q, const Tensor& r, const Tensor& m);

// Score in (0, 1).
Var mlp_score(Var q, Var r, const ScorerParams& params);

// max(0, margin - positive + negative); the subgradient on the flat side
// (including the kink) is 0.
Var hinge_loss(Var positive, Var negative, double margin);
double hinge_loss(double positive, double negative, double margin);

}  // namespace advmt
