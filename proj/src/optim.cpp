#include "advmt/optim.hpp"

#include <algorithm>
#include <cmath>

namespace advmt {

void Adam::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params)
    if (!p->grad.all_finite()) throw DivergenceError("non-finite gradient in parameter " + p->name());

  const auto& c = config_;
  for (Parameter* p : params) {
    auto [it, fresh] = slots_.try_emplace(p);
    Slot& s = it->second;
    if (fresh) {
      s.m = Tensor(p->shape());
      s.v = Tensor(p->shape());
    }
    ++s.t;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
    auto w = p->value.values();
    auto g = p->grad.values();
    auto m = s.m.values();
    auto v = s.v.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
    p->zero_grad();
  }
}

long Adam::steps_taken(const Parameter& p) const {
  auto it = slots_.find(&p);
  return it == slots_.end() ? 0 : it->second.t;
}

GradCheckResult finite_difference_check(std::span<Parameter* const> params,
                                        const std::function<double()>& loss,
                                        const std::function<void()>& analytic, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite_difference_check: step must be positive");
  for (Parameter* p : params) p->zero_grad();
  analytic();

  GradCheckResult result;
  for (Parameter* p : params) {
    auto w = p->value.values();
    auto g = p->grad.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = loss();
      w[i] = saved - h;
      const double down = loss();
      w[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::domain_error("finite_difference_check: non-finite loss at " + p->name());
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), 1e-6});
      const double rel = std::abs(g[i] - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p->name();
      }
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace advmt
