#include "advmt/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace advmt {

const Tensor& Var::value() const { return tape->value(*this); }

std::string scope_str(const Scope& scope) {
  std::string kind;
  switch (scope.kind) {
    case ScopeKind::Private: kind = "private"; break;
    case ScopeKind::Shared: kind = "shared"; break;
    case ScopeKind::Discriminator: kind = "discriminator"; break;
    case ScopeKind::TaskHead: kind = "task_head"; break;
  }
  if (scope.task >= 0) kind += ":" + std::to_string(scope.task);
  return kind;
}

Scope parse_scope(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  Scope s;
  s.task = colon == std::string::npos ? -1 : std::stoi(text.substr(colon + 1));
  if (kind == "private") s.kind = ScopeKind::Private;
  else if (kind == "shared") s.kind = ScopeKind::Shared;
  else if (kind == "discriminator") s.kind = ScopeKind::Discriminator;
  else if (kind == "task_head") s.kind = ScopeKind::TaskHead;
  else throw std::invalid_argument("unknown parameter scope '" + text + "'");
  return s;
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  const bool trainable = !trainable_ || trainable_(p.scope());
  nodes_.push_back(Node{p.value, {}, {}, trainable ? &p : nullptr, trainable});
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Var Tape::record(Tensor value, std::vector<Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const auto& p : parents) {
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
  const Node& root = nodes_[loss.id];
  if (root.value.size() != 1 || root.value.rank() != 0)
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(root.value.shape()));
  if (!root.needs_grad) return;

  std::vector<Tensor> grads(loss.id + 1);
  for (int i = 0; i <= loss.id; ++i)
    if (nodes_[i].needs_grad) grads[i] = Tensor(nodes_[i].value.shape());
  grads[loss.id][0] = 1.0;

  std::vector<Tensor*> slots;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    if (n.param) {
      auto g = grads[i].values();
      auto dst = n.param->grad.values();
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
      continue;
    }
    slots.clear();
    for (int p : n.parents) slots.push_back(nodes_[p].needs_grad ? &grads[p] : nullptr);
    n.backward(grads[i], slots);
  }
}

namespace ops {
namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands recorded on different tapes");
  return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

void accumulate(Tensor* dst, const Tensor& src) {
  if (!dst) return;
  auto d = dst->values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df_from_out) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  Tensor y_copy = y;
  return a.tape->record(std::move(y), {a},
                        [y_copy = std::move(y_copy), df_from_out](const Tensor& g, std::span<Tensor*> pg) {
                          Tensor& ga = *pg[0];
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df_from_out(y_copy[i]);
                        });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  auto mismatch = [&] {
    return ShapeError("matmul: shape mismatch " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  };

  if (A.rank() == 2 && B.rank() == 2) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k) throw mismatch();
    Tensor C(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A.at(i, p);
        for (std::size_t j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
      }
    return t.record(std::move(C), {a, b}, [a, b, m, k, n](const Tensor& g, std::span<Tensor*> pg) {
      const Tensor& A = a.value();
      const Tensor& B = b.value();
      if (Tensor* ga = pg[0])
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += g.at(i, j) * B.at(p, j);
            ga->at(i, p) += s;
          }
      if (Tensor* gb = pg[1])
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A.at(i, p);
            for (std::size_t j = 0; j < n; ++j) gb->at(p, j) += aip * g.at(i, j);
          }
    });
  }

  if (A.rank() == 2 && B.rank() == 1) {
    const std::size_t m = A.rows(), k = A.cols();
    if (B.size() != k) throw mismatch();
    Tensor y(Shape{m});
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = A.data() + i * k;
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += row[p] * B[p];
      y[i] = s;
    }
    return t.record(std::move(y), {a, b}, [a, b, m, k](const Tensor& g, std::span<Tensor*> pg) {
      const Tensor& A = a.value();
      const Tensor& B = b.value();
      if (Tensor* ga = pg[0])
        for (std::size_t i = 0; i < m; ++i) {
          double* row = ga->data() + i * k;
          for (std::size_t p = 0; p < k; ++p) row[p] += g[i] * B[p];
        }
      if (Tensor* gb = pg[1])
        for (std::size_t i = 0; i < m; ++i) {
          const double* row = A.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) (*gb)[p] += g[i] * row[p];
        }
    });
  }

  if (A.rank() == 1 && B.rank() == 2) {
    const std::size_t k = B.rows(), n = B.cols();
    if (A.size() != k) throw mismatch();
    Tensor y(Shape{n});
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) y[j] += A[p] * B.at(p, j);
    return t.record(std::move(y), {a, b}, [a, b, k, n](const Tensor& g, std::span<Tensor*> pg) {
      const Tensor& A = a.value();
      const Tensor& B = b.value();
      if (Tensor* ga = pg[0])
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0;
          for (std::size_t j = 0; j < n; ++j) s += B.at(p, j) * g[j];
          (*ga)[p] += s;
        }
      if (Tensor* gb = pg[1])
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) gb->at(p, j) += A[p] * g[j];
    });
  }

  throw mismatch();
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += B[i];
  return t.record(std::move(y), {a, b}, [](const Tensor& g, std::span<Tensor*> pg) {
    accumulate(pg[0], g);
    accumulate(pg[1], g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= B[i];
  return t.record(std::move(y), {a, b}, [](const Tensor& g, std::span<Tensor*> pg) {
    accumulate(pg[0], g);
    if (Tensor* gb = pg[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor y(A.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = A[i] * B[i];
  return t.record(std::move(y), {a, b}, [a, b](const Tensor& g, std::span<Tensor*> pg) {
      const Tensor& A = a.value();
      const Tensor& B = b.value();
    if (Tensor* ga = pg[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B[i];
    if (Tensor* gb = pg[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A[i];
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  for (auto& v : y.values()) v *= s;
  return a.tape->record(std::move(y), {a}, [s](const Tensor& g, std::span<Tensor*> pg) {
    for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += s * g[i];
  });
}

Var add_scalar(Var a, double s) {
  Tensor y = a.value();
  for (auto& v : y.values()) v += s;
  return a.tape->record(std::move(y), {a}, [](const Tensor& g, std::span<Tensor*> pg) { accumulate(pg[0], g); });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& t = *parts[0].tape;
  std::vector<double> out;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("operands recorded on different tapes");
    const Tensor& v = p.value();
    if (v.rank() != 1) throw ShapeError("concat: expected vectors, got " + shape_str(v.shape()));
    out.insert(out.end(), v.values().begin(), v.values().end());
    sizes.push_back(v.size());
  }
  const std::size_t n = out.size();
  return t.record(Tensor(Shape{n}, std::move(out)), std::vector<Var>(parts.begin(), parts.end()),
                  [sizes](const Tensor& g, std::span<Tensor*> pg) {
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < sizes.size(); ++k) {
                      if (Tensor* gk = pg[k])
                        for (std::size_t i = 0; i < sizes[k]; ++i) (*gk)[i] += g[off + i];
                      off += sizes[k];
                    }
                  });
}

Var concat(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat(parts);
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& x = a.value();
  if (x.rank() != 1 || length == 0 || offset + length > x.size())
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") outside " + shape_str(x.shape()));
  std::vector<double> v(x.values().begin() + offset, x.values().begin() + offset + length);
  return a.tape->record(Tensor(Shape{length}, std::move(v)), {a},
                        [offset, length](const Tensor& g, std::span<Tensor*> pg) {
                          for (std::size_t i = 0; i < length; ++i) (*pg[0])[offset + i] += g[i];
                        });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  // NaN passes through so a diverged input is not masked.
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 || std::isnan(x[i]) ? x[i] : 0.0;
  Tensor xs = x;
  // Subgradient at the kink is 0.
  return a.tape->record(std::move(y), {a}, [xs = std::move(xs)](const Tensor& g, std::span<Tensor*> pg) {
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xs[i] > 0) (*pg[0])[i] += g[i];
  });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  if (x.rank() != 1 && x.rank() != 2) throw ShapeError("softmax: expected vector or matrix, got " + shape_str(x.shape()));
  const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
  const std::size_t n = x.size() / rows;
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * n;
    double* out = y.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) z += (out[i] = std::exp(in[i] - mx));
    for (std::size_t i = 0; i < n; ++i) out[i] /= z;
  }
  Tensor ys = y;
  return a.tape->record(std::move(y), {a}, [ys = std::move(ys), rows, n](const Tensor& g, std::span<Tensor*> pg) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* s = ys.data() + r * n;
      const double* gr = g.data() + r * n;
      double dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += gr[i] * s[i];
      double* out = pg[0]->data() + r * n;
      for (std::size_t i = 0; i < n; ++i) out[i] += s[i] * (gr[i] - dot);
    }
  });
}

Var log(Var a, double floor) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  std::vector<bool> live(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = x[i] > 0 ? std::log(x[i]) : -HUGE_VAL;
    live[i] = l > floor;
    y[i] = live[i] ? l : floor;
  }
  Tensor xs = x;
  return a.tape->record(std::move(y), {a},
                        [xs = std::move(xs), live = std::move(live)](const Tensor& g, std::span<Tensor*> pg) {
                          for (std::size_t i = 0; i < g.size(); ++i)
                            if (live[i]) (*pg[0])[i] += g[i] / xs[i];
                        });
}

Var sum(Var a) {
  double s = 0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [](const Tensor& g, std::span<Tensor*> pg) {
    const double gv = g[0];
    for (auto& v : pg[0]->values()) v += gv;
  });
}

Var reshape(Var a, Shape shape) {
  const Tensor& x = a.value();
  if (shape_size(shape) != x.size())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  std::vector<double> v(x.values().begin(), x.values().end());
  return a.tape->record(Tensor(std::move(shape), std::move(v)), {a}, [](const Tensor& g, std::span<Tensor*> pg) {
    for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
  });
}

Var gather_row(Var table, std::size_t index, bool skip_row0_grad) {
  const Tensor& T = table.value();
  if (T.rank() != 2) throw ShapeError("gather_row: expected matrix, got " + shape_str(T.shape()));
  if (index >= T.rows())
    throw ShapeError("gather_row: row " + std::to_string(index) + " outside " + shape_str(T.shape()));
  const std::size_t d = T.cols();
  std::vector<double> v(T.data() + index * d, T.data() + (index + 1) * d);
  return table.tape->record(Tensor(Shape{d}, std::move(v)), {table},
                            [index, d, skip_row0_grad](const Tensor& g, std::span<Tensor*> pg) {
                              if (skip_row0_grad && index == 0) return;
                              double* row = pg[0]->data() + index * d;
                              for (std::size_t i = 0; i < d; ++i) row[i] += g[i];
                            });
}

}  // namespace ops
}  // namespace advmt

namespace advmt {

Parameter& ParameterStore::add(std::string name, Tensor value, Scope scope) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name " + name);
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value), scope));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  return select([](const Parameter&) { return true; });
}

}  // namespace advmt
