#pragma once

#include <memory>
#include <string>
#include <vector>

#include "advmt/tensor.hpp"

namespace advmt {

enum class ScopeKind { Private, Shared, Discriminator, TaskHead };

// Which part of the model a parameter belongs to. `task` is -1 for
// parameters that are not tied to one task (the shared encoder, the
// discriminator).
struct Scope {
  ScopeKind kind = ScopeKind::Shared;
  int task = -1;

  static Scope private_to(int task) { return {ScopeKind::Private, task}; }
  static Scope shared() { return {ScopeKind::Shared, -1}; }
  static Scope shared_for(int task) { return {ScopeKind::Shared, task}; }
  static Scope discriminator() { return {ScopeKind::Discriminator, -1}; }
  static Scope task_head(int task) { return {ScopeKind::TaskHead, task}; }

  friend bool operator==(const Scope&, const Scope&) = default;
};

std::string scope_str(const Scope& scope);
Scope parse_scope(const std::string& text);

class Parameter {
 public:
  Parameter(std::string name, Tensor value, Scope scope)
      : name_(std::move(name)), scope_(scope), value(std::move(value)), grad(this->value.shape()) {}

  const std::string& name() const { return name_; }
  const Scope& scope() const { return scope_; }
  const Shape& shape() const { return value.shape(); }
  void zero_grad() { grad.fill(0.0); }

 private:
  std::string name_;
  Scope scope_;

 public:
  Tensor value;
  Tensor grad;
};

// Owns parameters at stable addresses, in creation order (which is also the
// checkpoint manifest order).
class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor value, Scope scope);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::vector<Parameter*> all();
  template <typename Pred>
  std::vector<Parameter*> select(Pred pred) {
    std::vector<Parameter*> out;
    for (auto& p : params_)
      if (pred(*p)) out.push_back(p.get());
    return out;
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace advmt
