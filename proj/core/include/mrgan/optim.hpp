#pragma once

#include <vector>

#include "mrgan/layers.hpp"

namespace mrgan {

struct AdamConfig {
  double alpha = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments per trainable parameter, in ParameterStore order.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParameterStore& store, AdamConfig cfg);

  // One update with the given learning rate (the schedule overrides alpha).
  // grads must follow the same order as the store's trainable parameters.
  void step(const std::vector<Parameter*>& params, const std::vector<Tensor>& grads, double lr);

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_step_count(std::size_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

// Single-tensor Adam update, exposed for tests and small consumers.
void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::size_t t,
               const AdamConfig& cfg, double lr);

// Shadow copies of the trainable parameters, blended after each update:
// shadow <- decay*shadow + (1-decay)*param. Inference swaps shadows in.
class EmaState {
 public:
  EmaState() = default;
  EmaState(const ParameterStore& store, double decay);

  void update(const std::vector<Parameter*>& params);
  double decay() const { return decay_; }
  std::vector<Tensor>& shadows() { return shadow_; }
  const std::vector<Tensor>& shadows() const { return shadow_; }

 private:
  double decay_ = 0.999;
  std::vector<Tensor> shadow_;
};

// Swaps EMA shadows into the parameters for the lifetime of the scope, then
// restores the training values. Restoring also undoes accidental writes.
class EmaScope {
 public:
  EmaScope(std::vector<Parameter*> params, const EmaState& ema);
  ~EmaScope();
  EmaScope(const EmaScope&) = delete;
  EmaScope& operator=(const EmaScope&) = delete;

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> saved_;
};

struct Schedule {
  std::size_t total_epochs = 0;
  std::size_t decay_start = 0;  // linear decay to 0 from here
  double base_rate = 3e-4;
};

// Learning rate at `epoch`: base before decay_start, then linear decay
// reaching 0 at total_epochs. Requires 0 <= epoch < total_epochs.
double lr_at(const Schedule& schedule, std::size_t epoch);

}  // namespace mrgan
