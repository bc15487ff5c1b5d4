#include "mrgan/optim.hpp"

#include <cmath>

#include "mrgan/errors.hpp"

namespace mrgan {

void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::size_t t,
               const AdamConfig& cfg, double lr) {
  require(same_shape(param.shape(), grad.shape()),
          "adam_step: shape mismatch " + shape_str(param.shape()) + " vs " +
              shape_str(grad.shape()));
  require(t >= 1, "adam_step: step counter must be >= 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

AdamState::AdamState(const ParameterStore& store, AdamConfig cfg) : cfg_(cfg) {
  for (const Parameter* p : store.trainable()) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void AdamState::step(const std::vector<Parameter*>& params, const std::vector<Tensor>& grads,
                     double lr) {
  require(params.size() == m_.size() && grads.size() == m_.size(),
          "AdamState::step: parameter/gradient count mismatch");
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_step(params[i]->value, grads[i], m_[i], v_[i], t_, cfg_, lr);
  }
}

EmaState::EmaState(const ParameterStore& store, double decay) : decay_(decay) {
  for (const Parameter* p : store.trainable()) shadow_.push_back(p->value);
}

void EmaState::update(const std::vector<Parameter*>& params) {
  require(params.size() == shadow_.size(), "EmaState::update: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& s = shadow_[i];
    const Tensor& p = params[i]->value;
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] = decay_ * s[j] + (1.0 - decay_) * p[j];
    }
  }
}

EmaScope::EmaScope(std::vector<Parameter*> params, const EmaState& ema)
    : params_(std::move(params)) {
  require(params_.size() == ema.shadows().size(), "EmaScope: parameter count mismatch");
  saved_.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    saved_.push_back(params_[i]->value);
    params_[i]->value = ema.shadows()[i];
  }
}

EmaScope::~EmaScope() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i]->value = std::move(saved_[i]);
  }
}

double lr_at(const Schedule& schedule, std::size_t epoch) {
  require(schedule.decay_start <= schedule.total_epochs,
          "lr_at: decay_start must be <= total_epochs");
  require(epoch < schedule.total_epochs, "lr_at: epoch " + std::to_string(epoch) +
                                             " out of range [0," +
                                             std::to_string(schedule.total_epochs) + ")");
  if (epoch < schedule.decay_start) return schedule.base_rate;
  const double span = static_cast<double>(schedule.total_epochs - schedule.decay_start);
  const double done = static_cast<double>(epoch - schedule.decay_start);
  return schedule.base_rate * (1.0 - done / span);
}

}  // namespace mrgan
