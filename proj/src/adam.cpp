#include "stnet/adam.hpp"

#include <cmath>

#include "stnet/errors.hpp"

namespace stnet {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& config) {
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
  }
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: params (" + std::to_string(params.size()) + "), grads (" +
                     std::to_string(grads.size()) + ") and moments (" + std::to_string(state.m.size()) + ", " +
                     std::to_string(state.v.size()) + ") differ in length");
  }
  state.t += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] = static_cast<T>(params[i] - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState<double>&, const AdamConfig&);

AdamOptimizer::AdamOptimizer(std::vector<Tensor*> params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {
  config_.validate();
}

void AdamOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    if (!p.requires_grad()) continue;
    adam_step<float>(p.data(), p.grad(), states_[i], config_);
  }
  ++steps_;
}

}  // namespace stnet
