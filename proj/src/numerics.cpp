#include "huge/numerics.hpp"

namespace huge {

void adam_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, AdamState& state,
               double lr, const AdamOptions& options) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(options.beta1, t);
  const double bias2 = 1.0 - std::pow(options.beta2, t);
  for (Index k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g * g;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& loss_fn,
                            const Vector& params, double h) {
  if (!(h > 0.0)) throw ValidationError("finite_diff_gradient: step must be positive");
  Vector grad(params.size());
  Vector probe = params;
  for (Index k = 0; k < params.size(); ++k) {
    probe[k] = params[k] + h;
    const double up = loss_fn(probe);
    probe[k] = params[k] - h;
    const double down = loss_fn(probe);
    probe[k] = params[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_diff_gradient: non-finite loss at coordinate " +
                           std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace huge
