#pragma once

#include "asen/training.hpp"

#include <functional>

namespace asen {

/// |a - n| / max(|a|, |n|, 1e-6). The floor keeps round-off on vanishing
/// gradients from dominating.
double gradient_relative_error(double analytic, double numeric) noexcept;

/// Central differences of `loss` around the current `params`, compared
/// element-wise against `analytic`. Parameters are restored before return.
/// Throws ConfigError for eps <= 0.
double max_relative_gradient_error(const train::ParamSpans& params, const train::GradSpans& analytic,
                                   const std::function<double()>& loss, double eps);

} // namespace asen
