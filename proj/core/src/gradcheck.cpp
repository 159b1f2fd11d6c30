#include "asen/gradcheck.hpp"

#include "asen/error.hpp"

#include <algorithm>
#include <cmath>

namespace asen {

double gradient_relative_error(double analytic, double numeric) noexcept {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

double max_relative_gradient_error(const train::ParamSpans& params, const train::GradSpans& analytic,
                                   const std::function<double()>& loss, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("gradient check step must be positive and finite");
    if (params.size() != analytic.size()) throw DimensionError("gradient check: tensor count mismatch");
    double worst = 0.0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t].size() != analytic[t].size()) throw DimensionError("gradient check: tensor size mismatch");
        for (std::size_t k = 0; k < params[t].size(); ++k) {
            double& p = params[t][k];
            const double saved = p;
            p = saved + eps;
            const double up = loss();
            p = saved - eps;
            const double down = loss();
            p = saved;
            const double numeric = (up - down) / (2.0 * eps);
            worst = std::max(worst, gradient_relative_error(analytic[t][k], numeric));
        }
    }
    return worst;
}

} // namespace asen
