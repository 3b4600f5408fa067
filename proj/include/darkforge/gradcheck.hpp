#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace darkforge {

/// Central finite differences against an analytic gradient of a scalar loss.
/// `loss` must re-read `vars` on every call; `analytic` holds dL/dvars[i].
/// Returns max over coordinates of |analytic - numeric| / max(1e-8, |numeric|).
inline double finite_diff_check(const std::function<double()>& loss, std::span<double> vars,
                                std::span<const double> analytic, double step = 1e-4) {
    if (vars.size() != analytic.size())
        throw std::invalid_argument("finite_diff_check: size mismatch");
    double max_err = 0.0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const double orig = vars[i];
        vars[i] = orig + step;
        const double lp = loss();
        vars[i] = orig - step;
        const double lm = loss();
        vars[i] = orig;
        if (!std::isfinite(lp) || !std::isfinite(lm))
            throw std::runtime_error("finite_diff_check: non-finite loss");
        const double numeric = (lp - lm) / (2.0 * step);
        const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
        if (err > max_err) max_err = err;
    }
    return max_err;
}

}  // namespace darkforge
