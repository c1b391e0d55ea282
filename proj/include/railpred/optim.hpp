#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace railpred {

/// Adam with bias correction. One state instance per parameter list; the
/// moment buffers are laid out to match the spans handed to adam_step.
struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// In-place Adam update. `params` and `grads` must be parallel lists of
/// equal-length spans; moment buffers are allocated on first use and must
/// keep their shapes afterwards. Deterministic.
void adam_step(std::span<std::span<double>> params,
               std::span<const std::span<const double>> grads, OptimizerState& state);

} // namespace railpred
