#pragma once

#include <functional>
#include <vector>

#include "railpred/tensor.hpp"

namespace railpred {

/// Scalarizes a network as L(params) = sum(injection * forward(params)) and
/// compares analytic parameter gradients against central finite differences.
/// `forward` maps the parameter list to the network output; `backward` maps
/// (params, upstream = injection) to one gradient tensor per parameter.
/// Returns the worst relative error over every parameter entry.
double grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& forward,
    const std::function<std::vector<Tensor>(const std::vector<Tensor>&, const Tensor&)>&
        backward,
    std::vector<Tensor> params, const Tensor& injection, double step = 1e-5);

} // namespace railpred
