#include "railpred/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "railpred/errors.hpp"

namespace railpred {

namespace {

double injected_loss(const Tensor& output, const Tensor& injection) {
    if (!output.same_shape(injection))
        throw ShapeError("grad_check: injection shape does not match network output");
    double loss = 0.0;
    for (std::size_t i = 0; i < output.data.size(); ++i)
        loss += output.data[i] * injection.data[i];
    return loss;
}

} // namespace

double grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& forward,
    const std::function<std::vector<Tensor>(const std::vector<Tensor>&, const Tensor&)>&
        backward,
    std::vector<Tensor> params, const Tensor& injection, double step) {
    const std::vector<Tensor> analytic = backward(params, injection);
    if (analytic.size() != params.size())
        throw ShapeError("grad_check: backward returned wrong number of gradients");
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!analytic[p].same_shape(params[p]))
            throw ShapeError("grad_check: gradient shape mismatch");
    }

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t i = 0; i < params[p].data.size(); ++i) coords.emplace_back(p, i);

    // Each coordinate's central difference is an independent pair of forward
    // evaluations, so the coordinates can be fanned out across threads; the
    // max-reduction does not depend on evaluation order.
    const unsigned nthreads =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        coords.size() > 64 ? 8 : 1));
    std::vector<double> worst_per_thread(nthreads, 0.0);

    auto run_range = [&](unsigned t, std::size_t begin, std::size_t end) {
        std::vector<Tensor> local = params;
        double worst = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            const auto [p, i] = coords[k];
            const double saved = local[p].data[i];
            local[p].data[i] = saved + step;
            const double lp = injected_loss(forward(local), injection);
            local[p].data[i] = saved - step;
            const double lm = injected_loss(forward(local), injection);
            local[p].data[i] = saved;

            const double numeric = (lp - lm) / (2.0 * step);
            const double a = analytic[p].data[i];
            // The 1e-4 floor turns near-zero-gradient entries into an
            // absolute comparison; central differences cannot resolve
            // discrepancies below the loss rounding noise there.
            const double rel =
                std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-4);
            worst = std::max(worst, rel);
        }
        worst_per_thread[t] = worst;
    };

    if (nthreads == 1) {
        run_range(0, 0, coords.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (coords.size() + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t begin = std::min<std::size_t>(t * chunk, coords.size());
            const std::size_t end = std::min<std::size_t>(begin + chunk, coords.size());
            pool.emplace_back(run_range, t, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return *std::max_element(worst_per_thread.begin(), worst_per_thread.end());
}

} // namespace railpred
