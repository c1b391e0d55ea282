#include "railpred/irl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "railpred/errors.hpp"
#include "railpred/eval.hpp"

namespace railpred {

namespace {

struct PreparedDemo {
    const Demonstration* demo = nullptr;
    TerrainFeatures feats;
    TraversabilityMask mask;
    NavConfig search_config;
    Raster mu_demo;
};

PreparedDemo prepare(const Demonstration& demo, const TrainConfig& config) {
    if (demo.route.size() < 2)
        throw std::invalid_argument("demonstration route needs at least 2 cells");
    for (const GridIndex& c : demo.route) {
        if (!demo.dem.in_bounds(c))
            throw BoundsError("demonstration cell (" + std::to_string(c.col) + "," +
                              std::to_string(c.row) + ") outside its grid");
    }

    PreparedDemo p;
    p.demo = &demo;
    p.feats = features(demo.dem);
    if (config.apply_grade_mask) {
        p.search_config = config.nav;
        p.mask = traversability(demo.dem, config.nav);
    } else {
        p.search_config = NavConfig{std::numeric_limits<double>::infinity(), 0};
        p.mask = TraversabilityMask(demo.dem.ncols, demo.dem.nrows, true);
        for (int row = 0; row < demo.dem.nrows; ++row)
            for (int col = 0; col < demo.dem.ncols; ++col)
                if (demo.dem.is_nodata(col, row)) p.mask.set(col, row, false);
    }
    p.mu_demo = visitation(demo.route, demo.dem.ncols, demo.dem.nrows);
    return p;
}

std::vector<std::span<double>> param_views(ModelParams& params) {
    std::vector<std::span<double>> views;
    for (auto& layer : params.layers) {
        views.emplace_back(layer.weights);
        views.emplace_back(layer.bias);
    }
    return views;
}

std::vector<std::span<const double>> grad_views(const ModelGrads& grads) {
    std::vector<std::span<const double>> views;
    for (const auto& layer : grads.layers) {
        views.emplace_back(layer.weights);
        views.emplace_back(layer.bias);
    }
    return views;
}

EpochResult run_epoch(ModelParams& params, OptimizerState& opt, const PreparedDemo& prep,
                      const TrainConfig& config, int epoch, int demo_index) {
    const Demonstration& demo = *prep.demo;

    // Cost estimation.
    const CostForward fwd = cost_forward(params, prep.feats, config.c_min);

    // Policy estimation.
    std::optional<Route> predicted;
    try {
        predicted = astar(demo.dem, prep.mask, &fwd.cost.values, demo.start, demo.goal,
                          prep.search_config);
    } catch (const std::invalid_argument& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", demo " +
                                std::to_string(demo_index) + ": " + e.what(),
                            epoch, demo_index);
    }
    if (!predicted) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", demo " +
                                std::to_string(demo_index) +
                                ": policy step found no path (grade mask too aggressive or "
                                "degenerate cost map)",
                            epoch, demo_index);
    }

    // Visitation difference, masked to traversable cells, drives the update.
    const Raster mu_pred =
        visitation(predicted->cells, demo.dem.ncols, demo.dem.nrows);
    Raster dcost(demo.dem.ncols, demo.dem.nrows);
    for (int row = 0; row < demo.dem.nrows; ++row) {
        for (int col = 0; col < demo.dem.ncols; ++col) {
            dcost.at(col, row) = prep.mask.at(col, row)
                                     ? prep.mu_demo.at(col, row) - mu_pred.at(col, row)
                                     : 0.0;
        }
    }
    const ModelGrads grads = cost_backward(params, fwd, dcost);
    auto views = param_views(params);
    const auto gviews = grad_views(grads);
    adam_step(views, gviews, opt);

    EpochResult result;
    result.path_cost = predicted->total_cost;
    result.mean_deviation_cells =
        path_metrics(predicted->cells, demo.route, 1.0, 1.0).mean_deviation_m;
    result.predicted = std::move(*predicted);
    return result;
}

} // namespace

Demonstration make_demonstration(DemGrid dem, std::vector<GridIndex> route) {
    if (route.size() < 2)
        throw std::invalid_argument("demonstration route needs at least 2 cells");
    Demonstration d;
    d.dem = std::move(dem);
    d.start = route.front();
    d.goal = route.back();
    d.route = std::move(route);
    return d;
}

Raster visitation(std::span<const GridIndex> route, int ncols, int nrows) {
    Raster mu(ncols, nrows);
    for (const GridIndex& c : route) {
        if (c.col < 0 || c.col >= ncols || c.row < 0 || c.row >= nrows)
            throw BoundsError("visitation: cell (" + std::to_string(c.col) + "," +
                              std::to_string(c.row) + ") out of bounds");
        mu.at(c.col, c.row) = 1.0;
    }
    return mu;
}

EpochResult irl_epoch(ModelParams& params, OptimizerState& opt, const Demonstration& demo,
                      const TrainConfig& config, int epoch, int demo_index) {
    return run_epoch(params, opt, prepare(demo, config), config, epoch, demo_index);
}

TrainResult train(std::span<const Demonstration> demos, const TrainConfig& config) {
    if (demos.empty()) throw std::invalid_argument("train: need at least one demonstration");
    if (!(config.lr > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
    if (config.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
    if (!(config.c_min > 0.0)) throw std::invalid_argument("train: c_min must be > 0");

    std::vector<PreparedDemo> prepared;
    prepared.reserve(demos.size());
    for (const Demonstration& d : demos) prepared.push_back(prepare(d, config));

    TrainResult result;
    result.params = init_params(config.seed);
    OptimizerState opt;
    opt.lr = config.lr;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        bool converged = true;
        for (std::size_t d = 0; d < prepared.size(); ++d) {
            const EpochResult er = run_epoch(result.params, opt, prepared[d], config, epoch,
                                             static_cast<int>(d));
            result.log.push_back(TrainLogRow{epoch, static_cast<int>(d),
                                             er.mean_deviation_cells, er.path_cost});
            if (er.mean_deviation_cells > config.tolerance_cells) converged = false;
        }
        if (converged) break;
    }
    return result;
}

} // namespace railpred
