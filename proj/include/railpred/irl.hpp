#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "railpred/costmodel.hpp"
#include "railpred/nav.hpp"
#include "railpred/optim.hpp"
#include "railpred/terrain.hpp"

namespace railpred {

struct TrainConfig {
    double lr = 1e-3;
    int max_epochs = 200;
    double tolerance_cells = 2.0; // converged when mean deviation falls below this
    std::uint64_t seed = 0;
    double c_min = kDefaultCostFloor;
    NavConfig nav{};
    bool apply_grade_mask = true; // mask untraversable grades inside the policy step
};

/// A ground-truth constructed route on its terrain tile, rasterized to
/// cells. start/goal are the first/last route cells.
struct Demonstration {
    DemGrid dem;
    std::vector<GridIndex> route;
    GridIndex start{};
    GridIndex goal{};
};

Demonstration make_demonstration(DemGrid dem, std::vector<GridIndex> route);

/// Per-cell 0/1 indicator of the cells a path visits; BoundsError on any
/// out-of-bounds cell.
Raster visitation(std::span<const GridIndex> route, int ncols, int nrows);

struct EpochResult {
    Route predicted; // the pre-update policy prediction
    double mean_deviation_cells = 0.0;
    double path_cost = 0.0;
};

/// One cost-estimation + policy-estimation iteration: run the network,
/// predict with the path search over the resulting cost map, update the
/// parameters from the visitation difference. Throws TrainingError carrying
/// `epoch` when the policy step finds no path.
EpochResult irl_epoch(ModelParams& params, OptimizerState& opt, const Demonstration& demo,
                      const TrainConfig& config, int epoch = 0, int demo_index = 0);

struct TrainLogRow {
    int epoch = 0; // 1-based
    int demo = 0;
    double mean_deviation_cells = 0.0;
    double path_cost = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
};

/// Iterates irl_epoch over the demonstrations in order until every demo's
/// mean deviation is within tolerance or max_epochs is reached. A pure
/// function of (demos, config).
TrainResult train(std::span<const Demonstration> demos, const TrainConfig& config);

} // namespace railpred
