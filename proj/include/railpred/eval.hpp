#pragma once

#include <span>
#include <string>

#include "railpred/terrain.hpp"

namespace railpred {

/// Deviation of a prediction from ground truth. Distances are measured from
/// prediction cell centers to the nearest truth segment (point to segment,
/// so they are stable under resampling density); max_deviation is the
/// directed prediction-to-truth Hausdorff distance.
struct PathMetrics {
    double mean_deviation_m = 0.0;
    double max_deviation_m = 0.0;
    double truth_coverage = 0.0; // fraction of truth cells within the coverage radius
    double pred_length_m = 0.0;
    double truth_length_m = 0.0;
};

PathMetrics path_metrics(std::span<const GridIndex> pred, std::span<const GridIndex> truth,
                         double cellsize, double coverage_radius_m);

/// Buffered search region around a route: area counts the grid cells whose
/// centers lie within `radius_m` of the route, bbox_area is the whole tile.
struct Corridor {
    double radius_m = 0.0;
    double area_km2 = 0.0;
    double bbox_area_km2 = 0.0;
    double reduction_ratio = 0.0;
};

Corridor corridor(std::span<const GridIndex> route, int ncols, int nrows, double cellsize,
                  double radius_m);

/// Flat JSON document with every PathMetrics and Corridor field, fixed key
/// order, numbers in shortest round-trip form.
std::string report(const PathMetrics& metrics, const Corridor& corr);

} // namespace railpred
