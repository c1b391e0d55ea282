#include "railpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace railpred {

namespace {

struct P2 {
    double x, y;
};

P2 center(GridIndex c, double cellsize) {
    return P2{(c.col + 0.5) * cellsize, (c.row + 0.5) * cellsize};
}

double point_segment_distance(P2 p, P2 a, P2 b) {
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((p.x - a.x) * abx + (p.y - a.y) * aby) / len2, 0.0, 1.0);
    }
    const double dx = p.x - (a.x + t * abx), dy = p.y - (a.y + t * aby);
    return std::sqrt(dx * dx + dy * dy);
}

double distance_to_polyline(P2 p, std::span<const GridIndex> line, double cellsize) {
    double best = std::numeric_limits<double>::infinity();
    if (line.size() == 1) return point_segment_distance(p, center(line[0], cellsize),
                                                        center(line[0], cellsize));
    for (std::size_t i = 1; i < line.size(); ++i) {
        best = std::min(best, point_segment_distance(p, center(line[i - 1], cellsize),
                                                     center(line[i], cellsize)));
    }
    return best;
}

double polyline_length(std::span<const GridIndex> line, double cellsize) {
    double len = 0.0;
    for (std::size_t i = 1; i < line.size(); ++i) {
        const P2 a = center(line[i - 1], cellsize), b = center(line[i], cellsize);
        len += std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
    }
    return len;
}

} // namespace

PathMetrics path_metrics(std::span<const GridIndex> pred, std::span<const GridIndex> truth,
                         double cellsize, double coverage_radius_m) {
    if (pred.empty() || truth.empty())
        throw std::invalid_argument("path_metrics: routes must be non-empty");

    PathMetrics m;
    double sum = 0.0;
    for (const GridIndex& cell : pred) {
        const double d = distance_to_polyline(center(cell, cellsize), truth, cellsize);
        sum += d;
        m.max_deviation_m = std::max(m.max_deviation_m, d);
    }
    m.mean_deviation_m = sum / static_cast<double>(pred.size());

    std::size_t covered = 0;
    for (const GridIndex& cell : truth) {
        if (distance_to_polyline(center(cell, cellsize), pred, cellsize) <= coverage_radius_m)
            ++covered;
    }
    m.truth_coverage = static_cast<double>(covered) / static_cast<double>(truth.size());
    m.pred_length_m = polyline_length(pred, cellsize);
    m.truth_length_m = polyline_length(truth, cellsize);
    return m;
}

Corridor corridor(std::span<const GridIndex> route, int ncols, int nrows, double cellsize,
                  double radius_m) {
    if (!(radius_m > 0.0)) throw std::invalid_argument("corridor: radius must be > 0");
    if (route.empty()) throw std::invalid_argument("corridor: route must be non-empty");

    // Mark cells per segment over the segment's inflated bounding box; a
    // plain all-cells scan would do the same work ncols*nrows times over.
    std::vector<std::uint8_t> inside(static_cast<std::size_t>(ncols) * nrows, 0);
    const int pad = static_cast<int>(radius_m / cellsize) + 1;
    const std::size_t nseg = route.size() == 1 ? 1 : route.size() - 1;
    for (std::size_t i = 0; i < nseg; ++i) {
        const GridIndex a = route[i];
        const GridIndex b = route[std::min(i + 1, route.size() - 1)];
        const int c0 = std::max(0, std::min(a.col, b.col) - pad);
        const int c1 = std::min(ncols - 1, std::max(a.col, b.col) + pad);
        const int r0 = std::max(0, std::min(a.row, b.row) - pad);
        const int r1 = std::min(nrows - 1, std::max(a.row, b.row) + pad);
        const P2 pa = center(a, cellsize), pb = center(b, cellsize);
        for (int row = r0; row <= r1; ++row) {
            for (int col = c0; col <= c1; ++col) {
                const std::size_t idx = static_cast<std::size_t>(row) * ncols + col;
                if (inside[idx]) continue;
                if (point_segment_distance(center(GridIndex{col, row}, cellsize), pa, pb) <=
                    radius_m)
                    inside[idx] = 1;
            }
        }
    }

    const double cell_km2 = cellsize * cellsize * 1e-6;
    Corridor c;
    c.radius_m = radius_m;
    c.area_km2 =
        static_cast<double>(std::count(inside.begin(), inside.end(), std::uint8_t{1})) *
        cell_km2;
    c.bbox_area_km2 = static_cast<double>(ncols) * nrows * cell_km2;
    c.reduction_ratio = c.area_km2 / c.bbox_area_km2;
    return c;
}

std::string report(const PathMetrics& metrics, const Corridor& corr) {
    nlohmann::ordered_json doc;
    doc["mean_deviation_m"] = metrics.mean_deviation_m;
    doc["max_deviation_m"] = metrics.max_deviation_m;
    doc["truth_coverage"] = metrics.truth_coverage;
    doc["pred_length_m"] = metrics.pred_length_m;
    doc["truth_length_m"] = metrics.truth_length_m;
    doc["corridor_area_km2"] = corr.area_km2;
    doc["bbox_area_km2"] = corr.bbox_area_km2;
    doc["reduction_ratio"] = corr.reduction_ratio;
    return doc.dump();
}

} // namespace railpred
