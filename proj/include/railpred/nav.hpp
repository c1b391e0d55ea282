#pragma once

#include <optional>
#include <span>
#include <vector>

#include "railpred/terrain.hpp"

namespace railpred {

/// Rail traversability limits: the per-cell/per-edge grade bound and the
/// track-width inflation radius. Grades are rise over horizontal run.
struct NavConfig {
    double max_grade = 0.022; // grades past 2.2% are rare even off main lines
    int track_halfwidth = 0;  // Chebyshev erosion radius, cells
};

/// Main lines stay under 1%.
inline constexpr double kMainlineMaxGrade = 0.01;

struct Route {
    std::vector<GridIndex> cells; // consecutive cells are 8-neighbors, no repeats
    double total_cost = 0.0;
};

struct TraversabilityMask {
    int ncols = 0;
    int nrows = 0;
    std::vector<std::uint8_t> cells;

    TraversabilityMask() = default;
    TraversabilityMask(int cols, int rows, bool fill = false)
        : ncols(cols), nrows(rows),
          cells(static_cast<std::size_t>(cols) * rows, fill ? 1 : 0) {}

    bool at(int col, int row) const {
        return cells[static_cast<std::size_t>(row) * ncols + col] != 0;
    }
    bool at(GridIndex i) const { return at(i.col, i.row); }
    void set(int col, int row, bool v) {
        cells[static_cast<std::size_t>(row) * ncols + col] = v ? 1 : 0;
    }
};

/// Cells whose gradient magnitude stays within max_grade, eroded by the
/// track halfwidth (a cell survives only if every cell within Chebyshev
/// radius `track_halfwidth`, clipped to the grid, passes the base rule).
/// Nodata cells are never traversable.
TraversabilityMask traversability(const DemGrid& grid, const NavConfig& config);

/// Optimal 8-connected path. Edge cost is horizontal step length times the
/// mean of the endpoint cell costs (geometric mode when cost_field is null:
/// cost == 1, i.e. pure length). An edge is admitted only when both cells
/// are traversable and |dz|/run <= max_grade. Returns nullopt when no path
/// exists; throws std::invalid_argument on untraversable endpoints or a
/// non-positive cost field. Ties break toward smaller (row, col), so equal
/// inputs always return the identical route.
std::optional<Route> astar(const DemGrid& grid, const TraversabilityMask& mask,
                           const Raster* cost_field, GridIndex start, GridIndex goal,
                           const NavConfig& config);

/// Independent exhaustive label-setting search with no heuristic; the
/// optimality oracle for astar.
std::optional<Route> dijkstra_oracle(const DemGrid& grid, const TraversabilityMask& mask,
                                     const Raster* cost_field, GridIndex start,
                                     GridIndex goal, const NavConfig& config);

/// Continues a route prefix along its trailing heading (the chord over the
/// final 10 cells, or the whole prefix if shorter) for `distance_m` meters
/// and snaps to the nearest cell. Throws BoundsError naming the clamped
/// boundary cell when the extension leaves the grid.
GridIndex extend_heading(std::span<const GridIndex> route_prefix, double distance_m,
                         const DemGrid& grid);

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
};

WorldPoint cell_center(const DemGrid& grid, GridIndex cell);

/// Nearest cell to a world point; BoundsError if the point lies outside the
/// grid extent.
GridIndex nearest_cell(const DemGrid& grid, WorldPoint p);

/// Supercover rasterization: every cell a segment passes through, including
/// both side cells at exact corner crossings, deduplicated preserving order.
/// BoundsError names the index of any point outside the grid extent.
std::vector<GridIndex> rasterize_polyline(std::span<const WorldPoint> points,
                                          const DemGrid& grid);

/// max(|dc|,|dr|) + (sqrt(2)-1) * min(|dc|,|dr|), in cells.
double octile_distance(GridIndex a, GridIndex b);

/// Polyline length through cell centers, meters.
double route_geometric_length(std::span<const GridIndex> cells, double cellsize);

/// Recomputes a route's cost over a cost field (or geometry when null);
/// used by tests and the grade verification pass.
double route_cost(const DemGrid& grid, const Raster* cost_field,
                  std::span<const GridIndex> cells);

} // namespace railpred
