#include "railpred/nav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "railpred/errors.hpp"

namespace railpred {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed neighbor order: N, NE, E, SE, S, SW, W, NW.
constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

double cell_cost(const Raster* cost_field, int col, int row) {
    return cost_field ? cost_field->at(col, row) : 1.0;
}

double edge_cost(const Raster* cost_field, double cellsize, int c0, int r0, int c1, int r1) {
    const double len = (c0 != c1 && r0 != r1) ? kSqrt2 : 1.0;
    return len * cellsize * 0.5 * (cell_cost(cost_field, c0, r0) + cell_cost(cost_field, c1, r1));
}

bool edge_grade_ok(const DemGrid& grid, double max_grade, int c0, int r0, int c1, int r1) {
    const double run = ((c0 != c1 && r0 != r1) ? kSqrt2 : 1.0) * grid.cellsize;
    return std::abs(grid.at(c1, r1) - grid.at(c0, r0)) / run <= max_grade;
}

void check_search_preconditions(const DemGrid& grid, const TraversabilityMask& mask,
                                const Raster* cost_field, GridIndex start, GridIndex goal) {
    if (mask.ncols != grid.ncols || mask.nrows != grid.nrows)
        throw ShapeError("search: mask dimensions do not match grid");
    if (cost_field && (cost_field->ncols != grid.ncols || cost_field->nrows != grid.nrows))
        throw ShapeError("search: cost field dimensions do not match grid");
    if (!grid.in_bounds(start) || !grid.in_bounds(goal))
        throw std::invalid_argument("search: start or goal outside grid");
    if (!mask.at(start))
        throw std::invalid_argument("search: start cell is not traversable");
    if (!mask.at(goal))
        throw std::invalid_argument("search: goal cell is not traversable");
}

// Minimum cost over traversable cells; also validates positivity.
double min_traversable_cost(const TraversabilityMask& mask, const Raster* cost_field) {
    if (!cost_field) return 1.0;
    double lo = kInf;
    for (int row = 0; row < mask.nrows; ++row) {
        for (int col = 0; col < mask.ncols; ++col) {
            if (!mask.at(col, row)) continue;
            const double c = cost_field->at(col, row);
            if (!(c > 0.0))
                throw std::invalid_argument("search: cost field must be positive on "
                                            "traversable cells");
            lo = std::min(lo, c);
        }
    }
    return lo;
}

Route trace_route(const std::vector<int>& parent, const DemGrid& grid, int goal_idx,
                  double goal_g) {
    Route route;
    route.total_cost = goal_g;
    for (int at = goal_idx; at != -1; at = parent[at]) {
        route.cells.push_back(GridIndex{at % grid.ncols, at / grid.ncols});
    }
    std::reverse(route.cells.begin(), route.cells.end());
    return route;
}

struct PqEntry {
    double f;
    int row;
    int col;
    int idx;
    // Min-heap on f, ties toward smaller (row, col).
    bool operator>(const PqEntry& o) const {
        if (f != o.f) return f > o.f;
        if (row != o.row) return row > o.row;
        return col > o.col;
    }
};

} // namespace

TraversabilityMask traversability(const DemGrid& grid, const NavConfig& config) {
    const Raster grad = gradient_field(grid);
    TraversabilityMask base(grid.ncols, grid.nrows);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            base.set(col, row,
                     !grid.is_nodata(col, row) && grad.at(col, row) <= config.max_grade);
        }
    }
    if (config.track_halfwidth <= 0) return base;

    const int r = config.track_halfwidth;
    TraversabilityMask eroded(grid.ncols, grid.nrows);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            bool ok = base.at(col, row);
            for (int dr = -r; ok && dr <= r; ++dr) {
                for (int dc = -r; ok && dc <= r; ++dc) {
                    if (!grid.in_bounds(col + dc, row + dr)) continue; // clipped at borders
                    ok = base.at(col + dc, row + dr);
                }
            }
            eroded.set(col, row, ok);
        }
    }
    return eroded;
}

std::optional<Route> astar(const DemGrid& grid, const TraversabilityMask& mask,
                           const Raster* cost_field, GridIndex start, GridIndex goal,
                           const NavConfig& config) {
    check_search_preconditions(grid, mask, cost_field, start, goal);
    const double h_scale = grid.cellsize * min_traversable_cost(mask, cost_field);
    const std::size_t n = grid.values.size();

    std::vector<double> g(n, kInf);
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    std::priority_queue<PqEntry, std::vector<PqEntry>, std::greater<PqEntry>> open;

    auto heuristic = [&](int col, int row) {
        return octile_distance(GridIndex{col, row}, goal) * h_scale;
    };

    const int start_idx = static_cast<int>(grid.index(start.col, start.row));
    const int goal_idx = static_cast<int>(grid.index(goal.col, goal.row));
    g[start_idx] = 0.0;
    open.push(PqEntry{heuristic(start.col, start.row), start.row, start.col, start_idx});

    while (!open.empty()) {
        const PqEntry top = open.top();
        open.pop();
        if (closed[top.idx]) continue;
        closed[top.idx] = 1;
        if (top.idx == goal_idx) return trace_route(parent, grid, goal_idx, g[goal_idx]);

        const int col = top.col, row = top.row;
        for (int dir = 0; dir < 8; ++dir) {
            const int nc = col + kDc[dir], nr = row + kDr[dir];
            if (!grid.in_bounds(nc, nr) || !mask.at(nc, nr)) continue;
            if (!edge_grade_ok(grid, config.max_grade, col, row, nc, nr)) continue;
            const int nidx = static_cast<int>(grid.index(nc, nr));
            if (closed[nidx]) continue;
            const double ng = g[top.idx] + edge_cost(cost_field, grid.cellsize, col, row, nc, nr);
            if (ng < g[nidx]) {
                g[nidx] = ng;
                parent[nidx] = top.idx;
                open.push(PqEntry{ng + heuristic(nc, nr), nr, nc, nidx});
            }
        }
    }
    return std::nullopt;
}

std::optional<Route> dijkstra_oracle(const DemGrid& grid, const TraversabilityMask& mask,
                                     const Raster* cost_field, GridIndex start, GridIndex goal,
                                     const NavConfig& config) {
    check_search_preconditions(grid, mask, cost_field, start, goal);
    min_traversable_cost(mask, cost_field); // positivity check only
    const std::size_t n = grid.values.size();

    std::vector<double> dist(n, kInf);
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> settled(n, 0);

    const int start_idx = static_cast<int>(grid.index(start.col, start.row));
    const int goal_idx = static_cast<int>(grid.index(goal.col, goal.row));
    dist[start_idx] = 0.0;

    // Plain label-setting over the whole grid: scan for the unsettled node
    // of least distance (smallest index on ties), settle, relax.
    for (;;) {
        int best = -1;
        double best_d = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            if (!settled[i] && dist[i] < best_d) {
                best_d = dist[i];
                best = static_cast<int>(i);
            }
        }
        if (best == -1) return std::nullopt;
        settled[best] = 1;
        if (best == goal_idx) return trace_route(parent, grid, goal_idx, dist[goal_idx]);

        const int col = best % grid.ncols, row = best / grid.ncols;
        for (int dir = 0; dir < 8; ++dir) {
            const int nc = col + kDc[dir], nr = row + kDr[dir];
            if (!grid.in_bounds(nc, nr) || !mask.at(nc, nr)) continue;
            if (!edge_grade_ok(grid, config.max_grade, col, row, nc, nr)) continue;
            const std::size_t nidx = grid.index(nc, nr);
            if (settled[nidx]) continue;
            const double nd = dist[best] + edge_cost(cost_field, grid.cellsize, col, row, nc, nr);
            if (nd < dist[nidx]) {
                dist[nidx] = nd;
                parent[nidx] = best;
            }
        }
    }
}

GridIndex extend_heading(std::span<const GridIndex> route_prefix, double distance_m,
                         const DemGrid& grid) {
    if (route_prefix.size() < 2)
        throw std::invalid_argument("extend_heading: prefix needs at least 2 cells");
    const std::size_t window = std::min<std::size_t>(10, route_prefix.size());
    const GridIndex tail = route_prefix.back();
    const GridIndex head = route_prefix[route_prefix.size() - window];
    const WorldPoint a = cell_center(grid, head);
    const WorldPoint b = cell_center(grid, tail);
    const double hx = b.x - a.x, hy = b.y - a.y;
    const double norm = std::sqrt(hx * hx + hy * hy);
    if (norm == 0.0) throw std::invalid_argument("extend_heading: prefix has no heading");

    const WorldPoint target{b.x + hx / norm * distance_m, b.y + hy / norm * distance_m};
    // Snap to the nearest cell, rounding half away from zero.
    const double fc = (target.x - grid.xllcorner) / grid.cellsize - 0.5;
    const double fr = (grid.nrows - 0.5) - (target.y - grid.yllcorner) / grid.cellsize;
    const int col = static_cast<int>(std::round(fc));
    const int row = static_cast<int>(std::round(fr));
    if (!grid.in_bounds(col, row)) {
        const int cc = std::clamp(col, 0, grid.ncols - 1);
        const int cr = std::clamp(row, 0, grid.nrows - 1);
        throw BoundsError("extend_heading: extension leaves the grid at cell (" +
                          std::to_string(col) + "," + std::to_string(row) +
                          "), nearest boundary cell (" + std::to_string(cc) + "," +
                          std::to_string(cr) + ")");
    }
    return GridIndex{col, row};
}

WorldPoint cell_center(const DemGrid& grid, GridIndex cell) {
    return WorldPoint{grid.xllcorner + (cell.col + 0.5) * grid.cellsize,
                      grid.yllcorner + (grid.nrows - cell.row - 0.5) * grid.cellsize};
}

GridIndex nearest_cell(const DemGrid& grid, WorldPoint p) {
    const double u = (p.x - grid.xllcorner) / grid.cellsize;
    const double v = (p.y - grid.yllcorner) / grid.cellsize;
    if (u < 0.0 || u > grid.ncols || v < 0.0 || v > grid.nrows) {
        throw BoundsError("point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                          ") outside grid extent");
    }
    const int col = std::clamp(static_cast<int>(u), 0, grid.ncols - 1);
    const int row = std::clamp(grid.nrows - 1 - static_cast<int>(v), 0, grid.nrows - 1);
    return GridIndex{col, row};
}

std::vector<GridIndex> rasterize_polyline(std::span<const WorldPoint> points,
                                          const DemGrid& grid) {
    std::vector<GridIndex> out;
    if (points.empty()) return out;

    auto push = [&](int col, int row) {
        if (!grid.in_bounds(col, row)) return;
        const GridIndex cell{col, row};
        if (std::find(out.begin(), out.end(), cell) == out.end()) out.push_back(cell);
    };

    // Work in cell units with y growing along rows (south), matching indices.
    auto to_cell_units = [&](WorldPoint p, std::size_t point_idx) {
        const double u = (p.x - grid.xllcorner) / grid.cellsize;
        const double v = grid.nrows - (p.y - grid.yllcorner) / grid.cellsize;
        if (u < 0.0 || u > grid.ncols || v < 0.0 || v > grid.nrows) {
            throw BoundsError("polyline point " + std::to_string(point_idx) +
                              " outside grid extent");
        }
        return WorldPoint{u, v};
    };

    auto cell_of = [&](double u, double v) {
        return GridIndex{std::clamp(static_cast<int>(u), 0, grid.ncols - 1),
                         std::clamp(static_cast<int>(v), 0, grid.nrows - 1)};
    };

    const double eps = 1e-12;
    WorldPoint prev = to_cell_units(points[0], 0);
    push(cell_of(prev.x, prev.y).col, cell_of(prev.x, prev.y).row);

    for (std::size_t s = 1; s < points.size(); ++s) {
        const WorldPoint cur = to_cell_units(points[s], s);
        const double dx = cur.x - prev.x, dy = cur.y - prev.y;
        GridIndex c = cell_of(prev.x, prev.y);
        const GridIndex end = cell_of(cur.x, cur.y);
        const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;

        // Amanatides-Woo traversal; a corner hit (tx == ty) visits both
        // edge-adjacent cells, which is what makes this a supercover.
        double tx = kInf;
        if (dx != 0.0) {
            const double boundary = dx > 0 ? c.col + 1.0 : c.col;
            tx = (boundary - prev.x) / dx;
        }
        double ty = kInf;
        if (dy != 0.0) {
            const double boundary = dy > 0 ? c.row + 1.0 : c.row;
            ty = (boundary - prev.y) / dy;
        }
        const double tdx = dx != 0.0 ? std::abs(1.0 / dx) : kInf;
        const double tdy = dy != 0.0 ? std::abs(1.0 / dy) : kInf;

        int guard = 4 * (grid.ncols + grid.nrows);
        while (!(c == end) && guard-- > 0) {
            if (std::abs(tx - ty) <= eps && tx <= 1.0 + eps) {
                push(c.col + sx, c.row);
                push(c.col, c.row + sy);
                c = GridIndex{c.col + sx, c.row + sy};
                tx += tdx;
                ty += tdy;
            } else if (tx < ty) {
                if (tx > 1.0 + eps) break;
                c = GridIndex{c.col + sx, c.row};
                tx += tdx;
            } else {
                if (ty > 1.0 + eps) break;
                c = GridIndex{c.col, c.row + sy};
                ty += tdy;
            }
            if (!grid.in_bounds(c)) break;
            push(c.col, c.row);
        }
        push(end.col, end.row);
        prev = cur;
    }
    return out;
}

double octile_distance(GridIndex a, GridIndex b) {
    const double dc = std::abs(a.col - b.col);
    const double dr = std::abs(a.row - b.row);
    return std::max(dc, dr) + (kSqrt2 - 1.0) * std::min(dc, dr);
}

double route_geometric_length(std::span<const GridIndex> cells, double cellsize) {
    double len = 0.0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const bool diag =
            cells[i].col != cells[i - 1].col && cells[i].row != cells[i - 1].row;
        len += (diag ? kSqrt2 : 1.0) * cellsize;
    }
    return len;
}

double route_cost(const DemGrid& grid, const Raster* cost_field,
                  std::span<const GridIndex> cells) {
    double total = 0.0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        total += edge_cost(cost_field, grid.cellsize, cells[i - 1].col, cells[i - 1].row,
                           cells[i].col, cells[i].row);
    }
    return total;
}

} // namespace railpred
