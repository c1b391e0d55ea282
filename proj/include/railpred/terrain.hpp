#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "railpred/tensor.hpp"

namespace railpred {

struct GridIndex {
    int col = 0;
    int row = 0;
    bool operator==(const GridIndex&) const = default;
};

/// Rectangular elevation raster in a projected, uniform-cellsize frame,
/// meters everywhere. Row 0 is the northernmost row, matching the ASC
/// on-disk order.
struct DemGrid {
    int ncols = 0;
    int nrows = 0;
    double xllcorner = 0.0;
    double yllcorner = 0.0;
    double cellsize = 60.0;
    double nodata = -9999.0;
    std::vector<double> values; // row-major, length ncols*nrows

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * ncols + col;
    }
    double at(int col, int row) const { return values[index(col, row)]; }
    double& at(int col, int row) { return values[index(col, row)]; }
    double at(GridIndex i) const { return at(i.col, i.row); }

    bool in_bounds(int col, int row) const {
        return col >= 0 && col < ncols && row >= 0 && row < nrows;
    }
    bool in_bounds(GridIndex i) const { return in_bounds(i.col, i.row); }
    bool is_nodata(int col, int row) const { return at(col, row) == nodata; }
    bool is_nodata(GridIndex i) const { return is_nodata(i.col, i.row); }

    bool operator==(const DemGrid&) const = default;
};

/// Bare per-cell double raster sharing a grid's dimensions.
struct Raster {
    int ncols = 0;
    int nrows = 0;
    std::vector<double> values;

    Raster() = default;
    Raster(int cols, int rows, double fill = 0.0)
        : ncols(cols), nrows(rows),
          values(static_cast<std::size_t>(cols) * rows, fill) {}

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * ncols + col;
    }
    double at(int col, int row) const { return values[index(col, row)]; }
    double& at(int col, int row) { return values[index(col, row)]; }

    bool operator==(const Raster&) const = default;
};

/// Normalized per-cell input channels for the cost model:
/// 0 = z-scored elevation, 1 = gradient magnitude (rise/run),
/// 2 = z-scored 3x3 roughness. Nodata cells map to 0 in every channel.
struct TerrainFeatures {
    Tensor channels; // (3, nrows, ncols)
};

/// Parse an ESRI ASCII grid. Throws FormatError naming the offending
/// 1-based line on malformed headers, non-numeric cells, or wrong counts.
DemGrid load_asc(std::string_view text);

/// Emit an ESRI ASCII grid. Numbers are written in shortest round-trip
/// form, so load_asc(save_asc(g)) == g bit for bit.
std::string save_asc(const DemGrid& grid);

/// Per-cell gradient magnitude (dimensionless rise/run), central differences
/// with one-sided fallback at borders and next to nodata cells. Nodata cells
/// yield the nodata sentinel.
Raster gradient_field(const DemGrid& grid);

TerrainFeatures features(const DemGrid& grid);

enum class Scenario { flat, ramp, ridge, valley, hills };

/// Maps a scenario name to its enum; throws std::invalid_argument on an
/// unknown name (a usage error at the CLI boundary).
Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario s);

/// Deterministic synthetic terrain. flat = constant; ramp = west-east
/// incline of `ramp_grade`; ridge = Gaussian ridge across the tile with a
/// low pass near the north edge; valley = curved Gaussian valley; hills =
/// sum of seeded Gaussian bumps. Only hills consumes the seed.
DemGrid synth_terrain(Scenario scenario, int size, double cellsize,
                      std::uint64_t seed, double ramp_grade = 0.05);

} // namespace railpred
