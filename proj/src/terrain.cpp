#include "railpred/terrain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "railpred/errors.hpp"
#include "railpred/rng.hpp"

namespace railpred {

namespace {

constexpr double kZScoreFloor = 1e-9;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0; // 1-based, of the line last returned

    // Returns the next line without the terminator, or false at end.
    bool next(std::string_view& out) {
        if (pos >= text.size()) return false;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        out = text.substr(pos, eol - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = eol + 1;
        ++line_no;
        return true;
    }
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool ieq(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

double parse_number(std::string_view token, std::size_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": not a number: '" +
                              std::string(token) + "'",
                          line_no);
    }
    return v;
}

// Reads one `<key> <value>` header line, key matched case-insensitively.
double header_value(LineCursor& cur, std::string_view key) {
    std::string_view line;
    while (cur.next(line)) {
        auto tokens = split_ws(line);
        if (tokens.empty()) continue; // tolerate blank lines between headers
        if (tokens.size() != 2 || !ieq(tokens[0], key)) {
            throw FormatError("line " + std::to_string(cur.line_no) + ": expected '" +
                                  std::string(key) + " <value>'",
                              cur.line_no);
        }
        return parse_number(tokens[1], cur.line_no);
    }
    throw FormatError("unexpected end of document, missing header '" + std::string(key) + "'",
                      cur.line_no);
}

} // namespace

DemGrid load_asc(std::string_view text) {
    LineCursor cur{text};
    DemGrid g;

    const double ncols_v = header_value(cur, "ncols");
    const double nrows_v = header_value(cur, "nrows");
    g.ncols = static_cast<int>(ncols_v);
    g.nrows = static_cast<int>(nrows_v);
    if (g.ncols < 2 || g.nrows < 2 || ncols_v != g.ncols || nrows_v != g.nrows) {
        throw FormatError("line " + std::to_string(cur.line_no) +
                              ": ncols and nrows must be integers >= 2",
                          cur.line_no);
    }
    g.xllcorner = header_value(cur, "xllcorner");
    g.yllcorner = header_value(cur, "yllcorner");
    g.cellsize = header_value(cur, "cellsize");
    if (!(g.cellsize > 0.0)) {
        throw FormatError("line " + std::to_string(cur.line_no) + ": cellsize must be > 0",
                          cur.line_no);
    }

    g.values.reserve(static_cast<std::size_t>(g.ncols) * g.nrows);
    int rows_read = 0;
    bool saw_nodata_key = false;
    std::string_view line;
    while (cur.next(line)) {
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (!saw_nodata_key && rows_read == 0 && ieq(tokens[0], "NODATA_value")) {
            if (tokens.size() != 2) {
                throw FormatError("line " + std::to_string(cur.line_no) +
                                      ": expected 'NODATA_value <value>'",
                                  cur.line_no);
            }
            g.nodata = parse_number(tokens[1], cur.line_no);
            saw_nodata_key = true;
            continue;
        }
        if (rows_read == g.nrows) {
            throw FormatError("line " + std::to_string(cur.line_no) +
                                  ": extra data after final row",
                              cur.line_no);
        }
        if (static_cast<int>(tokens.size()) != g.ncols) {
            throw FormatError("line " + std::to_string(cur.line_no) + ": expected " +
                                  std::to_string(g.ncols) + " values, got " +
                                  std::to_string(tokens.size()),
                              cur.line_no);
        }
        for (auto t : tokens) {
            const double v = parse_number(t, cur.line_no);
            if (!std::isfinite(v) && v != g.nodata) {
                throw FormatError("line " + std::to_string(cur.line_no) +
                                      ": non-finite elevation",
                                  cur.line_no);
            }
            g.values.push_back(v);
        }
        ++rows_read;
    }
    if (rows_read != g.nrows) {
        throw FormatError("line " + std::to_string(cur.line_no + 1) + ": expected " +
                              std::to_string(g.nrows) + " rows, got " +
                              std::to_string(rows_read),
                          cur.line_no + 1);
    }
    return g;
}

std::string save_asc(const DemGrid& grid) {
    std::string out;
    out.reserve(grid.values.size() * 8 + 128);
    out += "ncols " + std::to_string(grid.ncols) + "\n";
    out += "nrows " + std::to_string(grid.nrows) + "\n";
    out += "xllcorner " + format_double(grid.xllcorner) + "\n";
    out += "yllcorner " + format_double(grid.yllcorner) + "\n";
    out += "cellsize " + format_double(grid.cellsize) + "\n";
    out += "NODATA_value " + format_double(grid.nodata) + "\n";
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            if (col) out += ' ';
            out += format_double(grid.at(col, row));
        }
        out += '\n';
    }
    return out;
}

Raster gradient_field(const DemGrid& grid) {
    Raster out(grid.ncols, grid.nrows);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            if (grid.is_nodata(col, row)) {
                out.at(col, row) = grid.nodata;
                continue;
            }
            const double zc = grid.at(col, row);
            // Central difference when both neighbors carry data, one-sided
            // otherwise (borders and nodata neighbors behave alike).
            auto derivative = [&](int dc, int dr) {
                const bool has_lo =
                    grid.in_bounds(col - dc, row - dr) && !grid.is_nodata(col - dc, row - dr);
                const bool has_hi =
                    grid.in_bounds(col + dc, row + dr) && !grid.is_nodata(col + dc, row + dr);
                if (has_lo && has_hi) {
                    return (grid.at(col + dc, row + dr) - grid.at(col - dc, row - dr)) /
                           (2.0 * grid.cellsize);
                }
                if (has_hi) return (grid.at(col + dc, row + dr) - zc) / grid.cellsize;
                if (has_lo) return (zc - grid.at(col - dc, row - dr)) / grid.cellsize;
                return 0.0;
            };
            const double dzdx = derivative(1, 0);
            const double dzdy = derivative(0, 1);
            out.at(col, row) = std::sqrt(dzdx * dzdx + dzdy * dzdy);
        }
    }
    return out;
}

namespace {

// Mean/population-std over finite (non-nodata) cells.
struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

Moments finite_moments(const std::vector<double>& values, const DemGrid& grid) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (grid.values[i] == grid.nodata) continue;
        sum += values[i];
        ++n;
    }
    Moments m;
    if (n == 0) return m;
    m.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (grid.values[i] == grid.nodata) continue;
        const double d = values[i] - m.mean;
        ss += d * d;
    }
    m.stddev = std::sqrt(ss / static_cast<double>(n));
    return m;
}

} // namespace

TerrainFeatures features(const DemGrid& grid) {
    TerrainFeatures f;
    f.channels = Tensor(3, grid.nrows, grid.ncols);

    const Moments zm = finite_moments(grid.values, grid);
    const double zscale = std::max(zm.stddev, kZScoreFloor);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            f.channels.at(0, row, col) =
                grid.is_nodata(col, row) ? 0.0 : (grid.at(col, row) - zm.mean) / zscale;
        }
    }

    const Raster grad = gradient_field(grid);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            f.channels.at(1, row, col) = grid.is_nodata(col, row) ? 0.0 : grad.at(col, row);
        }
    }

    // Roughness: std of elevation over the 3x3 window of finite cells.
    std::vector<double> rough(grid.values.size(), 0.0);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            if (grid.is_nodata(col, row)) continue;
            double sum = 0.0, ss = 0.0;
            int n = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!grid.in_bounds(col + dc, row + dr)) continue;
                    if (grid.is_nodata(col + dc, row + dr)) continue;
                    const double z = grid.at(col + dc, row + dr);
                    sum += z;
                    ss += z * z;
                    ++n;
                }
            }
            const double mean = sum / n;
            rough[grid.index(col, row)] = std::sqrt(std::max(0.0, ss / n - mean * mean));
        }
    }
    const Moments rm = finite_moments(rough, grid);
    const double rscale = std::max(rm.stddev, kZScoreFloor);
    for (int row = 0; row < grid.nrows; ++row) {
        for (int col = 0; col < grid.ncols; ++col) {
            f.channels.at(2, row, col) =
                grid.is_nodata(col, row)
                    ? 0.0
                    : (rough[grid.index(col, row)] - rm.mean) / rscale;
        }
    }
    return f;
}

Scenario parse_scenario(std::string_view name) {
    if (name == "flat") return Scenario::flat;
    if (name == "ramp") return Scenario::ramp;
    if (name == "ridge") return Scenario::ridge;
    if (name == "valley") return Scenario::valley;
    if (name == "hills") return Scenario::hills;
    throw std::invalid_argument("unknown scenario '" + std::string(name) +
                                "' (expected flat|ramp|ridge|valley|hills)");
}

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::flat: return "flat";
        case Scenario::ramp: return "ramp";
        case Scenario::ridge: return "ridge";
        case Scenario::valley: return "valley";
        case Scenario::hills: return "hills";
    }
    return "?";
}

DemGrid synth_terrain(Scenario scenario, int size, double cellsize, std::uint64_t seed,
                      double ramp_grade) {
    if (size < 16) throw std::invalid_argument("synth size must be >= 16");
    if (!(cellsize > 0.0)) throw std::invalid_argument("cellsize must be > 0");

    DemGrid g;
    g.ncols = size;
    g.nrows = size;
    g.cellsize = cellsize;
    g.values.assign(static_cast<std::size_t>(size) * size, 0.0);

    constexpr double base = 100.0;
    // Peak |f'| of a unit Gaussian bump exp(-d^2/(2 s^2)) is exp(-1/2)/s.
    constexpr double gauss_peak_slope = 0.60653065971263342;

    switch (scenario) {
        case Scenario::flat: {
            std::fill(g.values.begin(), g.values.end(), base);
            break;
        }
        case Scenario::ramp: {
            for (int row = 0; row < size; ++row)
                for (int col = 0; col < size; ++col)
                    g.at(col, row) = base + ramp_grade * col * cellsize;
            break;
        }
        case Scenario::ridge: {
            // North-south ridge at the center column. Amplitude tapers to
            // zero toward the north edge (row 0), leaving a low pass there;
            // mid-tile flank grades reach ~7.5%, far over both rail limits.
            const double sigma = size / 16.0 * cellsize;
            const double amp = 0.075 * sigma / gauss_peak_slope;
            const double crest_x = (size / 2) * cellsize;
            for (int row = 0; row < size; ++row) {
                const double taper = static_cast<double>(row) / (size - 1);
                for (int col = 0; col < size; ++col) {
                    const double d = col * cellsize - crest_x;
                    g.at(col, row) = base + amp * taper * std::exp(-d * d / (2 * sigma * sigma));
                }
            }
            break;
        }
        case Scenario::valley: {
            // Gaussian trench along a sine arc bowing south; flank grades
            // stay under ~1.4%, so the whole tile is traversable at 2.2%.
            const double sigma = size / 12.8 * cellsize;
            const double depth = 0.012 * sigma / gauss_peak_slope;
            const double bow = 0.1875 * size;
            constexpr double pi = 3.141592653589793238462643383279502884;
            for (int col = 0; col < size; ++col) {
                const double center_row =
                    (size - 1) / 2.0 + bow * std::sin(pi * col / (size - 1));
                for (int row = 0; row < size; ++row) {
                    const double d = (row - center_row) * cellsize;
                    g.at(col, row) = base - depth * std::exp(-d * d / (2 * sigma * sigma));
                }
            }
            break;
        }
        case Scenario::hills: {
            SplitMix64 rng(seed);
            const int bumps = std::max(6, size * size / 2048);
            for (int b = 0; b < bumps; ++b) {
                const double cx = rng.uniform(0.0, size - 1.0) * cellsize;
                const double cy = rng.uniform(0.0, size - 1.0) * cellsize;
                const double s = rng.uniform(size / 16.0, size / 8.0) * cellsize;
                const double a = rng.uniform(-25.0, 25.0);
                for (int row = 0; row < size; ++row) {
                    for (int col = 0; col < size; ++col) {
                        const double dx = col * cellsize - cx;
                        const double dy = row * cellsize - cy;
                        g.at(col, row) += a * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
                    }
                }
            }
            for (auto& v : g.values) v += base;
            break;
        }
    }
    return g;
}

} // namespace railpred
