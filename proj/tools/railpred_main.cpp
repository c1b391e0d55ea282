// railpred: terrain-aware railway route prediction over elevation grids.
// Subcommands: synth, slope, predict, train, costmap, eval.
// Exit codes: 0 success, 2 usage/I-O/format, 3 no path, 4 model format.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "railpred/costmodel.hpp"
#include "railpred/errors.hpp"
#include "railpred/eval.hpp"
#include "railpred/geojson.hpp"
#include "railpred/irl.hpp"
#include "railpred/nav.hpp"
#include "railpred/terrain.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoPath = 3;
constexpr int kExitModelFormat = 4;

struct CliError {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{kExitUsage, "cannot open '" + path + "' for reading"};
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw CliError{kExitUsage, "read error on '" + path + "'"};
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError{kExitUsage, "cannot open '" + path + "' for writing"};
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw CliError{kExitUsage, "write error on '" + path + "'"};
}

void require_distinct(const std::vector<std::string>& inputs, const std::string& output) {
    for (const auto& in : inputs) {
        if (!in.empty() && in == output)
            throw CliError{kExitUsage, "output path '" + output + "' also named as an input"};
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

railpred::DemGrid load_dem(const std::string& path) {
    try {
        return railpred::load_asc(read_file(path));
    } catch (const railpred::FormatError& e) {
        throw CliError{kExitUsage, path + ": " + e.what()};
    }
}

railpred::ModelParams load_model_file(const std::string& path) {
    try {
        return railpred::load_model(read_file(path));
    } catch (const railpred::FormatError& e) {
        throw CliError{kExitModelFormat, path + ": " + e.what()};
    }
}

// Endpoints are either world meters "x,y" (snapped to the nearest cell
// center) or explicit "cell:col,row".
railpred::GridIndex parse_endpoint(const std::string& text, const railpred::DemGrid& grid) {
    std::string body = text;
    bool as_cell = false;
    if (body.rfind("cell:", 0) == 0) {
        as_cell = true;
        body = body.substr(5);
    }
    const auto comma = body.find(',');
    if (comma == std::string::npos)
        throw CliError{kExitUsage, "endpoint '" + text + "' must be 'x,y' or 'cell:col,row'"};
    try {
        const double a = std::stod(body.substr(0, comma));
        const double b = std::stod(body.substr(comma + 1));
        if (as_cell) {
            const railpred::GridIndex cell{static_cast<int>(a), static_cast<int>(b)};
            if (!grid.in_bounds(cell))
                throw CliError{kExitUsage, "endpoint cell (" + body + ") outside grid"};
            return cell;
        }
        return railpred::nearest_cell(grid, railpred::WorldPoint{a, b});
    } catch (const railpred::BoundsError& e) {
        throw CliError{kExitUsage, e.what()};
    } catch (const std::invalid_argument&) {
        throw CliError{kExitUsage, "endpoint '" + text + "' must be numeric"};
    } catch (const std::out_of_range&) {
        throw CliError{kExitUsage, "endpoint '" + text + "' must be numeric"};
    }
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct NavFlags {
    double max_grade = 0.022;
    std::string preset;
    int track_halfwidth = 0;

    railpred::NavConfig config() const {
        railpred::NavConfig cfg;
        cfg.max_grade = preset == "mainline" ? railpred::kMainlineMaxGrade : max_grade;
        cfg.track_halfwidth = track_halfwidth;
        return cfg;
    }
};

void add_nav_flags(CLI::App* cmd, NavFlags& flags) {
    auto* grade = cmd->add_option("--max-grade", flags.max_grade,
                                  "Maximum traversable grade, rise over run (default 0.022)");
    cmd->add_option("--preset", flags.preset, "Named grade preset: 'mainline' (1%)")
        ->check(CLI::IsMember({"mainline"}))
        ->excludes(grade);
    cmd->add_option("--track-halfwidth", flags.track_halfwidth,
                    "Track width inflation radius in cells (Chebyshev erosion)")
        ->check(CLI::NonNegativeNumber);
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& scenario, int size, double cellsize, std::uint64_t seed,
              double ramp_grade, const std::string& out) {
    railpred::Scenario sc;
    try {
        sc = railpred::parse_scenario(scenario);
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitUsage, std::string(e.what()) +
                                       "\nusage: railpred synth --scenario "
                                       "flat|ramp|ridge|valley|hills --size N --cellsize M "
                                       "--seed K --out FILE"};
    }
    railpred::DemGrid grid;
    try {
        grid = railpred::synth_terrain(sc, size, cellsize, seed, ramp_grade);
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitUsage, e.what()};
    }
    const std::string doc = railpred::save_asc(grid);
    write_file(out, doc);
    std::cout << "checksum " << hex64(fnv1a64(doc)) << "\n";
    return kExitOk;
}

int cmd_slope(const std::string& dem_path, const std::string& out) {
    require_distinct({dem_path}, out);
    const railpred::DemGrid dem = load_dem(dem_path);
    const railpred::Raster grad = railpred::gradient_field(dem);
    railpred::DemGrid slope = dem;
    slope.values = grad.values;
    write_file(out, railpred::save_asc(slope));
    return kExitOk;
}

int cmd_predict(const std::string& mode, const std::string& dem_path,
                const std::string& start_text, const std::string& end_text,
                const std::string& extend_from, double distance, const NavFlags& nav,
                const std::string& model_path, double c_min, const std::string& out) {
    require_distinct({dem_path, extend_from, model_path}, out);
    const railpred::DemGrid dem = load_dem(dem_path);
    const railpred::NavConfig config = nav.config();
    const railpred::TraversabilityMask mask = railpred::traversability(dem, config);

    railpred::GridIndex start{}, goal{};
    if (!extend_from.empty()) {
        railpred::Route prefix;
        try {
            prefix = railpred::geojson_to_route(read_file(extend_from), dem);
        } catch (const railpred::FormatError& e) {
            throw CliError{kExitUsage, extend_from + ": " + e.what()};
        } catch (const railpred::BoundsError& e) {
            throw CliError{kExitUsage, extend_from + ": " + e.what()};
        }
        try {
            goal = railpred::extend_heading(prefix.cells, distance, dem);
        } catch (const railpred::BoundsError& e) {
            throw CliError{kExitUsage, e.what()};
        } catch (const std::invalid_argument& e) {
            throw CliError{kExitUsage, e.what()};
        }
        start = start_text.empty() ? prefix.cells.back() : parse_endpoint(start_text, dem);
    } else {
        if (start_text.empty() || end_text.empty())
            throw CliError{kExitUsage, "predict needs --start and --end (or --extend-from)"};
        start = parse_endpoint(start_text, dem);
        goal = parse_endpoint(end_text, dem);
    }

    if (!mask.at(start))
        throw CliError{kExitNoPath, "start cell (" + std::to_string(start.col) + "," +
                                        std::to_string(start.row) + ") is not traversable"};
    if (!mask.at(goal))
        throw CliError{kExitNoPath, "end cell (" + std::to_string(goal.col) + "," +
                                        std::to_string(goal.row) + ") is not traversable"};

    std::optional<railpred::Route> route;
    if (mode == "geometric") {
        route = railpred::astar(dem, mask, nullptr, start, goal, config);
    } else { // irl
        if (model_path.empty())
            throw CliError{kExitUsage, "predict --mode irl needs --model"};
        const railpred::ModelParams params = load_model_file(model_path);
        const railpred::TerrainFeatures feats = railpred::features(dem);
        const railpred::CostForward fwd = railpred::cost_forward(params, feats, c_min);
        route = railpred::astar(dem, mask, &fwd.cost.values, start, goal, config);
    }
    if (!route) {
        throw CliError{kExitNoPath,
                       "no traversable path from (" + std::to_string(start.col) + "," +
                           std::to_string(start.row) + ") to (" + std::to_string(goal.col) +
                           "," + std::to_string(goal.row) + ") at max grade " +
                           format_double(config.max_grade)};
    }
    write_file(out, railpred::route_to_geojson(*route, dem));
    std::cout << "total_cost " << format_double(route->total_cost) << "\n";
    return kExitOk;
}

int cmd_train(const std::vector<std::string>& dem_paths,
              const std::vector<std::string>& route_paths, const railpred::TrainConfig& base,
              const NavFlags& nav, bool no_grade_mask, const std::string& out_model,
              const std::string& out_log) {
    if (dem_paths.size() != route_paths.size() || dem_paths.empty())
        throw CliError{kExitUsage, "train needs matching --dem/--route pairs"};
    std::vector<std::string> inputs = dem_paths;
    inputs.insert(inputs.end(), route_paths.begin(), route_paths.end());
    require_distinct(inputs, out_model);
    if (!out_log.empty()) require_distinct(inputs, out_log);

    railpred::TrainConfig config = base;
    config.nav = nav.config();
    config.apply_grade_mask = !no_grade_mask;

    std::vector<railpred::Demonstration> demos;
    for (std::size_t i = 0; i < dem_paths.size(); ++i) {
        railpred::DemGrid dem = load_dem(dem_paths[i]);
        try {
            const railpred::LoadedPolyline poly =
                railpred::geojson_to_polyline(read_file(route_paths[i]));
            std::vector<railpred::GridIndex> cells =
                railpred::rasterize_polyline(poly.points, dem);
            demos.push_back(railpred::make_demonstration(std::move(dem), std::move(cells)));
        } catch (const railpred::FormatError& e) {
            throw CliError{kExitUsage, route_paths[i] + ": " + e.what()};
        } catch (const railpred::BoundsError& e) {
            throw CliError{kExitUsage, route_paths[i] + ": " + e.what()};
        } catch (const std::invalid_argument& e) {
            throw CliError{kExitUsage, route_paths[i] + ": " + e.what()};
        }
    }

    railpred::TrainResult result;
    try {
        result = railpred::train(demos, config);
    } catch (const railpred::TrainingError& e) {
        throw CliError{kExitNoPath, e.what()};
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitUsage, e.what()};
    }

    write_file(out_model, railpred::save_model(result.params));
    if (!out_log.empty()) {
        std::string csv = "epoch,mean_deviation_cells,path_cost\n";
        for (const auto& row : result.log) {
            csv += std::to_string(row.epoch) + "," +
                   format_double(row.mean_deviation_cells) + "," +
                   format_double(row.path_cost) + "\n";
        }
        write_file(out_log, csv);
    }
    if (!result.log.empty()) {
        std::cout << "final_mean_deviation_cells "
                  << format_double(result.log.back().mean_deviation_cells) << "\n";
    }
    return kExitOk;
}

int cmd_costmap(const std::string& dem_path, const std::string& model_path, double c_min,
                const std::string& out) {
    require_distinct({dem_path, model_path}, out);
    const railpred::DemGrid dem = load_dem(dem_path);
    const railpred::ModelParams params = load_model_file(model_path);
    const railpred::TerrainFeatures feats = railpred::features(dem);
    const railpred::CostForward fwd = railpred::cost_forward(params, feats, c_min);

    railpred::DemGrid out_grid = dem;
    out_grid.values = fwd.cost.values.values;
    for (std::size_t i = 0; i < dem.values.size(); ++i) {
        if (dem.values[i] == dem.nodata) out_grid.values[i] = dem.nodata;
    }
    write_file(out, railpred::save_asc(out_grid));
    return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path,
             const std::string& dem_path, double radius) {
    const railpred::DemGrid dem = load_dem(dem_path);
    railpred::Route pred, truth;
    try {
        pred = railpred::geojson_to_route(read_file(pred_path), dem);
        truth = railpred::geojson_to_route(read_file(truth_path), dem);
    } catch (const railpred::FormatError& e) {
        throw CliError{kExitUsage, e.what()};
    } catch (const railpred::BoundsError& e) {
        throw CliError{kExitUsage, e.what()};
    }
    try {
        const railpred::PathMetrics metrics =
            railpred::path_metrics(pred.cells, truth.cells, dem.cellsize, radius);
        const railpred::Corridor corr =
            railpred::corridor(pred.cells, dem.ncols, dem.nrows, dem.cellsize, radius);
        std::cout << railpred::report(metrics, corr) << "\n";
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitUsage, e.what()};
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Terrain-aware railway route prediction"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate deterministic synthetic terrain");
    std::string synth_scenario, synth_out;
    int synth_size = 128;
    double synth_cellsize = 60.0, synth_ramp_grade = 0.05;
    std::uint64_t synth_seed = 0;
    synth->add_option("--scenario", synth_scenario, "flat|ramp|ridge|valley|hills")
        ->required();
    synth->add_option("--size", synth_size, "Tile side in cells (>= 16)");
    synth->add_option("--cellsize", synth_cellsize, "Cell size in meters (default 60)");
    synth->add_option("--seed", synth_seed, "Deterministic seed");
    synth->add_option("--ramp-grade", synth_ramp_grade, "Incline for the ramp scenario");
    synth->add_option("--out,-o", synth_out, "Output ASC path")->required();

    // slope
    auto* slope = app.add_subcommand("slope", "Write the gradient-magnitude raster as ASC");
    std::string slope_dem, slope_out;
    slope->add_option("--dem", slope_dem, "Input ASC grid")->required();
    slope->add_option("--out,-o", slope_out, "Output ASC path")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "Predict a route over a DEM");
    std::string predict_mode = "geometric", predict_dem, predict_start, predict_end,
                predict_extend, predict_model, predict_out;
    double predict_distance = 10000.0, predict_cmin = railpred::kDefaultCostFloor;
    NavFlags predict_nav;
    predict->add_option("--mode", predict_mode, "geometric|irl")
        ->check(CLI::IsMember({"geometric", "irl"}));
    predict->add_option("--dem", predict_dem, "Input ASC grid")->required();
    predict->add_option("--start", predict_start, "Start: 'x,y' meters or 'cell:col,row'");
    predict->add_option("--end", predict_end, "End: 'x,y' meters or 'cell:col,row'");
    predict->add_option("--extend-from", predict_extend,
                        "Route GeoJSON whose heading chooses the end point");
    predict->add_option("--distance", predict_distance,
                        "Extension distance in meters (default 10000)");
    add_nav_flags(predict, predict_nav);
    predict->add_option("--model", predict_model, "Model file for --mode irl");
    predict->add_option("--c-min", predict_cmin, "Cost floor for --mode irl");
    predict->add_option("--out,-o", predict_out, "Output GeoJSON path")->required();

    // train
    auto* train = app.add_subcommand("train", "Learn a cost model from demonstrations");
    std::vector<std::string> train_dems, train_routes;
    std::string train_out, train_log;
    railpred::TrainConfig train_config;
    NavFlags train_nav;
    bool train_no_grade_mask = false;
    train->add_option("--dem", train_dems, "Demonstration ASC grid (repeatable)")->required();
    train->add_option("--route", train_routes, "Demonstration route GeoJSON (repeatable)")
        ->required();
    train->add_option("--epochs", train_config.max_epochs, "Maximum epochs (default 200)");
    train->add_option("--lr", train_config.lr, "Learning rate (default 1e-3)");
    train->add_option("--tolerance", train_config.tolerance_cells,
                      "Convergence tolerance, mean deviation in cells (default 2)");
    train->add_option("--seed", train_config.seed, "Initialization seed");
    train->add_option("--c-min", train_config.c_min, "Cost floor (default 1e-3)");
    add_nav_flags(train, train_nav);
    train->add_flag("--no-grade-mask", train_no_grade_mask,
                    "Do not grade-mask the policy step");
    train->add_option("--out,-o", train_out, "Output model path")->required();
    train->add_option("--log", train_log, "Per-epoch CSV log path");

    // costmap
    auto* costmap = app.add_subcommand("costmap", "Dump a learned cost map as ASC");
    std::string costmap_dem, costmap_model, costmap_out;
    double costmap_cmin = railpred::kDefaultCostFloor;
    costmap->add_option("--dem", costmap_dem, "Input ASC grid")->required();
    costmap->add_option("--model", costmap_model, "Model file")->required();
    costmap->add_option("--c-min", costmap_cmin, "Cost floor (default 1e-3)");
    costmap->add_option("--out,-o", costmap_out, "Output ASC path")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Compare a prediction against ground truth");
    std::string eval_pred, eval_truth, eval_dem;
    double eval_radius = 2000.0;
    eval->add_option("--pred", eval_pred, "Predicted route GeoJSON")->required();
    eval->add_option("--truth", eval_truth, "Ground-truth route GeoJSON")->required();
    eval->add_option("--dem", eval_dem, "Grid frame ASC")->required();
    eval->add_option("--radius", eval_radius, "Corridor radius in meters (default 2000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_scenario, synth_size, synth_cellsize, synth_seed,
                             synth_ramp_grade, synth_out);
        if (slope->parsed()) return cmd_slope(slope_dem, slope_out);
        if (predict->parsed())
            return cmd_predict(predict_mode, predict_dem, predict_start, predict_end,
                               predict_extend, predict_distance, predict_nav, predict_model,
                               predict_cmin, predict_out);
        if (train->parsed())
            return cmd_train(train_dems, train_routes, train_config, train_nav,
                             train_no_grade_mask, train_out, train_log);
        if (costmap->parsed())
            return cmd_costmap(costmap_dem, costmap_model, costmap_cmin, costmap_out);
        if (eval->parsed()) return cmd_eval(eval_pred, eval_truth, eval_dem, eval_radius);
    } catch (const CliError& e) {
        std::cerr << "railpred: " << e.message << "\n";
        return e.code;
    } catch (const railpred::FormatError& e) {
        std::cerr << "railpred: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "railpred: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
