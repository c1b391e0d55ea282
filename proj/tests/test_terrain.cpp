#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "railpred/errors.hpp"
#include "railpred/terrain.hpp"
#include "test_util.hpp"

using namespace railpred;

namespace {

const char* kTiny =
    "ncols 2\n"
    "nrows 2\n"
    "xllcorner 0\n"
    "yllcorner 0\n"
    "cellsize 60\n"
    "1 2\n"
    "3 4\n";

}

TEST_CASE("load_asc parses a 2x2 grid") {
    const DemGrid g = load_asc(kTiny);
    CHECK(g.ncols == 2);
    CHECK(g.nrows == 2);
    CHECK(g.cellsize == 60.0);
    CHECK(g.values == std::vector<double>{1, 2, 3, 4});
    CHECK(g.nodata == -9999.0); // default when the header line is absent
}

TEST_CASE("load_asc accepts NODATA_value and case-insensitive keys") {
    const DemGrid g = load_asc(
        "NCOLS 2\nNROWS 2\nXLLCORNER 10\nYLLCORNER 20\nCELLSIZE 30\nnodata_value -1\n"
        "1 -1\n3 4\n");
    CHECK(g.nodata == -1.0);
    CHECK(g.is_nodata(1, 0));
}

TEST_CASE("load_asc round trip is identity") {
    const DemGrid g = load_asc(kTiny);
    CHECK(load_asc(save_asc(g)) == g);
}

TEST_CASE("load_asc reports the first short row") {
    const char* doc =
        "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 60\n"
        "1 2 3\n"
        "4 5\n";
    CHECK_THROWS_WITH_AS(load_asc(doc), doctest::Contains("line 7"), FormatError);
    try {
        load_asc(doc);
    } catch (const FormatError& e) {
        CHECK(e.where() == 7);
    }
}

TEST_CASE("load_asc rejects malformed headers and cells") {
    CHECK_THROWS_WITH_AS(load_asc("ncol 2\n"), doctest::Contains("line 1"), FormatError);
    CHECK_THROWS_WITH_AS(
        load_asc("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 60\n1 2\n3 x\n"),
        doctest::Contains("line 7"), FormatError);
    CHECK_THROWS_AS(
        load_asc("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0\n1 2\n3 4\n"),
        FormatError);
    // missing final row
    CHECK_THROWS_AS(load_asc("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 60\n1 2\n"),
                    FormatError);
}

TEST_CASE("save_asc emits the exact nodata sentinel") {
    DemGrid g = load_asc(kTiny);
    g.nodata = -9999.0;
    g.values[2] = -9999.0;
    const std::string doc = save_asc(g);
    CHECK(doc.find("NODATA_value -9999") != std::string::npos);
    CHECK(load_asc(doc) == g);
}

TEST_CASE("round trip is bit exact on synthetic grids") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        DemGrid g = synth_terrain(Scenario::hills, 64, 60.0, seed);
        // nodata holes must survive the trip too
        SplitMix64 rng(seed);
        for (int k = 0; k < 16; ++k) {
            const int idx = static_cast<int>(rng.next() % g.values.size());
            g.values[idx] = g.nodata;
        }
        CHECK(load_asc(save_asc(g)) == g);
    }
    const DemGrid big = synth_terrain(Scenario::hills, 256, 60.0, 42);
    CHECK(load_asc(save_asc(big)) == big);
}

TEST_CASE("gradient of a flat grid is zero") {
    const Raster grad = gradient_field(testutil::flat_dem(16));
    for (double v : grad.values) CHECK(v == 0.0);
}

TEST_CASE("gradient of a linear plane equals its slope") {
    DemGrid g = testutil::flat_dem(16);
    for (int row = 0; row < 16; ++row)
        for (int col = 0; col < 16; ++col) g.at(col, row) = 0.01 * col * g.cellsize;
    const Raster grad = gradient_field(g);
    for (double v : grad.values) CHECK(v == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("gradient stencil matches the hand-evaluated 3x3 case") {
    DemGrid g;
    g.ncols = 3;
    g.nrows = 3;
    g.cellsize = 1.0;
    g.values = {0, 1, 2, 0, 1, 2, 0, 1, 2};
    const Raster grad = gradient_field(g);
    CHECK(grad.at(1, 1) == 1.0); // (2-0)/2 in x, 0 in y
}

TEST_CASE("gradient falls back to one-sided next to nodata") {
    DemGrid g;
    g.ncols = 4;
    g.nrows = 2;
    g.cellsize = 1.0;
    g.values = {0, 1, -9999, 0, 0, 1, -9999, 0};
    const Raster grad = gradient_field(g);
    CHECK(grad.at(2, 0) == g.nodata);
    // cell (1,0): right neighbor is nodata, left is 0 -> one-sided (1-0)/1
    CHECK(grad.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("features of a constant grid are all zero") {
    const TerrainFeatures f = features(testutil::flat_dem(16));
    for (double v : f.channels.data) CHECK(v == 0.0);
}

TEST_CASE("features channel 1 is the plane slope in the interior") {
    DemGrid g = testutil::flat_dem(16);
    for (int row = 0; row < 16; ++row)
        for (int col = 0; col < 16; ++col) g.at(col, row) = 0.01 * col * g.cellsize;
    const TerrainFeatures f = features(g);
    for (int row = 1; row < 15; ++row)
        for (int col = 1; col < 15; ++col)
            CHECK(f.channels.at(1, row, col) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("features channel 0 moments recomputed independently") {
    const DemGrid g = synth_terrain(Scenario::hills, 64, 60.0, 9);
    const TerrainFeatures f = features(g);
    double sum = 0.0;
    for (int row = 0; row < 64; ++row)
        for (int col = 0; col < 64; ++col) sum += f.channels.at(0, row, col);
    const double mean = sum / (64.0 * 64.0);
    double ss = 0.0;
    for (int row = 0; row < 64; ++row)
        for (int col = 0; col < 64; ++col) {
            const double d = f.channels.at(0, row, col) - mean;
            ss += d * d;
        }
    const double stddev = std::sqrt(ss / (64.0 * 64.0));
    CHECK(std::abs(mean) < 1e-9);
    CHECK(stddev == doctest::Approx(1.0).epsilon(1e-6));
    for (double v : f.channels.data) CHECK(std::isfinite(v));
    for (int row = 0; row < 64; ++row)
        for (int col = 0; col < 64; ++col) CHECK(f.channels.at(1, row, col) >= 0.0);
}

TEST_CASE("synth_terrain is deterministic") {
    CHECK(synth_terrain(Scenario::hills, 32, 60.0, 5) ==
          synth_terrain(Scenario::hills, 32, 60.0, 5));
    CHECK(synth_terrain(Scenario::hills, 32, 60.0, 5) !=
          synth_terrain(Scenario::hills, 32, 60.0, 6));
    const DemGrid flat = synth_terrain(Scenario::flat, 16, 60.0, 123);
    for (double v : flat.values) CHECK(v == flat.values[0]);
}

TEST_CASE("ramp grade shows up in the gradient field") {
    const DemGrid g = synth_terrain(Scenario::ramp, 32, 60.0, 0, 0.05);
    const Raster grad = gradient_field(g);
    for (int row = 1; row < 31; ++row)
        for (int col = 1; col < 31; ++col)
            CHECK(grad.at(col, row) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("ridge crest is the high point and blocks a direct crossing") {
    const DemGrid g = synth_terrain(Scenario::ridge, 128, 60.0, 42);
    // the maximum sits on the crest column
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < g.values.size(); ++i)
        if (g.values[i] > g.values[argmax]) argmax = i;
    CHECK(static_cast<int>(argmax) % g.ncols == 64);

    // the flank grade at mid-tile exceeds 2.2%, so a straight west-east
    // path through the center row cannot cross
    const Raster grad = gradient_field(g);
    double worst = 0.0;
    for (int col = 0; col < 128; ++col) worst = std::max(worst, grad.at(col, 64));
    CHECK(worst > 0.022);

    // independent stencil agreement, spot-checked across the tile
    for (int row = 0; row < 128; row += 17)
        for (int col = 0; col < 128; col += 13)
            CHECK(grad.at(col, row) ==
                  doctest::Approx(testutil::oracle_cell_gradient(g, col, row)).epsilon(1e-12));
}

TEST_CASE("unknown scenario name is a usage error") {
    CHECK_THROWS_AS(parse_scenario("mesa"), std::invalid_argument);
    CHECK_THROWS_AS(synth_terrain(Scenario::flat, 8, 60.0, 0), std::invalid_argument);
}
