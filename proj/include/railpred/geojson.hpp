#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "railpred/nav.hpp"
#include "railpred/terrain.hpp"

namespace railpred {

/// GeoJSON LineString through the route's cell centers in world meters,
/// carrying `total_cost` and `crs: "local-meters"` as foreign members.
std::string route_to_geojson(const Route& route, const DemGrid& frame);

struct LoadedPolyline {
    std::vector<WorldPoint> points;
    std::optional<double> total_cost;
};

/// Accepts the LineString documents this tool writes, or a Feature wrapping
/// one. Throws FormatError on anything else.
LoadedPolyline geojson_to_polyline(std::string_view text);

/// Loads a polyline and snaps each vertex to its grid cell (consecutive
/// duplicates dropped). BoundsError if a vertex falls outside the frame.
Route geojson_to_route(std::string_view text, const DemGrid& frame);

} // namespace railpred
