#include "railpred/geojson.hpp"

#include <json.hpp>

#include "railpred/errors.hpp"

namespace railpred {

using nlohmann::json;

std::string route_to_geojson(const Route& route, const DemGrid& frame) {
    json coords = json::array();
    for (const GridIndex& cell : route.cells) {
        const WorldPoint p = cell_center(frame, cell);
        coords.push_back(json::array({p.x, p.y}));
    }
    json doc;
    doc["type"] = "LineString";
    doc["coordinates"] = std::move(coords);
    doc["total_cost"] = route.total_cost;
    doc["crs"] = "local-meters";
    return doc.dump();
}

LoadedPolyline geojson_to_polyline(std::string_view text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw FormatError("route document is not valid JSON", 0);

    const json* geom = &doc;
    const json* foreign = &doc;
    if (doc.value("type", "") == "Feature") {
        if (!doc.contains("geometry"))
            throw FormatError("Feature has no geometry member", 0);
        geom = &doc["geometry"];
        if (doc.contains("properties") && doc["properties"].is_object())
            foreign = &doc["properties"];
    }
    if (geom->value("type", "") != "LineString" && geom->value("type", "") != "Point")
        throw FormatError("expected a LineString geometry", 0);
    if (!geom->contains("coordinates") || !(*geom)["coordinates"].is_array())
        throw FormatError("geometry has no coordinates array", 0);

    LoadedPolyline out;
    const json& coords = (*geom)["coordinates"];
    if (geom->value("type", "") == "Point") {
        if (coords.size() < 2 || !coords[0].is_number())
            throw FormatError("malformed Point coordinates", 0);
        out.points.push_back(WorldPoint{coords[0].get<double>(), coords[1].get<double>()});
    } else {
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const json& p = coords[i];
            if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number())
                throw FormatError("malformed coordinate at position " + std::to_string(i), i);
            out.points.push_back(WorldPoint{p[0].get<double>(), p[1].get<double>()});
        }
    }
    if (foreign->contains("total_cost") && (*foreign)["total_cost"].is_number())
        out.total_cost = (*foreign)["total_cost"].get<double>();
    else if (doc.contains("total_cost") && doc["total_cost"].is_number())
        out.total_cost = doc["total_cost"].get<double>();
    return out;
}

Route geojson_to_route(std::string_view text, const DemGrid& frame) {
    const LoadedPolyline poly = geojson_to_polyline(text);
    Route route;
    for (const WorldPoint& p : poly.points) {
        const GridIndex cell = nearest_cell(frame, p);
        if (route.cells.empty() || !(route.cells.back() == cell)) route.cells.push_back(cell);
    }
    if (poly.total_cost) route.total_cost = *poly.total_cost;
    return route;
}

} // namespace railpred
