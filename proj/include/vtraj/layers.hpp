#ifndef VTRAJ_LAYERS_HPP
#define VTRAJ_LAYERS_HPP

#include "vtraj/geometry.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <json.hpp>

#include <array>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vtraj {

enum class LayerKind : std::uint8_t { Port, Coastal, OffshoreArea, TssLane, FerryRoute };

inline constexpr std::array<std::pair<LayerKind, std::string_view>, 5> layer_kind_names = {{
    {LayerKind::Port, "port"},
    {LayerKind::Coastal, "coastal"},
    {LayerKind::OffshoreArea, "offshore_area"},
    {LayerKind::TssLane, "tss_lane"},
    {LayerKind::FerryRoute, "ferry_route"},
}};

inline std::string_view to_string(LayerKind k) { return layer_kind_names[static_cast<std::size_t>(k)].second; }

inline std::optional<LayerKind> parse_layer_kind(std::string_view s) {
    for (const auto& [k, name] : layer_kind_names) {
        if (name == s) {
            return k;
        }
    }
    return std::nullopt;
}

struct Feature {
    std::string name;
    LayerKind kind = LayerKind::Port;
    Geometry geometry;
    BoundingBox bbox;
    std::optional<double> bearing; ///< TSS lane direction of travel
    std::string from_port;         ///< ferry route endpoints
    std::string to_port;
};

struct LayerSource {
    LayerKind kind;
    std::string path;
};

class LayerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline LonLat parse_position(const nlohmann::json& j) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number()) {
        throw LayerError("bad position");
    }
    const LonLat p{j[0].get<double>(), j[1].get<double>()};
    if (!valid_coordinates(p.lon, p.lat)) {
        throw LayerError("position out of range");
    }
    return p;
}

inline std::vector<LonLat> parse_line(const nlohmann::json& j) {
    std::vector<LonLat> out;
    for (const auto& p : j) {
        out.push_back(parse_position(p));
    }
    if (out.size() < 2) {
        throw LayerError("linestring needs at least 2 vertices");
    }
    return out;
}

inline Polygon parse_polygon(const nlohmann::json& j) {
    Polygon poly;
    for (const auto& r : j) {
        Ring ring = parse_line(r);
        if (ring.size() < 4 || !(ring.front() == ring.back())) {
            throw LayerError("polygon ring is not closed");
        }
        poly.push_back(std::move(ring));
    }
    if (poly.empty()) {
        throw LayerError("polygon without rings");
    }
    return poly;
}

inline Geometry parse_geometry(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("type") || !j.contains("coordinates")) {
        throw LayerError("missing geometry");
    }
    const auto type = j.at("type").get<std::string>();
    const auto& c = j.at("coordinates");
    Geometry g;
    if (type == "Point") {
        g.points.push_back(parse_position(c));
    } else if (type == "MultiPoint") {
        for (const auto& p : c) {
            g.points.push_back(parse_position(p));
        }
    } else if (type == "LineString") {
        g.lines.push_back(parse_line(c));
    } else if (type == "MultiLineString") {
        for (const auto& l : c) {
            g.lines.push_back(parse_line(l));
        }
    } else if (type == "Polygon") {
        g.polygons.push_back(parse_polygon(c));
    } else if (type == "MultiPolygon") {
        for (const auto& p : c) {
            g.polygons.push_back(parse_polygon(p));
        }
    } else {
        throw LayerError("unsupported geometry type " + type);
    }
    if (g.empty()) {
        throw LayerError("empty geometry");
    }
    return g;
}

} // namespace detail

/// Features of every kind behind one R-tree per kind. Immutable after construction.
class LayerStore {
    using Pt = boost::geometry::model::point<double, 2, boost::geometry::cs::cartesian>;
    using Box = boost::geometry::model::box<Pt>;
    using Entry = std::pair<Box, std::size_t>;
    using Tree = boost::geometry::index::rtree<Entry, boost::geometry::index::rstar<16>>;

public:
    LayerStore() = default;

    explicit LayerStore(std::vector<Feature> features) : features_(std::move(features)) {
        std::array<std::vector<Entry>, layer_kind_names.size()> entries;
        for (std::size_t i = 0; i < features_.size(); ++i) {
            auto& f = features_[i];
            f.bbox = bounds_of(f.geometry);
            entries[static_cast<std::size_t>(f.kind)].emplace_back(
                Box{Pt{f.bbox.min_lon, f.bbox.min_lat}, Pt{f.bbox.max_lon, f.bbox.max_lat}}, i);
        }
        for (std::size_t k = 0; k < entries.size(); ++k) {
            trees_[k] = Tree(entries[k].begin(), entries[k].end());
        }
    }

    const std::vector<Feature>& features() const { return features_; }
    const Feature& operator[](std::size_t i) const { return features_[i]; }

    std::size_t count(LayerKind kind) const { return trees_[static_cast<std::size_t>(kind)].size(); }

    /// Candidate features whose bounding box meets `box` grown by `margin_nm`, ascending index order.
    std::vector<std::size_t> candidates(LayerKind kind, BoundingBox box, double margin_nm = 0.0) const {
        std::vector<std::size_t> out;
        if (!box.valid()) {
            return out;
        }
        // One degree of latitude is 60.04 nm; 59 keeps the margin conservative.
        const double dlat = margin_nm / 59.0;
        const double worst_lat = std::min(89.0, std::max(std::abs(box.min_lat), std::abs(box.max_lat)) + dlat);
        const double dlon = std::min(360.0, dlat / std::cos(deg2rad(worst_lat)));
        const Box q{Pt{box.min_lon - dlon, box.min_lat - dlat}, Pt{box.max_lon + dlon, box.max_lat + dlat}};
        std::vector<Entry> hits;
        trees_[static_cast<std::size_t>(kind)].query(boost::geometry::index::intersects(q), std::back_inserter(hits));
        for (const auto& h : hits) {
            out.push_back(h.second);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Features of `kind` closer than `radius_nm` to the path, with their distances, nearest first.
    std::vector<std::pair<std::size_t, double>> within(LayerKind kind, std::span<const LonLat> path,
                                                       double radius_nm) const {
        std::vector<std::pair<std::size_t, double>> out;
        BoundingBox box;
        for (auto p : path) {
            box.extend(p);
        }
        for (std::size_t i : candidates(kind, box, radius_nm)) {
            const double d = path_geometry_nm(path, features_[i].geometry);
            if (d < radius_nm) {
                out.emplace_back(i, d);
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
        return out;
    }

    /// Polygon features of `kind` containing `p`, ascending index order.
    std::vector<std::size_t> containing(LayerKind kind, LonLat p) const {
        BoundingBox box;
        box.extend(p);
        std::vector<std::size_t> out;
        for (std::size_t i : candidates(kind, box)) {
            if (geometry_contains(features_[i].geometry, p)) {
                out.push_back(i);
            }
        }
        return out;
    }

    /// Polygon features of `kind` the path enters, ordered by where along the path it first does.
    std::vector<std::size_t> crossed(LayerKind kind, std::span<const LonLat> path) const {
        BoundingBox box;
        for (auto p : path) {
            box.extend(p);
        }
        std::vector<std::pair<std::size_t, std::size_t>> hits;
        for (std::size_t i : candidates(kind, box)) {
            if (auto seg = first_crossing(path, features_[i].geometry)) {
                hits.emplace_back(*seg, i);
            }
        }
        std::sort(hits.begin(), hits.end());
        std::vector<std::size_t> out;
        for (const auto& h : hits) {
            out.push_back(h.second);
        }
        return out;
    }

private:
    std::vector<Feature> features_;
    std::array<Tree, layer_kind_names.size()> trees_;
};

/// Parses one GeoJSON FeatureCollection into features of `kind`.
/// Throws LayerError naming the file and feature index on malformed input.
inline std::vector<Feature> parse_layer(const nlohmann::json& doc, LayerKind kind, const std::string& origin) {
    std::vector<Feature> out;
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        throw LayerError(origin + ": not a GeoJSON FeatureCollection");
    }
    const auto& feats = doc.contains("features") ? doc.at("features") : nlohmann::json::array();
    for (std::size_t i = 0; i < feats.size(); ++i) {
        try {
            const auto& fj = feats[i];
            const auto& props = fj.contains("properties") && fj["properties"].is_object() ? fj["properties"]
                                                                                          : nlohmann::json::object();
            Feature f;
            f.kind = kind;
            f.name = props.contains("name") && props["name"].is_string() ? props["name"].get<std::string>() : "";
            if (f.name.empty()) {
                throw LayerError("missing properties.name");
            }
            f.geometry = detail::parse_geometry(fj.at("geometry"));
            if (kind == LayerKind::TssLane) {
                if (!props.contains("bearing") || !props["bearing"].is_number()) {
                    throw LayerError("TSS lane without numeric properties.bearing");
                }
                f.bearing = props["bearing"].get<double>();
            }
            if (kind == LayerKind::FerryRoute) {
                f.from_port = props.value("from_port", "");
                f.to_port = props.value("to_port", "");
                if (f.from_port.empty() || f.to_port.empty() || f.geometry.lines.empty()) {
                    throw LayerError("ferry route needs a linestring and from_port/to_port");
                }
            }
            out.push_back(std::move(f));
        } catch (const LayerError& e) {
            throw LayerError(origin + ": feature " + std::to_string(i) + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw LayerError(origin + ": feature " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

inline LayerStore load_layers(const std::vector<LayerSource>& sources) {
    std::vector<Feature> all;
    for (const auto& src : sources) {
        std::ifstream in(src.path);
        if (!in) {
            throw LayerError(src.path + ": cannot open");
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw LayerError(src.path + ": " + e.what());
        }
        auto feats = parse_layer(doc, src.kind, src.path);
        std::move(feats.begin(), feats.end(), std::back_inserter(all));
    }
    return LayerStore(std::move(all));
}

} // namespace vtraj

#endif // VTRAJ_LAYERS_HPP
