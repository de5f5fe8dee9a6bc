#ifndef VTRAJ_ENRICH_HPP
#define VTRAJ_ENRICH_HPP

#include "vtraj/dtw.hpp"
#include "vtraj/grid.hpp"
#include "vtraj/layers.hpp"
#include "vtraj/trip.hpp"

#include <span>
#include <string>
#include <vector>

namespace vtraj {

struct EnrichParams {
    double proximity_nm = 5.0;       ///< coastal features closer than this are "off <name>"
    double port_radius_nm = 1.0;     ///< point-geometry ports matched within this radius
    double tss_tolerance_deg = 90.0; ///< max deviation from the lane bearing still in the right lane
    std::size_t dtw_samples = 128;
};

/// Gridded context sources; any of them may be absent.
struct EnvironmentFields {
    std::optional<GridField> wind_speed;     ///< m/s
    std::optional<GridField> wind_direction; ///< meteorological degrees (direction the wind blows from)
    std::optional<GridField> depth;          ///< metres, negative below the sea surface
};

inline bool is_moving(EpisodeType t) {
    return t == EpisodeType::Sailing || t == EpisodeType::Turning || t == EpisodeType::Maneuvering;
}

/// Port at a berth position: the containing port polygon (nearest boundary wins on overlap),
/// else the nearest point port within the radius.
inline std::optional<std::string> port_at(LonLat where, const LayerStore& layers, const EnrichParams& params = {}) {
    const auto inside = layers.containing(LayerKind::Port, where);
    if (!inside.empty()) {
        std::size_t best = inside.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i : inside) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& poly : layers[i].geometry.polygons) {
                if (polygon_contains(poly, where)) {
                    d = std::min(d, distance_to_boundary_nm(poly, where));
                }
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return layers[best].name;
    }
    const std::array<LonLat, 1> pt{where};
    for (const auto& [i, d] : layers.within(LayerKind::Port, pt, params.port_radius_nm)) {
        if (!layers[i].geometry.points.empty()) {
            return layers[i].name;
        }
    }
    return std::nullopt;
}

inline std::optional<std::string> port_of_stop(const Episode& stop, const LayerStore& layers,
                                               const EnrichParams& params = {}) {
    if (stop.type != EpisodeType::Stopped || stop.path.empty()) {
        return std::nullopt;
    }
    return port_at(stop.path.front(), layers, params);
}

/// "off <name>" for every coastal feature closer than the proximity radius, nearest first.
inline std::vector<std::string> nearby_coastal(std::span<const LonLat> path, const LayerStore& layers,
                                               const EnrichParams& params = {}) {
    std::vector<std::string> out;
    for (const auto& [i, d] : layers.within(LayerKind::Coastal, path, params.proximity_nm)) {
        out.push_back("off " + layers[i].name);
    }
    return out;
}

struct CrossingResult {
    std::vector<std::string> phrases;
    std::optional<bool> tss_compliant;
};

/// "crossing <name>" for offshore areas and TSS lanes the path enters, in the order entered.
/// Entering a lane also decides compliance against the episode's bearing.
inline CrossingResult crossed_areas(std::span<const LonLat> path, double episode_bearing, const LayerStore& layers,
                                    const EnrichParams& params = {}) {
    CrossingResult out;
    std::vector<std::pair<std::size_t, std::string>> ordered;
    for (LayerKind kind : {LayerKind::OffshoreArea, LayerKind::TssLane}) {
        for (std::size_t i : layers.crossed(kind, path)) {
            ordered.emplace_back(*first_crossing(path, layers[i].geometry), layers[i].name);
            if (kind == LayerKind::TssLane && layers[i].bearing) {
                const bool ok = std::abs(heading_delta(*layers[i].bearing, episode_bearing)) <= params.tss_tolerance_deg;
                out.tss_compliant = out.tss_compliant.value_or(true) && ok;
            }
        }
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [seg, name] : ordered) {
        out.phrases.push_back("crossing " + name);
    }
    return out;
}

struct WindSample {
    int beaufort = 0;          ///< maximum over the sampled vertices
    double mean_beaufort = 0;  ///< kept for comparison with the max rule
    CompassDirection direction = CompassDirection::North;
};

/// Wind along a track: nearest cell and slice per vertex, max Beaufort and circular-mean direction.
inline std::optional<WindSample> sample_wind(std::span<const AisPoint> track, const EnvironmentFields& fields) {
    if (!fields.wind_speed || !fields.wind_direction) {
        return std::nullopt;
    }
    int max_b = -1;
    double sum_b = 0.0;
    std::size_t n = 0;
    std::vector<double> dirs;
    for (const auto& p : track) {
        const auto speed = fields.wind_speed->sample(p.location(), p.ts);
        const auto dir = fields.wind_direction->sample(p.location(), p.ts);
        if (!speed || !dir) {
            continue;
        }
        const int b = beaufort_of(*speed);
        max_b = std::max(max_b, b);
        sum_b += b;
        ++n;
        dirs.push_back(*dir);
    }
    if (n == 0) {
        return std::nullopt;
    }
    WindSample w;
    w.beaufort = max_b;
    w.mean_beaufort = sum_b / static_cast<double>(n);
    w.direction = compass_of(circular_mean(dirs).value_or(dirs.front()));
    return w;
}

/// Depth for an episode: the cell under a stop, or the shallowest (largest) value along a
/// moving track, including cells crossed between reports.
inline std::optional<int> sample_depth(EpisodeType type, std::span<const LonLat> path, const GridField& depth) {
    std::optional<double> best;
    auto take = [&](LonLat p) {
        if (auto v = depth.sample(p)) {
            best = best ? std::max(*best, *v) : *v;
        }
    };
    if (type == EpisodeType::Stopped) {
        if (!path.empty()) {
            take(path.front());
        }
    } else {
        for (std::size_t i = 0; i < path.size(); ++i) {
            take(path[i]);
            if (i + 1 < path.size()) {
                const LonLat a = path[i], b = path[i + 1];
                const double span = std::max(std::abs(b.lon - a.lon), std::abs(b.lat - a.lat));
                const auto steps = static_cast<std::size_t>(std::ceil(span / (depth.cell_deg / 2.0)));
                for (std::size_t s = 1; s < steps; ++s) {
                    const double f = static_cast<double>(s) / static_cast<double>(steps);
                    take({a.lon + f * (b.lon - a.lon), a.lat + f * (b.lat - a.lat)});
                }
            }
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return static_cast<int>(std::lround(*best));
}

/// DTW similarity of the trip against a ferry route joining its origin and destination ports.
inline std::optional<RouteMatch> ferry_dtw(const Trip& trip, const LayerStore& layers, const EnrichParams& params = {}) {
    if (!trip.origin_port || !trip.destination_port || trip.points.empty()) {
        return std::nullopt;
    }
    std::vector<LonLat> track;
    track.reserve(trip.points.size());
    for (const auto& p : trip.points) {
        track.push_back(p.location());
    }
    std::optional<RouteMatch> best;
    for (const auto& f : layers.features()) {
        if (f.kind != LayerKind::FerryRoute) {
            continue;
        }
        const bool forward = f.from_port == *trip.origin_port && f.to_port == *trip.destination_port;
        const bool backward = f.from_port == *trip.destination_port && f.to_port == *trip.origin_port;
        if (!forward && !backward) {
            continue;
        }
        std::vector<LonLat> route;
        for (const auto& l : f.geometry.lines) {
            route.insert(route.end(), l.begin(), l.end());
        }
        if (!forward) {
            std::reverse(route.begin(), route.end());
        }
        const DtwResult r = polyline_dtw(track, route, params.dtw_samples);
        if (!best || r.normalized() < best->similarity_nm) {
            best = RouteMatch{f.name, r.normalized(), r.cost, r.path_length};
        }
    }
    return best;
}

inline std::string join_phrases(const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) {
        if (!s.empty()) {
            s += ' ';
        }
        s += p;
    }
    return s;
}

/// Fills every episode's context and the trip-level ports and route match. Geometry, timing
/// and statistics are left untouched; communication gaps get no context.
inline Trip enrich_trip(Trip trip, const LayerStore& layers, const EnvironmentFields& fields,
                        const EnrichParams& params = {}) {
    for (auto& ep : trip.episodes) {
        ep.context = ContextBundle{};
        if (ep.type == EpisodeType::Gap) {
            continue;
        }
        const auto track = std::span<const AisPoint>(trip.points).subspan(ep.first, ep.last - ep.first + 1);
        if (ep.type == EpisodeType::Stopped) {
            if (auto port = port_of_stop(ep, layers, params)) {
                ep.context.placemarks = "at " + *port;
            }
            if (fields.depth) {
                ep.context.sea_depth_m = sample_depth(ep.type, ep.path, *fields.depth);
            }
            continue;
        }
        std::vector<LonLat> path;
        path.reserve(track.size());
        for (const auto& p : track) {
            path.push_back(p.location());
        }
        auto phrases = nearby_coastal(path, layers, params);
        const double bearing = initial_bearing(path.front(), path.back());
        auto crossing = crossed_areas(path, bearing, layers, params);
        phrases.insert(phrases.end(), crossing.phrases.begin(), crossing.phrases.end());
        if (!phrases.empty()) {
            ep.context.placemarks = join_phrases(phrases);
        }
        ep.context.tss_compliant = crossing.tss_compliant;
        if (auto w = sample_wind(track, fields)) {
            ep.context.wind_beaufort = w->beaufort;
            ep.context.wind_direction = w->direction;
        }
        if (fields.depth) {
            ep.context.sea_depth_m = sample_depth(ep.type, path, *fields.depth);
        }
    }
    trip.origin_port.reset();
    trip.destination_port.reset();
    if (trip.departs_from_stop && !trip.points.empty()) {
        trip.origin_port = port_at(trip.points.front().location(), layers, params);
    }
    if (!trip.episodes.empty() && trip.episodes.back().type == EpisodeType::Stopped) {
        trip.destination_port = port_of_stop(trip.episodes.back(), layers, params);
    }
    trip.ferry_route = ferry_dtw(trip, layers, params);
    return trip;
}

} // namespace vtraj

#endif // VTRAJ_ENRICH_HPP
