#ifndef VTRAJ_EXPORT_HPP
#define VTRAJ_EXPORT_HPP

#include "vtraj/trip.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <span>
#include <string>

namespace vtraj {

enum class OutputFormat : std::uint8_t { Csv, Map, Json, Txt };

inline std::string_view to_string(OutputFormat f) {
    switch (f) {
    case OutputFormat::Csv:
        return "csv";
    case OutputFormat::Map:
        return "map";
    case OutputFormat::Json:
        return "json";
    case OutputFormat::Txt:
        return "txt";
    }
    return "csv";
}

inline std::optional<OutputFormat> parse_output_format(std::string_view s) {
    for (auto f : {OutputFormat::Csv, OutputFormat::Map, OutputFormat::Json, OutputFormat::Txt}) {
        if (to_string(f) == s) {
            return f;
        }
    }
    return std::nullopt;
}

/// Serialized precision of episode figures: distance 2 dp, speed 1 dp, heading whole degrees.
inline double rounded_distance(const EpisodeStats& s) { return std::round(s.distance_nm * 100.0) / 100.0; }
inline double rounded_speed(const EpisodeStats& s) { return std::round(s.speed_knots * 10.0) / 10.0; }
inline long rounded_heading(const EpisodeStats& s) { return std::lround(s.heading_deg); }
inline double rounded_coord(double deg) { return std::round(deg * 1e6) / 1e6; }

namespace detail {

/// Shortest round-trip text of a double, as the JSON writer renders it.
/// Shortest round-trip text; integral values drop the ".0".
inline std::string number_text(double v) {
    std::string s = nlohmann::json(v).dump();
    if (s.size() > 2 && s.ends_with(".0")) {
        s.resize(s.size() - 2);
    }
    return s == "-0" ? "0" : s;
}

inline std::string fixed(double v, int dp) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", dp, v);
    std::string s = buf;
    return s == "-0.00" || s == "-0.0" || s == "-0.000000" ? s.substr(1) : s;
}

inline std::string csv_field(std::string_view v) {
    if (v.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(v);
    }
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

inline std::string wkt_coord(LonLat p) { return fixed(p.lon, 6) + " " + fixed(p.lat, 6); }

} // namespace detail

inline std::string wkt_point(LonLat p) { return "POINT (" + detail::wkt_coord(p) + ")"; }

inline std::string wkt_linestring(std::span<const LonLat> path) {
    std::string s = "LINESTRING (";
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) {
            s += ", ";
        }
        s += detail::wkt_coord(path[i]);
    }
    return s + ")";
}

/// Map geometry of an episode: a point for stops, otherwise a linestring over its path.
inline std::string episode_wkt(const Episode& ep) {
    if (ep.type == EpisodeType::Stopped || ep.path.size() < 2) {
        return wkt_point(ep.path.empty() ? ep.start_loc : ep.path.front());
    }
    return wkt_linestring(ep.path);
}

namespace detail {

inline std::string csv_common_cells(const Trip& trip, std::size_t index, const Episode& ep) {
    const auto& c = ep.context;
    std::string row;
    row += csv_field(trip.trip_id) + ',';
    row += std::to_string(index) + ',';
    row += csv_field(to_string(ep.type)) + ',';
    row += std::to_string(ep.start_ts) + ',';
    row += std::to_string(ep.end_ts) + ',';
    row += std::to_string(ep.stats.duration_s) + ',';
    row += fixed(rounded_distance(ep.stats), 2) + ',';
    row += fixed(rounded_speed(ep.stats), 1) + ',';
    row += std::to_string(rounded_heading(ep.stats)) + ',';
    row += csv_field(to_string(ep.stats.direction)) + ',';
    row += (c.placemarks ? csv_field(*c.placemarks) : "") + ',';
    row += (c.wind_beaufort ? std::to_string(*c.wind_beaufort) : "") + ',';
    row += (c.wind_direction ? csv_field(to_string(*c.wind_direction)) : "") + ',';
    row += (c.sea_depth_m ? std::to_string(*c.sea_depth_m) : "");
    return row;
}

inline constexpr std::string_view csv_common_header = "trip_id,episode_index,movement,start_ts,end_ts,duration_seconds,"
                                                     "distance_miles,speed_knots,heading,direction,placemarks,"
                                                     "wind_beaufort,wind_direction,sea_depth";

} // namespace detail

inline std::string csv_header() {
    return std::string(detail::csv_common_header) + ",start_location_wkt,end_location_wkt\n";
}

inline std::string map_csv_header() { return std::string(detail::csv_common_header) + ",geometry\n"; }

inline std::string csv_rows(const Trip& trip) {
    std::string out;
    for (std::size_t i = 0; i < trip.episodes.size(); ++i) {
        const auto& ep = trip.episodes[i];
        out += detail::csv_common_cells(trip, i, ep) + ',' + detail::csv_field(wkt_point(ep.start_loc)) + ',' +
               detail::csv_field(wkt_point(ep.end_loc)) + '\n';
    }
    return out;
}

inline std::string map_csv_rows(const Trip& trip) {
    std::string out;
    for (std::size_t i = 0; i < trip.episodes.size(); ++i) {
        const auto& ep = trip.episodes[i];
        out += detail::csv_common_cells(trip, i, ep) + ',' + detail::csv_field(episode_wkt(ep)) + '\n';
    }
    return out;
}

inline std::string to_csv(const Trip& trip) { return csv_header() + csv_rows(trip); }
inline std::string to_map_csv(const Trip& trip) { return map_csv_header() + map_csv_rows(trip); }

/// Several trips under a single header.
inline std::string to_csv(std::span<const Trip> trips) {
    std::string out = csv_header();
    for (const auto& t : trips) {
        out += csv_rows(t);
    }
    return out;
}

inline std::string to_map_csv(std::span<const Trip> trips) {
    std::string out = map_csv_header();
    for (const auto& t : trips) {
        out += map_csv_rows(t);
    }
    return out;
}

inline nlohmann::ordered_json episode_json(const Episode& ep) {
    nlohmann::ordered_json j;
    const auto& c = ep.context;
    j["direction"] = to_string(ep.stats.direction);
    j["heading"] = rounded_heading(ep.stats);
    j["duration_seconds"] = ep.stats.duration_s;
    j["distance_miles"] = rounded_distance(ep.stats);
    j["speed_knots"] = rounded_speed(ep.stats);
    j["movement"] = to_string(ep.type);
    if (c.wind_beaufort) {
        j["wind_beaufort"] = *c.wind_beaufort;
    }
    if (c.wind_direction) {
        j["wind_direction"] = to_string(*c.wind_direction);
    }
    if (c.sea_depth_m) {
        j["sea_depth"] = *c.sea_depth_m;
    }
    if (c.placemarks) {
        j["placemarks"] = *c.placemarks;
    }
    j["start_location"] = {{"lon", rounded_coord(ep.start_loc.lon)},
                           {"lat", rounded_coord(ep.start_loc.lat)},
                           {"ts", ep.start_ts}};
    j["end_location"] = {{"lon", rounded_coord(ep.end_loc.lon)},
                         {"lat", rounded_coord(ep.end_loc.lat)},
                         {"ts", ep.end_ts}};
    return j;
}

inline nlohmann::ordered_json trip_json(const Trip& trip) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& ep : trip.episodes) {
        arr.push_back(episode_json(ep));
    }
    return arr;
}

/// The trip as a JSON array of episodes, pretty-printed with two-space indentation.
inline std::string to_json(const Trip& trip) { return trip_json(trip).dump(2); }

inline std::string episode_sentence(const Episode& ep) {
    using detail::number_text;
    const auto& c = ep.context;
    std::string s = "From " + format_epoch(ep.start_ts) + " until " + format_epoch(ep.end_ts) + " ";
    s += std::string(to_string(ep.type)) + " " + std::string(to_string(ep.stats.direction)) + " at " +
         std::to_string(rounded_heading(ep.stats)) + " degrees";
    if (c.placemarks && !c.placemarks->empty()) {
        s += " " + *c.placemarks;
    }
    s += ", covering " + number_text(rounded_distance(ep.stats)) + " nautical miles in " +
         std::to_string(ep.stats.duration_s) + " seconds at speed " + number_text(rounded_speed(ep.stats)) + " knots";
    if (c.sea_depth_m) {
        s += " at minimum sea depth of " + std::to_string(*c.sea_depth_m) + " meters";
    }
    if (c.wind_beaufort && c.wind_direction) {
        s += " while " + std::string(to_string(*c.wind_direction)) + " winds of intensity " +
             std::to_string(*c.wind_beaufort) + "B were blowing";
    }
    return s + ".";
}

/// One sentence per episode, joined by single spaces into a paragraph.
inline std::string to_txt(const Trip& trip) {
    std::string out;
    for (const auto& ep : trip.episodes) {
        if (!out.empty()) {
            out += ' ';
        }
        out += episode_sentence(ep);
    }
    return out;
}

inline std::string render(const Trip& trip, OutputFormat f) {
    switch (f) {
    case OutputFormat::Csv:
        return to_csv(trip);
    case OutputFormat::Map:
        return to_map_csv(trip);
    case OutputFormat::Json:
        return to_json(trip);
    case OutputFormat::Txt:
        return to_txt(trip);
    }
    return {};
}

} // namespace vtraj

#endif // VTRAJ_EXPORT_HPP
