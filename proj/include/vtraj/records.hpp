#ifndef VTRAJ_RECORDS_HPP
#define VTRAJ_RECORDS_HPP

#include "vtraj/annotate.hpp"
#include "vtraj/export.hpp"
#include "vtraj/ingest.hpp"
#include "vtraj/trip.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

// Lossless on-disk forms of the stage outputs, so each stage can run from the previous one's files.

namespace vtraj {

namespace detail {

inline std::string exact(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::optional<double> opt_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    return parse_double(s);
}

} // namespace detail

inline constexpr std::string_view points_header = "ts,vessel_id,lon,lat,sog,cog,heading,ship_type";

inline std::string point_row(const AisPoint& p) {
    using detail::exact;
    std::string s = std::to_string(p.ts) + ',' + detail::csv_field(p.vessel_id) + ',' + exact(p.lon) + ',' +
                    exact(p.lat) + ',' + exact(p.sog) + ',';
    s += (p.cog ? exact(*p.cog) : "") + ',';
    s += (p.heading ? exact(*p.heading) : "") + ',';
    s += detail::csv_field(p.ship_type);
    return s;
}

inline AisPoint point_from_fields(const std::vector<std::string_view>& f, const std::string& origin) {
    if (f.size() < 8) {
        throw std::runtime_error(origin + ": expected 8 fields");
    }
    AisPoint p;
    const auto ts = detail::parse_int(f[0]);
    const auto lon = detail::parse_double(f[2]);
    const auto lat = detail::parse_double(f[3]);
    const auto sog = detail::parse_double(f[4]);
    if (!ts || !lon || !lat || !sog) {
        throw std::runtime_error(origin + ": bad numeric field");
    }
    p.ts = *ts;
    p.vessel_id = std::string(detail::trim(f[1]));
    p.lon = *lon;
    p.lat = *lat;
    p.sog = *sog;
    p.cog = detail::opt_double(f[5]);
    p.heading = detail::opt_double(f[6]);
    p.ship_type = std::string(detail::trim(f[7]));
    return p;
}

inline void write_points_csv(std::ostream& os, std::span<const AisPoint> points) {
    os << points_header << '\n';
    for (const auto& p : points) {
        os << point_row(p) << '\n';
    }
}

inline void write_annotated_csv(std::ostream& os, std::span<const AnnotatedPoint> points) {
    os << points_header << ",flags\n";
    for (const auto& ap : points) {
        os << point_row(ap.point) << ',' << format_flags(ap.flags) << '\n';
    }
}

namespace detail {

template <typename Fn>
void for_each_data_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || trim(line).empty()) {
            continue;
        }
        fn(split_fields(line, ','), path + ":" + std::to_string(lineno));
    }
}

} // namespace detail

inline std::vector<AisPoint> read_points_csv(const std::string& path) {
    std::vector<AisPoint> out;
    detail::for_each_data_line(path, [&](const auto& f, const std::string& where) {
        out.push_back(point_from_fields(f, where));
    });
    return out;
}

inline std::vector<AnnotatedPoint> read_annotated_csv(const std::string& path) {
    std::vector<AnnotatedPoint> out;
    detail::for_each_data_line(path, [&](const auto& f, const std::string& where) {
        if (f.size() < 9) {
            throw std::runtime_error(where + ": expected 9 fields");
        }
        out.push_back({point_from_fields(f, where), parse_flags(detail::trim(f[8]))});
    });
    return out;
}

namespace detail {

inline nlohmann::ordered_json loc_json(LonLat p) { return nlohmann::ordered_json::array({p.lon, p.lat}); }
inline LonLat loc_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <typename T, typename J>
nlohmann::ordered_json opt_json(const std::optional<T>& v, J&& conv) {
    return v ? nlohmann::ordered_json(conv(*v)) : nlohmann::ordered_json(nullptr);
}

template <typename T, typename Fn>
std::optional<T> opt_from(const nlohmann::json& j, const char* key, Fn&& conv) {
    if (!j.contains(key) || j[key].is_null()) {
        return std::nullopt;
    }
    return conv(j[key]);
}

inline CompassDirection compass_from(const nlohmann::json& j) {
    const auto d = parse_compass(j.get<std::string>());
    if (!d) {
        throw std::runtime_error("bad compass direction " + j.dump());
    }
    return *d;
}

} // namespace detail

inline nlohmann::ordered_json trip_record(const Trip& t) {
    using nlohmann::ordered_json;
    using detail::opt_json;
    ordered_json j;
    j["trip_id"] = t.trip_id;
    j["vessel_id"] = t.vessel_id;
    j["ship_type"] = t.ship_type;
    j["departs_from_stop"] = t.departs_from_stop;
    j["origin_port"] = opt_json(t.origin_port, [](const auto& s) { return s; });
    j["destination_port"] = opt_json(t.destination_port, [](const auto& s) { return s; });
    j["ferry_route"] = opt_json(t.ferry_route, [](const RouteMatch& r) {
        return ordered_json{{"route_name", r.route_name},
                            {"similarity_nm", r.similarity_nm},
                            {"raw_cost_nm", r.raw_cost_nm},
                            {"alignment_length", r.alignment_length}};
    });
    j["stats"] = {{"duration_s", t.stats.duration_s},
                  {"distance_nm", t.stats.distance_nm},
                  {"speed_knots", t.stats.speed_knots}};
    auto pts = ordered_json::array();
    for (const auto& p : t.points) {
        pts.push_back(ordered_json::array({p.ts, p.vessel_id, p.lon, p.lat, p.sog,
                                           opt_json(p.cog, [](double v) { return v; }),
                                           opt_json(p.heading, [](double v) { return v; }), p.ship_type}));
    }
    j["points"] = std::move(pts);
    auto eps = ordered_json::array();
    for (const auto& e : t.episodes) {
        ordered_json ej;
        ej["type"] = to_string(e.type);
        ej["first"] = e.first;
        ej["last"] = e.last;
        ej["start_ts"] = e.start_ts;
        ej["end_ts"] = e.end_ts;
        ej["start_loc"] = detail::loc_json(e.start_loc);
        ej["end_loc"] = detail::loc_json(e.end_loc);
        auto path = ordered_json::array();
        for (auto p : e.path) {
            path.push_back(detail::loc_json(p));
        }
        ej["path"] = std::move(path);
        ej["stats"] = {{"duration_s", e.stats.duration_s},
                       {"distance_nm", e.stats.distance_nm},
                       {"speed_knots", e.stats.speed_knots},
                       {"heading_deg", e.stats.heading_deg},
                       {"direction", to_string(e.stats.direction)}};
        const auto& c = e.context;
        ej["context"] = {{"placemarks", opt_json(c.placemarks, [](const auto& s) { return s; })},
                         {"wind_beaufort", opt_json(c.wind_beaufort, [](int v) { return v; })},
                         {"wind_direction", opt_json(c.wind_direction, [](CompassDirection d) { return to_string(d); })},
                         {"sea_depth_m", opt_json(c.sea_depth_m, [](int v) { return v; })},
                         {"tss_compliant", opt_json(c.tss_compliant, [](bool v) { return v; })}};
        eps.push_back(std::move(ej));
    }
    j["episodes"] = std::move(eps);
    return j;
}

inline Trip trip_from_record(const nlohmann::json& j) {
    using detail::opt_from;
    Trip t;
    t.trip_id = j.at("trip_id").get<std::string>();
    t.vessel_id = j.at("vessel_id").get<std::string>();
    t.ship_type = j.value("ship_type", "");
    t.departs_from_stop = j.value("departs_from_stop", false);
    auto str = [](const nlohmann::json& v) { return v.get<std::string>(); };
    t.origin_port = opt_from<std::string>(j, "origin_port", str);
    t.destination_port = opt_from<std::string>(j, "destination_port", str);
    t.ferry_route = opt_from<RouteMatch>(j, "ferry_route", [](const nlohmann::json& r) {
        return RouteMatch{r.at("route_name").get<std::string>(), r.at("similarity_nm").get<double>(),
                          r.at("raw_cost_nm").get<double>(), r.at("alignment_length").get<std::size_t>()};
    });
    const auto& s = j.at("stats");
    t.stats = {s.at("duration_s").get<Timestamp>(), s.at("distance_nm").get<double>(), s.at("speed_knots").get<double>()};
    for (const auto& pj : j.at("points")) {
        AisPoint p;
        p.ts = pj.at(0).get<Timestamp>();
        p.vessel_id = pj.at(1).get<std::string>();
        p.lon = pj.at(2).get<double>();
        p.lat = pj.at(3).get<double>();
        p.sog = pj.at(4).get<double>();
        if (!pj.at(5).is_null()) {
            p.cog = pj.at(5).get<double>();
        }
        if (!pj.at(6).is_null()) {
            p.heading = pj.at(6).get<double>();
        }
        p.ship_type = pj.at(7).get<std::string>();
        t.points.push_back(std::move(p));
    }
    for (const auto& ej : j.at("episodes")) {
        Episode e;
        const auto type = parse_episode_type(ej.at("type").get<std::string>());
        if (!type) {
            throw std::runtime_error("bad episode type " + ej.at("type").dump());
        }
        e.type = *type;
        e.first = ej.at("first").get<std::size_t>();
        e.last = ej.at("last").get<std::size_t>();
        e.start_ts = ej.at("start_ts").get<Timestamp>();
        e.end_ts = ej.at("end_ts").get<Timestamp>();
        e.start_loc = detail::loc_from(ej.at("start_loc"));
        e.end_loc = detail::loc_from(ej.at("end_loc"));
        for (const auto& p : ej.at("path")) {
            e.path.push_back(detail::loc_from(p));
        }
        const auto& es = ej.at("stats");
        e.stats = {es.at("duration_s").get<Timestamp>(), es.at("distance_nm").get<double>(),
                   es.at("speed_knots").get<double>(), es.at("heading_deg").get<double>(),
                   detail::compass_from(es.at("direction"))};
        const auto& c = ej.at("context");
        e.context.placemarks = opt_from<std::string>(c, "placemarks", str);
        e.context.wind_beaufort = opt_from<int>(c, "wind_beaufort", [](const nlohmann::json& v) { return v.get<int>(); });
        e.context.wind_direction = opt_from<CompassDirection>(c, "wind_direction", detail::compass_from);
        e.context.sea_depth_m = opt_from<int>(c, "sea_depth_m", [](const nlohmann::json& v) { return v.get<int>(); });
        e.context.tss_compliant = opt_from<bool>(c, "tss_compliant", [](const nlohmann::json& v) { return v.get<bool>(); });
        t.episodes.push_back(std::move(e));
    }
    return t;
}

/// Reads a JSON-lines file, calling fn(json) per non-empty line.
template <typename Fn>
void read_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": invalid JSON");
        }
        fn(j);
    }
}

inline std::vector<Trip> read_trips(const std::string& path) {
    std::vector<Trip> out;
    read_jsonl(path, [&](const nlohmann::json& j) { out.push_back(trip_from_record(j)); });
    return out;
}

inline void write_trips(std::ostream& os, std::span<const Trip> trips) {
    for (const auto& t : trips) {
        os << trip_record(t).dump() << '\n';
    }
}

} // namespace vtraj

#endif // VTRAJ_RECORDS_HPP
