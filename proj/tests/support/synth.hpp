#ifndef VTRAJ_TESTS_SYNTH_HPP
#define VTRAJ_TESTS_SYNTH_HPP

// Synthetic vessel tracks with known ground truth (trip boundaries, gaps, turn runs), plus
// writers for the files a pipeline run consumes: AIS CSV, GeoJSON layers, grids and config.

#include "vtraj/core.hpp"
#include "vtraj/trip.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace vtraj::synth {

struct TripLabel {
    std::size_t first = 0; ///< index into the vessel's points
    std::size_t last = 0;
    bool departs_from_stop = false;
    std::size_t gaps = 0;  ///< in-trip communication gaps
};

struct TurnLabel {
    std::size_t first = 0;
    std::size_t last = 0;
    EpisodeType expected = EpisodeType::Turning;
};

struct Berth {
    std::string name;
    LonLat where;
};

struct VesselTrack {
    std::string vessel_id;
    std::string ship_type = "Passenger";
    std::vector<AisPoint> points;
    std::vector<TripLabel> trips;
    std::vector<TurnLabel> turns;
    std::vector<Berth> berths;
};

/// Emits reports along a scripted itinerary.
class TrackBuilder {
public:
    TrackBuilder(VesselTrack& track, LonLat start, Timestamp t0, std::uint64_t seed)
        : track_(track), pos_(start), t_(t0), rng_(seed) {}

    Timestamp now() const { return t_; }
    LonLat position() const { return pos_; }
    double course() const { return course_; }
    std::size_t next_index() const { return track_.points.size(); }

    /// Moored: near-zero speed, jittered position, meaningless course.
    void stop(Timestamp duration, Timestamp interval) {
        std::uniform_real_distribution<double> jitter(-1e-5, 1e-5), sog(0.0, 0.3), cog(0.0, 359.0);
        const Timestamp end = t_ + duration;
        for (Timestamp t = track_.points.empty() ? t_ : t_ + interval; t <= end; t += interval) {
            t_ = t;
            emit({pos_.lon + jitter(rng_), pos_.lat + jitter(rng_)}, sog(rng_), cog(rng_), true);
        }
    }

    void sail(double bearing, double knots, Timestamp duration, Timestamp interval) {
        course_ = normalize_unsigned(bearing);
        for (Timestamp e = interval; e <= duration; e += interval) {
            advance(knots, interval);
        }
    }

    /// Course changes by `step_deg` at each of `steps` consecutive reports.
    void turn(double step_deg, int steps, double knots, Timestamp interval) {
        for (int i = 0; i < steps; ++i) {
            course_ = normalize_unsigned(course_ + step_deg);
            advance(knots, interval);
        }
    }

    /// Swings +a, -a, +a around the current course and settles on course + a.
    void zigzag(double amplitude, double knots, Timestamp interval) {
        const double base = course_;
        for (double off : {amplitude, -amplitude, amplitude}) {
            course_ = normalize_unsigned(base + off);
            advance(knots, interval);
        }
    }

    /// Keeps moving without reporting.
    void silence(Timestamp duration, double knots) {
        pos_ = destination_point(pos_, course_, knots * static_cast<double>(duration) / 3600.0);
        t_ += duration;
    }

private:
    void advance(double knots, Timestamp interval) {
        pos_ = destination_point(pos_, course_, knots * static_cast<double>(interval) / 3600.0);
        t_ += interval;
        emit(pos_, knots, course_, false);
    }

    void emit(LonLat where, double sog, double cog, bool moored) {
        AisPoint p;
        p.ts = t_;
        p.vessel_id = track_.vessel_id;
        p.lon = where.lon;
        p.lat = where.lat;
        p.sog = sog;
        p.cog = cog;
        if (!moored) {
            p.heading = std::round(cog);
        }
        p.ship_type = track_.ship_type;
        track_.points.push_back(std::move(p));
    }

    VesselTrack& track_;
    LonLat pos_;
    Timestamp t_;
    double course_ = 0.0;
    std::mt19937_64 rng_;
};

struct FleetOptions {
    std::size_t vessels = 20;
    std::size_t cycles = 2;          ///< trips per vessel before long-gap splits
    Timestamp interval = 30;         ///< seconds between moving reports
    Timestamp stop_interval = 60;
    Timestamp t0 = 1706050277;       ///< 2024-01-23 22:51:17
    std::uint64_t seed = 7;
    bool gaps = true;                ///< 45-minute in-trip silences
    bool long_gaps = true;           ///< 4-hour silences that split trips
};

/// Vessel k alternates between outbound and return legs, each leg: sail, a monotone turn,
/// sail, optional 45-min silence, optional 4-h silence, a zigzag maneuver, sail, then moor.
inline VesselTrack make_vessel(std::size_t k, const FleetOptions& o) {
    VesselTrack v;
    char id[16];
    std::snprintf(id, sizeof id, "2190%05zu", k);
    v.vessel_id = id;
    const LonLat home{10.2 + static_cast<double>(k % 5) * 0.45, 54.3 + static_cast<double>(k / 5 % 6) * 0.35};
    TrackBuilder b(v, home, o.t0 + static_cast<Timestamp>(k) * 97, o.seed * 1000003 + k);
    const double b0 = static_cast<double>((k * 37) % 360);
    const Timestamp dt = o.interval;

    auto berth = [&] {
        v.berths.push_back({"Port " + v.vessel_id + "-" + std::to_string(v.berths.size()), b.position()});
    };
    b.stop(70 * 60, o.stop_interval);
    berth();
    TripLabel trip{v.points.size() - 1, 0, true, 0};
    for (std::size_t c = 0; c < o.cycles; ++c) {
        const bool out = c % 2 == 0;
        const double dir = out ? 1.0 : -1.0;
        b.sail(out ? b0 : b0 + 240.0, 12.0, 30 * 60, dt);
        const std::size_t turn_first = b.next_index();
        b.turn(dir * 15.0, 4, 12.0, dt);
        v.turns.push_back({turn_first, b.next_index() - 1, EpisodeType::Turning});
        b.sail(b.course(), 12.0, 20 * 60, dt);
        if (o.gaps && (k + c) % 2 == 0) {
            b.silence(45 * 60, 12.0);
            ++trip.gaps;
            b.sail(b.course(), 12.0, 20 * 60, dt);
        }
        if (o.long_gaps && (k + c) % 3 == 0) {
            b.sail(b.course(), 12.0, 10 * 60, dt);
            trip.last = b.next_index() - 1;
            v.trips.push_back(trip);
            b.silence(4 * 3600, 2.0);
            trip = TripLabel{b.next_index(), 0, false, 0};
            b.sail(b.course(), 12.0, 10 * 60, dt);
        }
        const std::size_t zz_first = b.next_index();
        b.zigzag(10.0, 12.0, dt);
        v.turns.push_back({zz_first, b.next_index() - 1, EpisodeType::Maneuvering});
        b.sail(b.course(), 12.0, 15 * 60, dt);
        b.stop(70 * 60, o.stop_interval);
        berth();
        trip.last = b.next_index() - 1;
        v.trips.push_back(trip);
        trip = TripLabel{b.next_index() - 1, 0, true, 0};
    }
    return v;
}

inline std::vector<VesselTrack> make_fleet(const FleetOptions& o) {
    std::vector<VesselTrack> fleet;
    for (std::size_t k = 0; k < o.vessels; ++k) {
        fleet.push_back(make_vessel(k, o));
    }
    return fleet;
}

inline std::size_t point_count(const std::vector<VesselTrack>& fleet) {
    std::size_t n = 0;
    for (const auto& v : fleet) {
        n += v.points.size();
    }
    return n;
}

/// All reports of the fleet interleaved in time order, as a receiver would log them.
inline std::vector<AisPoint> interleaved(const std::vector<VesselTrack>& fleet) {
    std::vector<AisPoint> all;
    for (const auto& v : fleet) {
        all.insert(all.end(), v.points.begin(), v.points.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const AisPoint& a, const AisPoint& b) { return a.ts < b.ts; });
    return all;
}

inline std::string dma_timestamp(Timestamp ts) {
    const std::string s = format_epoch(ts); // YYYY-MM-DD HH:MM:SS
    return s.substr(8, 2) + "/" + s.substr(5, 2) + "/" + s.substr(0, 4) + " " + s.substr(11);
}

/// A Danish-Maritime-Authority style CSV with a few columns the pipeline ignores.
inline void write_dma_csv(const std::filesystem::path& path, const std::vector<AisPoint>& points) {
    std::ofstream out(path);
    out << "# Timestamp,Type of mobile,MMSI,Latitude,Longitude,Navigational status,ROT,SOG,COG,Heading,IMO,Name,Ship type\n";
    char buf[256];
    for (const auto& p : points) {
        const std::string hdg = p.heading ? std::to_string(static_cast<int>(*p.heading)) : "511";
        std::snprintf(buf, sizeof buf, "%s,Class A,%s,%.7f,%.7f,Under way using engine,0.0,%.1f,%.1f,%s,Unknown,,%s\n",
                      dma_timestamp(p.ts).c_str(), p.vessel_id.c_str(), p.lat, p.lon, p.sog, p.cog.value_or(0.0),
                      hdg.c_str(), p.ship_type.c_str());
        out << buf;
    }
}

struct WorldFiles {
    std::filesystem::path ports, coastal, offshore, tss, ferry, wind_speed, wind_direction, depth;
};

namespace detail {

inline nlohmann::json square(LonLat c, double half_deg) {
    return nlohmann::json::array({nlohmann::json::array({
        nlohmann::json::array({c.lon - half_deg, c.lat - half_deg}),
        nlohmann::json::array({c.lon + half_deg, c.lat - half_deg}),
        nlohmann::json::array({c.lon + half_deg, c.lat + half_deg}),
        nlohmann::json::array({c.lon - half_deg, c.lat + half_deg}),
        nlohmann::json::array({c.lon - half_deg, c.lat - half_deg}),
    })});
}

inline nlohmann::json feature(const std::string& name, const std::string& type, nlohmann::json coords,
                              nlohmann::json extra = nlohmann::json::object()) {
    extra["name"] = name;
    return {{"type", "Feature"}, {"properties", extra}, {"geometry", {{"type", type}, {"coordinates", coords}}}};
}

inline void write_collection(const std::filesystem::path& p, const nlohmann::json& features) {
    std::ofstream(p) << nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) << '\n';
}

} // namespace detail

struct Extent {
    double min_lon, min_lat, max_lon, max_lat;
};

/// Bounding box of the fleet grown by `pad_deg` and snapped outwards to `cell` multiples.
inline Extent fleet_extent(const std::vector<VesselTrack>& fleet, double pad_deg, double cell) {
    Extent e{180, 90, -180, -90};
    for (const auto& v : fleet) {
        for (const auto& p : v.points) {
            e.min_lon = std::min(e.min_lon, p.lon);
            e.max_lon = std::max(e.max_lon, p.lon);
            e.min_lat = std::min(e.min_lat, p.lat);
            e.max_lat = std::max(e.max_lat, p.lat);
        }
    }
    e.min_lon = std::floor((e.min_lon - pad_deg) / cell) * cell;
    e.min_lat = std::floor((e.min_lat - pad_deg) / cell) * cell;
    e.max_lon = std::ceil((e.max_lon + pad_deg) / cell) * cell;
    e.max_lat = std::ceil((e.max_lat + pad_deg) / cell) * cell;
    return e;
}

/// Writes a grid in the plain-text raster format; value(row, col) fills each cell.
template <typename Fn>
void write_grid(const std::filesystem::path& p, const std::string& name, const Extent& e, double cell, Fn&& value) {
    std::ofstream out(p);
    out.precision(10);
    out << "name=" << name << "\n";
    out << "bbox=" << e.min_lon << "," << e.min_lat << "," << e.max_lon << "," << e.max_lat << "\n";
    out << "cell_deg=" << cell << "\n";
    out << "missing=-9999\n";
    const auto rows = static_cast<std::size_t>(std::llround((e.max_lat - e.min_lat) / cell));
    const auto cols = static_cast<std::size_t>(std::llround((e.max_lon - e.min_lon) / cell));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out << (c ? " " : "") << value(r, c);
        }
        out << "\n";
    }
}

/// Context layers and grids that cover every episode of the fleet: a port around each berth,
/// a cape abeam of each vessel's first leg, an offshore strip, a TSS lane, one ferry route,
/// and wind and depth rasters over the whole extent.
inline WorldFiles write_world(const std::filesystem::path& dir, const std::vector<VesselTrack>& fleet) {
    std::filesystem::create_directories(dir);
    WorldFiles w{dir / "ports.geojson",     dir / "coastal.geojson",   dir / "offshore.geojson",
                 dir / "tss.geojson",       dir / "ferry.geojson",     dir / "wind_speed.grid",
                 dir / "wind_direction.grid", dir / "depth.grid"};
    auto ports = nlohmann::json::array(), capes = nlohmann::json::array();
    for (const auto& v : fleet) {
        for (const auto& b : v.berths) {
            ports.push_back(detail::feature(b.name, "Polygon", detail::square(b.where, 0.004)));
        }
        if (v.points.size() > 100) {
            const LonLat mid = v.points[100].location();
            const LonLat cape = destination_point(mid, normalize_unsigned(v.points[100].cog.value_or(0) + 90.0), 2.0);
            capes.push_back(detail::feature("Cape " + v.vessel_id, "Point", {cape.lon, cape.lat}));
        }
    }
    detail::write_collection(w.ports, ports);
    detail::write_collection(w.coastal, capes);

    const Extent e = fleet_extent(fleet, 0.3, 0.1);
    const double mid_lon = (e.min_lon + e.max_lon) / 2.0;
    const nlohmann::json strip = nlohmann::json::array({nlohmann::json::array({
        {mid_lon - 0.05, e.min_lat}, {mid_lon + 0.05, e.min_lat}, {mid_lon + 0.05, e.max_lat},
        {mid_lon - 0.05, e.max_lat}, {mid_lon - 0.05, e.min_lat}})});
    detail::write_collection(w.offshore, nlohmann::json::array({detail::feature("Central Belt", "Polygon", strip)}));
    const double mid_lat = (e.min_lat + e.max_lat) / 2.0;
    const nlohmann::json lane = nlohmann::json::array({nlohmann::json::array({
        {e.min_lon, mid_lat - 0.03}, {e.max_lon, mid_lat - 0.03}, {e.max_lon, mid_lat + 0.03},
        {e.min_lon, mid_lat + 0.03}, {e.min_lon, mid_lat - 0.03}})});
    detail::write_collection(w.tss, nlohmann::json::array({detail::feature("Eastbound Lane", "Polygon", lane,
                                                                           {{"bearing", 90.0}})}));
    // One ferry route along vessel 0's first berth-to-berth trip, offset slightly north.
    auto route = nlohmann::json::array();
    const TripLabel* chosen = nullptr;
    if (!fleet.empty()) {
        const auto& trips = fleet.front().trips;
        for (std::size_t t = 0; t < trips.size() && !chosen; ++t) {
            if (trips[t].departs_from_stop && (t + 1 == trips.size() || trips[t + 1].departs_from_stop)) {
                chosen = &trips[t];
            }
        }
    }
    if (chosen) {
        const auto& v = fleet.front();
        auto nearest_berth = [&](LonLat p) {
            const Berth* best = &v.berths.front();
            for (const auto& b : v.berths) {
                if (haversine_nm(b.where, p) < haversine_nm(best->where, p)) {
                    best = &b;
                }
            }
            return best->name;
        };
        for (std::size_t i = chosen->first; i <= chosen->last; i += 5) {
            route.push_back({v.points[i].lon, v.points[i].lat + 0.001});
        }
        route.push_back({v.points[chosen->last].lon, v.points[chosen->last].lat});
        const std::string from = nearest_berth(v.points[chosen->first].location());
        const std::string to = nearest_berth(v.points[chosen->last].location());
        detail::write_collection(w.ferry, nlohmann::json::array({detail::feature(
                                              "Ferry " + from, "LineString", route,
                                              {{"from_port", from}, {"to_port", to}})}));
    } else {
        detail::write_collection(w.ferry, nlohmann::json::array());
    }

    write_grid(w.wind_speed, "wind_speed", e, 0.1, [](std::size_t r, std::size_t c) { return 3.0 + static_cast<double>((r * 7 + c * 3) % 10); });
    write_grid(w.wind_direction, "wind_direction", e, 0.1, [](std::size_t r, std::size_t c) { return static_cast<double>((250 + r * 5 + c) % 360); });
    write_grid(w.depth, "depth", e, 0.1, [](std::size_t r, std::size_t c) { return -5.0 - static_cast<double>((r * 3 + c * 11) % 40); });
    return w;
}

/// A pipeline config over the given inputs; `extra` is appended verbatim.
inline void write_config(const std::filesystem::path& path, const std::vector<std::filesystem::path>& ais,
                         const WorldFiles& w, const std::filesystem::path& out_dir, const std::string& extra = "") {
    std::ofstream out(path);
    out << "inputs:\n  ais:\n";
    for (const auto& a : ais) {
        out << "    - " << a.string() << "\n";
    }
    out << "  layers:\n"
        << "    - {kind: port, path: " << w.ports.string() << "}\n"
        << "    - {kind: coastal, path: " << w.coastal.string() << "}\n"
        << "    - {kind: offshore_area, path: " << w.offshore.string() << "}\n"
        << "    - {kind: tss_lane, path: " << w.tss.string() << "}\n"
        << "    - {kind: ferry_route, path: " << w.ferry.string() << "}\n"
        << "  grids:\n"
        << "    wind_speed: " << w.wind_speed.string() << "\n"
        << "    wind_direction: " << w.wind_direction.string() << "\n"
        << "    depth: " << w.depth.string() << "\n"
        << "output:\n  dir: " << out_dir.string() << "\n  formats: [csv, map, json, txt]\n"
        << extra;
}

} // namespace vtraj::synth

#endif // VTRAJ_TESTS_SYNTH_HPP
