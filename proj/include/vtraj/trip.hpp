#ifndef VTRAJ_TRIP_HPP
#define VTRAJ_TRIP_HPP

#include "vtraj/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vtraj {

enum class EpisodeType : std::uint8_t { Stopped, Turning, Maneuvering, Gap, Sailing };

inline constexpr std::array<EpisodeType, 5> all_episode_types = {
    EpisodeType::Sailing, EpisodeType::Turning, EpisodeType::Maneuvering, EpisodeType::Stopped, EpisodeType::Gap};

inline std::string_view to_string(EpisodeType t) {
    switch (t) {
    case EpisodeType::Stopped:
        return "STOPPED";
    case EpisodeType::Turning:
        return "TURNING";
    case EpisodeType::Maneuvering:
        return "MANEUVERING";
    case EpisodeType::Gap:
        return "COMMUNICATION GAP";
    case EpisodeType::Sailing:
        return "SAILING";
    }
    return "SAILING";
}

inline std::optional<EpisodeType> parse_episode_type(std::string_view s) {
    for (auto t : all_episode_types) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

struct EpisodeStats {
    Timestamp duration_s = 0;
    double distance_nm = 0.0;
    double speed_knots = 0.0;
    /// Total signed heading change for TURNING/MANEUVERING, overall bearing in (-180,180] otherwise.
    double heading_deg = 0.0;
    CompassDirection direction = CompassDirection::North;

    friend bool operator==(const EpisodeStats&, const EpisodeStats&) = default;
};

/// Context attached to one episode. Absent fields mean no source covered the episode.
struct ContextBundle {
    std::optional<std::string> placemarks;
    std::optional<int> wind_beaufort;
    std::optional<CompassDirection> wind_direction;
    std::optional<int> sea_depth_m; ///< negative below the sea surface
    std::optional<bool> tss_compliant;

    bool empty() const {
        return !placemarks && !wind_beaufort && !wind_direction && !sea_depth_m && !tss_compliant;
    }
    friend bool operator==(const ContextBundle&, const ContextBundle&) = default;
};

struct Episode {
    EpisodeType type = EpisodeType::Sailing;
    Timestamp start_ts = 0;
    Timestamp end_ts = 0;
    LonLat start_loc;
    LonLat end_loc;
    /// Centroid for STOPPED, every vertex for TURNING/MANEUVERING, two endpoints otherwise.
    std::vector<LonLat> path;
    EpisodeStats stats;
    ContextBundle context;
    /// Inclusive range of the trip's raw points this episode abstracts.
    std::size_t first = 0;
    std::size_t last = 0;

    friend bool operator==(const Episode&, const Episode&) = default;
};

struct TripStats {
    Timestamp duration_s = 0;
    double distance_nm = 0.0;
    double speed_knots = 0.0;

    friend bool operator==(const TripStats&, const TripStats&) = default;
};

struct RouteMatch {
    std::string route_name;
    double similarity_nm = 0.0; ///< DTW cost divided by alignment length
    double raw_cost_nm = 0.0;
    std::size_t alignment_length = 0;

    friend bool operator==(const RouteMatch&, const RouteMatch&) = default;
};

struct Trip {
    std::string trip_id;
    std::string vessel_id;
    std::string ship_type;
    /// Non-noise raw reports of the trip, time ordered.
    std::vector<AisPoint> points;
    std::vector<Episode> episodes;
    TripStats stats;
    /// True when the first point is the last report of a stop (departure from a berth).
    bool departs_from_stop = false;
    std::optional<std::string> origin_port;
    std::optional<std::string> destination_port;
    std::optional<RouteMatch> ferry_route;

    Timestamp start_ts() const { return points.empty() ? 0 : points.front().ts; }
    Timestamp end_ts() const { return points.empty() ? 0 : points.back().ts; }

    friend bool operator==(const Trip&, const Trip&) = default;
};

inline std::string make_trip_id(const std::string& vessel_id, Timestamp departure) {
    return vessel_id + "_" + std::to_string(departure);
}

} // namespace vtraj

#endif // VTRAJ_TRIP_HPP
