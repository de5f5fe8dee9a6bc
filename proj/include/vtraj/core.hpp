#ifndef VTRAJ_CORE_HPP
#define VTRAJ_CORE_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vtraj {

/// Mean Earth radius (IUGG) in metres.
inline constexpr double earth_radius_m = 6371008.8;
inline constexpr double metres_per_nm = 1852.0;
inline constexpr double earth_radius_nm = earth_radius_m / metres_per_nm;

using Timestamp = std::int64_t; ///< UNIX seconds, GMT.

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const LonLat&, const LonLat&) = default;
};

inline bool valid_coordinates(double lon, double lat) {
    return std::isfinite(lon) && std::isfinite(lat) && lat >= -90.0 && lat <= 90.0 && lon > -180.0 &&
           lon <= 180.0;
}

/// One decoded AIS position report.
struct AisPoint {
    Timestamp ts = 0;
    std::string vessel_id;
    double lon = 0.0;
    double lat = 0.0;
    double sog = 0.0;                ///< knots
    std::optional<double> cog;       ///< degrees [0,360)
    std::optional<double> heading;   ///< degrees [0,360); absent when the transponder reports none
    std::string ship_type;

    LonLat location() const { return {lon, lat}; }

    /// Course used for turn detection: COG, falling back to true heading.
    std::optional<double> course() const { return cog ? cog : heading; }

    friend bool operator==(const AisPoint&, const AisPoint&) = default;
};

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Great-circle distance on the mean-radius sphere, in nautical miles.
inline double haversine_nm(LonLat a, LonLat b) {
    if (a == b) {
        return 0.0;
    }
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * std::asin(std::sqrt(h)) * earth_radius_nm;
}

/// Initial great-circle bearing from a to b in degrees [0,360). Zero for coincident points.
inline double initial_bearing(LonLat a, LonLat b) {
    if (a == b) {
        return 0.0;
    }
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dlambda = deg2rad(b.lon - a.lon);
    const double y = std::sin(dlambda) * std::cos(phi2);
    const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
    double brg = rad2deg(std::atan2(y, x));
    if (brg < 0.0) {
        brg += 360.0;
    }
    return brg >= 360.0 ? 0.0 : brg;
}

/// Point reached travelling `distance_nm` from `origin` along initial bearing `bearing_deg`.
inline LonLat destination_point(LonLat origin, double bearing_deg, double distance_nm) {
    const double delta = distance_nm / earth_radius_nm;
    const double theta = deg2rad(bearing_deg);
    const double phi1 = deg2rad(origin.lat);
    const double lambda1 = deg2rad(origin.lon);
    const double phi2 =
        std::asin(std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta));
    const double lambda2 = lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                                std::cos(delta) - std::sin(phi1) * std::sin(phi2));
    double lon = rad2deg(lambda2);
    lon = std::fmod(lon + 540.0, 360.0) - 180.0;
    if (lon == -180.0) {
        lon = 180.0;
    }
    return {lon, rad2deg(phi2)};
}

/// Maps any finite angle to (-180, 180].
inline double normalize_signed(double deg) {
    double r = std::fmod(deg + 180.0, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    r -= 180.0;
    return r == -180.0 ? 180.0 : r;
}

/// Maps any finite angle to [0, 360).
inline double normalize_unsigned(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    return r >= 360.0 ? 0.0 : r;
}

/// Smallest signed rotation taking `from` onto `to`, in (-180, 180].
inline double heading_delta(double from, double to) { return normalize_signed(to - from); }

enum class CompassDirection : std::uint8_t { North, NorthEast, East, SouthEast, South, SouthWest, West, NorthWest };

inline constexpr std::array<std::string_view, 8> compass_names = {
    "NORTH", "NORTH EAST", "EAST", "SOUTH EAST", "SOUTH", "SOUTH WEST", "WEST", "NORTH WEST"};

inline std::string_view to_string(CompassDirection d) { return compass_names[static_cast<std::size_t>(d)]; }

inline std::optional<CompassDirection> parse_compass(std::string_view s) {
    for (std::size_t i = 0; i < compass_names.size(); ++i) {
        if (compass_names[i] == s) {
            return static_cast<CompassDirection>(i);
        }
    }
    return std::nullopt;
}

/// 45-degree sector containing the heading; NORTH covers [337.5, 22.5).
inline CompassDirection compass_of(double heading_deg) {
    const double n = normalize_unsigned(heading_deg);
    const auto idx = static_cast<int>(std::floor((n + 22.5) / 45.0)) % 8;
    return static_cast<CompassDirection>(idx);
}

/// "YYYY-MM-DD HH:MM:SS" in GMT.
inline std::string format_epoch(Timestamp ts) {
    using namespace std::chrono;
    const auto day = static_cast<std::int64_t>(std::floor(static_cast<double>(ts) / 86400.0));
    const std::int64_t secs = ts - day * 86400;
    const year_month_day ymd{sys_days{days{day}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
    return buf;
}

/// UNIX seconds for a GMT civil time. Throws std::invalid_argument on an impossible date.
inline Timestamp civil_to_epoch(int year, unsigned month, unsigned day, int hour, int minute, int second) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60) {
        throw std::invalid_argument("invalid civil time");
    }
    const auto d = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(d) * 86400 + hour * 3600 + minute * 60 + second;
}

/// Circular mean of angles in degrees; nullopt when the resultant vanishes or there is no input.
template <typename Range>
std::optional<double> circular_mean(const Range& angles) {
    double s = 0.0;
    double c = 0.0;
    std::size_t n = 0;
    for (double a : angles) {
        s += std::sin(deg2rad(a));
        c += std::cos(deg2rad(a));
        ++n;
    }
    if (n == 0 || std::hypot(s, c) < 1e-12 * static_cast<double>(n)) {
        return std::nullopt;
    }
    return normalize_unsigned(rad2deg(std::atan2(s, c)));
}

} // namespace vtraj

#endif // VTRAJ_CORE_HPP
