#ifndef VTRAJ_INGEST_HPP
#define VTRAJ_INGEST_HPP

#include "vtraj/core.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

namespace vtraj {

enum class RejectionReason : std::uint8_t { Duplicate, InvalidCoordinates, OutOfOrder, Unparseable, Teleport };

inline std::string_view to_string(RejectionReason r) {
    switch (r) {
    case RejectionReason::Duplicate:
        return "DUPLICATE";
    case RejectionReason::InvalidCoordinates:
        return "INVALID_COORDINATES";
    case RejectionReason::OutOfOrder:
        return "OUT_OF_ORDER";
    case RejectionReason::Unparseable:
        return "UNPARSEABLE";
    case RejectionReason::Teleport:
        return "TELEPORT";
    }
    return "UNPARSEABLE";
}

struct Rejection {
    RejectionReason reason = RejectionReason::Unparseable;
    std::string vessel_id;
    Timestamp ts = 0;
    std::string field; ///< offending field for UNPARSEABLE, empty otherwise

    friend bool operator==(const Rejection&, const Rejection&) = default;
};

/// Which column of a delimited export holds which AisPoint field. Entries are header
/// names, or zero-based column indices written as digits.
struct ColumnMap {
    char delimiter = ',';
    bool has_header = true;
    /// "epoch" for integer UNIX seconds, otherwise a pattern over %Y %m %d %H %M %S.
    std::string timestamp_format = "%d/%m/%Y %H:%M:%S";
    std::string timestamp = "# Timestamp";
    std::string vessel_id = "MMSI";
    std::string lat = "Latitude";
    std::string lon = "Longitude";
    std::string sog = "SOG";
    std::string cog = "COG";
    std::string heading = "Heading";
    std::string ship_type = "Ship type";
};

struct ResolvedColumns {
    std::size_t timestamp = 0, vessel_id = 0, lat = 0, lon = 0, sog = 0, cog = 0, heading = 0, ship_type = 0;
    std::size_t max_index() const {
        return std::max({timestamp, vessel_id, lat, lon, sog, cog, heading, ship_type});
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

/// Splits one delimited line; double quotes group a field containing delimiters.
inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            quoted = !quoted;
        } else if (c == delim && !quoted) {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.push_back(trim(line.substr(start)));
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

} // namespace detail

/// Parses a timestamp according to `format` ("epoch" or a %Y/%m/%d/%H/%M/%S pattern).
inline std::optional<Timestamp> parse_timestamp(std::string_view text, std::string_view format) {
    text = detail::trim(text);
    if (format == "epoch") {
        return detail::parse_int(text);
    }
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < format.size(); ++i) {
        if (format[i] == '%' && i + 1 < format.size()) {
            const char spec = format[++i];
            const std::size_t width = spec == 'Y' ? 4 : 2;
            std::size_t len = 0;
            while (len < width && pos + len < text.size() && text[pos + len] >= '0' && text[pos + len] <= '9') {
                ++len;
            }
            if (len == 0) {
                return std::nullopt;
            }
            int v = 0;
            std::from_chars(text.data() + pos, text.data() + pos + len, v);
            pos += len;
            switch (spec) {
            case 'Y': year = v; break;
            case 'm': month = v; break;
            case 'd': day = v; break;
            case 'H': hour = v; break;
            case 'M': minute = v; break;
            case 'S': second = v; break;
            default: return std::nullopt;
            }
        } else {
            if (pos >= text.size() || text[pos] != format[i]) {
                return std::nullopt;
            }
            ++pos;
        }
    }
    if (pos != text.size() || month < 1 || day < 1) {
        return std::nullopt;
    }
    try {
        return civil_to_epoch(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour, minute, second);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

/// Resolves names to indices against a header row. Throws std::runtime_error naming a missing column.
inline ResolvedColumns resolve_columns(const ColumnMap& map, const std::vector<std::string_view>& header) {
    auto find = [&](const std::string& key) -> std::size_t {
        if (detail::all_digits(key)) {
            return static_cast<std::size_t>(std::stoul(key));
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == key) {
                return i;
            }
        }
        throw std::runtime_error("column '" + key + "' not found in header");
    };
    return {find(map.timestamp), find(map.vessel_id), find(map.lat), find(map.lon),
            find(map.sog),       find(map.cog),       find(map.heading), find(map.ship_type)};
}

using ParseResult = std::variant<AisPoint, Rejection>;

/// Parses one data row. Never throws; malformed input becomes a Rejection.
inline ParseResult parse_record(std::string_view line, const ResolvedColumns& cols, const ColumnMap& map) {
    const auto fields = detail::split_fields(line, map.delimiter);
    Rejection rej;
    if (cols.vessel_id < fields.size()) {
        rej.vessel_id = std::string(fields[cols.vessel_id]);
    }
    auto unparseable = [&](std::string field) {
        rej.reason = RejectionReason::Unparseable;
        rej.field = std::move(field);
        return ParseResult{rej};
    };
    if (fields.size() <= cols.max_index()) {
        return unparseable("columns");
    }
    if (rej.vessel_id.empty()) {
        return unparseable("vessel_id");
    }
    const auto ts = parse_timestamp(fields[cols.timestamp], map.timestamp_format);
    if (!ts || *ts <= 0) {
        return unparseable("timestamp");
    }
    rej.ts = *ts;
    const auto lat = detail::parse_double(fields[cols.lat]);
    if (!lat) {
        return unparseable("lat");
    }
    const auto lon = detail::parse_double(fields[cols.lon]);
    if (!lon) {
        return unparseable("lon");
    }
    // (0, 0) is the usual default fill of a receiver without a fix.
    if (!valid_coordinates(*lon, *lat) || (*lon == 0.0 && *lat == 0.0)) {
        rej.reason = RejectionReason::InvalidCoordinates;
        return rej;
    }
    const auto sog = detail::parse_double(fields[cols.sog]);
    if (!sog || *sog < 0.0) {
        return unparseable("sog");
    }

    AisPoint p;
    p.ts = *ts;
    p.vessel_id = std::move(rej.vessel_id);
    p.lon = *lon;
    p.lat = *lat;
    p.sog = *sog;
    // 360 and 511 are the AIS "not available" codes for COG and heading.
    if (auto cog = detail::parse_double(fields[cols.cog]); cog && *cog >= 0.0 && *cog < 360.0) {
        p.cog = *cog;
    }
    if (auto hdg = detail::parse_double(fields[cols.heading]); hdg && *hdg >= 0.0 && *hdg < 360.0) {
        p.heading = *hdg;
    }
    p.ship_type = std::string(fields[cols.ship_type]);
    return p;
}

struct IngestResult {
    std::vector<AisPoint> points;
    std::vector<Rejection> rejections;
};

/// Reads one delimited AIS export. Throws std::runtime_error when the file cannot be opened
/// or the header lacks a mapped column.
inline IngestResult read_ais_file(const std::string& path, const ColumnMap& map) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open AIS file " + path);
    }
    IngestResult out;
    std::string line;
    ResolvedColumns cols;
    if (map.has_header) {
        if (!std::getline(in, line)) {
            return out;
        }
        cols = resolve_columns(map, detail::split_fields(line, map.delimiter));
    } else {
        cols = resolve_columns(map, {});
    }
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        auto r = parse_record(line, cols, map);
        if (auto* p = std::get_if<AisPoint>(&r)) {
            out.points.push_back(std::move(*p));
        } else {
            out.rejections.push_back(std::get<Rejection>(std::move(r)));
        }
    }
    return out;
}

struct CleanParams {
    double max_speed_knots = 80.0; ///< implied speeds above this are TELEPORT
};

struct CleanResult {
    std::vector<AisPoint> kept;
    std::vector<Rejection> rejected;
};

/// Noise filter over one vessel's stream: duplicates, invalid coordinates, delayed
/// (non-increasing) timestamps and physically impossible jumps.
inline CleanResult clean_stream(std::span<const AisPoint> points, const CleanParams& params = {}) {
    struct Key {
        Timestamp ts;
        double lon, lat;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            const auto h1 = std::hash<Timestamp>{}(k.ts);
            const auto h2 = std::hash<double>{}(k.lon);
            const auto h3 = std::hash<double>{}(k.lat);
            return h1 ^ (h2 * 0x9e3779b97f4a7c15ULL) ^ (h3 << 1);
        }
    };

    CleanResult out;
    out.kept.reserve(points.size());
    std::unordered_set<Key, KeyHash> seen;
    auto reject = [&](const AisPoint& p, RejectionReason r) {
        out.rejected.push_back(Rejection{r, p.vessel_id, p.ts, {}});
    };
    for (const AisPoint& p : points) {
        if (!valid_coordinates(p.lon, p.lat) || (p.lon == 0.0 && p.lat == 0.0)) {
            reject(p, RejectionReason::InvalidCoordinates);
            continue;
        }
        const Key key{p.ts, p.lon, p.lat};
        if (seen.contains(key)) {
            reject(p, RejectionReason::Duplicate);
            continue;
        }
        if (!out.kept.empty()) {
            const AisPoint& last = out.kept.back();
            if (p.ts <= last.ts) {
                reject(p, RejectionReason::OutOfOrder);
                continue;
            }
            const double hours = static_cast<double>(p.ts - last.ts) / 3600.0;
            if (haversine_nm(last.location(), p.location()) / hours > params.max_speed_knots) {
                reject(p, RejectionReason::Teleport);
                continue;
            }
        }
        seen.insert(key);
        out.kept.push_back(p);
    }
    return out;
}

/// Buckets records per vessel; each bucket is stably sorted by timestamp.
inline std::map<std::string, std::vector<AisPoint>> group_by_vessel(std::vector<AisPoint> records) {
    std::map<std::string, std::vector<AisPoint>> out;
    for (auto& r : records) {
        out[r.vessel_id].push_back(std::move(r));
    }
    for (auto& [id, seq] : out) {
        std::stable_sort(seq.begin(), seq.end(), [](const AisPoint& a, const AisPoint& b) { return a.ts < b.ts; });
    }
    return out;
}

/// Rejection log, one `vessel_id,ts,reason` line per dropped record.
inline void write_rejection_log(std::ostream& os, std::span<const Rejection> rejections) {
    for (const auto& r : rejections) {
        os << r.vessel_id << ',' << r.ts << ',' << to_string(r.reason) << '\n';
    }
}

} // namespace vtraj

#endif // VTRAJ_INGEST_HPP
