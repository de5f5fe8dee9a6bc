#ifndef VTRAJ_GRID_HPP
#define VTRAJ_GRID_HPP

#include "vtraj/core.hpp"
#include "vtraj/ingest.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace vtraj {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Regular lon/lat raster with optional time slices. Rows run north to south.
struct GridField {
    std::string name;
    double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;
    double cell_deg = 1.0;
    std::size_t rows = 0, cols = 0;
    std::vector<Timestamp> times; ///< empty for static fields
    double missing = -9999.0;
    std::vector<double> values;   ///< slice-major, then row-major

    std::size_t slices() const { return times.empty() ? 1 : times.size(); }

    /// Cell index (row, col) containing p; nullopt outside the extent.
    std::optional<std::pair<std::size_t, std::size_t>> cell_of(LonLat p) const {
        if (p.lon < min_lon || p.lon > max_lon || p.lat < min_lat || p.lat > max_lat) {
            return std::nullopt;
        }
        auto col = static_cast<std::size_t>(std::floor((p.lon - min_lon) / cell_deg));
        auto row = static_cast<std::size_t>(std::floor((max_lat - p.lat) / cell_deg));
        return std::pair{std::min(row, rows - 1), std::min(col, cols - 1)};
    }

    /// Nearest slice to ts; nullopt when ts lies beyond half a slice interval outside the series.
    std::optional<std::size_t> slice_of(std::optional<Timestamp> ts) const {
        if (times.size() <= 1) {
            return 0;
        }
        if (!ts) {
            return std::nullopt;
        }
        const double half_first = static_cast<double>(times[1] - times[0]) / 2.0;
        const double half_last = static_cast<double>(times.back() - times[times.size() - 2]) / 2.0;
        if (static_cast<double>(*ts) < static_cast<double>(times.front()) - half_first ||
            static_cast<double>(*ts) > static_cast<double>(times.back()) + half_last) {
            return std::nullopt;
        }
        const auto it = std::lower_bound(times.begin(), times.end(), *ts);
        if (it == times.begin()) {
            return 0;
        }
        if (it == times.end()) {
            return times.size() - 1;
        }
        const auto hi = static_cast<std::size_t>(it - times.begin());
        return (*ts - times[hi - 1] <= times[hi] - *ts) ? hi - 1 : hi;
    }

    /// Nearest-cell, nearest-slice value; nullopt outside coverage or on the missing sentinel.
    std::optional<double> sample(LonLat p, std::optional<Timestamp> ts = std::nullopt) const {
        const auto cell = cell_of(p);
        const auto slice = slice_of(ts);
        if (!cell || !slice) {
            return std::nullopt;
        }
        const double v = values[(*slice * rows + cell->first) * cols + cell->second];
        if (!std::isfinite(v) || v == missing) {
            return std::nullopt;
        }
        return v;
    }
};

/// Reads the plain-text grid format: `key=value` header lines (name, bbox, cell_deg, times,
/// missing) followed by one line of space-separated values per grid row per slice.
inline GridField parse_grid(std::istream& in, const std::string& origin) {
    GridField g;
    bool have_bbox = false, have_cell = false;
    std::string line;
    std::vector<double> values;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) { throw GridError(origin + ":" + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (values.empty() && eq != std::string_view::npos) {
            const auto key = t.substr(0, eq);
            const auto val = t.substr(eq + 1);
            if (key == "name") {
                g.name = std::string(val);
            } else if (key == "bbox") {
                const auto parts = detail::split_fields(val, ',');
                if (parts.size() != 4) {
                    fail("bbox needs 4 values");
                }
                double b[4];
                for (int i = 0; i < 4; ++i) {
                    const auto v = detail::parse_double(parts[i]);
                    if (!v) {
                        fail("bad bbox value");
                    }
                    b[i] = *v;
                }
                g.min_lon = b[0], g.min_lat = b[1], g.max_lon = b[2], g.max_lat = b[3];
                have_bbox = true;
            } else if (key == "cell_deg") {
                const auto v = detail::parse_double(val);
                if (!v || *v <= 0.0) {
                    fail("bad cell_deg");
                }
                g.cell_deg = *v;
                have_cell = true;
            } else if (key == "times") {
                for (auto part : detail::split_fields(val, ',')) {
                    const auto v = detail::parse_int(part);
                    if (!v) {
                        fail("bad time value");
                    }
                    g.times.push_back(*v);
                }
                if (!std::is_sorted(g.times.begin(), g.times.end())) {
                    fail("times must be ascending");
                }
            } else if (key == "missing") {
                const auto v = detail::parse_double(val);
                if (!v) {
                    fail("bad missing value");
                }
                g.missing = *v;
            } else {
                fail("unknown header key");
            }
            continue;
        }
        std::istringstream row{std::string(t)};
        std::string tok;
        while (row >> tok) {
            if (tok == "nan" || tok == "NaN") {
                values.push_back(g.missing);
                continue;
            }
            const auto v = detail::parse_double(tok);
            if (!v) {
                fail("bad cell value '" + tok + "'");
            }
            values.push_back(*v);
        }
    }
    if (!have_bbox || !have_cell) {
        throw GridError(origin + ": header needs bbox= and cell_deg=");
    }
    const double w = (g.max_lon - g.min_lon) / g.cell_deg;
    const double h = (g.max_lat - g.min_lat) / g.cell_deg;
    g.cols = static_cast<std::size_t>(std::llround(w));
    g.rows = static_cast<std::size_t>(std::llround(h));
    if (g.cols == 0 || g.rows == 0 || std::abs(w - static_cast<double>(g.cols)) > 1e-6 ||
        std::abs(h - static_cast<double>(g.rows)) > 1e-6) {
        throw GridError(origin + ": bbox is not a whole number of cells");
    }
    if (values.size() != g.rows * g.cols * g.slices()) {
        throw GridError(origin + ": expected " + std::to_string(g.rows * g.cols * g.slices()) + " values, got " +
                        std::to_string(values.size()));
    }
    g.values = std::move(values);
    return g;
}

inline GridField load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw GridError(path + ": cannot open");
    }
    return parse_grid(in, path);
}

/// Lower bounds (m/s) of Beaufort forces 1..12 (WMO).
inline constexpr std::array<double, 12> beaufort_lower_bounds = {0.3,  1.6,  3.4,  5.5,  8.0,  10.8,
                                                                 13.9, 17.2, 20.8, 24.5, 28.5, 32.7};

inline int beaufort_of(double speed_ms) {
    int b = 0;
    for (double lb : beaufort_lower_bounds) {
        if (speed_ms >= lb) {
            ++b;
        }
    }
    return b;
}

} // namespace vtraj

#endif // VTRAJ_GRID_HPP
