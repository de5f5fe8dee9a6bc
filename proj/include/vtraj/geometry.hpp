#ifndef VTRAJ_GEOMETRY_HPP
#define VTRAJ_GEOMETRY_HPP

#include "vtraj/core.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace vtraj {

using Ring = std::vector<LonLat>;
/// Outer ring first, holes after.
using Polygon = std::vector<Ring>;

/// A feature geometry: any mix of points, linestrings and polygons (multi-geometries flatten here).
struct Geometry {
    std::vector<LonLat> points;
    std::vector<std::vector<LonLat>> lines;
    std::vector<Polygon> polygons;

    bool empty() const { return points.empty() && lines.empty() && polygons.empty(); }
};

struct BoundingBox {
    double min_lon = std::numeric_limits<double>::infinity();
    double min_lat = std::numeric_limits<double>::infinity();
    double max_lon = -std::numeric_limits<double>::infinity();
    double max_lat = -std::numeric_limits<double>::infinity();

    void extend(LonLat p) {
        min_lon = std::min(min_lon, p.lon);
        min_lat = std::min(min_lat, p.lat);
        max_lon = std::max(max_lon, p.lon);
        max_lat = std::max(max_lat, p.lat);
    }
    bool valid() const { return min_lon <= max_lon && min_lat <= max_lat; }
};

inline BoundingBox bounds_of(const Geometry& g) {
    BoundingBox b;
    for (auto p : g.points) {
        b.extend(p);
    }
    for (const auto& l : g.lines) {
        for (auto p : l) {
            b.extend(p);
        }
    }
    for (const auto& poly : g.polygons) {
        for (const auto& ring : poly) {
            for (auto p : ring) {
                b.extend(p);
            }
        }
    }
    return b;
}

namespace detail {

struct Vec3 {
    double x, y, z;
};
inline Vec3 to_vec(LonLat p) {
    const double phi = deg2rad(p.lat);
    const double lam = deg2rad(p.lon);
    return {std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi)};
}
inline Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline double orient(LonLat a, LonLat b, LonLat c) {
    return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

inline bool on_segment(LonLat a, LonLat b, LonLat p) {
    return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) && std::min(a.lat, b.lat) <= p.lat &&
           p.lat <= std::max(a.lat, b.lat);
}

} // namespace detail

/// Shortest distance in nautical miles from `p` to the great-circle arc a-b.
inline double point_segment_nm(LonLat p, LonLat a, LonLat b) {
    const double to_ends = std::min(haversine_nm(p, a), haversine_nm(p, b));
    if (a == b) {
        return to_ends;
    }
    using namespace detail;
    const Vec3 va = to_vec(a), vb = to_vec(b), vp = to_vec(p);
    Vec3 n = cross(va, vb);
    const double nn = norm(n);
    if (nn < 1e-15) {
        return to_ends;
    }
    n = {n.x / nn, n.y / nn, n.z / nn};
    const double s = dot(vp, n);
    const Vec3 proj{vp.x - s * n.x, vp.y - s * n.y, vp.z - s * n.z};
    // The foot of the perpendicular must fall on the minor arc between a and b.
    if (dot(cross(va, proj), n) >= 0.0 && dot(cross(proj, vb), n) >= 0.0) {
        return std::min(to_ends, std::asin(std::min(1.0, std::abs(s))) * earth_radius_nm);
    }
    return to_ends;
}

/// Planar (lon/lat) segment intersection, touching counts.
inline bool segments_intersect(LonLat a, LonLat b, LonLat c, LonLat d) {
    using detail::orient;
    const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    using detail::on_segment;
    return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) || (d3 == 0 && on_segment(a, b, c)) ||
           (d4 == 0 && on_segment(a, b, d));
}

inline bool ring_contains(const Ring& ring, LonLat p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const LonLat a = ring[i], b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat) &&
            p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon) {
            inside = !inside;
        }
    }
    return inside;
}

inline bool polygon_contains(const Polygon& poly, LonLat p) {
    if (poly.empty() || !ring_contains(poly.front(), p)) {
        return false;
    }
    for (std::size_t h = 1; h < poly.size(); ++h) {
        if (ring_contains(poly[h], p)) {
            return false;
        }
    }
    return true;
}

inline bool geometry_contains(const Geometry& g, LonLat p) {
    return std::any_of(g.polygons.begin(), g.polygons.end(), [&](const Polygon& poly) { return polygon_contains(poly, p); });
}

/// Distance from `p` to the nearest polygon edge.
inline double distance_to_boundary_nm(const Polygon& poly, LonLat p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ring : poly) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            best = std::min(best, point_segment_nm(p, ring[i], ring[i + 1]));
        }
    }
    return best;
}

namespace detail {

template <typename Fn>
void for_each_segment(const Geometry& g, Fn&& fn) {
    for (const auto& l : g.lines) {
        for (std::size_t i = 0; i + 1 < l.size(); ++i) {
            fn(l[i], l[i + 1]);
        }
    }
    for (const auto& poly : g.polygons) {
        for (const auto& ring : poly) {
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                fn(ring[i], ring[i + 1]);
            }
        }
    }
}

} // namespace detail

/// Index of the first path segment (or vertex, for single-point paths) touching a polygon of `g`;
/// nullopt if the path never enters any polygon.
inline std::optional<std::size_t> first_crossing(std::span<const LonLat> path, const Geometry& g) {
    if (g.polygons.empty()) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (geometry_contains(g, path[i])) {
            return i == 0 ? 0 : i - 1;
        }
        if (i + 1 < path.size()) {
            bool hit = false;
            for (const auto& poly : g.polygons) {
                for (const auto& ring : poly) {
                    for (std::size_t k = 0; k + 1 < ring.size() && !hit; ++k) {
                        hit = segments_intersect(path[i], path[i + 1], ring[k], ring[k + 1]);
                    }
                }
            }
            if (hit) {
                return i;
            }
        }
    }
    return std::nullopt;
}

/// Minimum distance in nautical miles between a polyline and a geometry; 0 when they touch.
inline double path_geometry_nm(std::span<const LonLat> path, const Geometry& g) {
    if (path.empty() || g.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    if (first_crossing(path, g)) {
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    const bool has_segments = path.size() > 1;
    auto path_to_point = [&](LonLat q) {
        if (!has_segments) {
            return haversine_nm(path.front(), q);
        }
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            d = std::min(d, point_segment_nm(q, path[i], path[i + 1]));
        }
        return d;
    };
    for (auto q : g.points) {
        best = std::min(best, path_to_point(q));
    }
    detail::for_each_segment(g, [&](LonLat a, LonLat b) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (segments_intersect(path[i], path[i + 1], a, b)) {
                best = 0.0;
            }
        }
        for (auto v : path) {
            best = std::min(best, point_segment_nm(v, a, b));
        }
        best = std::min(best, path_to_point(a));
        best = std::min(best, path_to_point(b));
    });
    return best;
}

} // namespace vtraj

#endif // VTRAJ_GEOMETRY_HPP
