#ifndef VTRAJ_DTW_HPP
#define VTRAJ_DTW_HPP

#include "vtraj/core.hpp"

#include <limits>
#include <span>
#include <vector>

namespace vtraj {

struct DtwResult {
    double cost = 0.0;            ///< summed cost along the optimal warping path
    std::size_t path_length = 0;  ///< number of matched pairs on that path
    double normalized() const { return path_length == 0 ? 0.0 : cost / static_cast<double>(path_length); }
};

/// Dynamic time warping over two sequences with a caller-supplied pairwise cost.
/// Among equal-cost optimal paths the shortest one is reported, which keeps the
/// result invariant under reversing both inputs.
template <typename A, typename B, typename Cost>
DtwResult dtw(std::span<const A> a, std::span<const B> b, Cost&& cost) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) {
        return {};
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    struct Cell {
        double cost;
        std::size_t len;
    };
    std::vector<Cell> prev(m + 1, Cell{inf, 0}), cur(m + 1, Cell{inf, 0});
    prev[0] = Cell{0.0, 0};
    auto better = [](const Cell& x, const Cell& y) { return x.cost < y.cost || (x.cost == y.cost && x.len < y.len); };
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = Cell{inf, 0};
        for (std::size_t j = 1; j <= m; ++j) {
            Cell best = prev[j - 1];
            if (better(prev[j], best)) {
                best = prev[j];
            }
            if (better(cur[j - 1], best)) {
                best = cur[j - 1];
            }
            cur[j] = Cell{best.cost + cost(a[i - 1], b[j - 1]), best.len + 1};
        }
        std::swap(prev, cur);
    }
    return {prev[m].cost, prev[m].len};
}

/// `count` points spaced at equal great-circle arc length along the polyline, endpoints kept.
inline std::vector<LonLat> resample_polyline(std::span<const LonLat> line, std::size_t count) {
    std::vector<LonLat> out;
    if (line.empty() || count == 0) {
        return out;
    }
    std::vector<double> cum(line.size(), 0.0);
    for (std::size_t i = 1; i < line.size(); ++i) {
        cum[i] = cum[i - 1] + haversine_nm(line[i - 1], line[i]);
    }
    const double total = cum.back();
    if (count == 1 || total == 0.0) {
        out.assign(count, line.front());
        return out;
    }
    out.reserve(count);
    std::size_t seg = 1;
    for (std::size_t k = 0; k < count; ++k) {
        if (k == count - 1) {
            out.push_back(line.back());
            break;
        }
        const double target = total * static_cast<double>(k) / static_cast<double>(count - 1);
        while (seg + 1 < line.size() && cum[seg] < target) {
            ++seg;
        }
        const double len = cum[seg] - cum[seg - 1];
        const double f = len > 0.0 ? (target - cum[seg - 1]) / len : 0.0;
        const LonLat a = line[seg - 1], b = line[seg];
        out.push_back({a.lon + f * (b.lon - a.lon), a.lat + f * (b.lat - a.lat)});
    }
    return out;
}

/// Mean matched distance (nm) between two polylines after resampling both to `samples` points.
inline DtwResult polyline_dtw(std::span<const LonLat> a, std::span<const LonLat> b, std::size_t samples = 128) {
    const auto ra = resample_polyline(a, samples);
    const auto rb = resample_polyline(b, samples);
    return dtw(std::span<const LonLat>(ra), std::span<const LonLat>(rb),
               [](LonLat x, LonLat y) { return haversine_nm(x, y); });
}

} // namespace vtraj

#endif // VTRAJ_DTW_HPP
