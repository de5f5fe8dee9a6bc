#ifndef VTRAJ_SEGMENT_HPP
#define VTRAJ_SEGMENT_HPP

#include "vtraj/annotate.hpp"
#include "vtraj/trip.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace vtraj {

struct SegmentationParams {
    double trip_gap = 10800.0;  ///< seconds; longer silences end a trip
    double maneuver_deg = 5.0;  ///< total heading change separating TURNING from MANEUVERING
};

/// Inclusive index range of one trip in an annotated stream. Noise points inside are skipped.
struct TripSpan {
    std::size_t first = 0;
    std::size_t last = 0;
    bool departs_from_stop = false;

    friend bool operator==(const TripSpan&, const TripSpan&) = default;
};

/// Splits an annotated single-vessel stream into trips.
///
/// A trip starts at the last report of a stop (departure) or at the first report after a
/// long gap, and runs through the whole closing stop up to its last report, or up to the
/// last report before a long gap. Consecutive trips therefore share the berth report where
/// one ends and the next departs. Streams that never move yield no trips.
inline std::vector<TripSpan> split_trips(std::span<const AnnotatedPoint> annotated, const SegmentationParams& params) {
    enum class State { Idle, Moving, Closing };
    std::vector<TripSpan> trips;
    State state = State::Idle;
    constexpr std::size_t no_anchor = static_cast<std::size_t>(-1);
    std::size_t anchor = no_anchor;
    std::optional<std::size_t> prev;
    TripSpan current;

    auto close = [&](std::size_t last) {
        current.last = last;
        if (current.last > current.first) {
            trips.push_back(current);
        }
    };

    for (std::size_t i = 0; i < annotated.size(); ++i) {
        const auto& ap = annotated[i];
        if (ap.flags.has(Annotation::Noise)) {
            continue;
        }
        const bool stop = ap.flags.has(Annotation::Stop);
        if (prev && static_cast<double>(ap.point.ts - annotated[*prev].point.ts) > params.trip_gap) {
            if (state != State::Idle) {
                close(*prev);
            }
            state = State::Idle;
            anchor = no_anchor;
        }
        switch (state) {
        case State::Idle:
            if (stop) {
                anchor = i;
            } else {
                current = TripSpan{anchor == no_anchor ? i : anchor, i, anchor != no_anchor};
                state = State::Moving;
            }
            break;
        case State::Moving:
            if (stop) {
                state = State::Closing;
            }
            break;
        case State::Closing:
            if (!stop) {
                close(*prev);
                current = TripSpan{*prev, i, true};
                state = State::Moving;
            }
            break;
        }
        prev = i;
    }
    if (state != State::Idle && prev) {
        close(*prev);
    }
    return trips;
}

/// Statistics over the raw reports an episode abstracts. Throws std::invalid_argument on an empty range.
inline EpisodeStats episode_stats(std::span<const AisPoint> points, EpisodeType type) {
    if (points.empty()) {
        throw std::invalid_argument("episode_stats: empty point range");
    }
    EpisodeStats s;
    s.duration_s = points.back().ts - points.front().ts;
    if (type != EpisodeType::Stopped) {
        for (std::size_t i = 1; i < points.size(); ++i) {
            s.distance_nm += haversine_nm(points[i - 1].location(), points[i].location());
        }
    }
    // Nothing is known about the path through a gap, so no speed is claimed for it.
    if (s.duration_s > 0 && type != EpisodeType::Gap && type != EpisodeType::Stopped) {
        s.speed_knots = s.distance_nm / static_cast<double>(s.duration_s) * 3600.0;
    }
    if (type == EpisodeType::Turning || type == EpisodeType::Maneuvering) {
        double total = 0.0;
        std::optional<double> last_course;
        for (const auto& p : points) {
            if (const auto c = p.course()) {
                if (last_course) {
                    total += heading_delta(*last_course, *c);
                }
                last_course = c;
            }
        }
        s.heading_deg = total;
        s.direction = compass_of(last_course.value_or(
            initial_bearing(points.front().location(), points.back().location())));
    } else {
        const double brg = initial_bearing(points.front().location(), points.back().location());
        s.heading_deg = normalize_signed(brg);
        s.direction = compass_of(brg);
    }
    return s;
}

namespace detail {

inline Episode make_episode(std::span<const AisPoint> pts, std::size_t first, std::size_t last, EpisodeType type,
                            const SegmentationParams& params) {
    Episode ep;
    const auto range = pts.subspan(first, last - first + 1);
    ep.first = first;
    ep.last = last;
    ep.start_ts = range.front().ts;
    ep.end_ts = range.back().ts;
    if (type == EpisodeType::Turning) {
        ep.stats = episode_stats(range, EpisodeType::Turning);
        type = std::abs(ep.stats.heading_deg) >= params.maneuver_deg ? EpisodeType::Turning : EpisodeType::Maneuvering;
    } else {
        ep.stats = episode_stats(range, type);
    }
    ep.type = type;
    switch (type) {
    case EpisodeType::Stopped: {
        double lon = 0.0, lat = 0.0;
        for (const auto& p : range) {
            lon += p.lon;
            lat += p.lat;
        }
        const LonLat centroid{lon / static_cast<double>(range.size()), lat / static_cast<double>(range.size())};
        ep.start_loc = ep.end_loc = centroid;
        ep.path = {centroid};
        break;
    }
    case EpisodeType::Turning:
    case EpisodeType::Maneuvering:
        ep.start_loc = range.front().location();
        ep.end_loc = range.back().location();
        for (const auto& p : range) {
            ep.path.push_back(p.location());
        }
        break;
    case EpisodeType::Gap:
    case EpisodeType::Sailing:
        ep.start_loc = range.front().location();
        ep.end_loc = range.back().location();
        ep.path = {ep.start_loc, ep.end_loc};
        break;
    }
    return ep;
}

} // namespace detail

/// Builds the episode chain of one trip from its non-noise annotated reports.
///
/// Each step between consecutive reports gets a type: GAP when the later report ends a
/// communication gap, STOPPED inside a stop run, TURNING inside a run of turn-flagged reports,
/// SAILING otherwise. Maximal runs of equal steps become episodes, so consecutive episodes share
/// their boundary report and an isolated turn report (no turn step) folds into its neighbours.
inline std::vector<Episode> build_episodes(std::span<const AnnotatedPoint> trip_points, const SegmentationParams& params) {
    std::vector<AisPoint> pts;
    pts.reserve(trip_points.size());
    for (const auto& ap : trip_points) {
        pts.push_back(ap.point);
    }
    std::vector<Episode> out;
    if (pts.size() < 2) {
        return out;
    }

    auto step_type = [&](std::size_t k) {
        const auto& a = trip_points[k - 1].flags;
        const auto& b = trip_points[k].flags;
        if (b.has(Annotation::GapEnd)) {
            return EpisodeType::Gap;
        }
        if (a.has(Annotation::Stop) && b.has(Annotation::Stop)) {
            return EpisodeType::Stopped;
        }
        if (a.has(Annotation::Turn) && b.has(Annotation::Turn)) {
            return EpisodeType::Turning;
        }
        return EpisodeType::Sailing;
    };

    std::size_t run_start = 1;
    EpisodeType run_type = step_type(1);
    for (std::size_t k = 2; k <= pts.size(); ++k) {
        const bool end = k == pts.size();
        const EpisodeType t = end ? run_type : step_type(k);
        if (end || t != run_type) {
            out.push_back(detail::make_episode(pts, run_start - 1, k - 1, run_type, params));
            run_start = k;
            run_type = t;
        }
    }
    // Arrival reported by a single stopped report: keep it as an instantaneous stop.
    if (trip_points.back().flags.has(Annotation::Stop) && out.back().type != EpisodeType::Stopped) {
        out.push_back(detail::make_episode(pts, pts.size() - 1, pts.size() - 1, EpisodeType::Stopped, params));
    }
    return out;
}

/// Trip-level figures over every raw report of the trip.
inline TripStats trip_stats(const Trip& trip) {
    TripStats s;
    if (trip.episodes.empty()) {
        return s;
    }
    s.duration_s = trip.episodes.back().end_ts - trip.episodes.front().start_ts;
    for (std::size_t i = 1; i < trip.points.size(); ++i) {
        s.distance_nm += haversine_nm(trip.points[i - 1].location(), trip.points[i].location());
    }
    if (s.duration_s > 0) {
        s.speed_knots = s.distance_nm / static_cast<double>(s.duration_s) * 3600.0;
    }
    return s;
}

/// Full segmentation of one vessel: trips with their episodes and statistics.
inline std::vector<Trip> segment_vessel(std::span<const AnnotatedPoint> annotated, const SegmentationParams& params) {
    std::vector<Trip> trips;
    for (const TripSpan& span : split_trips(annotated, params)) {
        std::vector<AnnotatedPoint> kept;
        for (std::size_t i = span.first; i <= span.last; ++i) {
            if (!annotated[i].flags.has(Annotation::Noise)) {
                kept.push_back(annotated[i]);
            }
        }
        Trip trip;
        trip.vessel_id = kept.front().point.vessel_id;
        for (const auto& ap : kept) {
            if (!ap.point.ship_type.empty()) {
                trip.ship_type = ap.point.ship_type;
                break;
            }
        }
        trip.departs_from_stop = span.departs_from_stop;
        trip.episodes = build_episodes(kept, params);
        for (auto& ap : kept) {
            trip.points.push_back(std::move(ap.point));
        }
        trip.trip_id = make_trip_id(trip.vessel_id, trip.start_ts());
        trip.stats = trip_stats(trip);
        trips.push_back(std::move(trip));
    }
    return trips;
}

} // namespace vtraj

#endif // VTRAJ_SEGMENT_HPP
