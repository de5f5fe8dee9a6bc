#ifndef VTRAJ_ANNOTATE_HPP
#define VTRAJ_ANNOTATE_HPP

#include "vtraj/core.hpp"

#include <deque>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vtraj {

enum class Annotation : std::uint8_t {
    Stop = 1u << 0,
    GapStart = 1u << 1,
    GapEnd = 1u << 2,
    SpeedChange = 1u << 3,
    SlowMotion = 1u << 4,
    Turn = 1u << 5,
    Noise = 1u << 6,
};

inline constexpr std::array<std::pair<Annotation, std::string_view>, 7> annotation_names = {{
    {Annotation::Stop, "STOP"},
    {Annotation::GapStart, "GAP_START"},
    {Annotation::GapEnd, "GAP_END"},
    {Annotation::SpeedChange, "SPEED_CHANGE"},
    {Annotation::SlowMotion, "SLOW_MOTION"},
    {Annotation::Turn, "TURN"},
    {Annotation::Noise, "NOISE"},
}};

/// A set of mobility-event flags; a point may carry several at once.
class AnnotationSet {
public:
    constexpr AnnotationSet() = default;
    constexpr explicit AnnotationSet(std::uint8_t bits) : bits_(bits) {}
    constexpr AnnotationSet(std::initializer_list<Annotation> flags) {
        for (auto f : flags) {
            set(f);
        }
    }

    constexpr bool has(Annotation a) const { return (bits_ & static_cast<std::uint8_t>(a)) != 0; }
    constexpr void set(Annotation a) { bits_ |= static_cast<std::uint8_t>(a); }
    constexpr void clear(Annotation a) { bits_ &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(a)); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    /// True when every flag of `other` is also set here.
    constexpr bool contains(AnnotationSet other) const { return (bits_ & other.bits_) == other.bits_; }

    friend constexpr bool operator==(AnnotationSet, AnnotationSet) = default;

private:
    std::uint8_t bits_ = 0;
};

enum class WindowMode : std::uint8_t { Count, Time };

struct VelocityWindow {
    WindowMode mode = WindowMode::Count;
    std::size_t max_points = 10;
    double span_s = 600.0;
    /// Samples slower than this do not contribute to the mean bearing (their COG is drift).
    double min_course_sog = 0.5;
};

/// Per-vessel velocity vector over a sliding window of recent reports.
struct VelocityState {
    struct Sample {
        Timestamp ts;
        double sog;
        std::optional<double> course;
    };

    VelocityWindow window;
    std::deque<Sample> samples;
    double mean_speed = 0.0;
    std::optional<double> mean_bearing;

    bool empty() const { return samples.empty(); }
};

/// Thresholds of the event detectors. Defaults follow the reference settings for passenger traffic.
struct AnnotationParams {
    double v_stop = 0.5;            ///< knots; STOP below this
    double gap_dt = 1800.0;         ///< seconds of silence that count as a communication gap
    double accel_ratio = 0.25;      ///< relative speed change against the velocity vector
    double speed_floor = 0.5;       ///< knots; denominator floor for the ratio
    double v_slow = 1.0;            ///< knots; SLOW_MOTION below this
    double slow_min_duration = 300; ///< seconds of consecutive slow reports
    double turn_deg = 5.0;          ///< heading deviation that marks a turn
    double noise_reversal_deg = 170; ///< out-and-back course reversal marking a spike
    VelocityWindow window;

    /// Per-ship-type overrides of the turn threshold; other fields can follow the same path.
    std::map<std::string, double> turn_deg_by_ship_type;

    AnnotationParams for_ship_type(const std::string& ship_type) const {
        AnnotationParams p = *this;
        if (auto it = turn_deg_by_ship_type.find(ship_type); it != turn_deg_by_ship_type.end()) {
            p.turn_deg = it->second;
        }
        return p;
    }
};

/// Pushes `p` into the window, evicts samples outside it and recomputes the means.
inline VelocityState update_velocity(VelocityState state, const AisPoint& p) {
    state.samples.push_back({p.ts, p.sog, p.course()});
    if (state.window.mode == WindowMode::Count) {
        while (state.samples.size() > state.window.max_points) {
            state.samples.pop_front();
        }
    } else {
        while (!state.samples.empty() &&
               static_cast<double>(p.ts - state.samples.front().ts) > state.window.span_s) {
            state.samples.pop_front();
        }
    }
    double sum = 0.0;
    std::vector<double> courses;
    courses.reserve(state.samples.size());
    for (const auto& s : state.samples) {
        sum += s.sog;
        if (s.course && s.sog >= state.window.min_course_sog) {
            courses.push_back(*s.course);
        }
    }
    state.mean_speed = sum / static_cast<double>(state.samples.size());
    state.mean_bearing = circular_mean(courses);
    return state;
}

/// Flags for `p` given its predecessor and the velocity vector built from earlier reports.
/// GAP_START belongs to `prev`; callers propagate it (see annotate_stream).
/// `slow_sustained` tells whether `p` lies in a slow run long enough to count as slow motion.
inline AnnotationSet annotate_point(const AisPoint& p, const AisPoint* prev, const VelocityState& state,
                                    const AnnotationParams& params, bool slow_sustained = false) {
    AnnotationSet out;
    const bool stopped = p.sog < params.v_stop;
    if (stopped) {
        out.set(Annotation::Stop);
    }
    const bool gap = prev != nullptr && static_cast<double>(p.ts - prev->ts) > params.gap_dt;
    if (gap) {
        out.set(Annotation::GapEnd);
    }
    if (!state.empty()) {
        const double base = std::max(state.mean_speed, params.speed_floor);
        if (std::abs(p.sog - state.mean_speed) / base > params.accel_ratio) {
            out.set(Annotation::SpeedChange);
        }
    }
    const bool slow = slow_sustained && p.sog < params.v_slow && !stopped;
    if (slow) {
        out.set(Annotation::SlowMotion);
    }
    if (!stopped && !slow) {
        if (const auto course = p.course()) {
            bool turn = false;
            if (prev != nullptr && !gap && prev->sog >= params.v_stop) {
                if (const auto pc = prev->course()) {
                    turn = std::abs(heading_delta(*pc, *course)) > params.turn_deg;
                }
            }
            if (!turn && state.mean_bearing) {
                turn = std::abs(heading_delta(*state.mean_bearing, *course)) > params.turn_deg;
            }
            if (turn) {
                out.set(Annotation::Turn);
            }
        }
    }
    return out;
}

struct AnnotatedPoint {
    AisPoint point;
    AnnotationSet flags;
};

/// Marks every point inside a slow run (v_stop <= sog < v_slow, no gap inside) lasting at
/// least `slow_min_duration` seconds.
inline std::vector<bool> sustained_slow_runs(std::span<const AisPoint> points, const AnnotationParams& params) {
    std::vector<bool> out(points.size(), false);
    std::size_t i = 0;
    while (i < points.size()) {
        auto is_slow = [&](std::size_t k) { return points[k].sog >= params.v_stop && points[k].sog < params.v_slow; };
        if (!is_slow(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < points.size() && is_slow(j + 1) &&
               static_cast<double>(points[j + 1].ts - points[j].ts) <= params.gap_dt) {
            ++j;
        }
        if (static_cast<double>(points[j].ts - points[i].ts) >= params.slow_min_duration) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                      true);
        }
        i = j + 1;
    }
    return out;
}

/// Annotates a cleaned, time-ordered single-vessel stream. One output per input point.
inline std::vector<AnnotatedPoint> annotate_stream(std::span<const AisPoint> points, const AnnotationParams& params) {
    std::vector<AnnotatedPoint> out;
    out.reserve(points.size());
    const auto slow = sustained_slow_runs(points, params);
    VelocityState state;
    state.window = params.window;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const AisPoint& p = points[i];
        const AisPoint* prev = i > 0 ? &points[i - 1] : nullptr;
        if (prev != nullptr && static_cast<double>(p.ts - prev->ts) > params.gap_dt) {
            // History from before a gap says nothing about the current motion.
            state = VelocityState{};
            state.window = params.window;
        }
        AnnotationSet flags = annotate_point(p, prev, state, params, slow[i]);
        if (flags.has(Annotation::GapEnd)) {
            out.back().flags.set(Annotation::GapStart);
        }
        out.push_back({p, flags});
        state = update_velocity(std::move(state), p);
    }

    // Single-report spikes: the track runs out to a point and straight back.
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
        const AnnotatedPoint& a = out[i - 1];
        AnnotatedPoint& b = out[i];
        const AnnotatedPoint& c = out[i + 1];
        if (b.flags.has(Annotation::Stop) || b.flags.has(Annotation::GapEnd) || c.flags.has(Annotation::GapEnd) ||
            b.point.sog < params.v_slow) {
            continue;
        }
        if (a.point.location() == b.point.location() || b.point.location() == c.point.location()) {
            continue;
        }
        // A spike returns near where it left; a short back leg (e.g. arriving at a berth) is not one.
        const double out_nm = haversine_nm(a.point.location(), b.point.location());
        const double back_nm = haversine_nm(b.point.location(), c.point.location());
        if (haversine_nm(a.point.location(), c.point.location()) >= 0.5 * std::min(out_nm, back_nm)) {
            continue;
        }
        const double out_leg = initial_bearing(a.point.location(), b.point.location());
        const double back_leg = initial_bearing(b.point.location(), c.point.location());
        if (std::abs(heading_delta(out_leg, back_leg)) > params.noise_reversal_deg) {
            b.flags.set(Annotation::Noise);
        }
    }
    return out;
}

inline std::string format_flags(AnnotationSet flags) {
    std::string s;
    for (const auto& [flag, name] : annotation_names) {
        if (flags.has(flag)) {
            if (!s.empty()) {
                s += '|';
            }
            s += name;
        }
    }
    return s;
}

inline AnnotationSet parse_flags(std::string_view text) {
    AnnotationSet out;
    while (!text.empty()) {
        const auto bar = text.find('|');
        const auto token = text.substr(0, bar);
        for (const auto& [flag, name] : annotation_names) {
            if (name == token) {
                out.set(flag);
            }
        }
        if (bar == std::string_view::npos) {
            break;
        }
        text.remove_prefix(bar + 1);
    }
    return out;
}

} // namespace vtraj

#endif // VTRAJ_ANNOTATE_HPP
