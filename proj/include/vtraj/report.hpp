#ifndef VTRAJ_REPORT_HPP
#define VTRAJ_REPORT_HPP

#include "vtraj/narrate.hpp"
#include "vtraj/records.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace vtraj {

/// The per-episode facts the report needs; exactly what the episodes CSV carries.
struct EpisodeRow {
    std::string trip_id;
    EpisodeType type = EpisodeType::Sailing;
    Timestamp duration_s = 0;
    bool geospatial = false;
    std::optional<int> wind_beaufort;
    bool bathymetry = false;
};

inline std::vector<EpisodeRow> episode_rows(std::span<const Trip> trips) {
    std::vector<EpisodeRow> out;
    for (const auto& t : trips) {
        for (const auto& e : t.episodes) {
            out.push_back({t.trip_id, e.type, e.stats.duration_s, e.context.placemarks.has_value(),
                           e.context.wind_beaufort, e.context.sea_depth_m.has_value()});
        }
    }
    return out;
}

/// Reads the rows back from an episodes CSV written by to_csv.
inline std::vector<EpisodeRow> read_episode_rows(const std::string& path) {
    std::vector<EpisodeRow> out;
    detail::for_each_data_line(path, [&](const auto& f, const std::string& where) {
        if (f.size() < 14) {
            throw std::runtime_error(where + ": expected at least 14 fields");
        }
        EpisodeRow r;
        r.trip_id = std::string(detail::trim(f[0]));
        const auto type = parse_episode_type(detail::trim(f[2]));
        const auto dur = detail::parse_int(f[5]);
        if (!type || !dur) {
            throw std::runtime_error(where + ": bad movement or duration");
        }
        r.type = *type;
        r.duration_s = *dur;
        r.geospatial = !detail::trim(f[10]).empty();
        if (!detail::trim(f[11]).empty()) {
            const auto b = detail::parse_int(f[11]);
            if (!b) {
                throw std::runtime_error(where + ": bad wind_beaufort");
            }
            r.wind_beaufort = static_cast<int>(*b);
        }
        r.bathymetry = !detail::trim(f[13]).empty();
        out.push_back(std::move(r));
    });
    return out;
}

struct TypeBreakdown {
    EpisodeType type = EpisodeType::Sailing;
    std::size_t count = 0;
    double count_pct = 0.0;
    Timestamp duration_s = 0;
    double duration_pct = 0.0;
    double geospatial_pct = 0.0;
    double weather_pct = 0.0;
    double bathymetry_pct = 0.0;
};

struct ModelSummary {
    std::string model_id;
    std::size_t narratives = 0;
    std::size_t malformed_stats = 0;
    std::size_t transport_errors = 0;
    std::size_t deviation_excluded = 0; ///< trips whose ground truth is zero
    std::optional<DeviationStats> duration;
    std::optional<DeviationStats> distance;
    std::size_t judged = 0;
    std::size_t malformed_verdicts = 0;
    std::optional<double> relevance;
    std::optional<double> faithfulness;
    std::optional<double> correctness;
    std::size_t adverse_expected = 0;      ///< trips whose enrichment saw wind at or above the advisory force
    std::size_t adverse_reported = 0;      ///< trips where the model listed adverse weather
    std::size_t adverse_disagreements = 0; ///< trips where the two disagree
};

struct ReportBundle {
    std::size_t trips = 0;
    std::size_t episodes = 0;
    std::vector<TypeBreakdown> types;
    std::vector<ModelSummary> models;
};

struct ReportParams {
    StdevKind stdev = StdevKind::Population;
    int adverse_beaufort = 6;
};

namespace detail {

inline double pct(double part, double whole) { return whole > 0.0 ? part / whole * 100.0 : 0.0; }

} // namespace detail

/// Ground truth per trip for the model tables.
struct TripTruth {
    TripStats stats;
    int max_beaufort = -1;
};

inline std::map<std::string, TripTruth> trip_truth(std::span<const Trip> trips) {
    std::map<std::string, TripTruth> out;
    for (const auto& t : trips) {
        TripTruth tt{t.stats, -1};
        for (const auto& e : t.episodes) {
            if (e.context.wind_beaufort) {
                tt.max_beaufort = std::max(tt.max_beaufort, *e.context.wind_beaufort);
            }
        }
        out[t.trip_id] = tt;
    }
    return out;
}

inline ReportBundle build_report(std::span<const EpisodeRow> rows, const std::map<std::string, TripTruth>& truth,
                                 std::span<const TripNarrative> narratives, std::span<const JudgeResult> verdicts,
                                 const ReportParams& params = {}) {
    ReportBundle b;
    b.episodes = rows.size();
    {
        std::set<std::string> ids;
        for (const auto& r : rows) {
            ids.insert(r.trip_id);
        }
        b.trips = std::max(ids.size(), truth.size());
    }
    Timestamp total_duration = 0;
    for (const auto& r : rows) {
        total_duration += r.duration_s;
    }
    for (auto type : all_episode_types) {
        TypeBreakdown t;
        t.type = type;
        std::size_t geo = 0, wx = 0, depth = 0;
        for (const auto& r : rows) {
            if (r.type != type) {
                continue;
            }
            ++t.count;
            t.duration_s += r.duration_s;
            geo += r.geospatial;
            wx += r.wind_beaufort.has_value();
            depth += r.bathymetry;
        }
        using detail::pct;
        t.count_pct = pct(static_cast<double>(t.count), static_cast<double>(rows.size()));
        t.duration_pct = pct(static_cast<double>(t.duration_s), static_cast<double>(total_duration));
        t.geospatial_pct = pct(static_cast<double>(geo), static_cast<double>(t.count));
        t.weather_pct = pct(static_cast<double>(wx), static_cast<double>(t.count));
        t.bathymetry_pct = pct(static_cast<double>(depth), static_cast<double>(t.count));
        b.types.push_back(t);
    }

    std::vector<std::string> model_order;
    std::map<std::string, ModelSummary> models;
    auto summary = [&](const std::string& id) -> ModelSummary& {
        if (!models.contains(id)) {
            model_order.push_back(id);
            models[id].model_id = id;
        }
        return models[id];
    };
    std::map<std::string, std::vector<std::pair<double, double>>> dur_pairs, dist_pairs;
    for (const auto& n : narratives) {
        auto& m = summary(n.model_id);
        ++m.narratives;
        if (n.error == transport_failure) {
            ++m.transport_errors;
            continue;
        }
        if (!n.stats) {
            ++m.malformed_stats;
            continue;
        }
        const auto it = truth.find(n.trip_id);
        if (it == truth.end()) {
            continue;
        }
        const auto& tt = it->second;
        if (tt.stats.duration_s > 0 && tt.stats.distance_nm > 0.0) {
            dur_pairs[n.model_id].emplace_back(n.stats->total_duration, static_cast<double>(tt.stats.duration_s));
            dist_pairs[n.model_id].emplace_back(n.stats->traveled_distance, tt.stats.distance_nm);
        } else {
            ++m.deviation_excluded;
        }
        const bool expected = tt.max_beaufort >= params.adverse_beaufort;
        const bool reported = !n.stats->adverse_weather_conditions.empty();
        m.adverse_expected += expected;
        m.adverse_reported += reported;
        m.adverse_disagreements += expected != reported;
    }
    for (auto& [id, pairs] : dur_pairs) {
        models[id].duration = deviation_stats(pairs, params.stdev);
    }
    for (auto& [id, pairs] : dist_pairs) {
        models[id].distance = deviation_stats(pairs, params.stdev);
    }
    std::map<std::string, std::array<double, 3>> sums;
    for (const auto& v : verdicts) {
        auto& m = summary(v.generator_model_id);
        if (!v.verdict) {
            ++m.malformed_verdicts;
            continue;
        }
        ++m.judged;
        auto& s = sums[v.generator_model_id];
        s[0] += v.verdict->relevance;
        s[1] += v.verdict->faithfulness;
        s[2] += v.verdict->correctness;
    }
    for (auto& [id, s] : sums) {
        auto& m = models[id];
        const auto n = static_cast<double>(m.judged);
        m.relevance = s[0] / n;
        m.faithfulness = s[1] / n;
        m.correctness = s[2] / n;
    }
    for (const auto& id : model_order) {
        b.models.push_back(models[id]);
    }
    return b;
}

namespace detail {

inline nlohmann::ordered_json dev_json(const std::optional<DeviationStats>& d) {
    if (!d) {
        return nullptr;
    }
    return {{"mean", d->mean}, {"stdev", d->stdev}, {"max", d->max}, {"count", d->count}};
}

template <typename T>
nlohmann::ordered_json maybe(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string cell(const std::optional<double>& v) { return v ? exact(*v) : ""; }

} // namespace detail

inline nlohmann::ordered_json report_json(const ReportBundle& b) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["trips"] = b.trips;
    j["episodes"] = b.episodes;
    auto types = ordered_json::array();
    for (const auto& t : b.types) {
        types.push_back({{"movement", to_string(t.type)},
                         {"count", t.count},
                         {"count_pct", t.count_pct},
                         {"duration_s", t.duration_s},
                         {"duration_pct", t.duration_pct},
                         {"geospatial_pct", t.geospatial_pct},
                         {"weather_pct", t.weather_pct},
                         {"bathymetry_pct", t.bathymetry_pct}});
    }
    j["episode_types"] = std::move(types);
    auto models = ordered_json::array();
    for (const auto& m : b.models) {
        models.push_back({{"model_id", m.model_id},
                          {"narratives", m.narratives},
                          {"malformed_stats", m.malformed_stats},
                          {"transport_errors", m.transport_errors},
                          {"deviation_excluded", m.deviation_excluded},
                          {"duration_deviation_pct", detail::dev_json(m.duration)},
                          {"distance_deviation_pct", detail::dev_json(m.distance)},
                          {"judged", m.judged},
                          {"malformed_verdicts", m.malformed_verdicts},
                          {"relevance_mean", detail::maybe(m.relevance)},
                          {"faithfulness_mean", detail::maybe(m.faithfulness)},
                          {"correctness_mean", detail::maybe(m.correctness)},
                          {"adverse_expected", m.adverse_expected},
                          {"adverse_reported", m.adverse_reported},
                          {"adverse_disagreements", m.adverse_disagreements}});
    }
    j["models"] = std::move(models);
    return j;
}

inline std::string report_episodes_csv(const ReportBundle& b) {
    using detail::exact;
    std::string s = "movement,count,count_pct,duration_s,duration_pct,geospatial_pct,weather_pct,bathymetry_pct\n";
    for (const auto& t : b.types) {
        s += std::string(to_string(t.type)) + ',' + std::to_string(t.count) + ',' + exact(t.count_pct) + ',' +
             std::to_string(t.duration_s) + ',' + exact(t.duration_pct) + ',' + exact(t.geospatial_pct) + ',' +
             exact(t.weather_pct) + ',' + exact(t.bathymetry_pct) + '\n';
    }
    return s;
}

inline std::string report_models_csv(const ReportBundle& b) {
    using detail::cell;
    std::string s = "model_id,narratives,malformed_stats,transport_errors,deviation_excluded,"
                    "duration_mean,duration_stdev,duration_max,distance_mean,distance_stdev,distance_max,"
                    "judged,malformed_verdicts,relevance_mean,faithfulness_mean,correctness_mean,"
                    "adverse_expected,adverse_reported,adverse_disagreements\n";
    auto dev = [](const std::optional<DeviationStats>& d) {
        if (!d) {
            return std::string(",,");
        }
        return detail::exact(d->mean) + ',' + detail::exact(d->stdev) + ',' + detail::exact(d->max);
    };
    for (const auto& m : b.models) {
        s += detail::csv_field(m.model_id) + ',' + std::to_string(m.narratives) + ',' +
             std::to_string(m.malformed_stats) + ',' + std::to_string(m.transport_errors) + ',' +
             std::to_string(m.deviation_excluded) + ',' + dev(m.duration) + ',' + dev(m.distance) + ',' +
             std::to_string(m.judged) + ',' + std::to_string(m.malformed_verdicts) + ',' + cell(m.relevance) + ',' +
             cell(m.faithfulness) + ',' + cell(m.correctness) + ',' + std::to_string(m.adverse_expected) + ',' +
             std::to_string(m.adverse_reported) + ',' + std::to_string(m.adverse_disagreements) + '\n';
    }
    return s;
}

} // namespace vtraj

#endif // VTRAJ_REPORT_HPP
