#ifndef VTRAJ_PIPELINE_HPP
#define VTRAJ_PIPELINE_HPP

#include "vtraj/config.hpp"
#include "vtraj/parallel.hpp"
#include "vtraj/records.hpp"
#include "vtraj/report.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

// Stage functions. Each reads the previous stage's files under the output directory and writes
// its own, so running the stages one by one and running them all give the same tree.

namespace vtraj {

namespace files {
inline constexpr const char* points = "points.csv";
inline constexpr const char* rejections = "rejections.csv";
inline constexpr const char* annotated = "annotated.csv";
inline constexpr const char* trips = "trips.jsonl";
inline constexpr const char* enriched = "enriched.jsonl";
inline constexpr const char* episodes = "episodes.csv";
inline constexpr const char* map = "map.csv";
inline constexpr const char* trip_dir = "trips";
inline constexpr const char* narratives = "narratives.jsonl";
inline constexpr const char* verdicts = "verdicts.jsonl";
inline constexpr const char* report = "report.json";
inline constexpr const char* report_episodes = "report_episodes.csv";
inline constexpr const char* report_models = "report_models.csv";
} // namespace files

namespace detail {

inline std::filesystem::path out_path(const std::string& dir, const char* name) {
    return std::filesystem::path(dir) / name;
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + p.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed for " + p.string());
    }
}

inline std::string safe_file_name(std::string_view id) {
    std::string s(id);
    for (char& c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        if (!ok) {
            c = '_';
        }
    }
    return s;
}

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline void log_line(const std::string& msg) {
    std::lock_guard lock(log_mutex());
    std::cerr << msg << '\n';
}

template <typename T>
std::vector<T> map_values(std::map<std::string, std::vector<T>>& m) {
    std::vector<T> out;
    for (auto& [k, v] : m) {
        std::move(v.begin(), v.end(), std::back_inserter(out));
    }
    return out;
}

template <typename T, typename Key>
std::map<std::string, std::vector<T>> group_sorted(std::vector<T> items, Key&& key) {
    std::map<std::string, std::vector<T>> out;
    for (auto& it : items) {
        out[key(it)].push_back(std::move(it));
    }
    return out;
}

} // namespace detail

struct IngestSummary {
    std::size_t records = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t vessels = 0;
};

/// Parses and cleans every AIS file into per-vessel streams ordered by vessel id then time.
inline std::map<std::string, std::vector<AisPoint>> ingest_streams(const std::vector<std::string>& ais_files,
                                                                 const ColumnMap& columns, const CleanParams& clean,
                                                                 std::size_t jobs, std::vector<Rejection>& rejections) {
    std::vector<AisPoint> all;
    for (const auto& f : ais_files) {
        auto r = read_ais_file(f, columns);
        std::move(r.points.begin(), r.points.end(), std::back_inserter(all));
        std::move(r.rejections.begin(), r.rejections.end(), std::back_inserter(rejections));
    }
    auto grouped = group_by_vessel(std::move(all));
    std::vector<std::string> ids;
    for (const auto& [id, v] : grouped) {
        ids.push_back(id);
    }
    auto cleaned = parallel_map(ids.size(), jobs, [&](std::size_t i) { return clean_stream(grouped.at(ids[i]), clean); });
    std::map<std::string, std::vector<AisPoint>> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::move(cleaned[i].rejected.begin(), cleaned[i].rejected.end(), std::back_inserter(rejections));
        if (!cleaned[i].kept.empty()) {
            out[ids[i]] = std::move(cleaned[i].kept);
        }
    }
    return out;
}

inline std::map<std::string, std::vector<AnnotatedPoint>> annotate_streams(
    const std::map<std::string, std::vector<AisPoint>>& vessels, const AnnotationParams& params, std::size_t jobs) {
    std::vector<const std::vector<AisPoint>*> streams;
    std::vector<std::string> ids;
    for (const auto& [id, v] : vessels) {
        ids.push_back(id);
        streams.push_back(&v);
    }
    auto done = parallel_map(ids.size(), jobs, [&](std::size_t i) {
        const auto& s = *streams[i];
        std::string ship_type;
        for (const auto& p : s) {
            if (!p.ship_type.empty()) {
                ship_type = p.ship_type;
                break;
            }
        }
        return annotate_stream(s, params.for_ship_type(ship_type));
    });
    std::map<std::string, std::vector<AnnotatedPoint>> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out[ids[i]] = std::move(done[i]);
    }
    return out;
}

inline std::vector<Trip> segment_streams(const std::map<std::string, std::vector<AnnotatedPoint>>& vessels,
                                         const SegmentationParams& params, std::size_t jobs) {
    std::vector<const std::vector<AnnotatedPoint>*> streams;
    for (const auto& [id, v] : vessels) {
        streams.push_back(&v);
    }
    auto per_vessel =
        parallel_map(streams.size(), jobs, [&](std::size_t i) { return segment_vessel(*streams[i], params); });
    std::vector<Trip> out;
    for (auto& v : per_vessel) {
        std::move(v.begin(), v.end(), std::back_inserter(out));
    }
    return out;
}

inline std::vector<Trip> enrich_trips(const std::vector<Trip>& trips, const LayerStore& layers,
                                      const EnvironmentFields& fields, const EnrichParams& params, std::size_t jobs) {
    return parallel_map(trips.size(), jobs, [&](std::size_t i) { return enrich_trip(trips[i], layers, fields, params); });
}

inline EnvironmentFields load_fields(const GridPaths& g) {
    EnvironmentFields f;
    if (!g.wind_speed.empty() && !g.wind_direction.empty()) {
        f.wind_speed = load_grid(g.wind_speed);
        f.wind_direction = load_grid(g.wind_direction);
    }
    if (!g.depth.empty()) {
        f.depth = load_grid(g.depth);
    }
    return f;
}

// ---- stages over files -------------------------------------------------------------------------

inline IngestSummary stage_ingest(const PipelineConfig& cfg) {
    std::vector<Rejection> rejections;
    const auto vessels = ingest_streams(cfg.ais_files, cfg.columns, cfg.clean, cfg.jobs, rejections);
    std::ostringstream pts, rej;
    pts << points_header << '\n';
    IngestSummary s;
    for (const auto& [id, v] : vessels) {
        for (const auto& p : v) {
            pts << point_row(p) << '\n';
        }
        s.kept += v.size();
    }
    write_rejection_log(rej, rejections);
    detail::write_file(detail::out_path(cfg.out_dir, files::points), pts.str());
    detail::write_file(detail::out_path(cfg.out_dir, files::rejections), rej.str());
    s.rejected = rejections.size();
    s.records = s.kept + s.rejected;
    s.vessels = vessels.size();
    return s;
}

inline std::size_t stage_annotate(const PipelineConfig& cfg) {
    auto points = read_points_csv(detail::out_path(cfg.out_dir, files::points).string());
    const std::size_t n = points.size();
    const auto vessels = detail::group_sorted(std::move(points), [](const AisPoint& p) { return p.vessel_id; });
    const auto annotated = annotate_streams(vessels, cfg.annotation, cfg.jobs);
    std::ostringstream os;
    os << points_header << ",flags\n";
    for (const auto& [id, v] : annotated) {
        for (const auto& ap : v) {
            os << point_row(ap.point) << ',' << format_flags(ap.flags) << '\n';
        }
    }
    detail::write_file(detail::out_path(cfg.out_dir, files::annotated), os.str());
    return n;
}

inline std::size_t stage_segment(const PipelineConfig& cfg) {
    auto annotated = read_annotated_csv(detail::out_path(cfg.out_dir, files::annotated).string());
    const auto vessels =
        detail::group_sorted(std::move(annotated), [](const AnnotatedPoint& a) { return a.point.vessel_id; });
    const auto trips = segment_streams(vessels, cfg.segmentation, cfg.jobs);
    std::ostringstream os;
    write_trips(os, trips);
    detail::write_file(detail::out_path(cfg.out_dir, files::trips), os.str());
    return trips.size();
}

inline std::size_t stage_enrich(const PipelineConfig& cfg) {
    const auto trips = read_trips(detail::out_path(cfg.out_dir, files::trips).string());
    const auto layers = load_layers(cfg.layers);
    const auto fields = load_fields(cfg.grids);
    const auto enriched = enrich_trips(trips, layers, fields, cfg.enrichment, cfg.jobs);
    std::ostringstream os;
    write_trips(os, enriched);
    detail::write_file(detail::out_path(cfg.out_dir, files::enriched), os.str());
    return enriched.size();
}

/// episodes.csv is always written because the report is computed from it.
inline void stage_export(const PipelineConfig& cfg) {
    const auto trips = read_trips(detail::out_path(cfg.out_dir, files::enriched).string());
    detail::write_file(detail::out_path(cfg.out_dir, files::episodes), to_csv(std::span<const Trip>(trips)));
    const auto has = [&](OutputFormat f) { return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end(); };
    if (has(OutputFormat::Map)) {
        detail::write_file(detail::out_path(cfg.out_dir, files::map), to_map_csv(std::span<const Trip>(trips)));
    }
    const auto dir = detail::out_path(cfg.out_dir, files::trip_dir);
    for (const auto& t : trips) {
        const auto base = detail::safe_file_name(t.trip_id);
        if (has(OutputFormat::Csv)) {
            detail::write_file(dir / (base + ".csv"), to_csv(t));
        }
        if (has(OutputFormat::Json)) {
            detail::write_file(dir / (base + ".json"), to_json(t));
        }
        if (has(OutputFormat::Txt)) {
            detail::write_file(dir / (base + ".txt"), to_txt(t));
        }
    }
}

/// One narrative per trip per generator, in trip order then generator order. Failures are
/// recorded in the narrative and never stop the batch.
inline std::vector<TripNarrative> describe_trips(std::span<const Trip> trips, const std::vector<ModelConfig>& generators,
                                                 const ChatClient& client, std::size_t jobs) {
    const std::size_t n = trips.size() * generators.size();
    return parallel_map(n, jobs, [&](std::size_t k) {
        const Trip& trip = trips[k / generators.size()];
        const ModelConfig& model = generators[k % generators.size()];
        try {
            auto narrative = generate_narrative(trip, model, client);
            if (!narrative.error.empty()) {
                detail::log_line(trip.trip_id + " / " + model.model_id + ": " + narrative.error);
            }
            return narrative;
        } catch (const std::exception& e) {
            detail::log_line(trip.trip_id + " / " + model.model_id + ": " + std::string(transport_failure) + ": " +
                             e.what());
            TripNarrative failed;
            failed.trip_id = trip.trip_id;
            failed.model_id = model.model_id;
            failed.error = transport_failure;
            return failed;
        }
    });
}

inline std::vector<JudgeResult> judge_narratives(std::span<const Trip> trips, std::span<const TripNarrative> narratives,
                                                 const ModelConfig& judge, const ChatClient& client, std::size_t jobs) {
    std::map<std::string, const Trip*> by_id;
    for (const auto& t : trips) {
        by_id[t.trip_id] = &t;
    }
    std::vector<const TripNarrative*> todo;
    for (const auto& n : narratives) {
        if (!n.text.empty() && by_id.contains(n.trip_id)) {
            todo.push_back(&n);
        }
    }
    return parallel_map(todo.size(), jobs, [&](std::size_t k) {
        const TripNarrative& n = *todo[k];
        try {
            auto r = judge_narrative(to_json(*by_id.at(n.trip_id)), n, judge, client);
            if (!r.error.empty()) {
                detail::log_line(n.trip_id + " / " + n.model_id + " judged by " + judge.model_id + ": " + r.error);
            }
            return r;
        } catch (const std::exception& e) {
            detail::log_line(n.trip_id + " / " + n.model_id + " judged by " + judge.model_id + ": " +
                             std::string(transport_failure) + ": " + e.what());
            JudgeResult failed;
            failed.trip_id = n.trip_id;
            failed.generator_model_id = n.model_id;
            failed.judge_model_id = judge.model_id;
            failed.error = transport_failure;
            return failed;
        }
    });
}

inline std::vector<TripNarrative> read_narratives(const std::string& path) {
    std::vector<TripNarrative> out;
    read_jsonl(path, [&](const nlohmann::json& j) { out.push_back(narrative_from_record(j)); });
    return out;
}

inline std::vector<JudgeResult> read_verdicts(const std::string& path) {
    std::vector<JudgeResult> out;
    read_jsonl(path, [&](const nlohmann::json& j) { out.push_back(judge_from_record(j)); });
    return out;
}

inline std::size_t stage_describe(const PipelineConfig& cfg, const ChatClient& client) {
    const auto trips = read_trips(detail::out_path(cfg.out_dir, files::enriched).string());
    std::vector<ModelConfig> generators;
    for (const auto& id : cfg.generators) {
        generators.push_back(cfg.model(id));
    }
    const auto narratives = describe_trips(trips, generators, client, cfg.jobs);
    std::string out;
    for (const auto& n : narratives) {
        out += narrative_record(n).dump() + '\n';
    }
    detail::write_file(detail::out_path(cfg.out_dir, files::narratives), out);
    return narratives.size();
}

inline std::size_t stage_judge(const PipelineConfig& cfg, const ChatClient& client) {
    if (cfg.judge.empty()) {
        throw ConfigError("no judge model configured");
    }
    const auto trips = read_trips(detail::out_path(cfg.out_dir, files::enriched).string());
    const auto narratives = read_narratives(detail::out_path(cfg.out_dir, files::narratives).string());
    const auto verdicts = judge_narratives(trips, narratives, cfg.model(cfg.judge), client, cfg.jobs);
    std::string out;
    for (const auto& v : verdicts) {
        out += judge_record(v).dump() + '\n';
    }
    detail::write_file(detail::out_path(cfg.out_dir, files::verdicts), out);
    return verdicts.size();
}

inline ReportBundle stage_report(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    const auto trips = read_trips(detail::out_path(cfg.out_dir, files::enriched).string());
    const auto episodes_csv = detail::out_path(cfg.out_dir, files::episodes);
    const auto rows = fs::exists(episodes_csv) ? read_episode_rows(episodes_csv.string()) : episode_rows(trips);
    const auto narr_path = detail::out_path(cfg.out_dir, files::narratives);
    const auto verd_path = detail::out_path(cfg.out_dir, files::verdicts);
    const auto narratives = fs::exists(narr_path) ? read_narratives(narr_path.string()) : std::vector<TripNarrative>{};
    const auto verdicts = fs::exists(verd_path) ? read_verdicts(verd_path.string()) : std::vector<JudgeResult>{};
    const auto bundle = build_report(rows, trip_truth(trips), narratives, verdicts, {cfg.stdev, cfg.adverse_beaufort});
    detail::write_file(detail::out_path(cfg.out_dir, files::report), report_json(bundle).dump(2) + "\n");
    detail::write_file(detail::out_path(cfg.out_dir, files::report_episodes), report_episodes_csv(bundle));
    detail::write_file(detail::out_path(cfg.out_dir, files::report_models), report_models_csv(bundle));
    return bundle;
}

/// Every stage in order; the model stages run only when generators are configured.
inline ReportBundle run_pipeline(const PipelineConfig& cfg, const ChatClient* client) {
    stage_ingest(cfg);
    stage_annotate(cfg);
    stage_segment(cfg);
    stage_enrich(cfg);
    stage_export(cfg);
    if (!cfg.generators.empty() && client != nullptr) {
        stage_describe(cfg, *client);
        if (!cfg.judge.empty()) {
            stage_judge(cfg, *client);
        }
    }
    return stage_report(cfg);
}

} // namespace vtraj

#endif // VTRAJ_PIPELINE_HPP
