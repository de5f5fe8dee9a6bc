#ifndef VTRAJ_CONFIG_HPP
#define VTRAJ_CONFIG_HPP

#include "vtraj/annotate.hpp"
#include "vtraj/enrich.hpp"
#include "vtraj/export.hpp"
#include "vtraj/ingest.hpp"
#include "vtraj/narrate.hpp"
#include "vtraj/segment.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace vtraj {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridPaths {
    std::string wind_speed;
    std::string wind_direction;
    std::string depth;
};

enum class ClientKind : std::uint8_t { Http, Replay };

struct PipelineConfig {
    std::vector<std::string> ais_files;
    std::vector<LayerSource> layers;
    GridPaths grids;
    ColumnMap columns;
    CleanParams clean;
    AnnotationParams annotation;
    SegmentationParams segmentation;
    EnrichParams enrichment;
    std::string out_dir = "out";
    std::vector<OutputFormat> formats{OutputFormat::Csv, OutputFormat::Map, OutputFormat::Json, OutputFormat::Txt};
    std::vector<ModelConfig> models;  ///< every model the file describes
    std::vector<std::string> generators; ///< ids of models that write narratives
    std::string judge;                   ///< id of the judging model, empty to skip judging
    ClientKind client = ClientKind::Http;
    std::string replay_file;
    StdevKind stdev = StdevKind::Population;
    int adverse_beaufort = 6;
    std::size_t jobs = 1;

    const ModelConfig& model(const std::string& id) const {
        for (const auto& m : models) {
            if (m.model_id == id) {
                return m;
            }
        }
        throw ConfigError("model '" + id + "' is not defined under models");
    }
};

/// Judge must be defined and must not also be a generator.
inline void validate(const PipelineConfig& cfg) {
    std::set<std::string> ids;
    for (const auto& m : cfg.models) {
        if (m.model_id.empty()) {
            throw ConfigError("model without model_id");
        }
        if (!ids.insert(m.model_id).second) {
            throw ConfigError("model '" + m.model_id + "' defined twice");
        }
        if (m.temperature < 0.0 || m.max_retries < 0 || m.timeout_s <= 0.0) {
            throw ConfigError("model '" + m.model_id + "': bad temperature, max_retries or timeout_s");
        }
    }
    for (const auto& g : cfg.generators) {
        (void)cfg.model(g);
        if (g == cfg.judge) {
            throw ConfigError("judge model '" + g + "' is also a generator; the judge must be a different model");
        }
    }
    if (!cfg.judge.empty()) {
        (void)cfg.model(cfg.judge);
    }
    if (cfg.client == ClientKind::Replay && cfg.replay_file.empty() && !cfg.generators.empty()) {
        throw ConfigError("replay client needs models.replay_file");
    }
    if (cfg.jobs == 0) {
        throw ConfigError("jobs must be at least 1");
    }
}

namespace detail {

template <typename T>
void read_opt(const YAML::Node& n, const char* key, T& target) {
    if (n && n[key]) {
        target = n[key].as<T>();
    }
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) {
        return p;
    }
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline ModelConfig read_model(const YAML::Node& n) {
    ModelConfig m;
    read_opt(n, "model_id", m.model_id);
    read_opt(n, "base_url", m.base_url);
    read_opt(n, "api_key_env", m.api_key_env);
    read_opt(n, "temperature", m.temperature);
    read_opt(n, "max_retries", m.max_retries);
    read_opt(n, "timeout_s", m.timeout_s);
    read_opt(n, "backoff_s", m.backoff_s);
    return m;
}

} // namespace detail

/// Builds a config from a parsed YAML document. Relative paths resolve against `base_dir`.
inline PipelineConfig config_from_yaml(const YAML::Node& root, const std::filesystem::path& base_dir) {
    using detail::read_opt;
    using detail::resolve_path;
    PipelineConfig cfg;
    try {
        if (const auto in = root["inputs"]) {
            if (in["ais"]) {
                for (const auto& f : in["ais"]) {
                    cfg.ais_files.push_back(resolve_path(base_dir, f.as<std::string>()));
                }
            }
            if (in["layers"]) {
                for (const auto& l : in["layers"]) {
                    const auto kind_name = l["kind"].as<std::string>();
                    const auto kind = parse_layer_kind(kind_name);
                    if (!kind) {
                        throw ConfigError("unknown layer kind '" + kind_name + "'");
                    }
                    cfg.layers.push_back({*kind, resolve_path(base_dir, l["path"].as<std::string>())});
                }
            }
            if (const auto g = in["grids"]) {
                read_opt(g, "wind_speed", cfg.grids.wind_speed);
                read_opt(g, "wind_direction", cfg.grids.wind_direction);
                read_opt(g, "depth", cfg.grids.depth);
                cfg.grids.wind_speed = resolve_path(base_dir, cfg.grids.wind_speed);
                cfg.grids.wind_direction = resolve_path(base_dir, cfg.grids.wind_direction);
                cfg.grids.depth = resolve_path(base_dir, cfg.grids.depth);
            }
        }
        if (const auto c = root["columns"]) {
            auto& m = cfg.columns;
            if (c["delimiter"]) {
                const auto d = c["delimiter"].as<std::string>();
                if (d.size() != 1) {
                    throw ConfigError("columns.delimiter must be a single character");
                }
                m.delimiter = d[0];
            }
            read_opt(c, "has_header", m.has_header);
            read_opt(c, "timestamp_format", m.timestamp_format);
            read_opt(c, "timestamp", m.timestamp);
            read_opt(c, "vessel_id", m.vessel_id);
            read_opt(c, "lat", m.lat);
            read_opt(c, "lon", m.lon);
            read_opt(c, "sog", m.sog);
            read_opt(c, "cog", m.cog);
            read_opt(c, "heading", m.heading);
            read_opt(c, "ship_type", m.ship_type);
        }
        read_opt(root["clean"], "max_speed_knots", cfg.clean.max_speed_knots);
        if (const auto a = root["annotation"]) {
            auto& p = cfg.annotation;
            read_opt(a, "v_stop", p.v_stop);
            read_opt(a, "gap_dt", p.gap_dt);
            read_opt(a, "accel_ratio", p.accel_ratio);
            read_opt(a, "speed_floor", p.speed_floor);
            read_opt(a, "v_slow", p.v_slow);
            read_opt(a, "slow_min_duration", p.slow_min_duration);
            read_opt(a, "turn_deg", p.turn_deg);
            read_opt(a, "noise_reversal_deg", p.noise_reversal_deg);
            if (const auto w = a["window"]) {
                if (w["mode"]) {
                    const auto mode = w["mode"].as<std::string>();
                    if (mode != "count" && mode != "time") {
                        throw ConfigError("annotation.window.mode must be count or time");
                    }
                    p.window.mode = mode == "count" ? WindowMode::Count : WindowMode::Time;
                }
                read_opt(w, "max_points", p.window.max_points);
                read_opt(w, "span_s", p.window.span_s);
                read_opt(w, "min_course_sog", p.window.min_course_sog);
            }
            if (const auto t = a["turn_deg_by_ship_type"]) {
                for (const auto& kv : t) {
                    p.turn_deg_by_ship_type[kv.first.as<std::string>()] = kv.second.as<double>();
                }
            }
        }
        read_opt(root["segmentation"], "trip_gap", cfg.segmentation.trip_gap);
        read_opt(root["segmentation"], "maneuver_deg", cfg.segmentation.maneuver_deg);
        if (const auto e = root["enrichment"]) {
            read_opt(e, "proximity_nm", cfg.enrichment.proximity_nm);
            read_opt(e, "port_radius_nm", cfg.enrichment.port_radius_nm);
            read_opt(e, "tss_tolerance_deg", cfg.enrichment.tss_tolerance_deg);
            read_opt(e, "dtw_samples", cfg.enrichment.dtw_samples);
        }
        if (const auto o = root["output"]) {
            read_opt(o, "dir", cfg.out_dir);
            if (o["formats"]) {
                cfg.formats.clear();
                for (const auto& f : o["formats"]) {
                    const auto name = f.as<std::string>();
                    const auto fmt = parse_output_format(name);
                    if (!fmt) {
                        throw ConfigError("unknown output format '" + name + "'");
                    }
                    cfg.formats.push_back(*fmt);
                }
            }
        }
        cfg.out_dir = resolve_path(base_dir, cfg.out_dir);
        if (const auto m = root["models"]) {
            if (m["define"]) {
                for (const auto& d : m["define"]) {
                    cfg.models.push_back(detail::read_model(d));
                }
            }
            if (m["generators"]) {
                cfg.generators = m["generators"].as<std::vector<std::string>>();
            }
            read_opt(m, "judge", cfg.judge);
            if (m["client"]) {
                const auto c = m["client"].as<std::string>();
                if (c != "http" && c != "replay") {
                    throw ConfigError("models.client must be http or replay");
                }
                cfg.client = c == "http" ? ClientKind::Http : ClientKind::Replay;
            }
            read_opt(m, "replay_file", cfg.replay_file);
            cfg.replay_file = resolve_path(base_dir, cfg.replay_file);
        }
        if (const auto r = root["report"]) {
            if (r["stdev"]) {
                const auto s = r["stdev"].as<std::string>();
                if (s != "population" && s != "sample") {
                    throw ConfigError("report.stdev must be population or sample");
                }
                cfg.stdev = s == "population" ? StdevKind::Population : StdevKind::Sample;
            }
            read_opt(r, "adverse_beaufort", cfg.adverse_beaufort);
        }
        read_opt(root, "jobs", cfg.jobs);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        auto cfg = config_from_yaml(root, std::filesystem::absolute(path).parent_path());
        validate(cfg);
        return cfg;
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace vtraj

#endif // VTRAJ_CONFIG_HPP
