#ifndef VTRAJ_NARRATE_HPP
#define VTRAJ_NARRATE_HPP

#include "vtraj/export.hpp"
#include "vtraj/prompts_data.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace vtraj {

struct ModelConfig {
    std::string base_url;
    std::string model_id;
    std::string api_key_env;
    double temperature = 0.1;
    int max_retries = 3;
    double timeout_s = 120.0;
    double backoff_s = 1.0; ///< first retry delay, doubled on each further attempt
};

struct ChatMessages {
    std::string system;
    std::string user;
};

struct ChatReply {
    std::string content;
    double latency_s = 0.0;
};

/// Raised by clients for failures worth retrying (connection, timeout, 5xx, 429).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatReply complete(const ModelConfig& cfg, const ChatMessages& messages) const = 0;
};

/// Replaces each `{{NAME}}` in one left-to-right pass; substituted text is never rescanned.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto open = tmpl.find("{{", i);
        if (open == std::string_view::npos) {
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            break;
        }
        const auto it = values.find(tmpl.substr(open + 2, close - open - 2));
        out.append(tmpl.substr(i, open - i));
        if (it != values.end()) {
            out += it->second;
        } else {
            out.append(tmpl.substr(open, close + 2 - open));
        }
        i = close + 2;
    }
    out.append(tmpl.substr(std::min(i, tmpl.size())));
    return out;
}

inline ChatMessages build_generation_prompt(const std::string& trip_json) {
    return {std::string(prompts::generation_system), fill_template(prompts::generation_user, {{"TRIP_JSON", trip_json}})};
}

inline ChatMessages build_judge_prompt(const std::string& trip_json, const std::string& description) {
    if (description.empty()) {
        throw std::invalid_argument("judge prompt needs a non-empty description");
    }
    return {std::string(prompts::judge_system),
            fill_template(prompts::judge_user, {{"TRIP_JSON", trip_json}, {"NL_DESCRIPTION", description}})};
}

/// Runs `call` and retries TransportError with exponential backoff, at most cfg.max_retries times.
template <typename Call>
auto with_retries(const ModelConfig& cfg, Call&& call,
                  const std::function<void(double)>& sleep = [](double s) {
                      std::this_thread::sleep_for(std::chrono::duration<double>(s));
                  }) -> decltype(call()) {
    double delay = cfg.backoff_s;
    for (int attempt = 0;; ++attempt) {
        try {
            return call();
        } catch (const TransportError&) {
            if (attempt >= cfg.max_retries) {
                throw;
            }
        }
        if (delay > 0.0) {
            sleep(delay);
        }
        delay *= 2.0;
    }
}

namespace detail {

/// Spans of balanced top-level `{...}` in text, skipping braces inside JSON strings.
inline std::vector<std::pair<std::size_t, std::size_t>> top_level_objects(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (depth > 0 && in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"' && depth > 0) {
            in_string = true;
        } else if (c == '{') {
            if (depth++ == 0) {
                start = i;
            }
        } else if (c == '}' && depth > 0) {
            if (--depth == 0) {
                out.emplace_back(start, i + 1);
            }
        }
    }
    return out;
}

inline std::optional<nlohmann::json> parse_object(std::string_view s) {
    auto j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    return j;
}

struct FencedBlock {
    std::size_t begin, end; ///< whole fence including the backticks
    std::string_view body;
};

inline std::vector<FencedBlock> json_fences(std::string_view text) {
    std::vector<FencedBlock> out;
    std::size_t pos = 0;
    while ((pos = text.find("```json", pos)) != std::string_view::npos) {
        const auto body_start = pos + 7;
        const auto close = text.find("```", body_start);
        if (close == std::string_view::npos) {
            break;
        }
        out.push_back({pos, close + 3, text.substr(body_start, close - body_start)});
        pos = close + 3;
    }
    return out;
}

inline std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string scalar_text(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

inline std::optional<double> number_field(const nlohmann::json& v) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        char* end = nullptr;
        const double d = std::strtod(s.c_str(), &end);
        if (end != s.c_str() && *end == '\0' && std::isfinite(d)) {
            return d;
        }
    }
    return std::nullopt;
}

inline std::optional<std::string> port_field(const nlohmann::json& obj, const char* key) {
    if (!obj.contains(key) || obj[key].is_null()) {
        return std::nullopt;
    }
    return scalar_text(obj[key]);
}

} // namespace detail

struct WeatherCondition {
    std::string wind_intensity;
    std::string wind_direction;
    friend bool operator==(const WeatherCondition&, const WeatherCondition&) = default;
};

struct NarrativeStats {
    double traveled_distance = 0.0; ///< nm
    double total_duration = 0.0;    ///< s
    std::optional<std::string> origin_port;
    std::optional<std::string> destination_port;
    std::vector<WeatherCondition> adverse_weather_conditions;
    friend bool operator==(const NarrativeStats&, const NarrativeStats&) = default;
};

/// Binds a stats object; needs numeric distance and duration. Weather may be a list of
/// objects or a single flat object and is normalised to a list.
inline std::optional<NarrativeStats> bind_stats(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("traveled_distance") || !j.contains("total_duration")) {
        return std::nullopt;
    }
    const auto dist = detail::number_field(j["traveled_distance"]);
    const auto dur = detail::number_field(j["total_duration"]);
    if (!dist || !dur) {
        return std::nullopt;
    }
    NarrativeStats s;
    s.traveled_distance = *dist;
    s.total_duration = *dur;
    s.origin_port = detail::port_field(j, "origin_port");
    s.destination_port = detail::port_field(j, "destination_port");
    auto bind_condition = [&](const nlohmann::json& c) {
        if (!c.is_object()) {
            return;
        }
        WeatherCondition w;
        if (c.contains("wind_intensity")) {
            w.wind_intensity = detail::scalar_text(c["wind_intensity"]);
        }
        if (c.contains("wind_direction")) {
            w.wind_direction = detail::scalar_text(c["wind_direction"]);
        }
        s.adverse_weather_conditions.push_back(std::move(w));
    };
    if (j.contains("adverse_weather_conditions")) {
        const auto& w = j["adverse_weather_conditions"];
        if (w.is_array()) {
            for (const auto& c : w) {
                bind_condition(c);
            }
        } else if (w.is_object() && !w.empty()) {
            bind_condition(w);
        }
    }
    return s;
}

struct SplitResponse {
    std::string text;
    std::optional<NarrativeStats> stats;
};

/// Separates the narrative from its statistics block: a ```json fence wins, otherwise the last
/// top-level object. The block is cut out of the returned text only when it bound successfully.
inline SplitResponse split_generation_response(std::string_view raw) {
    for (const auto& f : detail::json_fences(raw)) {
        if (auto obj = detail::parse_object(detail::trim_copy(f.body))) {
            if (auto s = bind_stats(*obj)) {
                std::string text = std::string(raw.substr(0, f.begin)) + std::string(raw.substr(f.end));
                return {detail::trim_copy(text), std::move(s)};
            }
        }
    }
    const auto spans = detail::top_level_objects(raw);
    if (!spans.empty()) {
        const auto [b, e] = spans.back();
        if (auto obj = detail::parse_object(raw.substr(b, e - b))) {
            if (auto s = bind_stats(*obj)) {
                std::string text = std::string(raw.substr(0, b)) + std::string(raw.substr(e));
                return {detail::trim_copy(text), std::move(s)};
            }
        }
    }
    return {detail::trim_copy(raw), std::nullopt};
}

inline constexpr std::string_view malformed_stats = "MALFORMED_STATS";
inline constexpr std::string_view malformed_verdict = "MALFORMED_VERDICT";
inline constexpr std::string_view transport_failure = "TRANSPORT";

struct TripNarrative {
    std::string trip_id;
    std::string model_id;
    std::string text;
    std::optional<NarrativeStats> stats;
    std::string error; ///< empty, MALFORMED_STATS or TRANSPORT
    double latency_s = 0.0;
    std::string raw_response;
};

inline TripNarrative generate_narrative(const std::string& trip_id, const std::string& trip_json,
                                        const ModelConfig& cfg, const ChatClient& client,
                                        const std::function<void(double)>& sleep = {}) {
    const auto prompt = build_generation_prompt(trip_json);
    auto call = [&] { return client.complete(cfg, prompt); };
    const ChatReply reply = sleep ? with_retries(cfg, call, sleep) : with_retries(cfg, call);
    TripNarrative n;
    n.trip_id = trip_id;
    n.model_id = cfg.model_id;
    n.latency_s = std::max(0.0, reply.latency_s);
    n.raw_response = reply.content;
    auto split = split_generation_response(reply.content);
    n.text = std::move(split.text);
    n.stats = std::move(split.stats);
    if (!n.stats) {
        n.error = malformed_stats;
    }
    return n;
}

inline TripNarrative generate_narrative(const Trip& trip, const ModelConfig& cfg, const ChatClient& client,
                                        const std::function<void(double)>& sleep = {}) {
    return generate_narrative(trip.trip_id, to_json(trip), cfg, client, sleep);
}

struct JudgeVerdict {
    int relevance = 0;
    int faithfulness = 0;
    int correctness = 0;
    std::string explanation;
    friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

namespace detail {

inline std::optional<int> score_field(const nlohmann::json& obj, const char* key) {
    if (!obj.contains(key)) {
        return std::nullopt;
    }
    const auto& v = obj[key];
    if (!v.is_number()) {
        return std::nullopt;
    }
    const double d = v.get<double>();
    if (d != std::floor(d) || d < 1.0 || d > 5.0) {
        return std::nullopt;
    }
    return static_cast<int>(d);
}

inline std::optional<JudgeVerdict> bind_verdict(const nlohmann::json& j) {
    const auto r = score_field(j, "relevance_score");
    const auto f = score_field(j, "faithfulness_score");
    const auto c = score_field(j, "correctness_score");
    if (!r || !f || !c) {
        return std::nullopt;
    }
    JudgeVerdict v{*r, *f, *c, {}};
    if (j.contains("explanation")) {
        v.explanation = scalar_text(j["explanation"]);
    }
    return v;
}

} // namespace detail

/// First JSON object in the reply carrying three integer scores in [1,5].
inline std::optional<JudgeVerdict> parse_verdict(std::string_view raw) {
    for (const auto& f : detail::json_fences(raw)) {
        if (auto obj = detail::parse_object(detail::trim_copy(f.body))) {
            if (auto v = detail::bind_verdict(*obj)) {
                return v;
            }
        }
    }
    for (const auto& [b, e] : detail::top_level_objects(raw)) {
        if (auto obj = detail::parse_object(raw.substr(b, e - b))) {
            if (auto v = detail::bind_verdict(*obj)) {
                return v;
            }
        }
    }
    return std::nullopt;
}

struct JudgeResult {
    std::string trip_id;
    std::string generator_model_id;
    std::string judge_model_id;
    std::optional<JudgeVerdict> verdict;
    std::string error; ///< empty, MALFORMED_VERDICT or TRANSPORT
    double latency_s = 0.0;
    std::string raw_response;
};

inline JudgeResult judge_narrative(const std::string& trip_json, const TripNarrative& narrative,
                                   const ModelConfig& judge_cfg, const ChatClient& client,
                                   const std::function<void(double)>& sleep = {}) {
    const auto prompt = build_judge_prompt(trip_json, narrative.text);
    auto call = [&] { return client.complete(judge_cfg, prompt); };
    const ChatReply reply = sleep ? with_retries(judge_cfg, call, sleep) : with_retries(judge_cfg, call);
    JudgeResult r;
    r.trip_id = narrative.trip_id;
    r.generator_model_id = narrative.model_id;
    r.judge_model_id = judge_cfg.model_id;
    r.latency_s = std::max(0.0, reply.latency_s);
    r.raw_response = reply.content;
    r.verdict = parse_verdict(reply.content);
    if (!r.verdict) {
        r.error = malformed_verdict;
    }
    return r;
}

struct DeviationStats {
    double mean = 0.0;
    double stdev = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

enum class StdevKind : std::uint8_t { Population, Sample };

/// Percent deviation |est - gt| / gt * 100 summarised over all pairs.
inline DeviationStats deviation_stats(std::span<const std::pair<double, double>> pairs,
                                      StdevKind kind = StdevKind::Population) {
    if (pairs.empty()) {
        throw std::invalid_argument("deviation statistics need at least one pair");
    }
    std::vector<double> dev;
    dev.reserve(pairs.size());
    for (const auto& [est, gt] : pairs) {
        if (!(gt > 0.0)) {
            throw std::invalid_argument("ground truth must be positive");
        }
        dev.push_back(std::abs(est - gt) / gt * 100.0);
    }
    DeviationStats s;
    s.count = dev.size();
    double sum = 0.0;
    for (double d : dev) {
        sum += d;
        s.max = std::max(s.max, d);
    }
    s.mean = sum / static_cast<double>(dev.size());
    double sq = 0.0;
    for (double d : dev) {
        sq += (d - s.mean) * (d - s.mean);
    }
    const std::size_t denom = kind == StdevKind::Sample ? dev.size() - 1 : dev.size();
    s.stdev = denom == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(denom));
    return s;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Deterministic offline client: answers from a JSON file mapping model ids to lists of canned
/// replies, chosen by a hash of the user message.
class ReplayChatClient : public ChatClient {
public:
    explicit ReplayChatClient(std::map<std::string, std::vector<std::string>> replies) : replies_(std::move(replies)) {}

    static ReplayChatClient from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error(path + ": cannot open replay file");
        }
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw std::runtime_error(path + ": replay file must be a JSON object of model id to reply list");
        }
        std::map<std::string, std::vector<std::string>> replies;
        for (const auto& [model, list] : j.items()) {
            if (!list.is_array() || list.empty()) {
                throw std::runtime_error(path + ": replies for '" + model + "' must be a non-empty array");
            }
            for (const auto& r : list) {
                replies[model].push_back(r.is_string() ? r.get<std::string>() : r.dump());
            }
        }
        return ReplayChatClient(std::move(replies));
    }

    ChatReply complete(const ModelConfig& cfg, const ChatMessages& messages) const override {
        const auto it = replies_.find(cfg.model_id);
        if (it == replies_.end()) {
            throw TransportError("no replay replies for model " + cfg.model_id);
        }
        const auto& list = it->second;
        return {list[fnv1a(messages.user) % list.size()], 0.0};
    }

private:
    std::map<std::string, std::vector<std::string>> replies_;
};

inline nlohmann::ordered_json stats_json(const NarrativeStats& s) {
    nlohmann::ordered_json j;
    j["traveled_distance"] = s.traveled_distance;
    j["total_duration"] = s.total_duration;
    j["origin_port"] = s.origin_port ? nlohmann::ordered_json(*s.origin_port) : nullptr;
    j["destination_port"] = s.destination_port ? nlohmann::ordered_json(*s.destination_port) : nullptr;
    j["adverse_weather_conditions"] = nlohmann::ordered_json::array();
    for (const auto& w : s.adverse_weather_conditions) {
        j["adverse_weather_conditions"].push_back({{"wind_intensity", w.wind_intensity}, {"wind_direction", w.wind_direction}});
    }
    return j;
}

inline nlohmann::ordered_json narrative_record(const TripNarrative& n) {
    nlohmann::ordered_json j;
    j["trip_id"] = n.trip_id;
    j["model_id"] = n.model_id;
    j["text"] = n.text;
    j["stats"] = n.stats ? stats_json(*n.stats) : nlohmann::ordered_json(nullptr);
    j["error"] = n.error;
    j["latency_s"] = n.latency_s;
    j["raw_response"] = n.raw_response;
    return j;
}

inline TripNarrative narrative_from_record(const nlohmann::json& j) {
    TripNarrative n;
    n.trip_id = j.at("trip_id").get<std::string>();
    n.model_id = j.at("model_id").get<std::string>();
    n.text = j.value("text", "");
    if (j.contains("stats") && !j["stats"].is_null()) {
        n.stats = bind_stats(j["stats"]);
    }
    n.error = j.value("error", "");
    n.latency_s = j.value("latency_s", 0.0);
    n.raw_response = j.value("raw_response", "");
    return n;
}

inline nlohmann::ordered_json judge_record(const JudgeResult& r) {
    nlohmann::ordered_json j;
    j["trip_id"] = r.trip_id;
    j["generator_model_id"] = r.generator_model_id;
    j["judge_model_id"] = r.judge_model_id;
    if (r.verdict) {
        j["relevance_score"] = r.verdict->relevance;
        j["faithfulness_score"] = r.verdict->faithfulness;
        j["correctness_score"] = r.verdict->correctness;
        j["explanation"] = r.verdict->explanation;
    }
    j["error"] = r.error;
    j["latency_s"] = r.latency_s;
    j["raw_response"] = r.raw_response;
    return j;
}

inline JudgeResult judge_from_record(const nlohmann::json& j) {
    JudgeResult r;
    r.trip_id = j.at("trip_id").get<std::string>();
    r.generator_model_id = j.value("generator_model_id", "");
    r.judge_model_id = j.value("judge_model_id", "");
    r.verdict = detail::bind_verdict(j);
    if (r.verdict && j.contains("explanation")) {
        r.verdict->explanation = detail::scalar_text(j["explanation"]);
    }
    r.error = j.value("error", "");
    r.latency_s = j.value("latency_s", 0.0);
    r.raw_response = j.value("raw_response", "");
    return r;
}

} // namespace vtraj

#endif // VTRAJ_NARRATE_HPP
