#include "vtraj/narrate.hpp"
#include "vtraj/segment.hpp"

#include "support/oracles.hpp"
#include "support/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace vtraj;

namespace {

std::string golden(const std::string& name) {
    std::ifstream in(std::string(VTRAJ_PROMPT_DIR) + "/" + name + ".txt", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Trip> fleet_trips(std::size_t vessels) {
    synth::FleetOptions o;
    o.vessels = vessels;
    std::vector<Trip> out;
    for (const auto& v : synth::make_fleet(o)) {
        for (auto& t : segment_vessel(annotate_stream(v.points, AnnotationParams{}), SegmentationParams{})) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

/// Returns scripted replies in order, optionally failing the first `failures` calls.
class ScriptedClient : public ChatClient {
public:
    explicit ScriptedClient(std::vector<std::string> replies, int failures = 0)
        : replies_(std::move(replies)), failures_(failures) {}

    ChatReply complete(const ModelConfig&, const ChatMessages& m) const override {
        last_ = m;
        ++calls_;
        if (calls_ <= failures_) {
            throw TransportError("down");
        }
        return {replies_[std::min(replies_.size() - 1, static_cast<std::size_t>(calls_ - failures_ - 1))], 0.25};
    }

    mutable int calls_ = 0;
    mutable ChatMessages last_;

private:
    std::vector<std::string> replies_;
    int failures_;
};

const std::string fixture_stats =
    R"({"traveled_distance": 10.5, "total_duration": 3600, "origin_port": "A", "destination_port": "B", "adverse_weather_conditions": []})";

ModelConfig model(std::string id) {
    ModelConfig c;
    c.model_id = std::move(id);
    c.backoff_s = 1.0;
    return c;
}

/// Text outside the first ```json fence and the fenced body.
std::pair<std::string, std::string> cut_fence(const std::string& s) {
    const auto open = s.find("```json");
    const auto close = s.find("```", open + 7);
    return {s.substr(0, open) + s.substr(close), s.substr(open, close - open)};
}

} // namespace

TEST(Prompts, SystemMessagesEqualGoldenFiles) {
    const auto trips = fleet_trips(3);
    ASSERT_FALSE(trips.empty());
    for (const auto& t : trips) {
        const auto json = to_json(t);
        EXPECT_EQ(build_generation_prompt(json).system, golden("generation_system"));
        EXPECT_EQ(build_judge_prompt(json, "A vessel sailed.").system, golden("judge_system"));
    }
}

TEST(Prompts, GenerationUserEmbedsPayloadInFence) {
    const auto trips = fleet_trips(2);
    ASSERT_GE(trips.size(), 2u);
    const auto a = build_generation_prompt(to_json(trips[0]));
    const auto b = build_generation_prompt(to_json(trips[1]));
    EXPECT_EQ(a.system, b.system);
    EXPECT_NE(a.user, b.user);
    EXPECT_EQ(cut_fence(a.user).first, cut_fence(b.user).first);
    EXPECT_NE(a.user.find(to_json(trips[0])), std::string::npos);

    const auto empty = build_generation_prompt(to_json(Trip{}));
    EXPECT_NE(empty.user.find("```json\n[]\n```"), std::string::npos);
}

TEST(Prompts, JudgeUserDiffersOnlyInOutputBlock) {
    const auto json = to_json(fleet_trips(1).front());
    const auto a = build_judge_prompt(json, "First description.");
    const auto b = build_judge_prompt(json, "Second description.");
    EXPECT_EQ(a.system, b.system);
    const auto out_a = a.user.find("OUTPUT:"), out_b = b.user.find("OUTPUT:");
    ASSERT_NE(out_a, std::string::npos);
    EXPECT_EQ(a.user.substr(0, out_a), b.user.substr(0, out_b));
    EXPECT_NE(a.user.find("\"First description.\""), std::string::npos);
    EXPECT_THROW(build_judge_prompt(json, ""), std::invalid_argument);
}

TEST(Prompts, TemplateFillIsSinglePass) {
    EXPECT_EQ(fill_template("a{{X}}b{{Y}}c", {{"X", "{{Y}}"}, {"Y", "1"}}), "a{{Y}}b1c");
    EXPECT_EQ(fill_template("{{UNKNOWN}}", {}), "{{UNKNOWN}}");
    EXPECT_EQ(fill_template("tail {{", {}), "tail {{");
}

TEST(Stats, BindsFixtureExactly) {
    const auto s = bind_stats(nlohmann::json::parse(fixture_stats));
    ASSERT_TRUE(s);
    EXPECT_EQ(s->traveled_distance, 10.5);
    EXPECT_EQ(s->total_duration, 3600.0);
    EXPECT_EQ(s->origin_port, std::optional<std::string>("A"));
    EXPECT_EQ(s->destination_port, std::optional<std::string>("B"));
    EXPECT_TRUE(s->adverse_weather_conditions.empty());
    // Serialising gives back the schema keys in order.
    const auto j = stats_json(*s);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) {
        keys.push_back(k);
    }
    EXPECT_EQ(keys, (std::vector<std::string>{"traveled_distance", "total_duration", "origin_port", "destination_port",
                                              "adverse_weather_conditions"}));
}

TEST(Stats, WeatherAcceptsListOrFlatObject) {
    const auto list = bind_stats(nlohmann::json::parse(
        R"({"traveled_distance": 1, "total_duration": 2, "origin_port": null, "destination_port": null,
            "adverse_weather_conditions": [{"wind_intensity": "6", "wind_direction": "WEST"}]})"));
    const auto flat = bind_stats(nlohmann::json::parse(
        R"({"traveled_distance": 1, "total_duration": 2, "origin_port": null, "destination_port": null,
            "adverse_weather_conditions": {"wind_intensity": 6, "wind_direction": "WEST"}})"));
    ASSERT_TRUE(list && flat);
    EXPECT_EQ(list->adverse_weather_conditions, flat->adverse_weather_conditions);
    EXPECT_FALSE(list->origin_port);
    EXPECT_FALSE(bind_stats(nlohmann::json::parse(R"({"traveled_distance": "far", "total_duration": 2})")));
    EXPECT_FALSE(bind_stats(nlohmann::json::parse(R"({"total_duration": 2})")));
}

TEST(Stats, ResponseShapes) {
    const std::string prose = "The vessel left A and reached B.";
    struct Shape {
        std::string raw;
        bool stats;
        std::string text;
    };
    const std::vector<Shape> shapes{
        {prose + "\n\n```json\n" + fixture_stats + "\n```", true, prose},
        {prose + "\n" + fixture_stats, true, prose},
        {"```json\n" + fixture_stats + "\n```\n" + prose, true, prose},
        {prose + " {\"note\": 1}\n```json\n" + fixture_stats + "\n```", true, prose + " {\"note\": 1}"},
        {prose, false, prose},
    };
    for (const auto& s : shapes) {
        const auto r = split_generation_response(s.raw);
        EXPECT_EQ(r.stats.has_value(), s.stats) << s.raw;
        EXPECT_EQ(r.text, s.text) << s.raw.substr(0, 40);
    }
}

TEST(Generate, HappyPathAndMalformed) {
    const auto trip = fleet_trips(1).front();
    const ScriptedClient ok({"Description text.\n```json\n" + fixture_stats + "\n```"});
    const auto n = generate_narrative(trip, model("gen"), ok);
    EXPECT_EQ(n.trip_id, trip.trip_id);
    EXPECT_EQ(n.model_id, "gen");
    EXPECT_EQ(n.text, "Description text.");
    ASSERT_TRUE(n.stats);
    EXPECT_EQ(n.stats->traveled_distance, 10.5);
    EXPECT_TRUE(n.error.empty());
    EXPECT_EQ(n.latency_s, 0.25);
    EXPECT_EQ(ok.last_.user, build_generation_prompt(to_json(trip)).user);

    const ScriptedClient prose({"Only prose here."});
    const auto m = generate_narrative(trip, model("gen"), prose);
    EXPECT_EQ(m.error, malformed_stats);
    EXPECT_FALSE(m.stats);
    EXPECT_EQ(m.text, "Only prose here.");
}

TEST(Generate, RetriesWithDoublingBackoff) {
    const auto trip = fleet_trips(1).front();
    std::vector<double> sleeps;
    auto sleep = [&](double s) { sleeps.push_back(s); };
    const ScriptedClient flaky({fixture_stats}, 2);
    const auto n = generate_narrative(trip, model("gen"), flaky, sleep);
    EXPECT_TRUE(n.stats);
    EXPECT_EQ(flaky.calls_, 3);
    EXPECT_EQ(sleeps, (std::vector<double>{1.0, 2.0}));

    sleeps.clear();
    const ScriptedClient dead({fixture_stats}, 100);
    EXPECT_THROW(generate_narrative(trip, model("gen"), dead, sleep), TransportError);
    EXPECT_EQ(dead.calls_, 4);
    EXPECT_EQ(sleeps, (std::vector<double>{1.0, 2.0, 4.0}));
}

TEST(Verdict, SampleJudgeResult) {
    const auto v = parse_verdict(
        R"({"relevance_score": 4, "faithfulness_score": 5, "correctness_score": 3, "explanation": "ok"})");
    ASSERT_TRUE(v);
    EXPECT_EQ(*v, (JudgeVerdict{4, 5, 3, "ok"}));
}

TEST(Verdict, ResponseShapes) {
    const std::string obj = R"({"relevance_score": 2, "faithfulness_score": 3, "correctness_score": 4, "explanation": "e"})";
    const std::vector<std::string> good{
        obj,
        "Here is my evaluation:\n```json\n" + obj + "\n```\nThanks.",
        "Reasoning {with braces}. " + obj,
        "```\n" + obj + "\n```",
        R"({"draft": true} )" + obj,
    };
    for (const auto& raw : good) {
        const auto v = parse_verdict(raw);
        ASSERT_TRUE(v) << raw;
        EXPECT_EQ(*v, (JudgeVerdict{2, 3, 4, "e"})) << raw;
    }
    EXPECT_FALSE(parse_verdict(R"({"relevance_score": 6, "faithfulness_score": 5, "correctness_score": 3})"));
    EXPECT_FALSE(parse_verdict(R"({"relevance_score": 0, "faithfulness_score": 5, "correctness_score": 3})"));
    EXPECT_FALSE(parse_verdict(R"({"relevance_score": 4.5, "faithfulness_score": 5, "correctness_score": 3})"));
    EXPECT_FALSE(parse_verdict(R"({"relevance_score": "4", "faithfulness_score": 5, "correctness_score": 3})"));
    EXPECT_FALSE(parse_verdict("no json"));
}

TEST(Judge, RecordsMalformedVerdict) {
    const auto trip = fleet_trips(1).front();
    TripNarrative n;
    n.trip_id = trip.trip_id;
    n.model_id = "gen";
    n.text = "A description.";
    const ScriptedClient bad({R"({"relevance_score": 6, "faithfulness_score": 5, "correctness_score": 3})"});
    const auto r = judge_narrative(to_json(trip), n, model("judge"), bad);
    EXPECT_EQ(r.error, malformed_verdict);
    EXPECT_FALSE(r.verdict);
    EXPECT_EQ(r.generator_model_id, "gen");
    EXPECT_EQ(r.judge_model_id, "judge");
    EXPECT_NE(bad.last_.user.find("\"A description.\""), std::string::npos);
}

TEST(Deviation, Fixtures) {
    const std::vector<std::pair<double, double>> same{{100, 100}, {100, 100}}, spread{{110, 100}, {90, 100}},
        single{{228, 120}};
    const auto a = deviation_stats(same), b = deviation_stats(spread), c = deviation_stats(single);
    EXPECT_EQ(a.mean, 0.0);
    EXPECT_EQ(a.stdev, 0.0);
    EXPECT_EQ(a.max, 0.0);
    EXPECT_EQ(b.mean, 10.0);
    EXPECT_EQ(b.stdev, 0.0);
    EXPECT_EQ(b.max, 10.0);
    EXPECT_EQ(c.mean, 90.0);
    EXPECT_EQ(c.max, 90.0);
    EXPECT_EQ(c.count, 1u);
}

TEST(Deviation, RejectsBadInput) {
    const std::vector<std::pair<double, double>> none, zero{{1, 0}};
    EXPECT_THROW(deviation_stats(none), std::invalid_argument);
    EXPECT_THROW(deviation_stats(zero), std::invalid_argument);
}

TEST(Deviation, SampleKindUsesBesselCorrection) {
    const std::vector<std::pair<double, double>> p{{110, 100}, {130, 100}};
    EXPECT_NEAR(deviation_stats(p).stdev, 10.0, 1e-12);
    EXPECT_NEAR(deviation_stats(p, StdevKind::Sample).stdev, std::sqrt(200.0), 1e-12);
}

TEST(Deviation, PermutationAndScaleInvariance) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> gt(1.0, 500.0), rel(0.2, 2.0), k(0.01, 100.0);
    std::uniform_int_distribution<int> len(1, 40);
    for (int s = 0; s < 200; ++s) {
        std::vector<std::pair<double, double>> p(static_cast<std::size_t>(len(rng)));
        for (auto& [e, g] : p) {
            g = gt(rng);
            e = g * rel(rng);
        }
        const auto base = deviation_stats(p);
        const auto ref = oracle::deviations(p);
        EXPECT_NEAR(base.mean, ref.mean, 1e-9);
        EXPECT_NEAR(base.stdev, ref.stdev, 1e-9);
        EXPECT_NEAR(base.max, ref.max, 1e-9);

        auto shuffled = p;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto perm = deviation_stats(shuffled);
        EXPECT_NEAR(perm.mean, base.mean, 1e-9);
        EXPECT_NEAR(perm.stdev, base.stdev, 1e-9);
        EXPECT_EQ(perm.max, base.max);

        const double f = k(rng);
        auto scaled = p;
        for (auto& [e, g] : scaled) {
            e *= f;
            g *= f;
        }
        const auto sc = deviation_stats(scaled);
        EXPECT_NEAR(sc.mean, base.mean, 1e-9 * std::max(1.0, base.mean));
        EXPECT_NEAR(sc.stdev, base.stdev, 1e-9 * std::max(1.0, base.mean));
        EXPECT_NEAR(sc.max, base.max, 1e-9 * std::max(1.0, base.max));
    }
}

TEST(Replay, DeterministicAndKeyedByModel) {
    const ReplayChatClient client({{"gen", {"a", "b", "c"}}});
    const ChatMessages m{"sys", "user text"};
    const auto first = client.complete(model("gen"), m).content;
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(client.complete(model("gen"), m).content, first);
    }
    EXPECT_EQ(first, (std::vector<std::string>{"a", "b", "c"})[fnv1a("user text") % 3]);
    EXPECT_THROW(client.complete(model("other"), m), TransportError);
    // Published FNV-1a 64-bit test vectors.
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Replay, LoadsFileAndRejectsBadShape) {
    const auto dir = std::filesystem::temp_directory_path() / "vtraj_replay";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << R"({"gen": ["x", {"relevance_score": 1}]})";
        std::ofstream(dir / "bad.json") << R"({"gen": []})";
    }
    const auto c = ReplayChatClient::from_file((dir / "ok.json").string());
    const auto r = c.complete(model("gen"), {"", "q"}).content;
    EXPECT_TRUE(r == "x" || r == R"({"relevance_score":1})");
    EXPECT_THROW(ReplayChatClient::from_file((dir / "bad.json").string()), std::runtime_error);
    EXPECT_THROW(ReplayChatClient::from_file((dir / "missing.json").string()), std::runtime_error);
}

TEST(Records, RoundTrip) {
    TripNarrative n;
    n.trip_id = "1_2";
    n.model_id = "gen";
    n.text = "text";
    n.stats = bind_stats(nlohmann::json::parse(fixture_stats));
    n.latency_s = 1.5;
    n.raw_response = "raw";
    const auto back = narrative_from_record(nlohmann::json::parse(narrative_record(n).dump()));
    EXPECT_EQ(back.trip_id, n.trip_id);
    EXPECT_EQ(back.stats, n.stats);
    EXPECT_EQ(back.latency_s, n.latency_s);
    EXPECT_EQ(back.raw_response, n.raw_response);

    JudgeResult j;
    j.trip_id = "1_2";
    j.generator_model_id = "gen";
    j.judge_model_id = "judge";
    j.verdict = JudgeVerdict{4, 5, 3, "why"};
    const auto jb = judge_from_record(nlohmann::json::parse(judge_record(j).dump()));
    EXPECT_EQ(jb.verdict, j.verdict);
    EXPECT_EQ(jb.judge_model_id, "judge");
    JudgeResult failed = j;
    failed.verdict.reset();
    failed.error = malformed_verdict;
    const auto fb = judge_from_record(nlohmann::json::parse(judge_record(failed).dump()));
    EXPECT_FALSE(fb.verdict);
    EXPECT_EQ(fb.error, malformed_verdict);
}
