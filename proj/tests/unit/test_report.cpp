#include "vtraj/report.hpp"
#include "vtraj/enrich.hpp"
#include "vtraj/segment.hpp"

#include "support/synth.hpp"

#include <gtest/gtest.h>

using namespace vtraj;

namespace {

const TypeBreakdown& row(const ReportBundle& b, EpisodeType t) {
    for (const auto& r : b.types) {
        if (r.type == t) {
            return r;
        }
    }
    throw std::logic_error("missing type");
}

void expect_sums_to_hundred(const ReportBundle& b) {
    double count = 0, duration = 0;
    for (const auto& t : b.types) {
        count += t.count_pct;
        duration += t.duration_pct;
        for (double p : {t.count_pct, t.duration_pct, t.geospatial_pct, t.weather_pct, t.bathymetry_pct}) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 100.0 + 1e-9);
        }
    }
    EXPECT_NEAR(count, 100.0, 0.1);
    EXPECT_NEAR(duration, 100.0, 0.1);
}

struct EnrichedFleet : ::testing::Test {
    static void SetUpTestSuite() {
        synth::FleetOptions o;
        o.vessels = 6;
        const auto fleet = synth::make_fleet(o);
        const auto w = synth::write_world(std::filesystem::temp_directory_path() / "vtraj_report_world", fleet);
        const LayerStore layers = load_layers({{LayerKind::Port, w.ports.string()},
                                               {LayerKind::Coastal, w.coastal.string()},
                                               {LayerKind::OffshoreArea, w.offshore.string()},
                                               {LayerKind::TssLane, w.tss.string()}});
        const EnvironmentFields f{load_grid(w.wind_speed.string()), load_grid(w.wind_direction.string()),
                                  load_grid(w.depth.string())};
        for (const auto& v : fleet) {
            for (auto& t : segment_vessel(annotate_stream(v.points, AnnotationParams{}), SegmentationParams{})) {
                trips.push_back(enrich_trip(std::move(t), layers, f));
            }
        }
    }
    static inline std::vector<Trip> trips;
};

} // namespace

TEST(Report, SailingOnlyTrip) {
    const std::vector<EpisodeRow> rows{{"t", EpisodeType::Sailing, 600, false, std::nullopt, false}};
    const auto b = build_report(rows, {}, {}, {});
    EXPECT_EQ(b.trips, 1u);
    EXPECT_EQ(b.episodes, 1u);
    EXPECT_EQ(row(b, EpisodeType::Sailing).count_pct, 100.0);
    EXPECT_EQ(row(b, EpisodeType::Sailing).duration_pct, 100.0);
    EXPECT_EQ(row(b, EpisodeType::Stopped).count, 0u);
    expect_sums_to_hundred(b);
}

TEST(Report, HandCountedBreakdown) {
    const std::vector<EpisodeRow> rows{
        {"a", EpisodeType::Sailing, 300, true, 4, true},
        {"a", EpisodeType::Sailing, 100, false, std::nullopt, true},
        {"a", EpisodeType::Gap, 2700, false, std::nullopt, false},
        {"b", EpisodeType::Stopped, 900, true, 2, true},
    };
    const auto b = build_report(rows, {}, {}, {});
    const auto& s = row(b, EpisodeType::Sailing);
    EXPECT_EQ(s.count, 2u);
    EXPECT_EQ(s.count_pct, 50.0);
    EXPECT_EQ(s.duration_s, 400);
    EXPECT_EQ(s.duration_pct, 10.0);
    EXPECT_EQ(s.geospatial_pct, 50.0);
    EXPECT_EQ(s.weather_pct, 50.0);
    EXPECT_EQ(s.bathymetry_pct, 100.0);
    EXPECT_EQ(row(b, EpisodeType::Gap).duration_pct, 67.5);
    EXPECT_EQ(b.trips, 2u);
    expect_sums_to_hundred(b);
}

TEST(Report, EmptyInputIsAllZero) {
    const auto b = build_report({}, {}, {}, {});
    EXPECT_EQ(b.episodes, 0u);
    for (const auto& t : b.types) {
        EXPECT_EQ(t.count_pct, 0.0);
    }
}

TEST_F(EnrichedFleet, StoppedAlwaysGeolocatedAndGapNeverEnriched) {
    const auto b = build_report(episode_rows(trips), trip_truth(trips), {}, {});
    ASSERT_GT(row(b, EpisodeType::Stopped).count, 0u);
    ASSERT_GT(row(b, EpisodeType::Gap).count, 0u);
    EXPECT_EQ(row(b, EpisodeType::Stopped).geospatial_pct, 100.0);
    const auto& gap = row(b, EpisodeType::Gap);
    EXPECT_EQ(gap.geospatial_pct, 0.0);
    EXPECT_EQ(gap.weather_pct, 0.0);
    EXPECT_EQ(gap.bathymetry_pct, 0.0);
    expect_sums_to_hundred(b);
}

TEST_F(EnrichedFleet, RecomputesFromEpisodesCsv) {
    const auto path = std::filesystem::temp_directory_path() / "vtraj_report_episodes.csv";
    {
        std::ofstream(path) << to_csv(std::span<const Trip>(trips));
    }
    const auto from_csv = read_episode_rows(path.string());
    const auto direct = episode_rows(trips);
    ASSERT_EQ(from_csv.size(), direct.size());
    const auto a = build_report(from_csv, {}, {}, {});
    const auto b = build_report(direct, {}, {}, {});
    EXPECT_EQ(report_json(a).dump(), report_json(b).dump());
}

TEST(Report, ModelTables) {
    std::map<std::string, TripTruth> truth;
    truth["t1"] = {{1000, 10.0, 0.0}, 7};
    truth["t2"] = {{2000, 20.0, 0.0}, 3};
    truth["t3"] = {{0, 0.0, 0.0}, -1};
    auto narrative = [](std::string trip, double dist, double dur, bool adverse) {
        TripNarrative n;
        n.trip_id = std::move(trip);
        n.model_id = "gen";
        n.text = "x";
        NarrativeStats s;
        s.traveled_distance = dist;
        s.total_duration = dur;
        if (adverse) {
            s.adverse_weather_conditions.push_back({"7", "WEST"});
        }
        n.stats = s;
        return n;
    };
    std::vector<TripNarrative> ns{narrative("t1", 11.0, 1100, true), narrative("t2", 18.0, 2000, true),
                                  narrative("t3", 1.0, 1, false)};
    TripNarrative broken;
    broken.trip_id = "t1";
    broken.model_id = "gen";
    broken.error = std::string(malformed_stats);
    ns.push_back(broken);

    JudgeResult j1{"t1", "gen", "judge", JudgeVerdict{4, 5, 3, ""}, "", 0, ""};
    JudgeResult j2{"t2", "gen", "judge", JudgeVerdict{2, 3, 5, ""}, "", 0, ""};
    JudgeResult j3{"t3", "gen", "judge", std::nullopt, std::string(malformed_verdict), 0, ""};
    const std::vector<JudgeResult> vs{j1, j2, j3};

    const auto b = build_report({}, truth, ns, vs);
    ASSERT_EQ(b.models.size(), 1u);
    const auto& m = b.models.front();
    EXPECT_EQ(m.narratives, 4u);
    EXPECT_EQ(m.malformed_stats, 1u);
    EXPECT_EQ(m.deviation_excluded, 1u);
    ASSERT_TRUE(m.duration && m.distance);
    // Durations deviate by 10% and 0%, distances by 10% and 10%.
    EXPECT_NEAR(m.duration->mean, 5.0, 1e-12);
    EXPECT_NEAR(m.duration->stdev, 5.0, 1e-12);
    EXPECT_NEAR(m.duration->max, 10.0, 1e-12);
    EXPECT_NEAR(m.distance->mean, 10.0, 1e-12);
    EXPECT_NEAR(m.distance->stdev, 0.0, 1e-12);
    EXPECT_EQ(m.judged, 2u);
    EXPECT_EQ(m.malformed_verdicts, 1u);
    EXPECT_EQ(m.relevance, 3.0);
    EXPECT_EQ(m.faithfulness, 4.0);
    EXPECT_EQ(m.correctness, 4.0);
    EXPECT_EQ(m.adverse_expected, 1u);
    EXPECT_EQ(m.adverse_reported, 2u);
    EXPECT_EQ(m.adverse_disagreements, 1u);
    EXPECT_NE(report_models_csv(b).find("\ngen,4,1,0,1,"), std::string::npos);
}
