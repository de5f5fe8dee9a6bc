// Command-line front end: one subcommand per pipeline stage plus `run` for all of them.

#include "vtraj/http_chat_client.hpp"
#include "vtraj/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <sstream>

namespace {

struct Options {
    std::string config;
    std::size_t jobs = 0;
    std::string formats;
    std::string models;
    std::string judge;
    std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

vtraj::PipelineConfig resolve(const Options& o) {
    vtraj::PipelineConfig cfg;
    if (!o.config.empty()) {
        cfg = vtraj::load_config(o.config);
    }
    if (o.jobs > 0) {
        cfg.jobs = o.jobs;
    }
    if (!o.out.empty()) {
        cfg.out_dir = o.out;
    }
    if (!o.formats.empty()) {
        cfg.formats.clear();
        for (const auto& f : split_list(o.formats)) {
            const auto fmt = vtraj::parse_output_format(f);
            if (!fmt) {
                throw vtraj::ConfigError("unknown format '" + f + "' (expected csv,map,json,txt)");
            }
            cfg.formats.push_back(*fmt);
        }
    }
    if (!o.models.empty()) {
        cfg.generators = split_list(o.models);
    }
    if (!o.judge.empty()) {
        cfg.judge = o.judge;
    }
    vtraj::validate(cfg);
    return cfg;
}

std::unique_ptr<vtraj::ChatClient> make_client(const vtraj::PipelineConfig& cfg) {
    if (cfg.client == vtraj::ClientKind::Replay) {
        return std::make_unique<vtraj::ReplayChatClient>(vtraj::ReplayChatClient::from_file(cfg.replay_file));
    }
    return std::make_unique<vtraj::HttpChatClient>();
}

void print_report(const vtraj::ReportBundle& b) {
    std::cout << b.trips << " trips, " << b.episodes << " episodes\n";
    for (const auto& t : b.types) {
        std::cout << "  " << vtraj::to_string(t.type) << ": " << t.count << " (" << t.count_pct << "% of episodes, "
                  << t.duration_pct << "% of time)\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic trajectories from AIS position reports"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "Pipeline configuration (YAML)")->check(CLI::ExistingFile);
    app.add_option("--jobs", o.jobs, "Parallel workers (vessels, trips or model requests)")->check(CLI::PositiveNumber);
    app.add_option("--formats", o.formats, "Comma-separated output formats: csv,map,json,txt");
    app.add_option("--models", o.models, "Comma-separated generator model ids");
    app.add_option("--judge", o.judge, "Judge model id");
    app.add_option("--out", o.out, "Output directory");

    auto* ingest = app.add_subcommand("ingest", "Parse and clean AIS files into points.csv and rejections.csv");
    auto* annotate = app.add_subcommand("annotate", "Tag mobility events: points.csv -> annotated.csv");
    auto* segment = app.add_subcommand("segment", "Split trips and episodes: annotated.csv -> trips.jsonl");
    auto* enrich = app.add_subcommand("enrich", "Attach context: trips.jsonl -> enriched.jsonl");
    auto* exp = app.add_subcommand("export", "Write CSV, MAP, JSON and TXT trip representations");
    auto* describe = app.add_subcommand("describe", "Generate narratives with the configured models");
    auto* judge = app.add_subcommand("judge", "Score narratives with the judge model");
    auto* report = app.add_subcommand("report", "Episode breakdowns, coverage and model tables");
    auto* run = app.add_subcommand("run", "Run every stage in order");
    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(o);
        if (ingest->parsed()) {
            const auto s = vtraj::stage_ingest(cfg);
            std::cout << s.records << " records, " << s.kept << " kept, " << s.rejected << " rejected, " << s.vessels
                      << " vessels\n";
        } else if (annotate->parsed()) {
            std::cout << vtraj::stage_annotate(cfg) << " points annotated\n";
        } else if (segment->parsed()) {
            std::cout << vtraj::stage_segment(cfg) << " trips\n";
        } else if (enrich->parsed()) {
            std::cout << vtraj::stage_enrich(cfg) << " trips enriched\n";
        } else if (exp->parsed()) {
            vtraj::stage_export(cfg);
        } else if (describe->parsed()) {
            if (cfg.generators.empty()) {
                throw vtraj::ConfigError("no generator models configured");
            }
            const auto client = make_client(cfg);
            std::cout << vtraj::stage_describe(cfg, *client) << " narratives\n";
        } else if (judge->parsed()) {
            const auto client = make_client(cfg);
            std::cout << vtraj::stage_judge(cfg, *client) << " verdicts\n";
        } else if (report->parsed()) {
            print_report(vtraj::stage_report(cfg));
        } else if (run->parsed()) {
            std::unique_ptr<vtraj::ChatClient> client;
            if (!cfg.generators.empty()) {
                client = make_client(cfg);
            }
            print_report(vtraj::run_pipeline(cfg, client.get()));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
