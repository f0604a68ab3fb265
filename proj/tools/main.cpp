#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "mabret/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mabret - continual retraining experiments with bandit-driven replay and weight selection"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 1;
    std::string out_dir;
    long long seed_override = -1;
    auto* run = app.add_subcommand("run", "execute an experiment matrix from a config file");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("--jobs", jobs, "parallel (method, seed) experiments")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory (default: config, then $MABRET_OUT_DIR)");
    run->add_option("--seed-override", seed_override, "run only this seed");

    std::vector<std::string> metrics_paths;
    std::string format = "md";
    auto* report = app.add_subcommand("report", "aggregate metrics files into a comparison table");
    report->add_option("metrics", metrics_paths, "metrics JSONL files")->required();
    report->add_option("--format", format, "csv or md")
        ->check(CLI::IsMember({"csv", "md"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            mabret::ExperimentConfig cfg = mabret::load_config(config_path);
            if (seed_override >= 0)
                cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
            if (!out_dir.empty()) cfg.output.dir = out_dir;
            if (cfg.output.dir.empty()) cfg.output.dir = mabret::default_output_dir();
            std::filesystem::create_directories(cfg.output.dir);

            std::vector<mabret::MetricsRow> rows = mabret::run_matrix(cfg, jobs);
            std::string metrics_path = cfg.output.dir + "/" + cfg.output.metrics;
            std::string summary_path = cfg.output.dir + "/" + cfg.output.summary;
            mabret::write_metrics_jsonl(metrics_path, rows);
            mabret::write_summary_csv(summary_path, rows);
            std::printf("wrote %zu rows to %s\n", rows.size(), metrics_path.c_str());
            std::printf("summary: %s\n", summary_path.c_str());
        } else if (*report) {
            std::vector<mabret::MetricsRow> rows;
            for (const auto& p : metrics_paths) {
                auto part = mabret::read_metrics_jsonl(p);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            std::cout << mabret::render_report(rows, format);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
