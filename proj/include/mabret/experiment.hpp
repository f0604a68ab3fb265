#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mabret/session.hpp"
#include "mabret/weight_opt.hpp"

namespace mabret {

/// All schema violations found in a config, reported together.
struct ConfigError : std::runtime_error {
    std::vector<std::string> violations;
    explicit ConfigError(std::vector<std::string> v);
};

struct DatasetConfig {
    std::string kind;  // sea | csv | idx
    DriftSpec drift;
    std::uint64_t sea_seed = 7;
    std::string path;          // csv
    std::string label_column;  // csv
    std::string images;        // idx
    std::string labels;        // idx
    bool normalize = true;     // z-score against session-0 training statistics
};

struct MethodConfig {
    std::string name;
    ReplayStrategy replay = ReplayStrategy::mab_sim;
    WeightOptMode weight_opt = WeightOptMode::minib;
    BanditPolicy policy;
    RewardKind reward = RewardKind::loss;
    RegularizerConfig regularizer;
    int clusters_per_layer = 3;
};

struct OutputConfig {
    std::string dir;  // empty: $MABRET_OUT_DIR or "."
    std::string metrics = "metrics.jsonl";
    std::string summary = "summary.csv";
    bool checkpoints = false;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t batch_size = 64;
    int shards = 5;          // data shards after the 50% base set
    int max_epochs = 20;
    int warmup_epochs = 10;  // q
    double sample_ratio = 0.10;
    int patience = 10;
    double min_delta = 1e-6;
    double learning_rate = 1e-3;
    double tail_fraction = 0.2;
    bool ordered_split = false;
    std::vector<std::uint64_t> seeds = {1};
    std::vector<MethodConfig> methods;
    OutputConfig output;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);

struct MetricsRow {
    int session = 0;
    std::string method;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double train_seconds = 0.0;
    double weight_update_fraction = 1.0;
    std::size_t replay_size = 0;
};

/// One (method, seed) experiment: 6 sessions over the split protocol.
/// checkpoint_dir empty disables checkpoints; final_params, when given,
/// receives the last session's best-validation parameters.
std::vector<MetricsRow> run_single(const Dataset& data, const ExperimentConfig& cfg,
                                   const MethodConfig& method, std::uint64_t seed,
                                   const std::string& checkpoint_dir = "",
                                   NetworkParams* final_params = nullptr);

/// Whole matrix (methods x seeds), optionally on a worker pool. Rows come back
/// in deterministic (method, seed, session) order regardless of jobs.
std::vector<MetricsRow> run_matrix(const ExperimentConfig& cfg, int jobs = 1);

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_jsonl(const std::string& path);
void write_summary_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// Mean/stddev accuracy table across seeds plus per-session relative
/// improvement (%) of each method over the random-replay baseline (or the
/// alphabetically first method when no "random" rows exist).
std::string render_report(const std::vector<MetricsRow>& rows, const std::string& format);

std::string default_output_dir();

}  // namespace mabret
