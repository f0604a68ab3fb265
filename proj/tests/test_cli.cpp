#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mabret/experiment.hpp"

using namespace mabret;

namespace {

std::string tiny_config(const std::string& methods_json, int seeds = 1) {
    std::string seeds_json = "[";
    for (int s = 1; s <= seeds; ++s) seeds_json += (s > 1 ? "," : "") + std::to_string(s);
    seeds_json += "]";
    return R"({
      "dataset": {"kind": "sea", "n_per_segment": 150, "thresholds": [8, 9.5], "noise_rate": 0.05, "seed": 3},
      "network": {"hidden": [8], "batch_size": 16, "learning_rate": 0.01},
      "protocol": {"shards": 2, "max_epochs": 4, "warmup_epochs": 2, "sample_ratio": 0.2},
      "methods": )" +
           methods_json + R"(,
      "seeds": )" +
           seeds_json + "}";
}

const char* kMabMethod =
    R"([{"name": "mab", "replay": "mab_sim", "weight_opt": "minib",
         "bandit": {"kind": "ei2"}, "reward": "loss",
         "regularizer": {"kind": "nc", "alpha": 0.01, "beta": 0.01},
         "clusters_per_layer": 2}])";

}  // namespace

TEST_CASE("config: schema violations are listed exhaustively") {
    std::string bad = R"({
      "dataset": {"kind": "sea"},
      "protocol": {"sample_ratio": 1.5},
      "methods": [{"name": "x", "replay": "magic", "bandit": {"kind": "ei9", "exp3_gamma": 0}}],
      "seeds": []
    })";
    try {
        parse_config_json(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        // ratio, unknown replay, unknown bandit kind, bad gamma, empty seeds
        CHECK(e.violations.size() == 5);
        bool replay_flagged = false, kind_flagged = false;
        for (const auto& v : e.violations) {
            if (v.find("methods[0].replay") != std::string::npos) replay_flagged = true;
            if (v.find("methods[0].bandit.kind") != std::string::npos) kind_flagged = true;
        }
        CHECK(replay_flagged);
        CHECK(kind_flagged);
    }
}

TEST_CASE("config: defaults fill everything optional") {
    ExperimentConfig cfg = parse_config_json(tiny_config(kMabMethod));
    CHECK(cfg.hidden == std::vector<std::size_t>{8});
    CHECK(cfg.shards == 2);
    CHECK(cfg.sample_ratio == doctest::Approx(0.2));
    CHECK(cfg.patience == 10);
    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0].policy.kind == BanditKind::ei2);
    CHECK(cfg.methods[0].regularizer.kind == RegKind::nc);
}

TEST_CASE("config: invalid JSON is a single violation") {
    CHECK_THROWS_AS(parse_config_json("{nope"), ConfigError);
}

TEST_CASE("run_matrix: emits (shards+1) x methods x seeds rows") {
    ExperimentConfig cfg = parse_config_json(tiny_config(
        R"([{"name": "mab", "replay": "mab_sim", "weight_opt": "minib", "bandit": {"kind": "ucb"}},
            {"name": "reservoir", "replay": "reservoir", "weight_opt": "full_epochs"}])",
        2));
    std::vector<MetricsRow> rows = run_matrix(cfg, 1);
    CHECK(rows.size() == 3 * 2 * 2);
    int session0 = 0;
    for (const auto& r : rows) {
        CHECK(r.session >= 0);
        CHECK(r.session <= 2);
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        if (r.session == 0) {
            ++session0;
            CHECK(r.replay_size == 0);
            CHECK(r.weight_update_fraction == doctest::Approx(1.0));
        }
    }
    CHECK(session0 == 4);
}

TEST_CASE("run_matrix: deterministic apart from wall time, and parallel-safe") {
    ExperimentConfig cfg = parse_config_json(tiny_config(kMabMethod, 2));
    std::vector<MetricsRow> a = run_matrix(cfg, 1);
    std::vector<MetricsRow> b = run_matrix(cfg, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].session == b[i].session);
        CHECK(a[i].method == b[i].method);
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].accuracy == b[i].accuracy);  // bit-identical
        CHECK(a[i].weight_update_fraction == b[i].weight_update_fraction);
        CHECK(a[i].replay_size == b[i].replay_size);
    }
}

TEST_CASE("budget parity: replay-pool methods train on identical session sizes") {
    ExperimentConfig cfg = parse_config_json(tiny_config(
        R"([{"name": "mab", "replay": "mab_sim", "weight_opt": "full_epochs", "bandit": {"kind": "ts"}},
            {"name": "reservoir", "replay": "reservoir", "weight_opt": "full_epochs"},
            {"name": "random", "replay": "random", "weight_opt": "full_epochs"}])"));
    std::vector<MetricsRow> rows = run_matrix(cfg, 1);
    for (int session = 0; session <= 2; ++session) {
        std::size_t expected = 0;
        bool first = true;
        for (const auto& r : rows) {
            if (r.session != session) continue;
            if (first) {
                expected = r.replay_size;
                first = false;
            }
            CHECK(r.replay_size == expected);
        }
    }
}

TEST_CASE("metrics: jsonl write/read round-trip and schema") {
    std::vector<MetricsRow> rows = {
        {0, "mab", 1, 0.75, 1.25, 1.0, 0},
        {1, "mab", 1, 0.8125, 0.5, 0.34375, 42},
    };
    const std::string path = "/tmp/mabret_test_metrics.jsonl";
    write_metrics_jsonl(path, rows);
    std::vector<MetricsRow> back = read_metrics_jsonl(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1].session == 1);
    CHECK(back[1].method == "mab");
    CHECK(back[1].accuracy == 0.8125);  // %.17g round-trips doubles exactly
    CHECK(back[1].weight_update_fraction == 0.34375);
    CHECK(back[1].replay_size == 42);

    std::ifstream in(path);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line.find("\"session\":0") != std::string::npos);
    CHECK(first_line.find("\"train_seconds\":") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("metrics: missing fields are reported with the line") {
    const std::string path = "/tmp/mabret_test_badmetrics.jsonl";
    {
        std::ofstream out(path);
        out << R"({"session":0,"method":"m","seed":1})" << "\n";
    }
    CHECK_THROWS_WITH_AS(read_metrics_jsonl(path), doctest::Contains("missing field"),
                         std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("report: single method renders one row per session") {
    std::vector<MetricsRow> rows = {
        {0, "mab", 1, 0.7, 0.1, 1.0, 0},
        {1, "mab", 1, 0.8, 0.1, 0.5, 10},
        {0, "mab", 2, 0.72, 0.1, 1.0, 0},
        {1, "mab", 2, 0.82, 0.1, 0.5, 10},
    };
    std::string csv = render_report(rows, "csv");
    CHECK(csv.find("mab,0,0.710000") != std::string::npos);
    CHECK(csv.find("mab,1,0.810000") != std::string::npos);
    std::string md = render_report(rows, "md");
    CHECK(md.find("| mab |") != std::string::npos);
}

TEST_CASE("report: equal accuracies give zero relative improvement") {
    std::vector<MetricsRow> rows = {
        {1, "random", 1, 0.8, 0.1, 1.0, 10},
        {1, "mab", 1, 0.8, 0.1, 0.5, 10},
    };
    std::string csv = render_report(rows, "csv");
    CHECK(csv.find("mab,1,0.0000") != std::string::npos);
}

TEST_CASE("report: hand-built two-seed metrics aggregate to hand means") {
    std::vector<MetricsRow> rows = {
        {1, "random", 1, 0.60, 0.1, 1.0, 10},
        {1, "random", 2, 0.70, 0.1, 1.0, 10},
        {1, "mab", 1, 0.80, 0.1, 0.5, 10},
        {1, "mab", 2, 0.90, 0.1, 0.5, 10},
    };
    std::string csv = render_report(rows, "csv");
    CHECK(csv.find("random,1,0.650000,0.050000") != std::string::npos);
    CHECK(csv.find("mab,1,0.850000,0.050000") != std::string::npos);
    // relative improvement vs random: (0.85-0.65)/0.65 = 30.77%
    CHECK(csv.find("mab,1,30.7692") != std::string::npos);
}

TEST_CASE("report: unknown format is rejected") {
    std::vector<MetricsRow> rows = {{0, "m", 1, 0.5, 0.1, 1.0, 0}};
    CHECK_THROWS_AS(render_report(rows, "xml"), std::invalid_argument);
}
