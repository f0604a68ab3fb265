#include "mabret/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mabret/checkpoint.hpp"
#include "mabret/rng.hpp"

namespace mabret {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> v)
    : std::runtime_error("config schema violations:\n  " + [&v] {
          std::string joined;
          for (std::size_t i = 0; i < v.size(); ++i) {
              if (i) joined += "\n  ";
              joined += v[i];
          }
          return joined;
      }()),
      violations(std::move(v)) {}

namespace {

struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    template <typename T>
    T get(const json& j, const std::string& path, const std::string& key, T fallback,
          bool required = false) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing required field");
            return fallback;
        }
        try {
            return j.at(key).get<T>();
        } catch (const std::exception&) {
            fail(path + "." + key, "wrong type");
            return fallback;
        }
    }
};

const std::map<std::string, ReplayStrategy> kReplayNames = {
    {"union", ReplayStrategy::union_all},   {"random", ReplayStrategy::random},
    {"new_data", ReplayStrategy::new_data}, {"reservoir", ReplayStrategy::reservoir},
    {"mab_sim", ReplayStrategy::mab_sim},   {"mab_opt", ReplayStrategy::mab_opt}};
const std::map<std::string, WeightOptMode> kWoptNames = {
    {"minib", WeightOptMode::minib},
    {"epochs", WeightOptMode::epochs},
    {"full_epochs", WeightOptMode::full_epochs}};
const std::map<std::string, BanditKind> kBanditNames = {{"ei", BanditKind::ei},
                                                        {"ei2", BanditKind::ei2},
                                                        {"ucb", BanditKind::ucb},
                                                        {"ts", BanditKind::ts},
                                                        {"exp3", BanditKind::exp3}};
const std::map<std::string, RewardKind> kRewardNames = {{"loss", RewardKind::loss},
                                                        {"ngrad", RewardKind::ngrad}};
const std::map<std::string, RegKind> kRegNames = {{"none", RegKind::none},
                                                  {"nc", RegKind::nc},
                                                  {"ewc", RegKind::ewc},
                                                  {"mas", RegKind::mas}};

template <typename T>
T parse_enum(Validator& v, const json& j, const std::string& path, const std::string& key,
             const std::map<std::string, T>& names, T fallback, bool required = false) {
    std::string s = v.get<std::string>(j, path, key, "", required);
    if (s.empty() && !required) return fallback;
    auto it = names.find(s);
    if (it == names.end()) {
        std::string allowed;
        for (const auto& [name, _] : names) {
            if (!allowed.empty()) allowed += "|";
            allowed += name;
        }
        v.fail(path + "." + key, "unknown value '" + s + "' (expected " + allowed + ")");
        return fallback;
    }
    return it->second;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError({std::string("invalid JSON: ") + e.what()});
    }

    Validator v;
    ExperimentConfig cfg;

    if (!j.contains("dataset")) {
        v.fail("dataset", "missing required field");
    } else {
        const json& d = j["dataset"];
        cfg.dataset.kind = v.get<std::string>(d, "dataset", "kind", "", true);
        if (cfg.dataset.kind == "sea") {
            cfg.dataset.drift.n_per_segment =
                v.get<std::size_t>(d, "dataset", "n_per_segment", cfg.dataset.drift.n_per_segment);
            cfg.dataset.drift.thresholds = v.get<std::vector<double>>(
                d, "dataset", "thresholds", cfg.dataset.drift.thresholds);
            cfg.dataset.drift.noise_rate =
                v.get<double>(d, "dataset", "noise_rate", cfg.dataset.drift.noise_rate);
            cfg.dataset.sea_seed = v.get<std::uint64_t>(d, "dataset", "seed", cfg.dataset.sea_seed);
            if (!(cfg.dataset.drift.noise_rate >= 0.0 && cfg.dataset.drift.noise_rate < 0.5))
                v.fail("dataset.noise_rate", "must be in [0, 0.5)");
            if (cfg.dataset.drift.thresholds.empty())
                v.fail("dataset.thresholds", "need at least one segment");
        } else if (cfg.dataset.kind == "csv") {
            cfg.dataset.path = v.get<std::string>(d, "dataset", "path", "", true);
            cfg.dataset.label_column = v.get<std::string>(d, "dataset", "label_column", "", true);
        } else if (cfg.dataset.kind == "idx") {
            cfg.dataset.images = v.get<std::string>(d, "dataset", "images", "", true);
            cfg.dataset.labels = v.get<std::string>(d, "dataset", "labels", "", true);
            cfg.dataset.normalize = false;  // pixels already scaled to [0,1]
        } else if (!cfg.dataset.kind.empty()) {
            v.fail("dataset.kind", "unknown value '" + cfg.dataset.kind + "' (expected sea|csv|idx)");
        }
        cfg.dataset.normalize = v.get<bool>(d, "dataset", "normalize", cfg.dataset.normalize);
    }

    if (j.contains("network")) {
        const json& n = j["network"];
        cfg.hidden = v.get<std::vector<std::size_t>>(n, "network", "hidden", cfg.hidden);
        cfg.batch_size = v.get<std::size_t>(n, "network", "batch_size", cfg.batch_size);
        cfg.learning_rate = v.get<double>(n, "network", "learning_rate", cfg.learning_rate);
        if (cfg.batch_size < 1) v.fail("network.batch_size", "must be >= 1");
        for (std::size_t h : cfg.hidden)
            if (h < 1) v.fail("network.hidden", "hidden sizes must be >= 1");
    }

    if (j.contains("protocol")) {
        const json& p = j["protocol"];
        cfg.shards = v.get<int>(p, "protocol", "shards", cfg.shards);
        if (cfg.shards < 1) v.fail("protocol.shards", "must be >= 1");
        cfg.max_epochs = v.get<int>(p, "protocol", "max_epochs", cfg.max_epochs);
        cfg.warmup_epochs = v.get<int>(p, "protocol", "warmup_epochs", cfg.warmup_epochs);
        cfg.sample_ratio = v.get<double>(p, "protocol", "sample_ratio", cfg.sample_ratio);
        cfg.patience = v.get<int>(p, "protocol", "patience", cfg.patience);
        cfg.min_delta = v.get<double>(p, "protocol", "min_delta", cfg.min_delta);
        cfg.tail_fraction = v.get<double>(p, "protocol", "tail_fraction", cfg.tail_fraction);
        cfg.ordered_split = v.get<bool>(p, "protocol", "ordered_split", cfg.ordered_split);
        if (cfg.max_epochs < 1) v.fail("protocol.max_epochs", "must be >= 1");
        if (cfg.warmup_epochs < 1) v.fail("protocol.warmup_epochs", "must be >= 1");
        if (cfg.warmup_epochs >= cfg.max_epochs)
            v.fail("protocol.warmup_epochs", "must be below max_epochs");
        if (!(cfg.sample_ratio > 0.0 && cfg.sample_ratio <= 1.0))
            v.fail("protocol.sample_ratio", "must be in (0, 1]");
        if (cfg.patience < 1) v.fail("protocol.patience", "must be >= 1");
        if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0))
            v.fail("protocol.tail_fraction", "must be in (0, 1]");
    }

    cfg.seeds = v.get<std::vector<std::uint64_t>>(j, "", "seeds", cfg.seeds);
    if (cfg.seeds.empty()) v.fail("seeds", "need at least one seed");

    if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty()) {
        v.fail("methods", "need at least one method");
    } else {
        std::set<std::string> names;
        for (std::size_t i = 0; i < j["methods"].size(); ++i) {
            const json& m = j["methods"][i];
            std::string path = "methods[" + std::to_string(i) + "]";
            MethodConfig mc;
            mc.name = v.get<std::string>(m, path, "name", "", true);
            if (!mc.name.empty() && !names.insert(mc.name).second)
                v.fail(path + ".name", "duplicate method name '" + mc.name + "'");
            mc.replay = parse_enum(v, m, path, "replay", kReplayNames, mc.replay, true);
            mc.weight_opt = parse_enum(v, m, path, "weight_opt", kWoptNames, mc.weight_opt);
            mc.reward = parse_enum(v, m, path, "reward", kRewardNames, mc.reward);
            if (m.contains("bandit")) {
                const json& b = m["bandit"];
                mc.policy.kind = parse_enum(v, b, path + ".bandit", "kind", kBanditNames,
                                            mc.policy.kind);
                mc.policy.ucb_c = v.get<double>(b, path + ".bandit", "ucb_c", mc.policy.ucb_c);
                mc.policy.exp3_gamma =
                    v.get<double>(b, path + ".bandit", "exp3_gamma", mc.policy.exp3_gamma);
                mc.policy.ei2_beta =
                    v.get<double>(b, path + ".bandit", "ei2_beta", mc.policy.ei2_beta);
                if (!(mc.policy.exp3_gamma > 0.0 && mc.policy.exp3_gamma <= 1.0))
                    v.fail(path + ".bandit.exp3_gamma", "must be in (0, 1]");
                if (!(mc.policy.ei2_beta > 0.0 && mc.policy.ei2_beta < 1.0))
                    v.fail(path + ".bandit.ei2_beta", "must be in (0, 1)");
                if (mc.policy.ucb_c < 0.0) v.fail(path + ".bandit.ucb_c", "must be >= 0");
            }
            if (m.contains("regularizer")) {
                const json& r = m["regularizer"];
                mc.regularizer.kind =
                    parse_enum(v, r, path + ".regularizer", "kind", kRegNames, mc.regularizer.kind);
                mc.regularizer.alpha =
                    v.get<double>(r, path + ".regularizer", "alpha", mc.regularizer.alpha);
                mc.regularizer.beta =
                    v.get<double>(r, path + ".regularizer", "beta", mc.regularizer.beta);
                if (mc.regularizer.alpha < 0.0) v.fail(path + ".regularizer.alpha", "must be >= 0");
                if (mc.regularizer.beta < 0.0) v.fail(path + ".regularizer.beta", "must be >= 0");
            }
            mc.clusters_per_layer =
                v.get<int>(m, path, "clusters_per_layer", mc.clusters_per_layer);
            if (mc.clusters_per_layer < 1) v.fail(path + ".clusters_per_layer", "must be >= 1");
            cfg.methods.push_back(std::move(mc));
        }
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        cfg.output.dir = v.get<std::string>(o, "output", "dir", cfg.output.dir);
        cfg.output.metrics = v.get<std::string>(o, "output", "metrics", cfg.output.metrics);
        cfg.output.summary = v.get<std::string>(o, "output", "summary", cfg.output.summary);
        cfg.output.checkpoints = v.get<bool>(o, "output", "checkpoints", cfg.output.checkpoints);
    }

    if (!v.errors.empty()) throw ConfigError(std::move(v.errors));
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::string default_output_dir() {
    const char* env = std::getenv("MABRET_OUT_DIR");
    return env && *env ? env : ".";
}

namespace {

Dataset build_dataset(const DatasetConfig& dc) {
    if (dc.kind == "sea") return generate_sea(dc.drift, dc.sea_seed);
    if (dc.kind == "csv") return load_csv(dc.path, dc.label_column);
    if (dc.kind == "idx") return load_idx(dc.images, dc.labels);
    throw std::invalid_argument("unknown dataset kind " + dc.kind);
}

std::vector<LayerSpec> build_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                  std::size_t classes) {
    std::vector<LayerSpec> spec;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        spec.push_back({in, h, Activation::relu});
        in = h;
    }
    spec.push_back({in, classes, Activation::softmax});
    return spec;
}

bool uses_replay_pool(ReplayStrategy s) {
    return s == ReplayStrategy::random || s == ReplayStrategy::reservoir ||
           s == ReplayStrategy::mab_sim || s == ReplayStrategy::mab_opt;
}

std::vector<ClusterArm> single_arm(std::size_t param_count) {
    ClusterArm arm;
    arm.id = 0;
    arm.members.resize(param_count);
    std::iota(arm.members.begin(), arm.members.end(), 0);
    return {arm};
}

}  // namespace

std::vector<MetricsRow> run_single(const Dataset& data, const ExperimentConfig& cfg,
                                   const MethodConfig& method, std::uint64_t seed,
                                   const std::string& checkpoint_dir,
                                   NetworkParams* final_params) {
    SplitPlan plan;
    plan.seed = seed;
    plan.ordered = cfg.ordered_split;
    plan.set_fractions.assign(1, 0.5);
    for (int s = 0; s < cfg.shards; ++s)
        plan.set_fractions.push_back(0.5 / static_cast<double>(cfg.shards));
    std::vector<SplitPart> parts = split(data, plan);

    Dataset local;
    const Dataset* d = &data;
    if (cfg.dataset.normalize) {
        local = data;
        Normalizer::fit(local, parts[0].train).apply(local);
        d = &local;
    }

    // union training sizes per session, for the replay sample budget
    std::vector<std::size_t> union_size(parts.size());
    std::size_t acc = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        acc += parts[p].train.size();
        union_size[p] = acc;
    }

    std::vector<LayerSpec> spec =
        build_spec(d->features.cols, cfg.hidden, static_cast<std::size_t>(d->class_count));
    NetworkParams theta = NetworkParams::init(spec, derive_seed(seed, "init"));

    RegularizerState reg_state;
    bool have_reg = false;
    TrajectoryLog prev_traj;
    std::vector<std::size_t> selected;  // S carried into the next session
    std::int32_t selected_from = -1;

    std::vector<MetricsRow> rows;
    const std::size_t sessions = parts.size();
    for (std::size_t m = 0; m < sessions; ++m) {
        std::vector<std::size_t> kept, fresh;
        if (m == 0) {
            fresh = parts[0].train;
        } else if (method.replay == ReplayStrategy::union_all) {
            fresh = cumulative_ids(parts, m, &SplitPart::train);
        } else if (method.replay == ReplayStrategy::new_data) {
            fresh = parts[m].train;
        } else {
            kept = selected;
            fresh = parts[m].train;
        }
        std::vector<MiniBatch> batches =
            assemble_next_train(*d, kept, fresh, cfg.batch_size, derive_seed(seed, "batches", m));

        EvalSet val = gather(*d, cumulative_ids(parts, m, &SplitPart::val));
        EvalSet test = gather(*d, cumulative_ids(parts, m, &SplitPart::test));

        WeightOptConfig wcfg;
        wcfg.mode = m == 0 ? WeightOptMode::full_epochs : method.weight_opt;
        wcfg.policy = method.policy;
        wcfg.reward_kind = method.reward;
        wcfg.loss_kind = Loss::cross_entropy;
        wcfg.max_epochs = cfg.max_epochs;
        wcfg.patience = cfg.patience;
        wcfg.min_delta = cfg.min_delta;
        wcfg.learning_rate = cfg.learning_rate;

        std::vector<ClusterArm> arms;
        LayerClustering clustering;
        bool clustered = false;
        if (wcfg.mode != WeightOptMode::full_epochs) {
            if (prev_traj.epochs() >= 2) {
                Tensor2 features = feature_matrix(prev_traj, cfg.tail_fraction);
                clustering = cluster_layers(features, spec, method.clusters_per_layer,
                                            derive_seed(seed, "cluster", m));
                arms = assemble_arms(clustering, spec, derive_seed(seed, "arms", m));
                clustered = true;
            } else {
                std::fprintf(stderr,
                             "mabret: session %zu has <2 trajectory epochs, using one arm\n", m);
                arms = single_arm(theta.param_count());
            }
        }

        std::unique_ptr<ReplayRecorder> recorder;
        if (method.replay == ReplayStrategy::mab_sim || method.replay == ReplayStrategy::mab_opt)
            recorder = std::make_unique<ReplayRecorder>(method.replay, method.policy,
                                                        cfg.warmup_epochs,
                                                        derive_seed(seed, "replay", m),
                                                        batches.size());

        TrajectoryLog traj;
        auto t0 = std::chrono::steady_clock::now();
        TrainResult result =
            train_session(theta, batches, val, wcfg, arms, method.regularizer,
                          have_reg ? &reg_state : nullptr, recorder.get(), &traj,
                          derive_seed(seed, "train", m));
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        theta = result.best_params;

        MetricsRow row;
        row.session = static_cast<int>(m);
        row.method = method.name;
        row.seed = seed;
        row.accuracy = evaluate(theta, test.x, test.labels);
        row.train_seconds = secs;
        row.weight_update_fraction = result.mean_weight_fraction;
        row.replay_size = selected.size();
        rows.push_back(row);

        std::vector<std::size_t> session_ids;
        for (const auto& b : batches)
            session_ids.insert(session_ids.end(), b.sample_ids.begin(), b.sample_ids.end());

        if (m + 1 < sessions) {
            if (uses_replay_pool(method.replay)) {
                std::size_t budget = static_cast<std::size_t>(std::ceil(
                    cfg.sample_ratio * static_cast<double>(union_size[m + 1])));
                if (budget > session_ids.size()) {
                    std::fprintf(stderr,
                                 "mabret: replay budget %zu exceeds available %zu, clamping\n",
                                 budget, session_ids.size());
                    budget = session_ids.size();
                }
                switch (method.replay) {
                    case ReplayStrategy::mab_sim:
                    case ReplayStrategy::mab_opt:
                        selected = recorder->select_samples(batches, budget);
                        break;
                    case ReplayStrategy::reservoir:
                        selected = reservoir_select(session_ids, budget,
                                                    derive_seed(seed, "reservoir", m));
                        break;
                    case ReplayStrategy::random:
                        selected = random_replay_select(batches, budget,
                                                        derive_seed(seed, "random", m));
                        break;
                    default:
                        break;
                }
                selected_from = static_cast<std::int32_t>(m);
            } else {
                selected.clear();
            }
            if (method.regularizer.kind != RegKind::none) {
                EvalSet train_eval = gather(*d, session_ids);
                reg_state = estimate_importance(theta, train_eval.x, train_eval.labels,
                                                method.regularizer.kind, wcfg.loss_kind);
                have_reg = true;
            }
        }

        if (!checkpoint_dir.empty()) {
            SessionCheckpoint ckpt;
            ckpt.session = static_cast<int>(m);
            ckpt.params = theta;
            ckpt.adam = result.adam;
            ckpt.has_regularizer = have_reg;
            if (have_reg) ckpt.regularizer = reg_state;
            ckpt.has_clustering = clustered;
            if (clustered) {
                ckpt.clustering = clustering;
                ckpt.arms = arms;
            }
            ckpt.selected = selected;
            ckpt.selected_from_session = selected_from;
            if (recorder) ckpt.replay_arms = recorder->arm_stats();
            ckpt.cluster_arms = result.cluster_stats;
            ckpt.has_trajectory = true;
            ckpt.trajectory = traj;
            std::filesystem::create_directories(checkpoint_dir);
            save_checkpoint(checkpoint_dir + "/ckpt_" + method.name + "_s" +
                                std::to_string(seed) + "_m" + std::to_string(m) + ".bin",
                            ckpt);
        }

        prev_traj = std::move(traj);
    }
    if (final_params) *final_params = theta;
    return rows;
}

std::vector<MetricsRow> run_matrix(const ExperimentConfig& cfg, int jobs) {
    Dataset data = build_dataset(cfg.dataset);

    struct Task {
        std::size_t method;
        std::size_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) tasks.push_back({mi, si});

    std::string ckpt_dir;
    if (cfg.output.checkpoints) {
        ckpt_dir = (cfg.output.dir.empty() ? default_output_dir() : cfg.output.dir);
        ckpt_dir += "/checkpoints";
    }

    std::vector<std::vector<MetricsRow>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            try {
                results[i] = run_single(data, cfg, cfg.methods[tasks[i].method],
                                        cfg.seeds[tasks[i].seed], ckpt_dir);
            } catch (const std::exception& e) {
                std::scoped_lock lock(error_mutex);
                failed.store(true);
                if (error_message.empty())
                    error_message = "experiment " + cfg.methods[tasks[i].method].name + "/seed " +
                                    std::to_string(cfg.seeds[tasks[i].seed]) + ": " + e.what();
            }
        }
    };

    int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw std::runtime_error(error_message);

    std::vector<MetricsRow> rows;
    for (const auto& part : results) rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "{\"session\":%d,\"method\":\"%s\",\"seed\":%llu,\"accuracy\":%.17g,"
                      "\"train_seconds\":%.6g,\"weight_update_fraction\":%.17g,"
                      "\"replay_size\":%zu}\n",
                      r.session, r.method.c_str(), static_cast<unsigned long long>(r.seed),
                      r.accuracy, r.train_seconds, r.weight_update_fraction, r.replay_size);
        out << buf;
    }
}

std::vector<MetricsRow> read_metrics_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        MetricsRow r;
        try {
            r.session = j.at("session").get<int>();
            r.method = j.at("method").get<std::string>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.accuracy = j.at("accuracy").get<double>();
            r.train_seconds = j.at("train_seconds").get<double>();
            r.weight_update_fraction = j.at("weight_update_fraction").get<double>();
            r.replay_size = j.at("replay_size").get<std::size_t>();
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": missing field: " + e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_summary_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    // per-method accuracy averaged over the retraining sessions (1..5) and seeds
    std::map<std::string, std::pair<double, std::size_t>> agg;
    for (const auto& r : rows) {
        if (r.session == 0) continue;
        auto& [sum, count] = agg[r.method];
        sum += r.accuracy;
        count += 1;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "method,mean_accuracy\n";
    char buf[128];
    for (const auto& [name, sc] : agg) {
        std::snprintf(buf, sizeof(buf), "%.6f", sc.first / static_cast<double>(sc.second));
        out << name << "," << buf << "\n";
    }
}

std::string render_report(const std::vector<MetricsRow>& rows, const std::string& format) {
    if (rows.empty()) throw std::invalid_argument("report: no metrics rows");
    bool md = format == "md";
    if (!md && format != "csv") throw std::invalid_argument("report: format must be csv or md");

    std::set<std::string> method_set;
    std::set<int> session_set;
    for (const auto& r : rows) {
        method_set.insert(r.method);
        session_set.insert(r.session);
    }
    std::vector<std::string> methods(method_set.begin(), method_set.end());
    std::vector<int> sessions(session_set.begin(), session_set.end());

    // mean/std across seeds per (method, session)
    auto stats = [&](const std::string& method, int session) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.method == method && r.session == session) {
                sum += r.accuracy;
                sq += r.accuracy * r.accuracy;
                ++n;
            }
        double mean = n ? sum / static_cast<double>(n) : 0.0;
        double var = n ? sq / static_cast<double>(n) - mean * mean : 0.0;
        return std::pair<double, double>(mean, std::sqrt(std::max(0.0, var)));
    };

    std::string ref = "random";
    if (!method_set.count(ref)) ref = methods.front();

    std::ostringstream out;
    char buf[160];
    if (md) {
        out << "## Accuracy by session (mean +/- std over seeds)\n\n| method |";
        for (int s : sessions) out << " s" << s << " |";
        out << " mean(1..) |\n|---|";
        for (std::size_t i = 0; i < sessions.size() + 1; ++i) out << "---|";
        out << "\n";
    } else {
        out << "method,session,mean_accuracy,std_accuracy\n";
    }
    for (const auto& m : methods) {
        double overall = 0.0;
        std::size_t overall_n = 0;
        if (md) out << "| " << m << " |";
        for (int s : sessions) {
            auto [mean, sd] = stats(m, s);
            if (s != 0) {
                overall += mean;
                ++overall_n;
            }
            if (md) {
                std::snprintf(buf, sizeof(buf), " %.4f +/- %.4f |", mean, sd);
                out << buf;
            } else {
                std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f\n", m.c_str(), s, mean, sd);
                out << buf;
            }
        }
        if (md) {
            std::snprintf(buf, sizeof(buf), " %.4f |\n",
                          overall_n ? overall / static_cast<double>(overall_n) : 0.0);
            out << buf;
        }
    }

    if (md)
        out << "\n## Relative improvement (%) over '" << ref << "'\n\n| method |";
    else
        out << "\nmethod,session,relative_improvement_pct_vs_" << ref << "\n";
    if (md) {
        for (int s : sessions) out << " s" << s << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < sessions.size(); ++i) out << "---|";
        out << "\n";
    }
    for (const auto& m : methods) {
        if (md) out << "| " << m << " |";
        for (int s : sessions) {
            double ref_mean = stats(ref, s).first;
            double mean = stats(m, s).first;
            double imp = ref_mean != 0.0 ? (mean - ref_mean) / ref_mean * 100.0 : 0.0;
            if (md) {
                std::snprintf(buf, sizeof(buf), " %.3f |", imp);
                out << buf;
            } else {
                std::snprintf(buf, sizeof(buf), "%s,%d,%.4f\n", m.c_str(), s, imp);
                out << buf;
            }
        }
        if (md) out << "\n";
    }
    return out.str();
}

}  // namespace mabret
