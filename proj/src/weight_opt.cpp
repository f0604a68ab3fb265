#include "mabret/weight_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

double evaluate(const NetworkParams& params, const Tensor2& x, const std::vector<int>& labels) {
    if (x.rows == 0) return 0.0;
    std::size_t correct = 0;
    const std::size_t chunk = 4096;
    for (std::size_t start = 0; start < x.rows; start += chunk) {
        std::size_t end = std::min(start + chunk, x.rows);
        Tensor2 part(end - start, x.cols);
        std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(start * x.cols),
                  x.data.begin() + static_cast<std::ptrdiff_t>(end * x.cols), part.data.begin());
        ForwardTrace trace = forward(params, part);
        const Tensor2& out = trace.output();
        for (std::size_t r = 0; r < out.rows; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < out.cols; ++c)
                if (out.at(r, c) > out.at(r, best)) best = c;
            if (static_cast<int>(best) == labels[start + r]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows);
}

namespace {

void check_arm_partition(const std::vector<ClusterArm>& arms, std::size_t param_count) {
    std::vector<std::uint8_t> seen(param_count, 0);
    std::size_t covered = 0;
    for (const auto& arm : arms)
        for (std::size_t s : arm.members) {
            if (s >= param_count || seen[s]) throw std::invalid_argument("arms do not partition");
            seen[s] = 1;
            ++covered;
        }
    if (covered != param_count) throw std::invalid_argument("arms do not cover all parameters");
}

double step_reward(const NetworkParams& params, const MiniBatch& batch, double decrease,
                   const WeightOptConfig& cfg, const std::vector<std::size_t>* members) {
    if (cfg.reward_kind == RewardKind::loss) return decrease;
    return per_sample_sq_grad_norm(params, batch.x, batch.labels, cfg.loss_kind, members);
}

}  // namespace

std::vector<ArmStats> init_cluster_rewards(const NetworkParams& theta_m,
                                           const std::vector<ClusterArm>& arms,
                                           const std::vector<MiniBatch>& batches,
                                           const WeightOptConfig& cfg,
                                           const RegularizerConfig& reg_cfg,
                                           const RegularizerState* reg_state,
                                           RewardScaler& scaler,
                                           std::vector<double>* raw_rewards) {
    if (arms.empty()) throw std::invalid_argument("init_cluster_rewards: no arms");
    if (batches.empty()) throw std::invalid_argument("init_cluster_rewards: no batches");
    const std::size_t n = theta_m.param_count();

    std::vector<ArmStats> stats(arms.size());
    if (raw_rewards) raw_rewards->assign(arms.size(), 0.0);
    for (std::size_t a = 0; a < arms.size(); ++a) {
        GradMask mask = arm_mask(arms[a], n);
        NetworkParams theta = theta_m;  // Alg. 2 step 3: reset per arm
        AdamState adam = AdamState::make(n, cfg.learning_rate);
        double reward = 0.0;
        for (const MiniBatch& b : batches) {
            ObjectiveGrad og =
                objective_backward(theta, b.x, b.labels, cfg.loss_kind, reg_cfg, reg_state);
            adam_step(theta, og.grads, &mask, adam);
            double after =
                objective_value(theta, b.x, b.labels, cfg.loss_kind, reg_cfg, reg_state);
            reward += step_reward(theta, b, og.total() - after, cfg, &arms[a].members);
        }
        if (raw_rewards) (*raw_rewards)[a] = reward;
        // enter as one pull, scaled down to per-batch magnitude
        double scaled = reward / static_cast<double>(batches.size());
        bandit_update(cfg.policy, stats, a, scaled, scaler);
    }
    return stats;
}

TrainResult train_session(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                          const EvalSet& val, const WeightOptConfig& cfg,
                          const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                          const RegularizerState* reg_state, ReplayRecorder* recorder,
                          TrajectoryLog* trajectory, std::uint64_t seed) {
    if (batches.empty()) throw std::invalid_argument("train_session: no batches");
    if (cfg.max_epochs < 1) throw std::invalid_argument("train_session: max_epochs >= 1");
    const bool use_arms = cfg.mode != WeightOptMode::full_epochs;
    const std::size_t n = start.param_count();
    if (use_arms) {
        if (arms.empty()) throw std::invalid_argument("train_session: minib/epochs need arms");
        check_arm_partition(arms, n);
    }

    auto shuffle_rng = make_rng(derive_seed(seed, "shuffle"));
    auto cluster_rng = make_rng(derive_seed(seed, "cluster-bandit"));

    TrainResult res;
    res.adam = AdamState::make(n, cfg.learning_rate);
    NetworkParams theta = start;

    std::vector<GradMask> masks;
    RewardScaler cluster_scaler;
    std::int64_t cluster_t = 0;
    if (use_arms) {
        masks.reserve(arms.size());
        for (const auto& arm : arms) masks.push_back(arm_mask(arm, n));
        res.cluster_stats = init_cluster_rewards(start, arms, batches, cfg, reg_cfg, reg_state,
                                                 cluster_scaler, &res.init_rewards);
        cluster_t = static_cast<std::int64_t>(arms.size());
    }

    double best_val = -1.0;
    int bad_epochs = 0;
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_vec(order, shuffle_rng);

        std::size_t epoch_arm = 0;
        double epoch_reward = 0.0;
        if (cfg.mode == WeightOptMode::epochs)
            epoch_arm = bandit_select(cfg.policy, res.cluster_stats, ++cluster_t, cluster_rng);

        double objective_sum = 0.0;
        double fraction_sum = 0.0;
        for (std::size_t step = 0; step < order.size(); ++step) {
            std::size_t scheduled = order[step];
            if (recorder) {
                if (recorder->drives_schedule(epoch))
                    scheduled = recorder->pick_training_batch(epoch);
                else
                    recorder->record_hypothetical(epoch);
            }
            const MiniBatch& b = batches[scheduled];

            std::size_t pulled = epoch_arm;
            const GradMask* mask = nullptr;
            if (cfg.mode == WeightOptMode::minib)
                pulled = bandit_select(cfg.policy, res.cluster_stats, ++cluster_t, cluster_rng);
            if (use_arms) mask = &masks[pulled];

            ObjectiveGrad og =
                objective_backward(theta, b.x, b.labels, cfg.loss_kind, reg_cfg, reg_state);
            adam_step(theta, og.grads, mask, res.adam);
            double after =
                objective_value(theta, b.x, b.labels, cfg.loss_kind, reg_cfg, reg_state);
            double decrease = og.total() - after;
            objective_sum += og.total();
            fraction_sum += use_arms
                                ? static_cast<double>(arms[pulled].members.size()) /
                                      static_cast<double>(n)
                                : 1.0;

            if (recorder) {
                double rr = cfg.reward_kind == RewardKind::loss
                                ? decrease
                                : per_sample_sq_grad_norm(theta, b.x, b.labels, cfg.loss_kind,
                                                          nullptr);
                recorder->on_batch_trained(epoch, scheduled, rr);
            }
            if (use_arms) {
                double cr = step_reward(theta, b, decrease, cfg, &arms[pulled].members);
                if (cfg.mode == WeightOptMode::minib) {
                    if (!bandit_update(cfg.policy, res.cluster_stats, pulled, cr, cluster_scaler))
                        ++res.nonfinite_rewards;
                } else {
                    epoch_reward += cr;
                }
            }
        }
        if (cfg.mode == WeightOptMode::epochs) {
            if (!bandit_update(cfg.policy, res.cluster_stats, epoch_arm, epoch_reward,
                               cluster_scaler))
                ++res.nonfinite_rewards;
        }

        if (trajectory) trajectory->record(flatten(theta));

        EpochStats es;
        es.mean_objective = objective_sum / static_cast<double>(order.size());
        es.weight_fraction = fraction_sum / static_cast<double>(order.size());
        es.val_accuracy = val.labels.empty() ? 0.0 : evaluate(theta, val.x, val.labels);
        res.epoch_stats.push_back(es);
        res.epochs_run = epoch;

        // No validation set: run the full budget and keep the final parameters.
        if (val.labels.empty()) continue;

        if (es.val_accuracy > best_val + cfg.min_delta) {
            best_val = es.val_accuracy;
            res.best_params = theta;
            res.best_val_accuracy = es.val_accuracy;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg.patience) break;
        }
    }
    if (res.best_params.layers.empty()) {
        res.best_params = theta;
        res.best_val_accuracy = best_val;
    }
    double fsum = 0.0;
    for (const auto& es : res.epoch_stats) fsum += es.weight_fraction;
    res.mean_weight_fraction =
        res.epoch_stats.empty() ? 1.0 : fsum / static_cast<double>(res.epoch_stats.size());
    return res;
}

TrainResult train_minib(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                        const EvalSet& val, WeightOptConfig cfg,
                        const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                        const RegularizerState* reg_state, std::uint64_t seed) {
    cfg.mode = WeightOptMode::minib;
    return train_session(start, batches, val, cfg, arms, reg_cfg, reg_state, nullptr, nullptr,
                         seed);
}

TrainResult train_epochs(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                         const EvalSet& val, WeightOptConfig cfg,
                         const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                         const RegularizerState* reg_state, std::uint64_t seed) {
    cfg.mode = WeightOptMode::epochs;
    return train_session(start, batches, val, cfg, arms, reg_cfg, reg_state, nullptr, nullptr,
                         seed);
}

TrainResult train_full_epochs(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                              const EvalSet& val, WeightOptConfig cfg,
                              const RegularizerConfig& reg_cfg, const RegularizerState* reg_state,
                              std::uint64_t seed) {
    cfg.mode = WeightOptMode::full_epochs;
    return train_session(start, batches, val, cfg, {}, reg_cfg, reg_state, nullptr, nullptr,
                         seed);
}

namespace {

ReplaySessionResult run_replay_session(ReplayStrategy strategy, const NetworkParams& start,
                                       const std::vector<MiniBatch>& batches, const EvalSet& val,
                                       WeightOptConfig cfg, const BanditPolicy& replay_policy,
                                       int warmup_epochs, double ratio, std::uint64_t seed,
                                       std::size_t sample_budget) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw std::invalid_argument("replay session: ratio in (0,1]");
    if (cfg.max_epochs <= warmup_epochs)
        throw std::invalid_argument("replay session: total epochs must exceed warm-up");
    cfg.mode = WeightOptMode::full_epochs;

    std::size_t total = 0;
    for (const auto& b : batches) total += b.size();
    if (sample_budget == 0)
        sample_budget = static_cast<std::size_t>(
            std::ceil(ratio * static_cast<double>(total)));
    sample_budget = std::min(sample_budget, total);

    ReplayRecorder recorder(strategy, replay_policy, warmup_epochs,
                            derive_seed(seed, "replay-bandit"), batches.size());
    ReplaySessionResult out;
    out.train = train_session(start, batches, val, cfg, {}, RegularizerConfig{}, nullptr,
                              &recorder, nullptr, seed);
    out.selected = recorder.select_samples(batches, sample_budget);
    out.selection_counts = recorder.selection_counts();
    return out;
}

}  // namespace

ReplaySessionResult replay_sim_session(const NetworkParams& start,
                                       const std::vector<MiniBatch>& batches, const EvalSet& val,
                                       WeightOptConfig cfg, const BanditPolicy& replay_policy,
                                       int warmup_epochs, double ratio, std::uint64_t seed,
                                       std::size_t sample_budget) {
    return run_replay_session(ReplayStrategy::mab_sim, start, batches, val, cfg, replay_policy,
                              warmup_epochs, ratio, seed, sample_budget);
}

ReplaySessionResult replay_opt_session(const NetworkParams& start,
                                       const std::vector<MiniBatch>& batches, const EvalSet& val,
                                       WeightOptConfig cfg, const BanditPolicy& replay_policy,
                                       int warmup_epochs, double ratio, std::uint64_t seed,
                                       std::size_t sample_budget) {
    return run_replay_session(ReplayStrategy::mab_opt, start, batches, val, cfg, replay_policy,
                              warmup_epochs, ratio, seed, sample_budget);
}

}  // namespace mabret
