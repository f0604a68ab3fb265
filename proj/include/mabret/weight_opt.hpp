#pragma once

#include <cstdint>
#include <vector>

#include "mabret/adam.hpp"
#include "mabret/clustering.hpp"
#include "mabret/regularizer.hpp"
#include "mabret/replay.hpp"

namespace mabret {

enum class WeightOptMode { minib, epochs, full_epochs };

struct WeightOptConfig {
    WeightOptMode mode = WeightOptMode::full_epochs;
    BanditPolicy policy;
    RewardKind reward_kind = RewardKind::loss;
    Loss loss_kind = Loss::cross_entropy;
    int max_epochs = 20;
    int patience = 10;        // early stop: no val improvement > min_delta this many epochs
    double min_delta = 1e-6;
    double learning_rate = 1e-3;
};

struct EpochStats {
    double mean_objective = 0.0;
    double val_accuracy = 0.0;
    double weight_fraction = 1.0;  // mean over steps of |pulled arm| / total params
};

struct TrainResult {
    NetworkParams best_params;
    double best_val_accuracy = 0.0;
    int epochs_run = 0;
    std::vector<EpochStats> epoch_stats;
    std::vector<ArmStats> cluster_stats;
    std::vector<double> init_rewards;  // raw per-arm one-epoch loss decreases
    double mean_weight_fraction = 1.0;
    AdamState adam;
    int nonfinite_rewards = 0;
};

/// Argmax-prediction accuracy (ties go to the lowest class index).
double evaluate(const NetworkParams& params, const Tensor2& x, const std::vector<int>& labels);

/// Alg. 2 initialization: per arm, reset to theta_m, run one masked epoch over
/// the batches in id order and collect the summed per-batch loss decrease.
/// raw_rewards gets the unscaled epoch decreases; the returned stats record
/// one pull each with reward divided by the batch count so initialization
/// rewards are commensurate with later per-batch rewards.
std::vector<ArmStats> init_cluster_rewards(const NetworkParams& theta_m,
                                           const std::vector<ClusterArm>& arms,
                                           const std::vector<MiniBatch>& batches,
                                           const WeightOptConfig& cfg,
                                           const RegularizerConfig& reg_cfg,
                                           const RegularizerState* reg_state,
                                           RewardScaler& scaler,
                                           std::vector<double>* raw_rewards = nullptr);

/// One retraining session. Handles all three weight-opt modes; arms are
/// required (and must partition the parameters) for minib/epochs. recorder
/// and trajectory may be null. The seed fans out to independent shuffle and
/// cluster-bandit streams, so strategies that skip a stream leave the others
/// untouched.
TrainResult train_session(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                          const EvalSet& val, const WeightOptConfig& cfg,
                          const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                          const RegularizerState* reg_state, ReplayRecorder* recorder,
                          TrajectoryLog* trajectory, std::uint64_t seed);

TrainResult train_minib(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                        const EvalSet& val, WeightOptConfig cfg,
                        const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                        const RegularizerState* reg_state, std::uint64_t seed);
TrainResult train_epochs(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                         const EvalSet& val, WeightOptConfig cfg,
                         const std::vector<ClusterArm>& arms, const RegularizerConfig& reg_cfg,
                         const RegularizerState* reg_state, std::uint64_t seed);
TrainResult train_full_epochs(const NetworkParams& start, const std::vector<MiniBatch>& batches,
                              const EvalSet& val, WeightOptConfig cfg,
                              const RegularizerConfig& reg_cfg, const RegularizerState* reg_state,
                              std::uint64_t seed);

struct ReplaySessionResult {
    TrainResult train;
    std::vector<std::size_t> selected;       // S, global sample ids
    std::vector<std::int64_t> selection_counts;
};

/// Plain epoch training with replay recording on top (the standalone Sim/Opt
/// contracts). sample_budget caps |S|; pass 0 to size it from ratio.
ReplaySessionResult replay_sim_session(const NetworkParams& start,
                                       const std::vector<MiniBatch>& batches, const EvalSet& val,
                                       WeightOptConfig cfg, const BanditPolicy& replay_policy,
                                       int warmup_epochs, double ratio, std::uint64_t seed,
                                       std::size_t sample_budget = 0);
ReplaySessionResult replay_opt_session(const NetworkParams& start,
                                       const std::vector<MiniBatch>& batches, const EvalSet& val,
                                       WeightOptConfig cfg, const BanditPolicy& replay_policy,
                                       int warmup_epochs, double ratio, std::uint64_t seed,
                                       std::size_t sample_budget = 0);

}  // namespace mabret
