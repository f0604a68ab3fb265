#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mabret/bandit.hpp"
#include "mabret/dataset.hpp"
#include "mabret/network.hpp"

namespace mabret {

enum class ReplayStrategy { union_all, random, new_data, reservoir, mab_sim, mab_opt };
enum class RewardKind { loss, ngrad };

/// One arm of the replay bandit: a fixed set of samples with cached tensors.
struct MiniBatch {
    int id = 0;
    std::vector<std::size_t> sample_ids;  // global indices into the master dataset
    Tensor2 x;
    std::vector<int> labels;

    std::size_t size() const { return sample_ids.size(); }
};

/// Partition ids into fixed-size batches (last one may be short) and
/// materialize their tensors.
std::vector<MiniBatch> make_batches(const Dataset& data, const std::vector<std::size_t>& ids,
                                    std::size_t batch_size, int first_id = 0);

/// Classic single-pass reservoir: after n >= capacity offers every item
/// occupies a slot with probability capacity/n.
struct Reservoir {
    std::size_t capacity = 0;
    std::vector<std::size_t> slots;
    std::size_t items_seen = 0;

    explicit Reservoir(std::size_t cap) : capacity(cap) {}
    void offer(std::size_t item, std::mt19937_64& rng);
};

std::vector<std::size_t> reservoir_select(const std::vector<std::size_t>& stream,
                                          std::size_t capacity, std::uint64_t seed);

/// Replay-side state attached to one session's training loop. The trainer
/// reports every trained batch and its reward; this object records simulated
/// or actual bandit picks and finally extracts the subset S.
class ReplayRecorder {
  public:
    ReplayRecorder(ReplayStrategy strategy, const BanditPolicy& policy, int warmup_epochs,
                   std::uint64_t seed, std::size_t batch_count);

    ReplayStrategy strategy() const { return strategy_; }

    /// True when the bandit chooses the batch to train on (Opt post-warm-up).
    bool drives_schedule(int epoch) const;
    /// Opt: pull the replay bandit for the batch to train next.
    std::size_t pick_training_batch(int epoch);
    /// Sim: record which batch the bandit would have picked this step.
    void record_hypothetical(int epoch);
    /// Reward the batch that was actually trained (its own loss decrease or
    /// gradient-norm reward). During the last warm-up epoch this sets the
    /// arm's initial reward.
    void on_batch_trained(int epoch, std::size_t batch_idx, double reward);

    /// Top batches by selection count (ties: higher mean reward, then lower
    /// id), as whole batches truncated to the sample budget.
    std::vector<std::size_t> select_samples(const std::vector<MiniBatch>& batches,
                                            std::size_t sample_budget) const;

    const std::vector<std::int64_t>& selection_counts() const { return counts_; }
    const std::vector<ArmStats>& arm_stats() const { return arms_; }
    std::int64_t recorded_steps() const { return recorded_steps_; }
    int nonfinite_rewards() const { return nonfinite_rewards_; }

  private:
    bool past_warmup(int epoch) const { return epoch > warmup_; }

    ReplayStrategy strategy_;
    BanditPolicy policy_;
    int warmup_;
    std::vector<ArmStats> arms_;
    std::vector<std::int64_t> counts_;
    RewardScaler scaler_;
    std::mt19937_64 rng_;
    std::int64_t t_ = 0;
    std::int64_t recorded_steps_ = 0;
    int nonfinite_rewards_ = 0;
};

/// Loss reward: decrease of the batch's own loss across the update. NGrad
/// reward: sum over batch samples of squared per-sample gradient L2 norms at
/// the just-updated parameters.
double reward_of(const MiniBatch& batch, double loss_before, double loss_after,
                 const NetworkParams& params_after, Loss loss_kind, RewardKind kind);

/// Sum over samples of ||grad of the sample's loss||^2, optionally restricted
/// to the given flat indices (nullptr = all parameters).
double per_sample_sq_grad_norm(const NetworkParams& params, const Tensor2& x,
                               const std::vector<int>& labels, Loss loss_kind,
                               const std::vector<std::size_t>* restrict_to);

/// Union of the kept subset and the new shard, reshuffled into fresh batches.
std::vector<MiniBatch> assemble_next_train(const Dataset& data,
                                           const std::vector<std::size_t>& kept,
                                           const std::vector<std::size_t>& new_ids,
                                           std::size_t batch_size, std::uint64_t seed);

/// Budget-matched baseline: uniformly chosen whole batches, last one truncated.
std::vector<std::size_t> random_replay_select(const std::vector<MiniBatch>& batches,
                                              std::size_t sample_budget, std::uint64_t seed);

}  // namespace mabret
