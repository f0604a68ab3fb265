#include "mabret/replay.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

std::vector<MiniBatch> make_batches(const Dataset& data, const std::vector<std::size_t>& ids,
                                    std::size_t batch_size, int first_id) {
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    std::vector<MiniBatch> batches;
    for (std::size_t start = 0; start < ids.size(); start += batch_size) {
        MiniBatch b;
        b.id = first_id + static_cast<int>(batches.size());
        std::size_t end = std::min(start + batch_size, ids.size());
        b.sample_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                            ids.begin() + static_cast<std::ptrdiff_t>(end));
        EvalSet es = gather(data, b.sample_ids);
        b.x = std::move(es.x);
        b.labels = std::move(es.labels);
        batches.push_back(std::move(b));
    }
    return batches;
}

void Reservoir::offer(std::size_t item, std::mt19937_64& rng) {
    items_seen += 1;
    if (slots.size() < capacity) {
        slots.push_back(item);
        return;
    }
    std::size_t j = static_cast<std::size_t>(uniform_index(rng, items_seen));
    if (j < capacity) slots[j] = item;
}

std::vector<std::size_t> reservoir_select(const std::vector<std::size_t>& stream,
                                          std::size_t capacity, std::uint64_t seed) {
    if (capacity < 1) throw std::invalid_argument("reservoir_select: capacity must be >= 1");
    Reservoir res(capacity);
    auto rng = make_rng(seed);
    for (std::size_t item : stream) res.offer(item, rng);
    return res.slots;
}

ReplayRecorder::ReplayRecorder(ReplayStrategy strategy, const BanditPolicy& policy,
                               int warmup_epochs, std::uint64_t seed, std::size_t batch_count)
    : strategy_(strategy),
      policy_(policy),
      warmup_(warmup_epochs),
      arms_(batch_count),
      counts_(batch_count, 0),
      rng_(make_rng(seed)) {
    if (warmup_epochs < 1) throw std::invalid_argument("replay warm-up must be >= 1 epoch");
}

bool ReplayRecorder::drives_schedule(int epoch) const {
    return strategy_ == ReplayStrategy::mab_opt && past_warmup(epoch);
}

std::size_t ReplayRecorder::pick_training_batch(int epoch) {
    if (!drives_schedule(epoch)) throw std::logic_error("pick_training_batch outside opt phase");
    std::size_t pick = bandit_select(policy_, arms_, ++t_, rng_);
    counts_[pick] += 1;
    recorded_steps_ += 1;
    return pick;
}

void ReplayRecorder::record_hypothetical(int epoch) {
    if (strategy_ != ReplayStrategy::mab_sim || !past_warmup(epoch)) return;
    std::size_t pick = bandit_select(policy_, arms_, ++t_, rng_);
    counts_[pick] += 1;
    recorded_steps_ += 1;
}

void ReplayRecorder::on_batch_trained(int epoch, std::size_t batch_idx, double reward) {
    if (strategy_ != ReplayStrategy::mab_sim && strategy_ != ReplayStrategy::mab_opt) return;
    if (epoch < warmup_) return;
    if (epoch == warmup_) {
        // Alg. 1 step 4: the last warm-up epoch's decreases are the initial rewards.
        arms_[batch_idx] = ArmStats{};
        if (!bandit_update(policy_, arms_, batch_idx, reward, scaler_)) ++nonfinite_rewards_;
        return;
    }
    if (!bandit_update(policy_, arms_, batch_idx, reward, scaler_)) ++nonfinite_rewards_;
}

std::vector<std::size_t> ReplayRecorder::select_samples(const std::vector<MiniBatch>& batches,
                                                        std::size_t sample_budget) const {
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (counts_[a] != counts_[b]) return counts_[a] > counts_[b];
        double ma = arms_[a].mean(), mb = arms_[b].mean();
        if (ma != mb) return ma > mb;
        return batches[a].id < batches[b].id;
    });
    std::vector<std::size_t> picked;
    for (std::size_t idx : order) {
        if (picked.size() >= sample_budget) break;
        for (std::size_t sid : batches[idx].sample_ids) {
            if (picked.size() >= sample_budget) break;
            picked.push_back(sid);
        }
    }
    return picked;
}

double reward_of(const MiniBatch& batch, double loss_before, double loss_after,
                 const NetworkParams& params_after, Loss loss_kind, RewardKind kind) {
    if (kind == RewardKind::loss) return loss_before - loss_after;
    return per_sample_sq_grad_norm(params_after, batch.x, batch.labels, loss_kind, nullptr);
}

double per_sample_sq_grad_norm(const NetworkParams& params, const Tensor2& x,
                               const std::vector<int>& labels, Loss loss_kind,
                               const std::vector<std::size_t>* restrict_to) {
    double total = 0.0;
    Tensor2 row(1, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < x.cols; ++c) row.at(0, c) = x.at(r, c);
        ForwardTrace trace = forward(params, row);
        std::vector<int> label{labels[r]};
        LossGrad lg = backward(params, trace, label, loss_kind);
        if (restrict_to) {
            for (std::size_t s : *restrict_to) total += lg.grads[s] * lg.grads[s];
        } else {
            for (double g : lg.grads) total += g * g;
        }
    }
    return total;
}

std::vector<MiniBatch> assemble_next_train(const Dataset& data,
                                           const std::vector<std::size_t>& kept,
                                           const std::vector<std::size_t>& new_ids,
                                           std::size_t batch_size, std::uint64_t seed) {
    std::vector<std::size_t> ids;
    ids.reserve(kept.size() + new_ids.size());
    ids.insert(ids.end(), kept.begin(), kept.end());
    ids.insert(ids.end(), new_ids.begin(), new_ids.end());
    auto rng = make_rng(seed);
    shuffle_vec(ids, rng);
    return make_batches(data, ids, batch_size);
}

std::vector<std::size_t> random_replay_select(const std::vector<MiniBatch>& batches,
                                              std::size_t sample_budget, std::uint64_t seed) {
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed);
    shuffle_vec(order, rng);
    std::vector<std::size_t> picked;
    for (std::size_t idx : order) {
        if (picked.size() >= sample_budget) break;
        for (std::size_t sid : batches[idx].sample_ids) {
            if (picked.size() >= sample_budget) break;
            picked.push_back(sid);
        }
    }
    return picked;
}

}  // namespace mabret
