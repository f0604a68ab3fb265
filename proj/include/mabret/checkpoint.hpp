#pragma once

#include <string>

#include "mabret/adam.hpp"
#include "mabret/bandit.hpp"
#include "mabret/clustering.hpp"
#include "mabret/regularizer.hpp"

namespace mabret {

/// Everything needed to resume or audit a session: parameters, optimizer and
/// regularizer state, the clustering, the selected subset S (with the session
/// it came from) and both bandits' arm statistics. Binary container with a
/// magic header and format version.
struct SessionCheckpoint {
    std::int32_t session = 0;
    NetworkParams params;
    AdamState adam;

    bool has_regularizer = false;
    RegularizerState regularizer;

    bool has_clustering = false;
    LayerClustering clustering;
    std::vector<ClusterArm> arms;

    std::vector<std::size_t> selected;  // S, global sample ids
    std::int32_t selected_from_session = -1;
    std::vector<ArmStats> replay_arms;
    std::vector<ArmStats> cluster_arms;

    bool has_trajectory = false;
    TrajectoryLog trajectory;
};

void save_checkpoint(const std::string& path, const SessionCheckpoint& ckpt);
SessionCheckpoint load_checkpoint(const std::string& path);

}  // namespace mabret
