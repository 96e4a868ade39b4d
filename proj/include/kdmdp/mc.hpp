#pragma once

// Monte-Carlo rollouts of a stage-indexed policy on the discretized model.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdmdp/model.hpp"
#include "kdmdp/solver.hpp"

namespace kdmdp {

struct RolloutConfig {
    int start_state = 0;
    std::vector<double> start_point;
    std::size_t episodes = 100000;
    std::uint64_t seed = 0;
    /// Steps per episode; defaults to the number of policies.
    std::optional<int> steps;
    int threads = 1;
};

struct RolloutResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t episodes = 0;
    std::uint64_t seed = 0;

    std::string to_json(int indent = 1) const;
};

/// policies[k] acts with k+1 steps to go. Throws DomainError for a policy
/// that selects an action the model does not define at a reached state.
RolloutResult simulate(const HybridMdp& m, const std::vector<Policy>& policies, const RolloutConfig& cfg);

/// Return of one episode; exposed so tests can check stream independence.
double rollout_episode(const HybridMdp& m, const std::vector<Policy>& policies, const RolloutConfig& cfg, std::size_t episode);

} // namespace kdmdp
