#pragma once

// Planetary-rover benchmark generator. A staged exploration plan over up to
// three continuous resources; every action consumes resources according to
// independent Gaussians discretized into equal-width buckets.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdmdp/model.hpp"

namespace kdmdp {

/// (bucket center, probability) pairs covering mean +- 3 std in `resolution`
/// equal buckets, with Gaussian mass renormalized over the truncated support.
/// Centers are consumption amounts; generate() negates them into shifts.
std::vector<std::pair<double, double>> discretize_gaussian(double mean, double std, int resolution);

enum class RewardVariant { pwc, pwlc };

struct Consumption {
    double mean = 0.0;
    double std = 0.0;
};

/// One applicable (state, action) pair of the plan.
struct RoverStep {
    std::string state;
    std::string action;
    std::string success_to;
    double success_prob = 1.0;
    /// Successor when the action does not succeed; it still consumes resources.
    std::string failure_to;
    /// Per resource; only the first `resources` entries are used.
    std::vector<Consumption> consumption;
    /// Below any of these levels the action leads to the failure state.
    std::vector<double> min_resources;
    /// Constant reward, or the offset of the linear reward.
    double reward = 0.0;
    /// Linear reward coefficients per resource (linear variant only).
    std::vector<double> reward_coeffs;
};

struct DomainSpec {
    std::string name = "rover";
    std::vector<std::string> resource_names;
    int resources = 1;
    int resolution = 25;
    /// Cap on the joint outcome count per action (0 = none). Exceeding it
    /// lowers the per-resource resolution to floor(cap^(1/resources)).
    std::size_t max_outcomes = 0;
    RewardVariant variant = RewardVariant::pwc;
    int horizon = 8;
    double out_of_bounds_value = 0.0;
    std::vector<std::string> states;
    std::string done_state = "done";
    std::string failed_state = "failed";
    /// Zero-reward action that ends the episode from any stage ("" = none).
    std::string stop_action = "stop";
    /// Self-loop action of the terminal states.
    std::string idle_action = "idle";
    std::vector<RoverStep> steps;
};

std::vector<Violation> validate_spec(const DomainSpec& spec);

/// Per-resource bucket count after applying max_outcomes.
int effective_resolution(const DomainSpec& spec);

/// Throws ModelValidationError listing every spec violation.
HybridMdp generate(const DomainSpec& spec);

DomainSpec load_domain_spec(std::string_view text);
DomainSpec load_domain_spec_file(const std::string& path);
std::string save_domain_spec(const DomainSpec& spec, int indent = 1);

} // namespace kdmdp
