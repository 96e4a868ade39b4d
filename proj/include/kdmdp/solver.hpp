#pragma once

// Exact structured finite-horizon dynamic programming. Value functions are
// kd-tree partitions of [0,1]^d (one per discrete state) whose leaves carry
// pruned PWLC sets; piecewise-constant values are singleton constant sets.

#include <chrono>
#include <cstddef>
#include <optional>
#include <vector>

#include "kdmdp/geometry.hpp"
#include "kdmdp/model.hpp"
#include "kdmdp/pwlc.hpp"

namespace kdmdp {

using ValuePartition = KdPartition<PwlcSet>;

/// V^stage: stage = number of steps to go.
struct ValueFunction {
    int stage = 0;
    std::vector<ValuePartition> states;

    double value(int state, Point x) const;
};

/// Q-function of one applicable action in one discrete state.
struct QFunction {
    int state = 0;
    int action = 0;
    ValuePartition partition;
};

/// Policy leaf: the pruned union of Q-function members, each tagged with the
/// action it came from. The greedy action at x is the tag of the argmax.
struct PolicyLeaf {
    PwlcSet fns;
    std::vector<int> actions;
};

struct Decision {
    int action;
    std::size_t fn_index;
};

/// Greedy policy for states with stage + 1 steps to go.
struct Policy {
    int stage = 0;
    std::vector<KdPartition<PolicyLeaf>> states;

    Decision decide(int state, Point x) const;
};

struct SolveOptions {
    double prune_tol = kDefaultPruneTol;
    /// 0 merges only leaves whose sets agree within kDuplicateTol. A positive
    /// value merges approximately equal siblings and no longer solves exactly.
    double merge_tol = 0.0;
    /// Cap on the total number of linear functions of one stage (0 = none).
    std::size_t max_vectors = 0;
    /// Wall-clock budget for the whole run in seconds (0 = none).
    double time_budget_seconds = 0.0;
    int threads = 1;
    /// Overrides the model horizon when set.
    std::optional<int> horizon;
    bool keep_policies = true;
};

struct StageStats {
    int stage = 0;
    int state = 0;
    std::size_t leaves = 0;
    std::size_t vectors = 0;
    double seconds = 0.0;
};

struct SolveResult {
    std::vector<ValueFunction> values;   // values[k] == V^k
    std::vector<Policy> policies;        // policies[k] acts with k+1 steps to go
    std::vector<StageStats> stats;       // one row per (stage, state)
    std::size_t peak_vectors = 0;
    double seconds = 0.0;
};

/// Cooperative wall-clock deadline; check() throws ResourceCapError(time).
class Deadline {
public:
    Deadline() = default;
    explicit Deadline(double seconds);
    void check() const;
    bool enabled() const noexcept { return enabled_; }

private:
    bool enabled_ = false;
    std::chrono::steady_clock::time_point end_{};
};

/// V^0: the single-leaf zero function in every discrete state.
ValueFunction initial_value(const HybridMdp& m);

/// Expected successor value x -> sum_i p_i V(x + delta_i) (relative outcomes)
/// or p_i V(x'_i) (absolute outcomes) over `box`, for the transition
/// partition `t`. Mass leaving the cube contributes p_i * out_of_bounds.
ValuePartition sigma_a(const ValuePartition& v, const TransitionModel& t, double out_of_bounds, const Rect& box,
                       double prune_tol = kDefaultPruneTol, const Deadline* deadline = nullptr);

inline ValuePartition sigma_a(const ValuePartition& v, const TransitionModel& t, double out_of_bounds,
                              double prune_tol = kDefaultPruneTol) {
    return sigma_a(v, t, out_of_bounds, t.domain(), prune_tol);
}

/// R_a^s + sum_{s'} T_a^d(s'|s,.) sigma_a^{s'} for one model entry.
QFunction q_function(const ValueFunction& v, const HybridMdp& m, const ModelEntry& e, const SolveOptions& opts = {},
                     const Deadline* deadline = nullptr);

struct BackupResult {
    ValueFunction value;
    Policy policy;
};

BackupResult bellman_backup_with_policy(const ValueFunction& v, const HybridMdp& m, const SolveOptions& opts = {},
                                        const Deadline* deadline = nullptr);

ValueFunction bellman_backup(const ValueFunction& v, const HybridMdp& m, const SolveOptions& opts = {});

SolveResult value_iteration(const HybridMdp& m, const SolveOptions& opts = {});

/// Greedy policies for every stage of a value sequence: result[k] is greedy
/// with respect to values[k].
std::vector<Policy> extract_policy(const std::vector<ValueFunction>& values, const HybridMdp& m, const SolveOptions& opts = {});

double eval_value(const std::vector<ValueFunction>& values, int state, Point x, int stage);

/// Total number of linear functions across all leaves and states.
std::size_t vector_count(const ValueFunction& v);
std::size_t leaf_count(const ValueFunction& v);

} // namespace kdmdp
