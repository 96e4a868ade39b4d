#pragma once

// Hybrid discrete/continuous finite-horizon MDP over S x [0,1]^d with
// rectangular piecewise-constant transitions and rectangular PWLC rewards.
// A single discrete state with constant rewards is the purely continuous
// piecewise-constant case; linear rewards give the PWLC case.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdmdp/errors.hpp"
#include "kdmdp/geometry.hpp"
#include "kdmdp/pwlc.hpp"

namespace kdmdp {

enum class OutcomeKind { relative, absolute };

/// Relative: the state moves by `target`. Absolute: the state becomes `target`.
struct Outcome {
    OutcomeKind kind = OutcomeKind::relative;
    std::vector<double> target;
    double prob = 1.0;
};

struct OutcomeSet {
    std::vector<Outcome> outcomes;
};

using TransitionModel = KdPartition<OutcomeSet>;
using RewardModel = KdPartition<PwlcSet>;

/// Distribution over successor discrete states, sorted by state index.
struct SuccessorDist {
    std::vector<std::pair<int, double>> successors;

    double prob(int state) const noexcept {
        for (const auto& [s, p] : successors)
            if (s == state) return p;
        return 0.0;
    }
};

using DiscreteTransition = KdPartition<SuccessorDist>;

/// Dynamics and reward of one applicable (state, action) pair.
struct ModelEntry {
    int state = 0;
    int action = 0;
    RewardModel reward;
    DiscreteTransition discrete;
    /// Continuous conditional per successor discrete state.
    std::map<int, TransitionModel> continuous;
};

struct HybridMdp {
    int dims = 1;
    std::vector<std::string> discrete_states;
    std::vector<std::string> actions;
    int horizon = 1;
    double out_of_bounds_value = 0.0;
    std::vector<ModelEntry> entries;
    std::map<std::string, std::string> metadata;

    std::optional<int> state_index(std::string_view name) const;
    std::optional<int> action_index(std::string_view name) const;

    const ModelEntry* entry(int state, int action) const noexcept;

    /// Entries of `state` in action declaration order.
    std::vector<const ModelEntry*> entries_for(int state) const;
};

struct Violation {
    std::string path;
    std::string message;
};

/// Every broken invariant of `m`; empty when the model is valid.
std::vector<Violation> validate(const HybridMdp& m);

std::string format_violations(const std::vector<Violation>& v);

class ModelValidationError : public ModelError {
public:
    explicit ModelValidationError(std::vector<Violation> v)
        : ModelError("model is invalid:\n" + format_violations(v)), violations_(std::move(v)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Parses and validates a model document. Throws ParseError for malformed
/// JSON or schema violations, ModelValidationError for invariant failures.
HybridMdp load_model(std::string_view text);
HybridMdp load_model_file(const std::string& path);

/// Serializes to the model document format; load_model(save_model(m)) == m.
std::string save_model(const HybridMdp& m, int indent = 1);

} // namespace kdmdp
