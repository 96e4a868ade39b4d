#include "kdmdp/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace kdmdp {

std::optional<int> HybridMdp::state_index(std::string_view name) const {
    for (std::size_t i = 0; i < discrete_states.size(); ++i)
        if (discrete_states[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> HybridMdp::action_index(std::string_view name) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

const ModelEntry* HybridMdp::entry(int state, int action) const noexcept {
    for (const auto& e : entries)
        if (e.state == state && e.action == action) return &e;
    return nullptr;
}

std::vector<const ModelEntry*> HybridMdp::entries_for(int state) const {
    std::vector<const ModelEntry*> out;
    for (int a = 0; a < static_cast<int>(actions.size()); ++a)
        if (const auto* e = entry(state, a)) out.push_back(e);
    return out;
}

std::string format_violations(const std::vector<Violation>& v) {
    std::ostringstream os;
    for (const auto& x : v) os << "  " << x.path << ": " << x.message << '\n';
    return os.str();
}

namespace {

constexpr double kProbTol = 1e-9;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

class Validator {
public:
    explicit Validator(const HybridMdp& m) : m_(m) {}

    std::vector<Violation> run() {
        if (m_.dims < 1 || m_.dims > kMaxDims) {
            add("dims", "must be in 1.." + std::to_string(kMaxDims));
            return std::move(out_);
        }
        check_names(m_.discrete_states, "discrete_states");
        check_names(m_.actions, "actions");
        if (m_.horizon < 1) add("horizon", "must be a positive integer");
        if (!std::isfinite(m_.out_of_bounds_value)) add("out_of_bounds_value", "must be finite");

        std::set<std::pair<int, int>> seen;
        std::vector<char> has_action(m_.discrete_states.size(), 0);
        for (std::size_t i = 0; i < m_.entries.size(); ++i) {
            const auto& e = m_.entries[i];
            const std::string path = entry_path(i);
            if (!valid_state(e.state)) {
                add(path + ".state", "unknown discrete state index " + std::to_string(e.state));
                continue;
            }
            if (e.action < 0 || e.action >= static_cast<int>(m_.actions.size())) {
                add(path + ".action", "unknown action index " + std::to_string(e.action));
                continue;
            }
            if (!seen.insert({e.state, e.action}).second) add(path, "duplicate (state, action) entry");
            has_action[static_cast<std::size_t>(e.state)] = 1;
            check_entry(e, path);
        }
        for (std::size_t s = 0; s < m_.discrete_states.size(); ++s)
            if (!has_action[s]) add("discrete_states[" + m_.discrete_states[s] + "]", "no applicable action");
        return std::move(out_);
    }

private:
    void add(std::string path, std::string msg) { out_.push_back({std::move(path), std::move(msg)}); }

    bool valid_state(int s) const { return s >= 0 && s < static_cast<int>(m_.discrete_states.size()); }

    std::string entry_path(std::size_t i) const {
        const auto& e = m_.entries[i];
        std::string p = "entries[" + std::to_string(i) + "]";
        if (valid_state(e.state) && e.action >= 0 && e.action < static_cast<int>(m_.actions.size()))
            p += "(" + m_.discrete_states[static_cast<std::size_t>(e.state)] + ", " + m_.actions[static_cast<std::size_t>(e.action)] + ")";
        return p;
    }

    static std::string leaf_path(const std::string& base, std::size_t i, const Rect& r) {
        return base + ".leaf[" + std::to_string(i) + "] " + r.str();
    }

    void check_names(const std::vector<std::string>& names, const std::string& field) {
        if (names.empty()) add(field, "must not be empty");
        std::set<std::string> uniq;
        for (const auto& n : names) {
            if (n.empty()) add(field, "empty name");
            if (!uniq.insert(n).second) add(field, "duplicate name '" + n + "'");
        }
    }

    template <class P>
    bool check_dims(const KdPartition<P>& p, const std::string& path) {
        if (p.dims() != m_.dims) {
            add(path, "partition has dimension " + std::to_string(p.dims()) + ", model has " + std::to_string(m_.dims));
            return false;
        }
        if (!(p.domain() == Rect::unit(m_.dims))) {
            add(path, "partition does not cover the unit cube");
            return false;
        }
        return true;
    }

    void check_entry(const ModelEntry& e, const std::string& path) {
        if (check_dims(e.reward, path + ".reward")) {
            for (std::size_t i = 0; i < e.reward.leaf_count(); ++i) {
                const auto& lf = e.reward.leaf(i);
                if (lf.payload.dims() != m_.dims)
                    add(leaf_path(path + ".reward", i, lf.rect), "linear function dimension mismatch");
            }
        }
        std::set<int> reachable;
        if (check_dims(e.discrete, path + ".discrete_transition")) {
            for (std::size_t i = 0; i < e.discrete.leaf_count(); ++i) {
                const auto& lf = e.discrete.leaf(i);
                const std::string lp = leaf_path(path + ".discrete_transition", i, lf.rect);
                if (lf.payload.successors.empty()) add(lp, "no successor states");
                double sum = 0.0;
                std::set<int> uniq;
                for (const auto& [s, p] : lf.payload.successors) {
                    if (!valid_state(s)) {
                        add(lp, "unknown successor state index " + std::to_string(s));
                        continue;
                    }
                    if (!uniq.insert(s).second) add(lp, "successor '" + m_.discrete_states[static_cast<std::size_t>(s)] + "' listed twice");
                    if (!(p > 0.0 && p <= 1.0))
                        add(lp, "successor '" + m_.discrete_states[static_cast<std::size_t>(s)] + "' probability " + fmt(p) + " outside (0,1]");
                    else
                        reachable.insert(s);
                    sum += p;
                }
                if (!lf.payload.successors.empty() && std::abs(sum - 1.0) > kProbTol)
                    add(lp, "probabilities sum to " + fmt(sum));
            }
        }
        for (int s : reachable) {
            if (!e.continuous.count(s))
                add(path + ".continuous", "missing continuous conditional for (" + m_.discrete_states[static_cast<std::size_t>(e.state)] + ", " +
                                              m_.actions[static_cast<std::size_t>(e.action)] + ", " + m_.discrete_states[static_cast<std::size_t>(s)] + ")");
        }
        for (const auto& [s, t] : e.continuous) {
            if (!valid_state(s)) {
                add(path + ".continuous", "unknown successor state index " + std::to_string(s));
                continue;
            }
            const std::string cp = path + ".continuous[" + m_.discrete_states[static_cast<std::size_t>(s)] + "]";
            if (!check_dims(t, cp)) continue;
            for (std::size_t i = 0; i < t.leaf_count(); ++i) check_outcomes(t.leaf(i).payload, leaf_path(cp, i, t.leaf(i).rect));
        }
    }

    void check_outcomes(const OutcomeSet& os, const std::string& lp) {
        if (os.outcomes.empty()) {
            add(lp, "empty outcome set");
            return;
        }
        double sum = 0.0;
        const OutcomeKind kind = os.outcomes.front().kind;
        for (std::size_t k = 0; k < os.outcomes.size(); ++k) {
            const auto& o = os.outcomes[k];
            const std::string op = lp + ".outcomes[" + std::to_string(k) + "]";
            if (o.kind != kind) add(op, "mixes relative and absolute outcomes in one set");
            if (!(o.prob > 0.0 && o.prob <= 1.0)) add(op, "probability " + fmt(o.prob) + " outside (0,1]");
            sum += o.prob;
            if (static_cast<int>(o.target.size()) != m_.dims) {
                add(op, "target has " + std::to_string(o.target.size()) + " coordinates");
                continue;
            }
            for (double t : o.target) {
                const bool ok = o.kind == OutcomeKind::absolute ? (t >= 0.0 && t <= 1.0) : (t >= -1.0 && t <= 1.0);
                if (!ok) {
                    add(op, o.kind == OutcomeKind::absolute ? "absolute target outside [0,1]^d" : "relative shift outside [-1,1]^d");
                    break;
                }
            }
        }
        if (std::abs(sum - 1.0) > kProbTol) add(lp, "probabilities sum to " + fmt(sum));
    }

    const HybridMdp& m_;
    std::vector<Violation> out_;
};

} // namespace

std::vector<Violation> validate(const HybridMdp& m) { return Validator(m).run(); }

} // namespace kdmdp
