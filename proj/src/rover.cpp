#include "kdmdp/rover.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kdmdp {

using nlohmann::json;

std::vector<std::pair<double, double>> discretize_gaussian(double mean, double std, int resolution) {
    if (!std::isfinite(mean) || !std::isfinite(std) || !(std > 0.0)) throw DomainError("discretize_gaussian: std must be positive");
    if (resolution < 2) throw DomainError("discretize_gaussian: resolution must be >= 2");
    // Work in standardized units so the split is symmetric about the mean.
    const double step = 6.0 / resolution;
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(resolution));
    double total = 0.0;
    for (int i = 0; i < resolution; ++i) {
        const double za = -3.0 + i * step;
        const double zb = i + 1 == resolution ? 3.0 : -3.0 + (i + 1) * step;
        const double mass = 0.5 * (std::erf(zb / std::sqrt(2.0)) - std::erf(za / std::sqrt(2.0)));
        out[static_cast<std::size_t>(i)] = {mean + std * 0.5 * (za + zb), mass};
        total += mass;
    }
    for (auto& [c, p] : out) p /= total;
    return out;
}

int effective_resolution(const DomainSpec& spec) {
    if (spec.max_outcomes == 0) return spec.resolution;
    int r = spec.resolution;
    auto joint = [&](int res) {
        double n = 1.0;
        for (int k = 0; k < spec.resources; ++k) n *= res;
        return n;
    };
    while (r > 2 && joint(r) > static_cast<double>(spec.max_outcomes)) --r;
    return r;
}

std::vector<Violation> validate_spec(const DomainSpec& spec) {
    std::vector<Violation> v;
    auto add = [&](std::string path, std::string msg) { v.push_back({std::move(path), std::move(msg)}); };
    if (spec.resources < 1 || spec.resources > 3) add("resources", "must be in 1..3");
    if (spec.resolution < 2) add("resolution", "must be >= 2");
    if (spec.horizon < 1) add("horizon", "must be >= 1");
    if (!std::isfinite(spec.out_of_bounds_value)) add("out_of_bounds_value", "must be finite");
    if (spec.states.empty()) add("states", "at least one stage is required");
    std::set<std::string> names;
    for (const auto& s : spec.states)
        if (s.empty() || !names.insert(s).second) add("states", "stage names must be nonempty and unique: '" + s + "'");
    for (const auto* t : {&spec.done_state, &spec.failed_state})
        if (t->empty() || names.count(*t)) add("terminal_states", "terminal state '" + *t + "' must be nonempty and distinct from the stages");
    if (spec.done_state == spec.failed_state) add("terminal_states", "done and failed states must differ");
    if (spec.idle_action.empty()) add("idle_action", "must be nonempty");
    auto known = [&](const std::string& s) { return names.count(s) || s == spec.done_state || s == spec.failed_state; };

    std::set<std::pair<std::string, std::string>> seen;
    const auto nres = static_cast<std::size_t>(std::clamp(spec.resources, 0, 3));
    for (std::size_t i = 0; i < spec.steps.size(); ++i) {
        const auto& st = spec.steps[i];
        const std::string p = "steps[" + std::to_string(i) + "]";
        if (!names.count(st.state)) add(p + ".state", "unknown stage '" + st.state + "'");
        if (st.action.empty()) add(p + ".action", "must be nonempty");
        if (st.action == spec.stop_action || st.action == spec.idle_action) add(p + ".action", "reserved action name '" + st.action + "'");
        if (!seen.insert({st.state, st.action}).second) add(p, "duplicate (state, action) pair");
        if (!known(st.success_to)) add(p + ".success_to", "unknown state '" + st.success_to + "'");
        if (!(st.success_prob > 0.0 && st.success_prob <= 1.0)) add(p + ".success_prob", "must be in (0, 1]");
        if (st.success_prob < 1.0) {
            if (!known(st.failure_to)) add(p + ".failure_to", "unknown state '" + st.failure_to + "'");
            else if (st.failure_to == st.success_to) add(p + ".failure_to", "must differ from success_to");
        }
        if (st.consumption.size() < nres) add(p + ".consumption", "needs one entry per resource");
        for (std::size_t k = 0; k < std::min(nres, st.consumption.size()); ++k) {
            const auto& c = st.consumption[k];
            const std::string cp = p + ".consumption[" + std::to_string(k) + "]";
            if (!(c.std > 0.0) || !std::isfinite(c.std)) add(cp + ".std", "must be positive");
            if (!std::isfinite(c.mean) || c.mean - 3.0 * c.std < 0.0 || c.mean + 3.0 * c.std > 1.0)
                add(cp, "mean +- 3 std must stay within [0, 1] (resources are only consumed)");
        }
        if (!st.min_resources.empty() && st.min_resources.size() < nres) add(p + ".min_resources", "needs one entry per resource");
        for (double t : st.min_resources)
            if (!(t >= 0.0 && t < 1.0)) add(p + ".min_resources", "levels must be in [0, 1)");
        if (!std::isfinite(st.reward)) add(p + ".reward", "must be finite");
        if (!st.reward_coeffs.empty() && st.reward_coeffs.size() < nres) add(p + ".reward_coeffs", "needs one entry per resource");
    }
    for (const auto& s : spec.states) {
        const bool has = std::any_of(spec.steps.begin(), spec.steps.end(), [&](const RoverStep& st) { return st.state == s; });
        if (!has && spec.stop_action.empty()) add("states", "stage '" + s + "' has no action");
    }
    return v;
}

namespace {

struct Layout {
    std::vector<double> threshold;  // per dimension, 0 = none
    bool gated() const {
        return std::any_of(threshold.begin(), threshold.end(), [](double t) { return t > 0.0; });
    }
    Rect open_box() const { return Rect(threshold, std::vector<double>(threshold.size(), 1.0)); }
    /// Boxes where some resource is below its threshold.
    std::vector<Rect> gated_boxes() const {
        const std::size_t d = threshold.size();
        std::vector<Rect> out;
        for (std::size_t k = 0; k < d; ++k) {
            if (threshold[k] <= 0.0) continue;
            std::vector<double> lo(d, 0.0), hi(d, 1.0);
            for (std::size_t j = 0; j < k; ++j) lo[j] = threshold[j];
            hi[k] = threshold[k];
            out.emplace_back(lo, hi);
        }
        return out;
    }

    template <class P>
    KdPartition<P> build(int dims, const P& open, const P& gated_payload) const {
        std::vector<typename KdPartition<P>::Leaf> leaves;
        leaves.push_back({open_box(), open});
        for (auto& r : gated_boxes()) leaves.push_back({r, gated_payload});
        return partition_from_leaves<P>(Rect::unit(dims), std::move(leaves));
    }
};

OutcomeSet stay(int dims) { return OutcomeSet{{Outcome{OutcomeKind::relative, std::vector<double>(static_cast<std::size_t>(dims), 0.0), 1.0}}}; }

OutcomeSet consumption_outcomes(const RoverStep& st, int dims, int resolution) {
    std::vector<std::vector<std::pair<double, double>>> axes;
    for (int k = 0; k < dims; ++k) {
        const auto& c = st.consumption[static_cast<std::size_t>(k)];
        axes.push_back(discretize_gaussian(c.mean, c.std, resolution));
    }
    OutcomeSet os;
    std::vector<std::size_t> idx(static_cast<std::size_t>(dims), 0);
    for (;;) {
        Outcome o{OutcomeKind::relative, std::vector<double>(static_cast<std::size_t>(dims)), 1.0};
        for (std::size_t k = 0; k < idx.size(); ++k) {
            o.target[k] = -axes[k][idx[k]].first;
            o.prob *= axes[k][idx[k]].second;
        }
        os.outcomes.push_back(std::move(o));
        std::size_t k = idx.size();
        while (k > 0 && ++idx[k - 1] == axes[k - 1].size()) idx[--k] = 0;
        if (k == 0) break;
    }
    return os;
}

template <class P>
KdPartition<P> whole(int dims, P payload) {
    return KdPartition<P>::unit(dims, std::move(payload));
}

} // namespace

HybridMdp generate(const DomainSpec& spec) {
    if (auto v = validate_spec(spec); !v.empty()) throw ModelValidationError(std::move(v));
    const int d = spec.resources;
    const auto dn = static_cast<std::size_t>(d);
    const int res = effective_resolution(spec);

    HybridMdp m;
    m.dims = d;
    m.horizon = spec.horizon;
    m.out_of_bounds_value = spec.out_of_bounds_value;
    m.discrete_states = spec.states;
    m.discrete_states.push_back(spec.done_state);
    m.discrete_states.push_back(spec.failed_state);
    for (const auto& st : spec.steps)
        if (std::find(m.actions.begin(), m.actions.end(), st.action) == m.actions.end()) m.actions.push_back(st.action);
    if (!spec.stop_action.empty()) m.actions.push_back(spec.stop_action);
    m.actions.push_back(spec.idle_action);
    m.metadata["generator"] = "rover";
    m.metadata["label"] = "reconstruction";
    m.metadata["name"] = spec.name;
    m.metadata["variant"] = spec.variant == RewardVariant::pwc ? "pwc" : "pwlc";
    m.metadata["resolution"] = std::to_string(res);

    auto sidx = [&](const std::string& s) { return *m.state_index(s); };
    const int failed = sidx(spec.failed_state);
    const int done = sidx(spec.done_state);

    for (const auto& st : spec.steps) {
        const int s = sidx(st.state);
        const int a = *m.action_index(st.action);
        Layout lay{std::vector<double>(dn, 0.0)};
        if (!st.min_resources.empty())
            for (std::size_t k = 0; k < dn; ++k) lay.threshold[k] = st.min_resources[k];

        LinearFn r{std::vector<double>(dn, 0.0), st.reward};
        if (spec.variant == RewardVariant::pwlc && !st.reward_coeffs.empty())
            for (std::size_t k = 0; k < dn; ++k) r.coeffs[k] = st.reward_coeffs[k];
        const PwlcSet open_reward(d, {r});
        const PwlcSet zero = PwlcSet::zero(d);

        SuccessorDist open_dist;
        open_dist.successors.emplace_back(sidx(st.success_to), st.success_prob);
        if (st.success_prob < 1.0) open_dist.successors.emplace_back(sidx(st.failure_to), 1.0 - st.success_prob);
        std::sort(open_dist.successors.begin(), open_dist.successors.end());
        const SuccessorDist gated_dist{{{failed, 1.0}}};

        const OutcomeSet moves = consumption_outcomes(st, d, res);
        std::map<int, TransitionModel> continuous;
        for (const auto& [s2, p] : open_dist.successors) continuous.emplace(s2, whole(d, moves));
        if (lay.gated()) {
            // The failure state is reached without consuming anything when a
            // precondition fails, and with normal consumption otherwise.
            if (continuous.count(failed))
                continuous.at(failed) = lay.build<OutcomeSet>(d, moves, stay(d));
            else
                continuous.emplace(failed, whole(d, stay(d)));
        }

        if (lay.gated())
            m.entries.push_back(ModelEntry{s, a, lay.build<PwlcSet>(d, open_reward, zero), lay.build<SuccessorDist>(d, open_dist, gated_dist),
                                           std::move(continuous)});
        else
            m.entries.push_back(ModelEntry{s, a, whole(d, open_reward), whole(d, open_dist), std::move(continuous)});
    }
    if (!spec.stop_action.empty()) {
        const int a = *m.action_index(spec.stop_action);
        for (const auto& name : spec.states) {
            std::map<int, TransitionModel> continuous;
            continuous.emplace(done, whole(d, stay(d)));
            m.entries.push_back(ModelEntry{sidx(name), a, whole(d, PwlcSet::zero(d)), whole(d, SuccessorDist{{{done, 1.0}}}), std::move(continuous)});
        }
    }
    const int idle = *m.action_index(spec.idle_action);
    for (int t : {done, failed}) {
        std::map<int, TransitionModel> continuous;
        continuous.emplace(t, whole(d, stay(d)));
        m.entries.push_back(ModelEntry{t, idle, whole(d, PwlcSet::zero(d)), whole(d, SuccessorDist{{{t, 1.0}}}), std::move(continuous)});
    }
    std::stable_sort(m.entries.begin(), m.entries.end(),
                     [](const ModelEntry& x, const ModelEntry& y) { return std::tie(x.state, x.action) < std::tie(y.state, y.action); });
    if (auto v = validate(m); !v.empty()) throw ModelValidationError(std::move(v));
    return m;
}

namespace {

[[noreturn]] void spec_fail(const std::string& path, const std::string& msg) { throw ParseError(path + ": " + msg); }

template <class T>
T get(const json& j, const char* key, const std::string& path, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        spec_fail(path + "." + key, "has the wrong type");
    }
}

} // namespace

DomainSpec load_domain_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("domain spec: ") + e.what());
    }
    if (!doc.is_object()) spec_fail("$", "expected an object");
    DomainSpec s;
    s.name = get<std::string>(doc, "name", "$", s.name);
    s.resource_names = get<std::vector<std::string>>(doc, "resource_names", "$", {});
    s.resources = get<int>(doc, "resources", "$", s.resources);
    s.resolution = get<int>(doc, "resolution", "$", s.resolution);
    s.max_outcomes = get<std::size_t>(doc, "max_outcomes", "$", s.max_outcomes);
    const auto variant = get<std::string>(doc, "variant", "$", "pwc");
    if (variant == "pwc") s.variant = RewardVariant::pwc;
    else if (variant == "pwlc") s.variant = RewardVariant::pwlc;
    else spec_fail("$.variant", "must be 'pwc' or 'pwlc'");
    s.horizon = get<int>(doc, "horizon", "$", s.horizon);
    s.out_of_bounds_value = get<double>(doc, "out_of_bounds_value", "$", s.out_of_bounds_value);
    s.states = get<std::vector<std::string>>(doc, "states", "$", {});
    s.done_state = get<std::string>(doc, "done_state", "$", s.done_state);
    s.failed_state = get<std::string>(doc, "failed_state", "$", s.failed_state);
    s.stop_action = get<std::string>(doc, "stop_action", "$", s.stop_action);
    s.idle_action = get<std::string>(doc, "idle_action", "$", s.idle_action);
    auto steps = doc.find("steps");
    if (steps == doc.end() || !steps->is_array()) spec_fail("$.steps", "expected an array");
    for (std::size_t i = 0; i < steps->size(); ++i) {
        const json& sj = (*steps)[i];
        const std::string p = "$.steps[" + std::to_string(i) + "]";
        if (!sj.is_object()) spec_fail(p, "expected an object");
        RoverStep st;
        st.state = get<std::string>(sj, "state", p, "");
        st.action = get<std::string>(sj, "action", p, "");
        st.success_to = get<std::string>(sj, "success_to", p, "");
        st.success_prob = get<double>(sj, "success_prob", p, 1.0);
        st.failure_to = get<std::string>(sj, "failure_to", p, "");
        if (auto c = sj.find("consumption"); c != sj.end()) {
            if (!c->is_array()) spec_fail(p + ".consumption", "expected an array");
            for (const auto& cj : *c) st.consumption.push_back({get<double>(cj, "mean", p + ".consumption", 0.0), get<double>(cj, "std", p + ".consumption", 0.0)});
        }
        st.min_resources = get<std::vector<double>>(sj, "min_resources", p, {});
        st.reward = get<double>(sj, "reward", p, 0.0);
        st.reward_coeffs = get<std::vector<double>>(sj, "reward_coeffs", p, {});
        s.steps.push_back(std::move(st));
    }
    return s;
}

DomainSpec load_domain_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open domain spec '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_domain_spec(ss.str());
}

std::string save_domain_spec(const DomainSpec& s, int indent) {
    json doc;
    doc["name"] = s.name;
    doc["resource_names"] = s.resource_names;
    doc["resources"] = s.resources;
    doc["resolution"] = s.resolution;
    doc["max_outcomes"] = s.max_outcomes;
    doc["variant"] = s.variant == RewardVariant::pwc ? "pwc" : "pwlc";
    doc["horizon"] = s.horizon;
    doc["out_of_bounds_value"] = s.out_of_bounds_value;
    doc["states"] = s.states;
    doc["done_state"] = s.done_state;
    doc["failed_state"] = s.failed_state;
    doc["stop_action"] = s.stop_action;
    doc["idle_action"] = s.idle_action;
    json steps = json::array();
    for (const auto& st : s.steps) {
        json sj{{"state", st.state}, {"action", st.action}, {"success_to", st.success_to}, {"success_prob", st.success_prob}};
        if (!st.failure_to.empty()) sj["failure_to"] = st.failure_to;
        json c = json::array();
        for (const auto& x : st.consumption) c.push_back({{"mean", x.mean}, {"std", x.std}});
        sj["consumption"] = std::move(c);
        if (!st.min_resources.empty()) sj["min_resources"] = st.min_resources;
        sj["reward"] = st.reward;
        if (!st.reward_coeffs.empty()) sj["reward_coeffs"] = st.reward_coeffs;
        steps.push_back(std::move(sj));
    }
    doc["steps"] = std::move(steps);
    return doc.dump(indent);
}

} // namespace kdmdp
