#include "kdmdp/mc.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "parallel.hpp"

namespace kdmdp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Fixed 53-bit conversion; std::uniform_real_distribution is not portable.
double uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

template <class T, class P>
const T& pick(const std::vector<T>& items, P prob, double u) {
    double acc = 0.0;
    for (const auto& it : items) {
        acc += prob(it);
        if (u < acc) return it;
    }
    return items.back();
}

bool inside(std::span<const double> x) {
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
}

} // namespace

std::string RolloutResult::to_json(int indent) const {
    return nlohmann::json{{"mean", mean}, {"stderr", std_error}, {"episodes", episodes}, {"seed", seed}}.dump(indent);
}

double rollout_episode(const HybridMdp& m, const std::vector<Policy>& policies, const RolloutConfig& cfg, std::size_t episode) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(episode))));
    const int steps = cfg.steps.value_or(static_cast<int>(policies.size()));
    const auto dn = static_cast<std::size_t>(m.dims);
    int s = cfg.start_state;
    std::vector<double> x = cfg.start_point;
    std::vector<double> y(dn);
    double ret = 0.0;
    for (int t = 0; t < steps; ++t) {
        const Policy& pol = policies[static_cast<std::size_t>(steps - t - 1)];
        const int a = pol.decide(s, x).action;
        const ModelEntry* e = m.entry(s, a);
        if (!e)
            throw DomainError("policy gap: action '" + m.actions[static_cast<std::size_t>(a)] + "' is not applicable in state '" +
                              m.discrete_states[static_cast<std::size_t>(s)] + "'");
        ret += eval(e->reward.locate(x).payload, x).value;
        const auto& succ = e->discrete.locate(x).payload.successors;
        const int s2 = pick(succ, [](const auto& sp) { return sp.second; }, uniform(rng)).first;
        const OutcomeSet& os = e->continuous.at(s2).locate(x).payload;
        const Outcome& o = pick(os.outcomes, [](const Outcome& oc) { return oc.prob; }, uniform(rng));
        for (std::size_t i = 0; i < dn; ++i) y[i] = o.kind == OutcomeKind::relative ? x[i] + o.target[i] : o.target[i];
        if (!inside(y)) return ret + m.out_of_bounds_value;
        s = s2;
        x.swap(y);
    }
    return ret;
}

RolloutResult simulate(const HybridMdp& m, const std::vector<Policy>& policies, const RolloutConfig& cfg) {
    if (cfg.episodes < 1) throw DomainError("simulate: episodes must be >= 1");
    if (cfg.start_state < 0 || cfg.start_state >= static_cast<int>(m.discrete_states.size())) throw DomainError("simulate: unknown start state");
    if (static_cast<int>(cfg.start_point.size()) != m.dims || !inside(cfg.start_point)) throw DomainError("simulate: start point outside the unit cube");
    const int steps = cfg.steps.value_or(static_cast<int>(policies.size()));
    if (steps < 0 || steps > static_cast<int>(policies.size())) throw DomainError("simulate: not enough policies for the requested steps");

    std::vector<double> returns(cfg.episodes);
    const std::size_t chunk = 1024;
    const std::size_t nchunks = (cfg.episodes + chunk - 1) / chunk;
    detail::parallel_for(nchunks, cfg.threads, [&](std::size_t c) {
        for (std::size_t i = c * chunk; i < std::min(cfg.episodes, (c + 1) * chunk); ++i) returns[i] = rollout_episode(m, policies, cfg, i);
    });
    // Shifted by the first return: constant returns come out exact.
    const double pivot = returns.front();
    double sum = 0.0;
    for (double r : returns) sum += r - pivot;
    const double n = static_cast<double>(cfg.episodes);
    const double shift = sum / n;
    double ss = 0.0;
    for (double r : returns) ss += (r - pivot - shift) * (r - pivot - shift);
    const double var = cfg.episodes > 1 ? ss / (n - 1.0) : 0.0;
    return {pivot + shift, std::sqrt(var / n), cfg.episodes, cfg.seed};
}

} // namespace kdmdp
