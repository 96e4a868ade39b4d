#pragma once

// Random instance generators and brute-force oracles shared by the unit and
// acceptance tests. Everything here is deliberately independent of the
// solver internals: oracles only use locate/eval on explicit partitions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kdmdp/geometry.hpp"
#include "kdmdp/model.hpp"
#include "kdmdp/pwlc.hpp"
#include "kdmdp/solver.hpp"

namespace kdmdp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& g, double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(g); }
inline int uniform_int(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

/// Random kd-tree over `box`. With grid > 0 cuts sit on multiples of 1/grid,
/// otherwise anywhere (kept away from the faces).
template <class P>
KdPartition<P> random_partition(Rng& g, const Rect& box, int grid, int max_leaves, const std::function<P(const Rect&)>& payload) {
    KdBuilder<P> b(box);
    int budget = max_leaves - 1;
    std::function<void(std::int32_t, const Rect&, int)> rec = [&](std::int32_t id, const Rect& r, int depth) {
        const bool split = budget > 0 && uniform(g) < (depth == 0 ? 0.95 : 0.7);
        if (split) {
            const int dim = uniform_int(g, 0, r.dims() - 1);
            double cut = 0.0;
            bool ok = false;
            if (grid > 0) {
                const int lo = static_cast<int>(std::ceil(r.low(dim) * grid + 1e-9));
                const int hi = static_cast<int>(std::floor(r.high(dim) * grid - 1e-9));
                if (lo <= hi) {
                    cut = uniform_int(g, lo, hi) / static_cast<double>(grid);
                    ok = cut > r.low(dim) && cut < r.high(dim);
                }
            } else if (r.width(dim) > 0.02) {
                cut = r.low(dim) + r.width(dim) * uniform(g, 0.15, 0.85);
                ok = true;
            }
            if (ok) {
                --budget;
                auto [l, rr] = b.make_split(id, dim, cut);
                rec(l, r.below(dim, cut), depth + 1);
                rec(rr, r.above(dim, cut), depth + 1);
                return;
            }
        }
        b.make_leaf(id, r, payload(r));
    };
    rec(b.reserve(), box, 0);
    return std::move(b).finish();
}

inline std::vector<double> random_probs(Rng& g, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double s = 0.0;
    for (auto& x : p) s += (x = uniform(g, 0.1, 1.0));
    for (auto& x : p) x /= s;
    return p;
}

inline PwlcSet random_pwlc(Rng& g, int d, int n, double coeff_scale, double offset_scale) {
    std::vector<LinearFn> fns;
    for (int i = 0; i < n; ++i) {
        LinearFn f{std::vector<double>(static_cast<std::size_t>(d)), uniform(g, -offset_scale, offset_scale)};
        for (auto& c : f.coeffs) c = uniform(g, -coeff_scale, coeff_scale);
        fns.push_back(std::move(f));
    }
    return PwlcSet(d, fns);
}

inline std::vector<double> random_point_in(Rng& g, const Rect& r, double margin_frac = 1e-6) {
    std::vector<double> x(static_cast<std::size_t>(r.dims()));
    for (int k = 0; k < r.dims(); ++k) {
        const double m = r.width(k) * margin_frac;
        x[static_cast<std::size_t>(k)] = uniform(g, r.low(k) + m, r.high(k) - m);
    }
    return x;
}

inline OutcomeSet stay_put(int d) {
    return OutcomeSet{{{OutcomeKind::relative, std::vector<double>(static_cast<std::size_t>(d), 0.0), 1.0}}};
}

/// One discrete state "s", one action per (reward, transition) pair.
inline HybridMdp single_state_model(int d, std::vector<std::pair<RewardModel, TransitionModel>> actions, int horizon = 1,
                                    double oob = 0.0) {
    HybridMdp m;
    m.dims = d;
    m.discrete_states = {"s"};
    m.horizon = horizon;
    m.out_of_bounds_value = oob;
    for (std::size_t a = 0; a < actions.size(); ++a) {
        m.actions.push_back("a" + std::to_string(a));
        std::map<int, TransitionModel> cont;
        cont.emplace(0, std::move(actions[a].second));
        m.entries.push_back(ModelEntry{0, static_cast<int>(a), std::move(actions[a].first),
                                       DiscreteTransition::unit(d, SuccessorDist{{{0, 1.0}}}), std::move(cont)});
    }
    return m;
}

/// Random piecewise-constant model with a single discrete state whose
/// partitions sit on the 1/grid lattice and whose shifts are multiples of
/// 1/grid. Some transition leaves use absolute outcomes landing on lattice
/// cell centers.
inline HybridMdp random_aligned_m1(Rng& g, int d, int grid, int horizon) {
    HybridMdp m;
    m.dims = d;
    m.discrete_states = {"s"};
    const int na = uniform_int(g, 1, 3);
    for (int a = 0; a < na; ++a) m.actions.push_back("a" + std::to_string(a));
    m.horizon = horizon;
    m.out_of_bounds_value = uniform(g, -1.0, 1.0);
    const Rect unit = Rect::unit(d);
    for (int a = 0; a < na; ++a) {
        auto reward = random_partition<PwlcSet>(g, unit, grid, 6, [&](const Rect&) { return PwlcSet::constant(d, std::round(uniform(g, -5, 5) * 8) / 8); });
        auto transition = random_partition<OutcomeSet>(g, unit, grid, 5, [&](const Rect&) {
            OutcomeSet os;
            if (uniform(g) < 0.2) {
                std::vector<double> t(static_cast<std::size_t>(d));
                for (auto& c : t) c = (uniform_int(g, 0, grid - 1) + 0.5) / grid;
                os.outcomes.push_back({OutcomeKind::absolute, t, 1.0});
                return os;
            }
            const int n = uniform_int(g, 1, 3);
            const auto p = random_probs(g, n);
            for (int i = 0; i < n; ++i) {
                std::vector<double> t(static_cast<std::size_t>(d));
                for (auto& c : t) c = uniform_int(g, -3, 3) / static_cast<double>(grid);
                os.outcomes.push_back({OutcomeKind::relative, t, p[static_cast<std::size_t>(i)]});
            }
            return os;
        });
        std::map<int, TransitionModel> cont;
        cont.emplace(0, std::move(transition));
        m.entries.push_back(ModelEntry{0, a, std::move(reward), DiscreteTransition::unit(d, SuccessorDist{{{0, 1.0}}}), std::move(cont)});
    }
    return m;
}

/// Random hybrid model with linear rewards and unaligned partitions.
/// lattice > 0 puts every cut, shift and absolute target on multiples of
/// 1/lattice, which keeps leaf counts bounded over long horizons.
inline HybridMdp random_hybrid(Rng& g, int d, int states, int horizon, int lattice = 0) {
    auto snap = [lattice](double v) { return lattice > 0 ? std::round(v * lattice) / lattice : v; };
    HybridMdp m;
    m.dims = d;
    for (int s = 0; s < states; ++s) m.discrete_states.push_back("s" + std::to_string(s));
    const int na = uniform_int(g, 1, 3);
    for (int a = 0; a < na; ++a) m.actions.push_back("a" + std::to_string(a));
    m.horizon = horizon;
    m.out_of_bounds_value = uniform(g, -0.5, 0.5);
    const Rect unit = Rect::unit(d);
    for (int s = 0; s < states; ++s) {
        for (int a = 0; a < na; ++a) {
            if (a > 0 && uniform(g) < 0.3) continue;  // not every action everywhere
            auto reward = random_partition<PwlcSet>(g, unit, lattice, 3, [&](const Rect&) { return random_pwlc(g, d, uniform_int(g, 1, 2), 1.0, 1.0); });
            std::vector<int> succ;
            for (int s2 = 0; s2 < states; ++s2)
                if (uniform(g) < 0.6) succ.push_back(s2);
            if (succ.empty()) succ.push_back(uniform_int(g, 0, states - 1));
            auto discrete = random_partition<SuccessorDist>(g, unit, lattice, 2, [&](const Rect&) {
                SuccessorDist dist;
                const auto p = random_probs(g, static_cast<int>(succ.size()));
                for (std::size_t i = 0; i < succ.size(); ++i) dist.successors.emplace_back(succ[i], p[i]);
                return dist;
            });
            std::map<int, TransitionModel> cont;
            for (int s2 : succ) {
                cont.emplace(s2, random_partition<OutcomeSet>(g, unit, lattice, 2, [&](const Rect&) {
                    OutcomeSet os;
                    if (uniform(g) < 0.15) {
                        std::vector<double> t(static_cast<std::size_t>(d));
                        for (auto& c : t) c = std::min(1.0, snap(uniform(g)));
                        os.outcomes.push_back({OutcomeKind::absolute, t, 1.0});
                        return os;
                    }
                    const int n = uniform_int(g, 1, 3);
                    const auto p = random_probs(g, n);
                    for (int i = 0; i < n; ++i) {
                        std::vector<double> t(static_cast<std::size_t>(d));
                        for (auto& c : t) c = snap(uniform(g, -0.25, 0.25));
                        os.outcomes.push_back({OutcomeKind::relative, t, p[static_cast<std::size_t>(i)]});
                    }
                    return os;
                }));
            }
            m.entries.push_back(ModelEntry{s, a, std::move(reward), std::move(discrete), std::move(cont)});
        }
    }
    return m;
}

/// Q(s, a, x) by direct summation over successors and outcomes, reading the
/// previous stage through eval_value.
inline double oracle_q(const HybridMdp& m, const std::vector<ValueFunction>& values, int prev_stage, const ModelEntry& e, Point x) {
    double q = eval(e.reward.locate(x).payload, x).value;
    const auto dn = static_cast<std::size_t>(m.dims);
    std::vector<double> y(dn);
    for (const auto& [s2, ps] : e.discrete.locate(x).payload.successors) {
        double ev = 0.0;
        for (const auto& o : e.continuous.at(s2).locate(x).payload.outcomes) {
            bool inside = true;
            for (std::size_t k = 0; k < dn; ++k) {
                y[k] = o.kind == OutcomeKind::relative ? x[k] + o.target[k] : o.target[k];
                inside = inside && y[k] >= 0.0 && y[k] <= 1.0;
            }
            ev += o.prob * (inside ? eval_value(values, s2, y, prev_stage) : m.out_of_bounds_value);
        }
        q += ps * ev;
    }
    return q;
}

/// max_a Q(s, a, x).
inline double oracle_backup(const HybridMdp& m, const std::vector<ValueFunction>& values, int prev_stage, int s, Point x) {
    double best = -std::numeric_limits<double>::infinity();
    for (const ModelEntry* e : m.entries_for(s)) best = std::max(best, oracle_q(m, values, prev_stage, *e, x));
    return best;
}

} // namespace kdmdp::testing
