#include "kdmdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "parallel.hpp"

namespace kdmdp {

double ValueFunction::value(int state, Point x) const {
    if (state < 0 || state >= static_cast<int>(states.size())) throw DomainError("value: unknown discrete state");
    const auto& lf = states[static_cast<std::size_t>(state)].locate(x);
    return eval(lf.payload, x).value;
}

Decision Policy::decide(int state, Point x) const {
    if (state < 0 || state >= static_cast<int>(states.size())) throw DomainError("decide: unknown discrete state");
    const auto& lf = states[static_cast<std::size_t>(state)].locate(x);
    const auto r = eval(lf.payload.fns, x);
    return {lf.payload.actions[r.index], r.index};
}

Deadline::Deadline(double seconds) {
    if (seconds > 0.0) {
        enabled_ = true;
        end_ = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
    }
}

void Deadline::check() const {
    if (enabled_ && std::chrono::steady_clock::now() > end_)
        throw ResourceCapError(ResourceCapError::Kind::time, "time budget exceeded");
}

ValueFunction initial_value(const HybridMdp& m) {
    ValueFunction v;
    v.stage = 0;
    v.states.reserve(m.discrete_states.size());
    for (std::size_t s = 0; s < m.discrete_states.size(); ++s) v.states.push_back(ValuePartition::unit(m.dims, PwlcSet::zero(m.dims)));
    return v;
}

std::size_t vector_count(const ValueFunction& v) {
    std::size_t n = 0;
    for (const auto& p : v.states)
        for (const auto& lf : p.leaves()) n += lf.payload.size();
    return n;
}

std::size_t leaf_count(const ValueFunction& v) {
    std::size_t n = 0;
    for (const auto& p : v.states) n += p.leaf_count();
    return n;
}

namespace {

/// sum_i w_i * f_i where f_i is the PWLC set *sets[i] pulled back by shift_i,
/// or the constant `missing` where sets[i] is null. Sets are cross-summed
/// one at a time and pruned over `cell` after every step.
PwlcSet weighted_sum(const Rect& cell, std::span<const PwlcSet* const> sets, std::span<const double> weights,
                     std::span<const std::array<double, kMaxDims>> shifts, double missing, double tol) {
    const int d = cell.dims();
    const auto dn = static_cast<std::size_t>(d);
    bool singletons = true;
    for (const auto* s : sets)
        if (s && s->size() != 1) {
            singletons = false;
            break;
        }
    if (singletons) {
        LinearFn acc{std::vector<double>(dn, 0.0), 0.0};
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const double w = weights[i];
            if (!sets[i]) {
                acc.offset += w * missing;
                continue;
            }
            const Point c = sets[i]->coeffs(0);
            double b = sets[i]->offset(0);
            for (std::size_t k = 0; k < dn; ++k) b += c[k] * shifts[i][k];
            for (std::size_t k = 0; k < dn; ++k) acc.coeffs[k] += w * c[k];
            acc.offset += w * b;
        }
        return PwlcSet(d, {acc});
    }
    std::optional<PwlcSet> acc;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        PwlcSet term = sets[i] ? scale(pull_back(*sets[i], Point(shifts[i].data(), dn)), weights[i])
                               : PwlcSet::constant(d, weights[i] * missing);
        if (term.size() > 1) term = prune(term, cell, tol);
        acc = acc ? prune(cross_sum(*acc, term), cell, tol) : std::move(term);
    }
    return std::move(*acc);
}

/// Per-axis marginals (shift, prob), sorted by shift, when a relative outcome
/// set is the full product of independent per-axis distributions and the
/// product has more members than the marginals together.
std::optional<std::vector<std::vector<std::pair<double, double>>>> factor_outcomes(const std::vector<Outcome>& outs, int d) {
    if (d < 2 || outs.size() < 4) return std::nullopt;
    const auto dn = static_cast<std::size_t>(d);
    std::vector<std::map<double, double>> acc(dn);
    for (const auto& o : outs)
        for (std::size_t k = 0; k < dn; ++k) acc[k][o.target[k]] += o.prob;
    std::size_t product = 1, total = 0;
    for (const auto& a : acc) {
        product *= a.size();
        total += a.size();
    }
    if (product != outs.size() || total >= outs.size()) return std::nullopt;
    std::set<std::vector<double>> seen;
    for (const auto& o : outs) {
        if (!seen.insert(o.target).second) return std::nullopt;
        double p = 1.0;
        for (std::size_t k = 0; k < dn; ++k) p *= acc[k].at(o.target[k]);
        if (std::abs(p - o.prob) > 1e-12) return std::nullopt;
    }
    std::vector<std::vector<std::pair<double, double>>> out(dn);
    for (std::size_t k = 0; k < dn; ++k) out[k].assign(acc[k].begin(), acc[k].end());
    return out;
}

void check_size(std::size_t leaves, const SolveOptions& opts, const char* what) {
    if (opts.max_vectors > 0 && leaves > opts.max_vectors)
        throw ResourceCapError(ResourceCapError::Kind::memory, std::string(what) + " has " + std::to_string(leaves) +
                                                                   " leaves, above the vector cap " + std::to_string(opts.max_vectors));
}

} // namespace

ValuePartition sigma_a(const ValuePartition& v, const TransitionModel& t, double out_of_bounds, const Rect& box, double prune_tol,
                       const Deadline* deadline) {
    if (v.dims() != t.dims()) throw DomainError("sigma_a: dimension mismatch");
    const int d = v.dims();
    const auto dn = static_cast<std::size_t>(d);
    const TransitionModel local = box == t.domain() ? t : restrict_to(t, box);

    return graft(local, [&](const TransitionModel::Leaf& lf) -> ValuePartition {
        const auto& outs = lf.payload.outcomes;
        if (outs.empty()) throw ModelError("sigma_a: empty outcome set");
        if (outs.front().kind == OutcomeKind::absolute) {
            double c = 0.0;
            for (const auto& o : outs) {
                if (o.kind != OutcomeKind::absolute) throw ModelError("sigma_a: outcome set mixes kinds");
                c += o.prob * eval(v.locate(o.target).payload, o.target).value;
            }
            return ValuePartition(lf.rect, PwlcSet::constant(d, c));
        }
        for (const auto& o : outs)
            if (o.kind != OutcomeKind::relative) throw ModelError("sigma_a: outcome set mixes kinds");
        std::size_t emitted = 0;
        auto combine = [&](const Rect& domain, const ValuePartition& src, std::span<const std::array<double, kMaxDims>> shifts,
                           std::span<const double> weights) {
            std::vector<ShiftedSource<PwlcSet>> sources(shifts.size());
            for (std::size_t i = 0; i < shifts.size(); ++i) sources[i] = {&src, shifts[i]};
            return overlay_shifted(domain, std::span<const ShiftedSource<PwlcSet>>(sources),
                                   [&](const Rect& cell, std::span<const PwlcSet* const> sets) {
                                       if (deadline && (++emitted & 255u) == 0) deadline->check();
                                       return weighted_sum(cell, sets, weights, shifts, out_of_bounds, prune_tol);
                                   });
        };

        if (auto marginals = factor_outcomes(outs, d)) {
            // Independent shifts per axis: convolve one axis at a time. Stage k
            // is needed on the leaf grown by the shifts of the later axes.
            std::optional<ValuePartition> cur;
            for (int k = 0; k < d; ++k) {
                const auto& mk = (*marginals)[static_cast<std::size_t>(k)];
                if (mk.size() == 1 && mk.front().first == 0.0) continue;
                std::vector<double> lo(lf.rect.lows().begin(), lf.rect.lows().end());
                std::vector<double> hi(lf.rect.highs().begin(), lf.rect.highs().end());
                for (int j = k + 1; j < d; ++j) {
                    const auto& mj = (*marginals)[static_cast<std::size_t>(j)];
                    const auto j_ = static_cast<std::size_t>(j);
                    lo[j_] = std::max(0.0, lo[j_] + mj.front().first);
                    hi[j_] = std::min(1.0, hi[j_] + mj.back().first);
                }
                std::vector<std::array<double, kMaxDims>> shifts(mk.size());
                std::vector<double> weights(mk.size());
                for (std::size_t i = 0; i < mk.size(); ++i) {
                    shifts[i][static_cast<std::size_t>(k)] = mk[i].first;
                    weights[i] = mk[i].second;
                }
                cur = combine(Rect(lo, hi), cur ? *cur : v, shifts, weights);
            }
            if (!cur) return restrict_to(v, lf.rect);
            return cur->domain() == lf.rect ? std::move(*cur) : restrict_to(*cur, lf.rect);
        }

        std::vector<std::array<double, kMaxDims>> shifts(outs.size());
        std::vector<double> weights(outs.size());
        for (std::size_t i = 0; i < outs.size(); ++i) {
            for (std::size_t k = 0; k < dn; ++k) shifts[i][k] = outs[i].target[k];
            weights[i] = outs[i].prob;
        }
        return combine(lf.rect, v, shifts, weights);
    });
}

QFunction q_function(const ValueFunction& v, const HybridMdp& m, const ModelEntry& e, const SolveOptions& opts, const Deadline* deadline) {
    const int d = m.dims;
    ValuePartition expected = graft(e.discrete, [&](const DiscreteTransition::Leaf& lf) -> ValuePartition {
        const auto& succ = lf.payload.successors;
        std::vector<ValuePartition> sig;
        sig.reserve(succ.size());
        for (const auto& [s2, q] : succ) {
            auto it = e.continuous.find(s2);
            if (it == e.continuous.end())
                throw ModelError("missing continuous conditional for (" + m.discrete_states[static_cast<std::size_t>(e.state)] + ", " +
                                 m.actions[static_cast<std::size_t>(e.action)] + ", " + m.discrete_states[static_cast<std::size_t>(s2)] + ")");
            sig.push_back(sigma_a(v.states.at(static_cast<std::size_t>(s2)), it->second, m.out_of_bounds_value, lf.rect, opts.prune_tol, deadline));
            check_size(sig.back().leaf_count(), opts, "expected-value partition");
        }
        if (sig.size() == 1 && succ.front().second == 1.0) return std::move(sig.front());
        std::vector<ShiftedSource<PwlcSet>> sources(sig.size());
        std::vector<std::array<double, kMaxDims>> shifts(sig.size());
        std::vector<double> weights(sig.size());
        for (std::size_t i = 0; i < sig.size(); ++i) {
            sources[i].partition = &sig[i];
            weights[i] = succ[i].second;
        }
        return overlay_shifted(lf.rect, std::span<const ShiftedSource<PwlcSet>>(sources),
                               [&](const Rect& cell, std::span<const PwlcSet* const> sets) {
                                   return weighted_sum(cell, sets, weights, shifts, 0.0, opts.prune_tol);
                               });
    });
    ValuePartition q = intersect_cells(expected, e.reward, [&](const Rect& cell, const PwlcSet& a, const PwlcSet& r) {
        PwlcSet sum = cross_sum(a, r);
        return sum.size() > 1 ? prune(sum, cell, opts.prune_tol) : sum;
    });
    (void)d;
    return QFunction{e.state, e.action, std::move(q)};
}

namespace {

bool same_policy_leaf(const PolicyLeaf& a, const PolicyLeaf& b, double tol) {
    if (a.actions != b.actions || a.fns.size() != b.fns.size()) return false;
    const auto& ra = a.fns.raw();
    const auto& rb = b.fns.raw();
    for (std::size_t i = 0; i < ra.size(); ++i)
        if (std::abs(ra[i] - rb[i]) > tol) return false;
    return true;
}

struct StateBackup {
    ValuePartition value;
    KdPartition<PolicyLeaf> policy;
};

StateBackup backup_state(const ValueFunction& v, const HybridMdp& m, int s, const SolveOptions& opts, const Deadline* deadline) {
    const auto entries = m.entries_for(s);
    if (entries.empty()) throw ModelError("no applicable action in discrete state '" + m.discrete_states[static_cast<std::size_t>(s)] + "'");

    std::optional<KdPartition<PolicyLeaf>> acc;
    for (const ModelEntry* e : entries) {
        if (deadline) deadline->check();
        QFunction q = q_function(v, m, *e, opts, deadline);
        check_size(q.partition.leaf_count(), opts, "Q-function partition");
        const int a = e->action;
        if (!acc) {
            acc = map_leaves(q.partition, [a](const ValuePartition::Leaf& lf) {
                return PolicyLeaf{lf.payload, std::vector<int>(lf.payload.size(), a)};
            });
            continue;
        }
        acc = intersect_cells(*acc, q.partition, [&](const Rect& cell, const PolicyLeaf& best, const PwlcSet& qa) {
            PwlcSet all = concat(best.fns, qa);
            const auto keep = prune_indices(all, cell, opts.prune_tol);
            PolicyLeaf out{keep.size() == all.size() ? all : all.subset(keep), {}};
            out.actions.reserve(keep.size());
            for (std::size_t i : keep) out.actions.push_back(i < best.fns.size() ? best.actions[i] : a);
            return out;
        });
    }
    const double tol = opts.merge_tol > 0.0 ? opts.merge_tol : kDuplicateTol;
    auto value = merge_equal_leaves(map_leaves(*acc, [](const KdPartition<PolicyLeaf>::Leaf& lf) { return lf.payload.fns; }),
                                    [tol](const PwlcSet& a, const PwlcSet& b) { return approx_equal(a, b, tol); });
    auto policy = merge_equal_leaves(*acc, [tol](const PolicyLeaf& a, const PolicyLeaf& b) { return same_policy_leaf(a, b, tol); });
    return {std::move(value), std::move(policy)};
}

BackupResult backup_impl(const ValueFunction& v, const HybridMdp& m, const SolveOptions& opts, const Deadline* deadline,
                         std::vector<double>* seconds) {
    if (static_cast<int>(v.states.size()) != static_cast<int>(m.discrete_states.size()))
        throw DomainError("bellman_backup: value function does not match the model's discrete states");
    const std::size_t n = m.discrete_states.size();
    std::vector<std::optional<StateBackup>> out(n);
    if (seconds) seconds->assign(n, 0.0);
    detail::parallel_for(n, opts.threads, [&](std::size_t s) {
        const auto t0 = std::chrono::steady_clock::now();
        out[s] = backup_state(v, m, static_cast<int>(s), opts, deadline);
        if (seconds) (*seconds)[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    BackupResult r;
    r.value.stage = v.stage + 1;
    r.policy.stage = v.stage;
    for (auto& sb : out) {
        r.value.states.push_back(std::move(sb->value));
        r.policy.states.push_back(std::move(sb->policy));
    }
    return r;
}

} // namespace

BackupResult bellman_backup_with_policy(const ValueFunction& v, const HybridMdp& m, const SolveOptions& opts, const Deadline* deadline) {
    return backup_impl(v, m, opts, deadline, nullptr);
}

ValueFunction bellman_backup(const ValueFunction& v, const HybridMdp& m, const SolveOptions& opts) {
    return backup_impl(v, m, opts, nullptr, nullptr).value;
}

SolveResult value_iteration(const HybridMdp& m, const SolveOptions& opts) {
    const int horizon = opts.horizon.value_or(m.horizon);
    if (horizon < 0) throw DomainError("value_iteration: negative horizon");
    const auto t0 = std::chrono::steady_clock::now();
    const Deadline deadline(opts.time_budget_seconds);

    SolveResult res;
    res.values.push_back(initial_value(m));
    for (std::size_t s = 0; s < m.discrete_states.size(); ++s) res.stats.push_back({0, static_cast<int>(s), 1, 1, 0.0});
    res.peak_vectors = vector_count(res.values.back());

    for (int k = 0; k < horizon; ++k) {
        std::vector<double> seconds;
        BackupResult b = backup_impl(res.values.back(), m, opts, deadline.enabled() ? &deadline : nullptr, &seconds);
        const std::size_t vectors = vector_count(b.value);
        res.peak_vectors = std::max(res.peak_vectors, vectors);
        for (std::size_t s = 0; s < b.value.states.size(); ++s) {
            const auto st = leaf_stats(b.value.states[s], [](const PwlcSet& p) { return p.size(); });
            res.stats.push_back({k + 1, static_cast<int>(s), st.leaves, st.total_payload_size, seconds[s]});
        }
        if (opts.max_vectors > 0 && vectors > opts.max_vectors)
            throw ResourceCapError(ResourceCapError::Kind::memory, "stage " + std::to_string(k + 1) + " holds " + std::to_string(vectors) +
                                                                       " linear functions, above the cap " + std::to_string(opts.max_vectors));
        res.values.push_back(std::move(b.value));
        if (opts.keep_policies) res.policies.push_back(std::move(b.policy));
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<Policy> extract_policy(const std::vector<ValueFunction>& values, const HybridMdp& m, const SolveOptions& opts) {
    std::vector<Policy> out;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) out.push_back(bellman_backup_with_policy(values[k], m, opts).policy);
    return out;
}

double eval_value(const std::vector<ValueFunction>& values, int state, Point x, int stage) {
    if (stage < 0 || stage >= static_cast<int>(values.size())) throw DomainError("eval_value: stage out of range");
    return values[static_cast<std::size_t>(stage)].value(state, x);
}

} // namespace kdmdp
