#include "kdmdp/pwlc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kdmdp/linprog.hpp"

namespace kdmdp {

PwlcSet::PwlcSet(int dims, const std::vector<LinearFn>& fns) : dims_(dims) {
    if (dims < 1 || dims > kMaxDims) throw DomainError("PwlcSet: bad dimension");
    if (fns.empty()) throw DomainError("PwlcSet: a set needs at least one function");
    data_.reserve(fns.size() * stride());
    for (const auto& f : fns) {
        if (static_cast<int>(f.coeffs.size()) != dims) throw DomainError("PwlcSet: coefficient count mismatch");
        for (double c : f.coeffs)
            if (!std::isfinite(c)) throw DomainError("PwlcSet: non-finite coefficient");
        if (!std::isfinite(f.offset)) throw DomainError("PwlcSet: non-finite offset");
        data_.insert(data_.end(), f.coeffs.begin(), f.coeffs.end());
        data_.push_back(f.offset);
    }
}

PwlcSet PwlcSet::constant(int dims, double value) {
    if (dims < 1 || dims > kMaxDims) throw DomainError("PwlcSet: bad dimension");
    std::vector<double> d(static_cast<std::size_t>(dims) + 1, 0.0);
    d.back() = value;
    return PwlcSet(dims, std::move(d));
}

LinearFn PwlcSet::fn(std::size_t i) const {
    const Point c = coeffs(i);
    return LinearFn{{c.begin(), c.end()}, offset(i)};
}

std::vector<LinearFn> PwlcSet::fns() const {
    std::vector<LinearFn> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(fn(i));
    return out;
}

bool PwlcSet::is_constant() const noexcept {
    for (std::size_t i = 0; i < size(); ++i)
        for (double c : coeffs(i))
            if (c != 0.0) return false;
    return true;
}

PwlcSet PwlcSet::subset(const std::vector<std::size_t>& indices) const {
    if (indices.empty()) throw DomainError("PwlcSet::subset: empty selection");
    std::vector<double> d;
    d.reserve(indices.size() * stride());
    for (std::size_t i : indices) {
        const auto* f = data_.data() + i * stride();
        d.insert(d.end(), f, f + stride());
    }
    return PwlcSet(dims_, std::move(d));
}

EvalResult eval(const PwlcSet& s, Point x) {
    EvalResult best{s.value(0, x), 0};
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double v = s.value(i, x);
        if (v > best.value) best = {v, i};
    }
    return best;
}

PwlcSet cross_sum(const PwlcSet& a, const PwlcSet& b) {
    if (a.dims_ != b.dims_) throw DomainError("cross_sum: dimension mismatch");
    const std::size_t st = a.stride();
    std::vector<double> d;
    d.reserve(a.size() * b.size() * st);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double* fa = a.data_.data() + i * st;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double* fb = b.data_.data() + j * st;
            for (std::size_t k = 0; k < st; ++k) d.push_back(fa[k] + fb[k]);
        }
    }
    return PwlcSet(a.dims_, std::move(d));
}

PwlcSet concat(const PwlcSet& a, const PwlcSet& b) {
    if (a.dims_ != b.dims_) throw DomainError("concat: dimension mismatch");
    std::vector<double> d = a.data_;
    d.insert(d.end(), b.data_.begin(), b.data_.end());
    return PwlcSet(a.dims_, std::move(d));
}

namespace {

bool same_fn(const PwlcSet& a, std::size_t i, const PwlcSet& b, std::size_t j, double tol) noexcept {
    if (std::abs(a.offset(i) - b.offset(j)) > tol) return false;
    const Point ca = a.coeffs(i), cb = b.coeffs(j);
    for (std::size_t k = 0; k < ca.size(); ++k)
        if (std::abs(ca[k] - cb[k]) > tol) return false;
    return true;
}

double min_difference(const PwlcSet& s, std::size_t i, std::size_t j, const Rect& r) noexcept {
    // min over the box of (l_i - l_j)
    double v = s.offset(i) - s.offset(j);
    const Point ci = s.coeffs(i), cj = s.coeffs(j);
    for (int k = 0; k < r.dims(); ++k) {
        const double g = ci[k] - cj[k];
        v += std::min(g * r.low(k), g * r.high(k));
    }
    return v;
}

} // namespace

PwlcSet union_max(const PwlcSet& a, const PwlcSet& b) {
    PwlcSet all = concat(a, b);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < all.size(); ++i) {
        bool dup = false;
        for (std::size_t k : keep)
            if (same_fn(all, k, all, i, kDuplicateTol)) {
                dup = true;
                break;
            }
        if (!dup) keep.push_back(i);
    }
    if (keep.size() == all.size()) return all;
    return all.subset(keep);
}

PwlcSet scale(const PwlcSet& s, double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("scale: factor must be finite and nonnegative");
    if (c == 0.0) return PwlcSet::zero(s.dims_);
    std::vector<double> d = s.data_;
    for (double& v : d) v *= c;
    return PwlcSet(s.dims_, std::move(d));
}

PwlcSet pull_back(const PwlcSet& s, Point delta) {
    if (static_cast<int>(delta.size()) != s.dims_) throw DomainError("pull_back: dimension mismatch");
    std::vector<double> d = s.data_;
    const std::size_t st = s.stride();
    for (std::size_t i = 0; i < s.size(); ++i) {
        double* f = d.data() + i * st;
        for (int k = 0; k < s.dims_; ++k) f[s.dims_] += f[k] * delta[k];
    }
    return PwlcSet(s.dims_, std::move(d));
}

double min_difference(const LinearFn& l1, const LinearFn& l2, const Rect& r) {
    if (static_cast<int>(l1.coeffs.size()) != r.dims() || static_cast<int>(l2.coeffs.size()) != r.dims())
        throw DomainError("min_difference: dimension mismatch");
    double v = l1.offset - l2.offset;
    for (int k = 0; k < r.dims(); ++k) {
        const double g = l1.coeffs[k] - l2.coeffs[k];
        v += std::min(g * r.low(k), g * r.high(k));
    }
    return v;
}

bool pointwise_dominates(const LinearFn& l1, const LinearFn& l2, const Rect& r, double tol) {
    return min_difference(l1, l2, r) >= -tol;
}

namespace {

std::size_t best_at(const PwlcSet& s, const std::vector<std::size_t>& candidates, Point x) {
    std::size_t best = candidates.front();
    double bv = s.value(best, x);
    for (std::size_t i : candidates) {
        const double v = s.value(i, x);
        if (v > bv || (v == bv && i < best)) {
            bv = v;
            best = i;
        }
    }
    return best;
}

// Witness LP for member f against every member of `others` (excluding f).
WitnessSolution witness(const PwlcSet& s, std::size_t f, const std::vector<std::size_t>& others, WitnessLp& lp) {
    lp.clear_rows();
    std::array<double, kMaxDims> g{};
    const auto d = static_cast<std::size_t>(s.dims());
    const Point cf = s.coeffs(f);
    for (std::size_t w : others) {
        if (w == f) continue;
        const Point cw = s.coeffs(w);
        for (std::size_t k = 0; k < d; ++k) g[k] = cf[k] - cw[k];
        lp.add_row(Point(g.data(), d), s.offset(f) - s.offset(w));
    }
    try {
        auto sol = solve_witness(lp);
        if (sol.status != LpStatus::optimal) throw NumericalError("prune: witness LP unbounded", static_cast<std::ptrdiff_t>(f));
        return sol;
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("prune: ") + e.what() + " (function " + std::to_string(f) + ")",
                             static_cast<std::ptrdiff_t>(f));
    }
}

} // namespace

std::vector<std::size_t> prune_indices(const PwlcSet& s, const Rect& r, double tol) {
    if (!(tol >= 0.0)) throw DomainError("prune: tolerance must be nonnegative");
    if (r.dims() != s.dims()) throw DomainError("prune: dimension mismatch");
    const std::size_t n = s.size();
    if (n == 1) return {0};

    // Pairwise closed-form pre-filter. Near-identical members keep the
    // earlier index.
    std::vector<char> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n && alive[i]; ++j) {
            if (j == i || !alive[j]) continue;
            if (min_difference(s, j, i, r) >= -kDuplicateTol) {
                const bool mutual = min_difference(s, i, j, r) >= -kDuplicateTol;
                if (!mutual || j < i) alive[i] = 0;
            }
        }
    }
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) frontier.push_back(i);
    if (frontier.size() == 1) return frontier;

    // Lark-style witness search over the box.
    WitnessLp lp(r);
    std::vector<std::size_t> kept;
    {
        const std::size_t first = best_at(s, frontier, r.lows());
        kept.push_back(first);
        frontier.erase(std::find(frontier.begin(), frontier.end(), first));
    }
    while (!frontier.empty()) {
        const std::size_t f = frontier.front();
        const auto sol = witness(s, f, kept, lp);
        if (sol.margin > tol) {
            const std::size_t winner = best_at(s, frontier, sol.point);
            kept.push_back(winner);
            frontier.erase(std::find(frontier.begin(), frontier.end(), winner));
        } else {
            frontier.erase(frontier.begin());
        }
    }
    std::sort(kept.begin(), kept.end());

    // Members added as best-at-a-point may have been covered by later ones.
    for (std::size_t pos = 0; kept.size() > 1 && pos < kept.size();) {
        const auto sol = witness(s, kept[pos], kept, lp);
        if (sol.margin > tol)
            ++pos;
        else
            kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    return kept;
}

PwlcSet prune(const PwlcSet& s, const Rect& r, double tol) {
    auto idx = prune_indices(s, r, tol);
    if (idx.size() == s.size()) return s;
    return s.subset(idx);
}

bool approx_equal(const PwlcSet& a, const PwlcSet& b, double tol) noexcept {
    if (a.dims() != b.dims() || a.size() != b.size()) return false;
    bool in_order = true;
    for (std::size_t i = 0; i < a.size() && in_order; ++i) in_order = same_fn(a, i, b, i, tol);
    if (in_order) return true;
    std::vector<char> used(b.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool found = false;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!used[j] && same_fn(a, i, b, j, tol)) {
                used[j] = 1;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

} // namespace kdmdp
