#pragma once

// Axis-aligned boxes and kd-tree rectangular partitions of a box (normally
// the unit cube). Every partition operation is a pure function producing a
// new partition; payloads are opaque and combined through caller-supplied
// callables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "kdmdp/errors.hpp"

namespace kdmdp {

inline constexpr int kMaxDims = 6;

/// Cuts closer than this to a cell face are treated as lying on it. Shifted
/// cuts reached along different paths differ in the last bits; without the
/// tolerance they would produce slivers of width ~1e-16.
inline constexpr double kCoordTol = 1e-11;

using Point = std::span<const double>;

/// Box prod_i [low_i, high_i) inside [0,1]^d. The upper face is closed where
/// high_i == 1, so the cells of a partition tile the closed cube.
class Rect {
public:
    Rect(Point low, Point high) : dims_(static_cast<int>(low.size())) {
        if (low.size() != high.size())
            throw DomainError("Rect: low/high dimension mismatch");
        if (dims_ < 1 || dims_ > kMaxDims)
            throw DomainError("Rect: dimension must be in 1.." + std::to_string(kMaxDims));
        for (int i = 0; i < dims_; ++i) {
            if (!(low[i] >= 0.0 && high[i] <= 1.0))
                throw DomainError("Rect: coordinates must lie in [0,1]");
            if (!(low[i] < high[i]))
                throw DomainError("Rect: empty or degenerate along dimension " + std::to_string(i));
            low_[i] = low[i];
            high_[i] = high[i];
        }
    }

    Rect(std::initializer_list<double> low, std::initializer_list<double> high)
        : Rect(Point(low.begin(), low.size()), Point(high.begin(), high.size())) {}

    static Rect unit(int dims) {
        std::array<double, kMaxDims> lo{}, hi{};
        hi.fill(1.0);
        return Rect(Point(lo.data(), dims), Point(hi.data(), dims));
    }

    int dims() const noexcept { return dims_; }
    double low(int i) const noexcept { return low_[i]; }
    double high(int i) const noexcept { return high_[i]; }
    double width(int i) const noexcept { return high_[i] - low_[i]; }
    Point lows() const noexcept { return {low_.data(), static_cast<std::size_t>(dims_)}; }
    Point highs() const noexcept { return {high_.data(), static_cast<std::size_t>(dims_)}; }

    bool contains(Point x) const noexcept {
        for (int i = 0; i < dims_; ++i) {
            if (!(x[i] >= low_[i])) return false;
            if (!(x[i] < high_[i] || (x[i] == high_[i] && high_[i] == 1.0))) return false;
        }
        return true;
    }

    double volume() const noexcept {
        double v = 1.0;
        for (int i = 0; i < dims_; ++i) v *= high_[i] - low_[i];
        return v;
    }

    /// Positive-volume intersection, or nullopt for disjoint/touching boxes.
    std::optional<Rect> intersect(const Rect& o) const noexcept {
        Rect out = *this;
        for (int i = 0; i < dims_; ++i) {
            out.low_[i] = std::max(low_[i], o.low_[i]);
            out.high_[i] = std::min(high_[i], o.high_[i]);
            if (!(out.low_[i] < out.high_[i])) return std::nullopt;
        }
        return out;
    }

    /// True when `o` lies inside this box.
    bool encloses(const Rect& o) const noexcept {
        for (int i = 0; i < dims_; ++i)
            if (o.low_[i] < low_[i] || o.high_[i] > high_[i]) return false;
        return true;
    }

    /// Part below `cut` along `dim`; the cut must lie strictly inside.
    Rect below(int dim, double cut) const noexcept {
        Rect out = *this;
        out.high_[dim] = cut;
        return out;
    }

    Rect above(int dim, double cut) const noexcept {
        Rect out = *this;
        out.low_[dim] = cut;
        return out;
    }

    std::vector<double> center() const {
        std::vector<double> c(dims_);
        for (int i = 0; i < dims_; ++i) c[i] = 0.5 * (low_[i] + high_[i]);
        return c;
    }

    friend bool operator==(const Rect& a, const Rect& b) noexcept {
        if (a.dims_ != b.dims_) return false;
        for (int i = 0; i < a.dims_; ++i)
            if (a.low_[i] != b.low_[i] || a.high_[i] != b.high_[i]) return false;
        return true;
    }

    std::string str() const {
        std::ostringstream os;
        os.precision(17);
        os << '[';
        for (int i = 0; i < dims_; ++i) os << (i ? "," : "") << low_[i];
        os << " .. ";
        for (int i = 0; i < dims_; ++i) os << (i ? "," : "") << high_[i];
        os << ']';
        return os.str();
    }

private:
    int dims_;
    std::array<double, kMaxDims> low_{};
    std::array<double, kMaxDims> high_{};
};

/// Translates `r` by `delta` and clips the result to the unit cube. Returns
/// nullopt when nothing of positive volume is left.
inline std::optional<Rect> shift_clip(const Rect& r, Point delta) {
    if (static_cast<int>(delta.size()) != r.dims())
        throw DomainError("shift_clip: delta dimension mismatch");
    std::array<double, kMaxDims> lo{}, hi{};
    for (int i = 0; i < r.dims(); ++i) {
        lo[i] = std::max(0.0, r.low(i) + delta[i]);
        hi[i] = std::min(1.0, r.high(i) + delta[i]);
        if (!(lo[i] < hi[i])) return std::nullopt;
    }
    const auto n = static_cast<std::size_t>(r.dims());
    return Rect(Point(lo.data(), n), Point(hi.data(), n));
}

struct KdNode {
    std::int32_t dim = -1; // -1 marks a leaf
    double cut = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;

    bool is_leaf() const noexcept { return dim < 0; }
};

template <class P>
class KdBuilder;

/// kd-tree whose leaves tile `domain()`. Node 0 is the root; leaves are
/// stored in depth-first (left before right) order.
template <class P>
class KdPartition {
public:
    using payload_type = P;

    struct Leaf {
        Rect rect;
        P payload;
    };

    KdPartition(Rect domain, P payload) : domain_(domain) {
        nodes_.push_back(KdNode{-1, 0.0, -1, -1, 0});
        leaves_.push_back(Leaf{domain, std::move(payload)});
    }

    static KdPartition unit(int dims, P payload) { return KdPartition(Rect::unit(dims), std::move(payload)); }

    const Rect& domain() const noexcept { return domain_; }
    int dims() const noexcept { return domain_.dims(); }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    std::span<const Leaf> leaves() const noexcept { return leaves_; }
    const Leaf& leaf(std::size_t i) const noexcept { return leaves_[i]; }
    std::span<const KdNode> nodes() const noexcept { return nodes_; }

    std::size_t locate_index(Point x) const {
        if (static_cast<int>(x.size()) != dims())
            throw DomainError("locate: point dimension mismatch");
        for (double c : x)
            if (!(c >= 0.0 && c <= 1.0)) throw DomainError("locate: coordinate outside [0,1]");
        if (!domain_.contains(x)) throw DomainError("locate: point outside partition domain");
        std::int32_t n = 0;
        while (!nodes_[n].is_leaf()) {
            const KdNode& node = nodes_[n];
            n = x[node.dim] < node.cut ? node.left : node.right;
        }
        return static_cast<std::size_t>(nodes_[n].leaf);
    }

    const Leaf& locate(Point x) const { return leaves_[locate_index(x)]; }

private:
    friend class KdBuilder<P>;
    explicit KdPartition(Rect domain) : domain_(domain) {}

    Rect domain_;
    std::vector<KdNode> nodes_;
    std::vector<Leaf> leaves_;
};

/// Incremental top-down construction of a KdPartition. A node id is reserved
/// first and later turned into a split or a leaf, so children can be built
/// recursively after their parent.
template <class P>
class KdBuilder {
public:
    explicit KdBuilder(Rect domain) : out_(domain) {}

    std::int32_t reserve() {
        out_.nodes_.emplace_back();
        return static_cast<std::int32_t>(out_.nodes_.size() - 1);
    }

    void make_leaf(std::int32_t id, const Rect& rect, P payload) {
        out_.nodes_[id].dim = -1;
        out_.nodes_[id].leaf = static_cast<std::int32_t>(out_.leaves_.size());
        out_.leaves_.push_back({rect, std::move(payload)});
    }

    /// Turns `id` into a split and returns the (left, right) child ids.
    std::pair<std::int32_t, std::int32_t> make_split(std::int32_t id, int dim, double cut) {
        const auto l = reserve();
        const auto r = reserve();
        KdNode& n = out_.nodes_[id];
        n.dim = dim;
        n.cut = cut;
        n.left = l;
        n.right = r;
        return {l, r};
    }

    KdPartition<P> finish() && { return std::move(out_); }

private:
    KdPartition<P> out_;
};

namespace detail {

template <class P, class Q, class F>
void copy_subtree(KdBuilder<Q>& b, std::int32_t id, const KdPartition<P>& src, std::int32_t node, F&& f) {
    const KdNode& n = src.nodes()[node];
    if (n.is_leaf()) {
        const auto& lf = src.leaf(static_cast<std::size_t>(n.leaf));
        b.make_leaf(id, lf.rect, f(lf));
        return;
    }
    auto [l, r] = b.make_split(id, n.dim, n.cut);
    copy_subtree(b, l, src, n.left, f);
    copy_subtree(b, r, src, n.right, f);
}

} // namespace detail

/// Same tree, payloads mapped through f(const Leaf&).
template <class P, class F>
auto map_leaves(const KdPartition<P>& p, F&& f) {
    using Q = std::decay_t<std::invoke_result_t<F&, const typename KdPartition<P>::Leaf&>>;
    KdBuilder<Q> b(p.domain());
    detail::copy_subtree(b, b.reserve(), p, 0, f);
    return std::move(b).finish();
}

struct RefineStats {
    std::size_t leaves_visited = 0;
    std::size_t leaves_split = 0;
};

/// Splits the leaves of `p` straddling a face of `r` so that `r` is tiled
/// exactly by leaves, then maps the payloads of the leaves inside `r`
/// through `f`. Faces are processed in ascending dimension order, low face
/// before high face.
template <class P, class F>
KdPartition<P> refine(const KdPartition<P>& p, const Rect& r, F&& f, RefineStats* stats = nullptr) {
    KdBuilder<P> b(p.domain());
    auto keep = [](const typename KdPartition<P>::Leaf& lf) { return lf.payload; };

    std::function<void(std::int32_t, std::int32_t, const Rect&)> rec;
    rec = [&](std::int32_t id, std::int32_t node, const Rect& box) {
        if (!box.intersect(r)) {
            detail::copy_subtree(b, id, p, node, keep);
            return;
        }
        const KdNode& n = p.nodes()[node];
        if (!n.is_leaf()) {
            auto [l, rr] = b.make_split(id, n.dim, n.cut);
            rec(l, n.left, box.below(n.dim, n.cut));
            rec(rr, n.right, box.above(n.dim, n.cut));
            return;
        }
        const auto& lf = p.leaf(static_cast<std::size_t>(n.leaf));
        if (stats) ++stats->leaves_visited;
        Rect cell = lf.rect;
        std::int32_t cur = id;
        bool split = false;
        for (int d = 0; d < cell.dims(); ++d) {
            if (cell.low(d) < r.low(d) && r.low(d) < cell.high(d)) {
                auto [l, rr] = b.make_split(cur, d, r.low(d));
                b.make_leaf(l, cell.below(d, r.low(d)), lf.payload);
                cell = cell.above(d, r.low(d));
                cur = rr;
                split = true;
            }
            if (cell.low(d) < r.high(d) && r.high(d) < cell.high(d)) {
                auto [l, rr] = b.make_split(cur, d, r.high(d));
                b.make_leaf(rr, cell.above(d, r.high(d)), lf.payload);
                cell = cell.below(d, r.high(d));
                cur = l;
                split = true;
            }
        }
        if (stats && split) ++stats->leaves_split;
        b.make_leaf(cur, cell, f(lf.payload));
    };
    rec(b.reserve(), 0, p.domain());
    return std::move(b).finish();
}

/// Common refinement of two partitions of the same domain, with leaf payload
/// f(cell, payload_p, payload_q). Output leaves are the positive-volume
/// pairwise intersections; the tree of `p` sits on top.
template <class A, class B, class F>
auto intersect_cells(const KdPartition<A>& p, const KdPartition<B>& q, F&& f) {
    using C = std::decay_t<std::invoke_result_t<F&, const Rect&, const A&, const B&>>;
    if (!(p.domain() == q.domain())) throw DomainError("intersect: partitions cover different domains");
    KdBuilder<C> b(p.domain());

    std::function<void(std::int32_t, std::int32_t, const Rect&, const A&)> down_q;
    down_q = [&](std::int32_t id, std::int32_t node, const Rect& box, const A& pa) {
        for (;;) {
            const KdNode& n = q.nodes()[node];
            if (n.is_leaf()) {
                b.make_leaf(id, box, f(box, pa, q.leaf(static_cast<std::size_t>(n.leaf)).payload));
                return;
            }
            if (n.cut <= box.low(n.dim) + kCoordTol) {
                node = n.right;
            } else if (n.cut >= box.high(n.dim) - kCoordTol) {
                node = n.left;
            } else {
                auto [l, r] = b.make_split(id, n.dim, n.cut);
                down_q(l, n.left, box.below(n.dim, n.cut), pa);
                down_q(r, n.right, box.above(n.dim, n.cut), pa);
                return;
            }
        }
    };

    std::function<void(std::int32_t, std::int32_t)> down_p;
    down_p = [&](std::int32_t id, std::int32_t node) {
        const KdNode& n = p.nodes()[node];
        if (n.is_leaf()) {
            const auto& lf = p.leaf(static_cast<std::size_t>(n.leaf));
            down_q(id, 0, lf.rect, lf.payload);
            return;
        }
        auto [l, r] = b.make_split(id, n.dim, n.cut);
        down_p(l, n.left);
        down_p(r, n.right);
    };
    down_p(b.reserve(), 0);
    return std::move(b).finish();
}

/// Common refinement with leaf payload f(payload_p, payload_q).
template <class A, class B, class F>
auto intersect(const KdPartition<A>& p, const KdPartition<B>& q, F&& f) {
    return intersect_cells(p, q, [&f](const Rect&, const A& a, const B& b) { return f(a, b); });
}

/// One input of overlay_shifted: a partition read at x + delta.
template <class P>
struct ShiftedSource {
    const KdPartition<P>* partition;
    std::array<double, kMaxDims> delta{};
};

/// Common refinement over `box` of several partitions, each pulled back by
/// its own shift: input i contributes its payload at x + delta_i, or nullptr
/// where x + delta_i leaves that partition's domain. The leaf payload is
/// f(cell, payload pointers).
template <class P, class F>
auto overlay_shifted(const Rect& box, std::span<const ShiftedSource<P>> inputs, F&& f) {
    using Q = std::decay_t<std::invoke_result_t<F&, const Rect&, std::span<const P* const>>>;
    constexpr std::int32_t kOutside = -2;
    const int d = box.dims();
    for (const auto& in : inputs)
        if (in.partition->dims() != d) throw DomainError("overlay_shifted: dimension mismatch");

    KdBuilder<Q> b(box);
    std::vector<const P*> payloads(inputs.size());

    struct Cut {
        int dim;
        double at;
    };
    // Moves cursor i down as far as `cell` allows; returns the first cut of
    // input i strictly inside `cell`, if any.
    auto advance = [&](std::size_t i, std::int32_t& node, const Rect& cell) -> std::optional<Cut> {
        if (node == kOutside) return std::nullopt;
        const auto& in = inputs[i];
        const KdPartition<P>& part = *in.partition;
        if (node == 0) {
            const Rect& dom = part.domain();
            for (int k = 0; k < d; ++k) {
                const double lo = dom.low(k) - in.delta[k];
                const double hi = dom.high(k) - in.delta[k];
                if (cell.high(k) <= lo + kCoordTol || cell.low(k) >= hi - kCoordTol) {
                    node = kOutside;
                    return std::nullopt;
                }
            }
            for (int k = 0; k < d; ++k) {
                const double lo = dom.low(k) - in.delta[k];
                const double hi = dom.high(k) - in.delta[k];
                if (cell.low(k) < lo - kCoordTol) return Cut{k, lo};
                if (cell.high(k) > hi + kCoordTol) return Cut{k, hi};
            }
        }
        for (;;) {
            const KdNode& n = part.nodes()[node];
            if (n.is_leaf()) return std::nullopt;
            const double c = n.cut - in.delta[n.dim];
            if (c <= cell.low(n.dim) + kCoordTol) {
                node = n.right;
            } else if (c >= cell.high(n.dim) - kCoordTol) {
                node = n.left;
            } else {
                return Cut{n.dim, c};
            }
        }
    };

    std::function<void(std::int32_t, const Rect&, std::vector<std::int32_t>)> rec;
    rec = [&](std::int32_t id, const Rect& cell, std::vector<std::int32_t> cursors) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (auto cut = advance(i, cursors[i], cell)) {
                auto [l, r] = b.make_split(id, cut->dim, cut->at);
                rec(l, cell.below(cut->dim, cut->at), cursors);
                rec(r, cell.above(cut->dim, cut->at), std::move(cursors));
                return;
            }
        }
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (cursors[i] == kOutside) {
                payloads[i] = nullptr;
            } else {
                const KdNode& n = inputs[i].partition->nodes()[cursors[i]];
                payloads[i] = &inputs[i].partition->leaf(static_cast<std::size_t>(n.leaf)).payload;
            }
        }
        b.make_leaf(id, cell, f(cell, std::span<const P* const>(payloads)));
    };
    rec(b.reserve(), box, std::vector<std::int32_t>(inputs.size(), 0));
    return std::move(b).finish();
}

/// Restriction of `p` to a sub-box of its domain.
template <class P>
KdPartition<P> restrict_to(const KdPartition<P>& p, const Rect& box) {
    if (!p.domain().encloses(box)) throw DomainError("restrict_to: box outside partition domain");
    ShiftedSource<P> src{&p, {}};
    return overlay_shifted(box, std::span<const ShiftedSource<P>>(&src, 1),
                           [](const Rect&, std::span<const P* const> v) { return *v[0]; });
}

/// Replaces every leaf of `p` by the partition f(leaf), whose domain must be
/// the leaf's rect.
template <class P, class F>
auto graft(const KdPartition<P>& p, F&& f) {
    using Sub = std::decay_t<std::invoke_result_t<F&, const typename KdPartition<P>::Leaf&>>;
    using Q = typename Sub::payload_type;
    KdBuilder<Q> b(p.domain());
    auto keep = [](const typename Sub::Leaf& lf) { return lf.payload; };

    std::function<void(std::int32_t, std::int32_t)> rec;
    rec = [&](std::int32_t id, std::int32_t node) {
        const KdNode& n = p.nodes()[node];
        if (n.is_leaf()) {
            const auto& lf = p.leaf(static_cast<std::size_t>(n.leaf));
            Sub sub = f(lf);
            if (!(sub.domain() == lf.rect)) throw DomainError("graft: sub-partition domain differs from leaf");
            detail::copy_subtree(b, id, sub, 0, keep);
            return;
        }
        auto [l, r] = b.make_split(id, n.dim, n.cut);
        rec(l, n.left);
        rec(r, n.right);
    };
    rec(b.reserve(), 0);
    return std::move(b).finish();
}

/// Bottom-up merge of sibling leaves whose payloads satisfy eq(a, b). The
/// merged leaf keeps the left payload.
template <class P, class Eq>
KdPartition<P> merge_equal_leaves(const KdPartition<P>& p, Eq&& eq) {
    // First pass: decide, per node, whether the subtree collapses to a leaf
    // and which source payload it carries.
    std::vector<std::int32_t> collapsed(p.nodes().size(), -1);
    std::function<void(std::int32_t)> scan;
    scan = [&](std::int32_t node) {
        const KdNode& n = p.nodes()[node];
        if (n.is_leaf()) {
            collapsed[node] = n.leaf;
            return;
        }
        scan(n.left);
        scan(n.right);
        const auto a = collapsed[n.left];
        const auto c = collapsed[n.right];
        if (a >= 0 && c >= 0 && eq(p.leaf(static_cast<std::size_t>(a)).payload, p.leaf(static_cast<std::size_t>(c)).payload))
            collapsed[node] = a;
    };
    scan(0);

    KdBuilder<P> b(p.domain());
    std::function<void(std::int32_t, std::int32_t, const Rect&)> emit;
    emit = [&](std::int32_t id, std::int32_t node, const Rect& box) {
        if (collapsed[node] >= 0) {
            b.make_leaf(id, box, p.leaf(static_cast<std::size_t>(collapsed[node])).payload);
            return;
        }
        const KdNode& n = p.nodes()[node];
        auto [l, r] = b.make_split(id, n.dim, n.cut);
        emit(l, n.left, box.below(n.dim, n.cut));
        emit(r, n.right, box.above(n.dim, n.cut));
    };
    emit(b.reserve(), 0, p.domain());
    return std::move(b).finish();
}

struct LeafStats {
    std::size_t leaves = 0;
    double volume = 0.0;
    std::size_t max_payload_size = 0;
    std::size_t total_payload_size = 0;
};

template <class P, class SizeFn>
LeafStats leaf_stats(const KdPartition<P>& p, SizeFn&& size) {
    LeafStats s;
    s.leaves = p.leaf_count();
    double carry = 0.0;  // Neumaier summation keeps the total exact to ~1 ulp
    for (const auto& lf : p.leaves()) {
        const double v = lf.rect.volume();
        const double t = s.volume + v;
        carry += std::abs(s.volume) >= std::abs(v) ? (s.volume - t) + v : (v - t) + s.volume;
        s.volume = t;
        const std::size_t n = size(lf.payload);
        s.max_payload_size = std::max(s.max_payload_size, n);
        s.total_payload_size += n;
    }
    s.volume += carry;
    return s;
}

template <class P>
LeafStats leaf_stats(const KdPartition<P>& p) {
    return leaf_stats(p, [](const P&) -> std::size_t { return 1; });
}

/// Structural self-check: every cut strictly inside its node box, every leaf
/// rect equal to the box implied by its path, volumes summing to the domain
/// volume. Returns human-readable problems (empty when valid).
template <class P>
std::vector<std::string> check_structure(const KdPartition<P>& p) {
    std::vector<std::string> issues;
    std::size_t seen = 0;
    std::function<void(std::int32_t, const Rect&)> rec;
    rec = [&](std::int32_t node, const Rect& box) {
        const KdNode& n = p.nodes()[node];
        if (n.is_leaf()) {
            ++seen;
            if (!(p.leaf(static_cast<std::size_t>(n.leaf)).rect == box))
                issues.push_back("leaf " + std::to_string(n.leaf) + " rect differs from path box " + box.str());
            return;
        }
        if (!(box.low(n.dim) < n.cut && n.cut < box.high(n.dim))) {
            issues.push_back("node " + std::to_string(node) + " cut outside its box " + box.str());
            return;
        }
        rec(n.left, box.below(n.dim, n.cut));
        rec(n.right, box.above(n.dim, n.cut));
    };
    rec(0, p.domain());
    if (seen != p.leaf_count()) issues.push_back("unreachable leaves");
    const double vol = leaf_stats(p).volume;
    if (std::abs(vol - p.domain().volume()) > 1e-12)
        issues.push_back("leaf volumes sum to " + std::to_string(vol));
    return issues;
}

/// Builds a kd-tree from an explicit list of leaves that must tile `domain`.
/// Throws DomainError naming a gap or an overlap otherwise. Leaves that no
/// guillotine cut separates are split, duplicating their payload.
template <class P>
KdPartition<P> partition_from_leaves(const Rect& domain, std::vector<typename KdPartition<P>::Leaf> input) {
    struct Item {
        Rect rect;
        std::size_t src;
    };
    KdBuilder<P> b(domain);
    const int d = domain.dims();

    std::function<void(std::int32_t, const Rect&, std::vector<Item>)> rec;
    rec = [&](std::int32_t id, const Rect& region, std::vector<Item> items) {
        if (items.empty()) throw DomainError("partition leaves leave a gap at " + region.str());
        if (items.size() == 1 && items[0].rect == region) {
            b.make_leaf(id, region, input[items[0].src].payload);
            return;
        }
        // Pick a cut among item faces strictly inside the region: prefer
        // cuts crossing no item, then balance.
        int best_dim = -1;
        double best_at = 0.0;
        std::size_t best_cross = 0, best_balance = 0;
        std::vector<double> lows, highs, faces;
        for (int k = 0; k < d; ++k) {
            lows.clear();
            highs.clear();
            faces.clear();
            for (const auto& it : items) {
                lows.push_back(it.rect.low(k));
                highs.push_back(it.rect.high(k));
                if (region.low(k) < it.rect.low(k)) faces.push_back(it.rect.low(k));
                if (it.rect.high(k) < region.high(k)) faces.push_back(it.rect.high(k));
            }
            std::sort(lows.begin(), lows.end());
            std::sort(highs.begin(), highs.end());
            std::sort(faces.begin(), faces.end());
            faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
            for (double c : faces) {
                const auto below_lo = static_cast<std::size_t>(std::lower_bound(lows.begin(), lows.end(), c) - lows.begin());
                const auto below_hi = static_cast<std::size_t>(std::upper_bound(highs.begin(), highs.end(), c) - highs.begin());
                const std::size_t cross = below_lo - below_hi;
                const std::size_t n_left = below_lo;
                const std::size_t n_right = items.size() - below_hi;
                const std::size_t balance = std::max(n_left, n_right);
                if (best_dim < 0 || cross < best_cross || (cross == best_cross && balance < best_balance)) {
                    best_dim = k;
                    best_at = c;
                    best_cross = cross;
                    best_balance = balance;
                }
            }
        }
        if (best_dim < 0) throw DomainError("partition leaves overlap at " + region.str());
        std::vector<Item> left, right;
        const Rect lbox = region.below(best_dim, best_at);
        const Rect rbox = region.above(best_dim, best_at);
        for (const auto& it : items) {
            if (auto x = it.rect.intersect(lbox)) left.push_back({*x, it.src});
            if (auto x = it.rect.intersect(rbox)) right.push_back({*x, it.src});
        }
        auto [l, r] = b.make_split(id, best_dim, best_at);
        rec(l, lbox, std::move(left));
        rec(r, rbox, std::move(right));
    };

    std::vector<Item> items;
    items.reserve(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i].rect.dims() != d) throw DomainError("partition leaf " + std::to_string(i) + " has wrong dimension");
        auto x = input[i].rect.intersect(domain);
        if (!x || !(*x == input[i].rect))
            throw DomainError("partition leaf " + std::to_string(i) + " extends outside the domain");
        items.push_back({*x, i});
    }
    rec(b.reserve(), domain, std::move(items));
    return std::move(b).finish();
}

} // namespace kdmdp
