#pragma once

// Piecewise-linear convex functions over a box, stored as the finite set of
// affine functions whose pointwise maximum they are.

#include <cstddef>
#include <vector>

#include "kdmdp/geometry.hpp"

namespace kdmdp {

/// x -> coeffs . x + offset
struct LinearFn {
    std::vector<double> coeffs;
    double offset = 0.0;

    double operator()(Point x) const noexcept {
        double v = offset;
        for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * x[i];
        return v;
    }
};

inline constexpr double kDefaultPruneTol = 1e-9;
inline constexpr double kDuplicateTol = 1e-12;

/// Nonempty set of affine functions over R^d, read as their pointwise max.
/// Storage is flat: (coeffs..., offset) per member.
class PwlcSet {
public:
    PwlcSet(int dims, const std::vector<LinearFn>& fns);

    static PwlcSet constant(int dims, double value);
    static PwlcSet zero(int dims) { return constant(dims, 0.0); }

    int dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size() / stride(); }

    Point coeffs(std::size_t i) const noexcept { return {data_.data() + i * stride(), static_cast<std::size_t>(dims_)}; }
    double offset(std::size_t i) const noexcept { return data_[i * stride() + static_cast<std::size_t>(dims_)]; }
    LinearFn fn(std::size_t i) const;
    std::vector<LinearFn> fns() const;

    double value(std::size_t i, Point x) const noexcept {
        const double* f = data_.data() + i * stride();
        double v = f[dims_];
        for (int k = 0; k < dims_; ++k) v += f[k] * x[k];
        return v;
    }

    /// True when every member has an all-zero gradient.
    bool is_constant() const noexcept;

    /// Members listed by index, in order.
    PwlcSet subset(const std::vector<std::size_t>& indices) const;

    /// Raw (coeffs..., offset) storage.
    const std::vector<double>& raw() const noexcept { return data_; }

    friend bool operator==(const PwlcSet& a, const PwlcSet& b) noexcept {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

private:
    PwlcSet(int dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {}
    std::size_t stride() const noexcept { return static_cast<std::size_t>(dims_) + 1; }

    int dims_;
    std::vector<double> data_;

    friend PwlcSet cross_sum(const PwlcSet&, const PwlcSet&);
    friend PwlcSet concat(const PwlcSet&, const PwlcSet&);
    friend PwlcSet scale(const PwlcSet&, double);
    friend PwlcSet pull_back(const PwlcSet&, Point);
};

struct EvalResult {
    double value;
    std::size_t index; // lowest index attaining the max
};

EvalResult eval(const PwlcSet& s, Point x);

/// {a_i + b_j}: pointwise sum. Member order is a-major.
PwlcSet cross_sum(const PwlcSet& a, const PwlcSet& b);

/// a followed by b, no deduplication.
PwlcSet concat(const PwlcSet& a, const PwlcSet& b);

/// a U b with members of b that duplicate an earlier member dropped:
/// pointwise max.
PwlcSet union_max(const PwlcSet& a, const PwlcSet& b);

/// c * s for c >= 0. Throws DomainError for negative c. c == 0 yields the
/// constant-zero set.
PwlcSet scale(const PwlcSet& s, double c);

/// The set representing x -> s(x + delta), i.e. offsets absorb coeffs . delta.
PwlcSet pull_back(const PwlcSet& s, Point delta);

/// Minimum of l1 - l2 over the box `r`, in closed form.
double min_difference(const LinearFn& l1, const LinearFn& l2, const Rect& r);

/// True iff l1(x) >= l2(x) - tol for every x in r.
bool pointwise_dominates(const LinearFn& l1, const LinearFn& l2, const Rect& r, double tol = 0.0);

/// Indices (ascending) of the members kept by prune.
std::vector<std::size_t> prune_indices(const PwlcSet& s, const Rect& r, double tol = kDefaultPruneTol);

/// Removes members that never exceed the others by more than `tol` inside r.
/// The result is a subset of s in original order, agrees with s within tol
/// everywhere in r, and every survivor wins some witness LP by more than tol.
PwlcSet prune(const PwlcSet& s, const Rect& r, double tol = kDefaultPruneTol);

/// Same size and member-wise equal within tol, in order.
bool approx_equal(const PwlcSet& a, const PwlcSet& b, double tol = kDuplicateTol) noexcept;

} // namespace kdmdp
