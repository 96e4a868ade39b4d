#pragma once

#include <cstddef>
#include <vector>

#include "kdmdp/geometry.hpp"

namespace kdmdp {

/// maximize m  subject to  g_k . x + c_k >= m  for every row k,  low <= x <= high.
///
/// This is the dominance witness query: with rows l - l' for every competitor
/// l', a positive optimum means l is strictly best somewhere in the box.
class WitnessLp {
public:
    WitnessLp(Point low, Point high);
    explicit WitnessLp(const Rect& box) : WitnessLp(box.lows(), box.highs()) {}

    void add_row(Point gradient, double offset);
    void clear_rows() { data_.clear(); }

    int dims() const noexcept { return dims_; }
    std::size_t rows() const noexcept { return data_.size() / static_cast<std::size_t>(dims_ + 1); }
    Point low() const noexcept { return low_; }
    Point high() const noexcept { return high_; }
    Point gradient(std::size_t k) const noexcept {
        return {data_.data() + k * static_cast<std::size_t>(dims_ + 1), static_cast<std::size_t>(dims_)};
    }
    double offset(std::size_t k) const noexcept {
        return data_[k * static_cast<std::size_t>(dims_ + 1) + static_cast<std::size_t>(dims_)];
    }

private:
    int dims_;
    std::vector<double> low_, high_;
    std::vector<double> data_; // rows of (gradient..., offset)
};

enum class LpStatus { optimal, unbounded_guard };

struct WitnessSolution {
    LpStatus status = LpStatus::optimal;
    double margin = 0.0;
    std::vector<double> point;
    int iterations = 0;
};

inline constexpr double kPivotTol = 1e-10;
inline constexpr int kMaxSimplexIterations = 10000;

/// Bounded-variable primal simplex on a dense tableau with Bland's rule.
/// The returned margin is recomputed from the returned point, so every row
/// holds exactly at (point, margin). Throws NumericalError when the
/// iteration cap is hit or the solution fails its post-check, DomainError on
/// an LP without rows.
WitnessSolution solve_witness(const WitnessLp& lp);

} // namespace kdmdp
