#pragma once

// Naive value iteration on a uniform grid of r cells per dimension. Every
// quantity is evaluated at cell centers, and a successor reads the value of
// the cell that contains it.

#include <cstddef>
#include <optional>
#include <vector>

#include "kdmdp/model.hpp"
#include "kdmdp/solver.hpp"

namespace kdmdp {

struct GridOptions {
    /// Memory guard: r^d * |S| must not exceed this many cells.
    std::size_t max_cells = std::size_t{1} << 26;
    double time_budget_seconds = 0.0;
    int threads = 1;
    std::optional<int> horizon;
    /// Keep every stage table (true) or only the last one.
    bool keep_stages = true;
};

class GridValues {
public:
    GridValues(int dims, int resolution, std::size_t states);

    int dims() const noexcept { return dims_; }
    int resolution() const noexcept { return resolution_; }
    std::size_t cells() const noexcept { return cells_; }
    std::size_t states() const noexcept { return states_; }

    /// Cell containing x; the top face 1.0 belongs to the last cell.
    std::size_t cell_of(Point x) const;
    std::vector<double> center(std::size_t cell) const;

    /// tables()[k][s * cells() + c]; k indexes the stored stages.
    const std::vector<std::vector<double>>& tables() const noexcept { return tables_; }
    int first_stage() const noexcept { return first_stage_; }
    int last_stage() const noexcept { return first_stage_ + static_cast<int>(tables_.size()) - 1; }

    double value(int stage, int state, Point x) const;
    double cell_value(int stage, int state, std::size_t cell) const;

private:
    friend struct GridResult grid_value_iteration(const HybridMdp&, int, const GridOptions&);
    int dims_;
    int resolution_;
    std::size_t cells_;
    std::size_t states_;
    int first_stage_ = 0;
    std::vector<std::vector<double>> tables_;
};

struct GridResult {
    GridValues values;
    std::vector<StageStats> stats;  // leaves = vectors = cell count
    double seconds = 0.0;
};

/// Throws ResourceCapError(memory) when the grid exceeds max_cells and
/// ResourceCapError(time) when the budget runs out.
GridResult grid_value_iteration(const HybridMdp& m, int resolution, const GridOptions& opts = {});

} // namespace kdmdp
