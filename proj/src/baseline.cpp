#include "kdmdp/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"

namespace kdmdp {

GridValues::GridValues(int dims, int resolution, std::size_t states)
    : dims_(dims), resolution_(resolution), cells_(1), states_(states) {
    if (dims < 1 || dims > kMaxDims) throw DomainError("grid: dims out of range");
    if (resolution < 1) throw DomainError("grid: resolution must be >= 1");
    for (int i = 0; i < dims; ++i) cells_ *= static_cast<std::size_t>(resolution);
}

std::size_t GridValues::cell_of(Point x) const {
    if (static_cast<int>(x.size()) != dims_) throw DomainError("grid: point dimension mismatch");
    std::size_t idx = 0;
    for (int k = dims_ - 1; k >= 0; --k) {
        const double v = x[static_cast<std::size_t>(k)];
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("grid: point outside the unit cube");
        auto i = static_cast<std::size_t>(std::floor(v * resolution_));
        i = std::min(i, static_cast<std::size_t>(resolution_ - 1));
        idx = idx * static_cast<std::size_t>(resolution_) + i;
    }
    return idx;
}

std::vector<double> GridValues::center(std::size_t cell) const {
    std::vector<double> c(static_cast<std::size_t>(dims_));
    for (int k = 0; k < dims_; ++k) {
        const auto i = cell % static_cast<std::size_t>(resolution_);
        cell /= static_cast<std::size_t>(resolution_);
        c[static_cast<std::size_t>(k)] = (static_cast<double>(i) + 0.5) / resolution_;
    }
    return c;
}

double GridValues::cell_value(int stage, int state, std::size_t cell) const {
    if (stage < first_stage_ || stage > last_stage()) throw DomainError("grid: stage not stored");
    if (state < 0 || static_cast<std::size_t>(state) >= states_) throw DomainError("grid: unknown discrete state");
    return tables_[static_cast<std::size_t>(stage - first_stage_)][static_cast<std::size_t>(state) * cells_ + cell];
}

double GridValues::value(int stage, int state, Point x) const { return cell_value(stage, state, cell_of(x)); }

namespace {

/// Successor cell for landing point y, or npos when y leaves the cube.
std::size_t landing_cell(const GridValues& g, std::span<const double> y) {
    for (double v : y)
        if (!(v >= 0.0 && v <= 1.0)) return std::numeric_limits<std::size_t>::max();
    return g.cell_of(y);
}

} // namespace

GridResult grid_value_iteration(const HybridMdp& m, int resolution, const GridOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const int horizon = opts.horizon.value_or(m.horizon);
    if (horizon < 0) throw DomainError("grid_value_iteration: negative horizon");
    GridValues g(m.dims, resolution, m.discrete_states.size());
    const std::size_t total = g.cells() * g.states();
    if (g.cells() > opts.max_cells / std::max<std::size_t>(g.states(), 1))
        throw ResourceCapError(ResourceCapError::Kind::memory, "grid of " + std::to_string(g.cells()) + " cells x " +
                                                                   std::to_string(g.states()) + " states exceeds the cap of " +
                                                                   std::to_string(opts.max_cells) + " cells");
    const Deadline deadline(opts.time_budget_seconds);
    const auto dn = static_cast<std::size_t>(m.dims);
    const std::size_t ns = g.states();

    std::vector<std::vector<const ModelEntry*>> by_state(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        by_state[s] = m.entries_for(static_cast<int>(s));
        if (by_state[s].empty()) throw ModelError("no applicable action in discrete state '" + m.discrete_states[s] + "'");
    }

    GridResult res{std::move(g), {}, 0.0};
    GridValues& gv = res.values;
    gv.tables_.emplace_back(total, 0.0);
    for (std::size_t s = 0; s < ns; ++s) res.stats.push_back({0, static_cast<int>(s), gv.cells(), gv.cells(), 0.0});

    const std::size_t chunk = 4096;
    for (int k = 0; k < horizon; ++k) {
        const auto ts = std::chrono::steady_clock::now();
        const std::vector<double>& prev = gv.tables_.back();
        std::vector<double> next(total);
        const std::size_t nchunks = (gv.cells() + chunk - 1) / chunk;
        detail::parallel_for(ns * nchunks, opts.threads, [&](std::size_t job) {
            deadline.check();
            const std::size_t s = job / nchunks;
            const std::size_t lo = (job % nchunks) * chunk;
            const std::size_t hi = std::min(gv.cells(), lo + chunk);
            std::vector<double> y(dn);
            for (std::size_t c = lo; c < hi; ++c) {
                const std::vector<double> x = gv.center(c);
                double best = -std::numeric_limits<double>::infinity();
                for (const ModelEntry* e : by_state[s]) {
                    double q = eval(e->reward.locate(x).payload, x).value;
                    for (const auto& [s2, ps] : e->discrete.locate(x).payload.successors) {
                        const OutcomeSet& os = e->continuous.at(s2).locate(x).payload;
                        double ev = 0.0;
                        for (const auto& o : os.outcomes) {
                            for (std::size_t i = 0; i < dn; ++i) y[i] = o.kind == OutcomeKind::relative ? x[i] + o.target[i] : o.target[i];
                            const std::size_t cell = landing_cell(gv, y);
                            ev += o.prob * (cell == std::numeric_limits<std::size_t>::max() ? m.out_of_bounds_value
                                                                                             : prev[static_cast<std::size_t>(s2) * gv.cells() + cell]);
                        }
                        q += ps * ev;
                    }
                    best = std::max(best, q);
                }
                next[s * gv.cells() + c] = best;
            }
        });
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
        for (std::size_t s = 0; s < ns; ++s) res.stats.push_back({k + 1, static_cast<int>(s), gv.cells(), gv.cells(), secs / static_cast<double>(ns)});
        if (opts.keep_stages) {
            gv.tables_.push_back(std::move(next));
        } else {
            gv.tables_.back() = std::move(next);
            gv.first_stage_ = k + 1;
        }
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace kdmdp
