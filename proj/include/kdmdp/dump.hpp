#pragma once

// Serialization of solver outputs: value and policy dumps (JSON, with
// loaders), per-stage statistics (CSV) and per-leaf partition tables (CSV).
// Reals are written with 17 significant digits, so dumps round-trip exactly.

#include <string>
#include <string_view>
#include <vector>

#include "kdmdp/model.hpp"
#include "kdmdp/solver.hpp"

namespace kdmdp {

std::string format_real(double v);

std::string dump_values(const std::vector<ValueFunction>& values, const HybridMdp& m);
/// Inverse of dump_values; state order follows the document.
std::vector<ValueFunction> load_values(std::string_view text);

std::string dump_policies(const std::vector<Policy>& policies, const HybridMdp& m);
std::vector<Policy> load_policies(std::string_view text, const HybridMdp& m);

/// Columns: stage,state,leaves,vectors,seconds (state by name).
std::string stats_csv(const std::vector<StageStats>& stats, const HybridMdp& m);
std::vector<StageStats> parse_stats_csv(std::string_view text, const HybridMdp& m);

/// One row per leaf: low_0..low_{d-1}, high_0..high_{d-1}, vectors, fns.
/// The fns field lists each function as "c_0 .. c_{d-1} offset", separated by ';'.
std::string leaf_csv(const ValuePartition& p);

} // namespace kdmdp
