#pragma once

#include "wavescat/grid.hpp"
#include "wavescat/signal_model.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wavescat {

// Row-aligned features and labels for a set of segments.
struct FeatureTable {
  Grid<double> features; // rows = segments
  std::vector<std::string> columns;
  std::vector<SegmentLabels> labels;
  std::vector<std::string> ratIds;
};

// CSV: optional `# wavescat-config:` line, header of feature column names
// followed by rat,group,phase,channel,chamber; values printed with 17
// significant digits so they parse back bit-exactly.
void write_feature_csv(std::ostream &out, const FeatureTable &table, std::string_view metadata);
FeatureTable read_feature_csv(std::istream &in);

// Run `fn(i)` for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Each index is processed exactly once; callers write results
// into preallocated slots, so output order never depends on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &fn);

} // namespace wavescat
