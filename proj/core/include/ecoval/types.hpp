#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ecoval {

using Index = std::size_t;
using IndexSet = std::vector<Index>;

// Counters of model-training work. A "run" is one model fit on a distinct
// non-empty subset; repeated requests served from the cache are hits.
struct RunLedger {
  std::size_t training_runs = 0;
  std::size_t cache_hits = 0;

  friend bool operator==(const RunLedger&, const RunLedger&) = default;
};

// Warnings are collected rather than printed so the CLI decides where they go.
using Warnings = std::vector<std::string>;

}  // namespace ecoval
