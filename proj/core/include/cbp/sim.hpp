#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cbp/model.hpp"

namespace cbp {

struct SimConfig {
  Site start;
  double horizon = 1.0;
  std::vector<double> sample_times;  ///< sorted, within [0, horizon]
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::size_t population_cap = 1'000'000;
  int max_order = 1;
  /// Sites whose local counts are estimated; the total is always included.
  std::vector<Site> sites;
  int workers = 1;
};

struct Snapshot {
  double time = 0.0;
  std::vector<std::pair<Site, std::uint64_t>> occupancy;  ///< sorted by site, zero counts omitted
  std::uint64_t total = 0;
  std::uint64_t births = 0;  ///< offspring produced so far
  std::uint64_t deaths = 0;  ///< particles consumed by branching so far
};

struct ReplicateResult {
  bool truncated = false;
  std::vector<Snapshot> snapshots;  ///< one per sample time; empty when truncated
};

struct MomentEstimate {
  double time = 0.0;
  std::optional<Site> site;  ///< empty for the total population
  int order = 1;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t replicates = 0;
  std::size_t truncated = 0;
};

namespace sim {

/// Throws InvalidArgument on an inconsistent config and InvalidConfig when a
/// branching catalyst has no sampleable offspring law.
void validate(const CbpModel& model, const SimConfig& config);

/// One trajectory; the random stream depends only on (seed, index).
ReplicateResult simulate_replicate(const CbpModel& model, const SimConfig& config, std::size_t index);

/// Sample factorial moments over non-truncated replicates with jackknife
/// standard errors. Rows are ordered by time, then the configured sites
/// followed by the total, then order. Throws AllReplicatesTruncated.
std::vector<MomentEstimate> estimate_moments(const CbpModel& model, const SimConfig& config);

/// Worker count from CBP_WORKERS, falling back to the hardware concurrency.
int default_workers();

}  // namespace sim
}  // namespace cbp
