#pragma once

#include <cstdint>
#include <vector>

#include "coopt/types.hpp"

namespace coopt {

// Seeded Fisher-Yates permutation of 0..N-1 split into K contiguous slices;
// the first N % K shards take the extra sample. Within each shard ids are
// re-sorted ascending.
std::vector<Shard> partition(const Dataset& dataset, std::uint32_t k,
                             std::uint64_t seed);

// Concatenation-by-id of K aligned per-shard target sets. Output depends only
// on the {shard_id -> TargetSet} mapping, not on argument order.
OptimizedDataset merge(const std::vector<TargetSet>& target_sets,
                       const Dataset& dataset,
                       const std::vector<Shard>& shards);

}  // namespace coopt
