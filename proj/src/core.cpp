#include "coopt/core.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <numeric>
#include <set>

#include "coopt/rng.hpp"

namespace coopt {

std::vector<Shard> partition(const Dataset& dataset, std::uint32_t k,
                             std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (k == 0 || k > n)
    throw ConfigError("partition: K must satisfy 1 <= K <= N (K=" +
                      std::to_string(k) + ", N=" + std::to_string(n) + ")");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.next_below(n - i);
    std::swap(perm[i], perm[j]);
  }

  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<Shard> shards;
  shards.reserve(k);
  std::size_t pos = 0;
  for (std::uint32_t s = 0; s < k; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    std::vector<std::size_t> idx(perm.begin() + pos, perm.begin() + pos + len);
    pos += len;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dataset.samples[a].id < dataset.samples[b].id;
    });
    Shard shard;
    shard.shard_id = s;
    shard.sample_ids.reserve(len);
    shard.samples.reserve(len);
    for (std::size_t i : idx) {
      shard.sample_ids.push_back(dataset.samples[i].id);
      shard.samples.push_back(dataset.samples[i]);
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

OptimizedDataset merge(const std::vector<TargetSet>& target_sets,
                       const Dataset& dataset,
                       const std::vector<Shard>& shards) {
  if (target_sets.size() != shards.size())
    throw ProtocolError("merge: " + std::to_string(target_sets.size()) +
                        " target sets for " + std::to_string(shards.size()) +
                        " shards");

  std::map<std::uint32_t, const TargetSet*> by_id;
  for (const TargetSet& ts : target_sets) {
    if (!by_id.emplace(ts.shard_id, &ts).second)
      throw ProtocolError("merge: duplicate shard_id " +
                          std::to_string(ts.shard_id));
  }

  std::size_t n_dim = 0;
  std::set<std::uint64_t> seen_ids;
  for (const Shard& shard : shards) {
    auto it = by_id.find(shard.shard_id);
    if (it == by_id.end())
      throw ProtocolError("merge: missing target set for shard " +
                          std::to_string(shard.shard_id));
    const TargetSet& ts = *it->second;
    if (!ts.aligned)
      throw ProtocolError("merge: shard " + std::to_string(shard.shard_id) +
                          " is not aligned");
    if (ts.targets.rows != shard.size())
      throw ProtocolError("merge: shard " + std::to_string(shard.shard_id) +
                          " row count mismatch");
    if (n_dim == 0) n_dim = ts.n;
    if (ts.n != n_dim || ts.targets.cols != n_dim)
      throw ProtocolError("merge: shard " + std::to_string(shard.shard_id) +
                          " target dimension mismatch");
    for (std::uint64_t id : shard.sample_ids)
      if (!seen_ids.insert(id).second)
        throw ProtocolError("merge: sample id " + std::to_string(id) +
                            " appears in more than one shard");
  }
  if (seen_ids.size() != dataset.size())
    throw ProtocolError("merge: shards do not cover the dataset");

  // (id, shard, row-in-shard), sorted by global id.
  std::vector<std::tuple<std::uint64_t, const Shard*, std::size_t>> order;
  order.reserve(dataset.size());
  for (const Shard& shard : shards)
    for (std::size_t r = 0; r < shard.size(); ++r)
      order.emplace_back(shard.sample_ids[r], &shard, r);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) {
              return std::get<0>(a) < std::get<0>(b);
            });

  OptimizedDataset out;
  out.n = n_dim;
  out.samples.reserve(order.size());
  out.targets = Matrix(order.size(), n_dim);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [id, shard, r] = order[i];
    out.samples.push_back(shard->samples[r]);
    const TargetSet& ts = *by_id.at(shard->shard_id);
    std::memcpy(out.targets.row(i), ts.targets.row(r), n_dim * sizeof(float));
  }
  return out;
}

}  // namespace coopt
