#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "coopt/types.hpp"

namespace coopt {

// Shared-set target files reuse the CPTT layout with this sentinel shard id.
inline constexpr std::uint32_t kSharedSetShardId = 0xFFFFFFFFu;

// CPTD: "CPTD", version u16=1, shard_id u32, count u32, dim u32,
//       count*dim little-endian f32 row-major, count little-endian u64 ids.
void write_shard(std::ostream& os, const Shard& shard, std::uint32_t dim);
Shard read_shard(std::istream& is);
void write_shard_file(const std::string& path, const Shard& shard,
                      std::uint32_t dim);
Shard read_shard_file(const std::string& path);

// CPTT: "CPTT", version u16=1, shard_id u32, aligned u8, count u32, dim u32,
//       count*dim little-endian f32 row-major.
void write_targets(std::ostream& os, const TargetSet& ts);
TargetSet read_targets(std::istream& is);
void write_targets_file(const std::string& path, const TargetSet& ts);
TargetSet read_targets_file(const std::string& path);

// FNV-1a 64-bit content digests, used for shared-set hashes and run manifests.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t digest_matrix(const Matrix& m);
std::uint64_t digest_samples(std::span<const Sample> samples);
std::uint64_t digest_file(const std::string& path);
std::string digest_hex(std::uint64_t d);

}  // namespace coopt
