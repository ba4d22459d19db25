#include "coopt/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "coopt/wire.hpp"

namespace coopt {

using wire::get_f32;
using wire::get_le;
using wire::put_f32;
using wire::put_le;

namespace {

void expect_magic(std::istream& is, const char* magic) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
}

void expect_version(std::istream& is) {
  const auto version = get_le<std::uint16_t>(is);
  if (version != 1)
    throw FormatError("unsupported version " + std::to_string(version));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return is;
}

}  // namespace

void write_shard(std::ostream& os, const Shard& shard, std::uint32_t dim) {
  os.write("CPTD", 4);
  put_le<std::uint16_t>(os, 1);
  put_le<std::uint32_t>(os, shard.shard_id);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(shard.size()));
  put_le<std::uint32_t>(os, dim);
  for (const Sample& s : shard.samples) {
    if (s.x.size() != dim)
      throw FormatError("write_shard: sample dimension mismatch");
    for (float f : s.x) put_f32(os, f);
  }
  for (std::uint64_t id : shard.sample_ids) put_le<std::uint64_t>(os, id);
}

Shard read_shard(std::istream& is) {
  expect_magic(is, "CPTD");
  expect_version(is);
  Shard shard;
  shard.shard_id = get_le<std::uint32_t>(is);
  const auto count = get_le<std::uint32_t>(is);
  const auto dim = get_le<std::uint32_t>(is);
  shard.samples.resize(count);
  for (auto& s : shard.samples) {
    s.x.resize(dim);
    for (float& f : s.x) f = get_f32(is);
  }
  shard.sample_ids.resize(count);
  for (auto& id : shard.sample_ids) id = get_le<std::uint64_t>(is);
  for (std::size_t i = 0; i < count; ++i)
    shard.samples[i].id = shard.sample_ids[i];
  return shard;
}

void write_targets(std::ostream& os, const TargetSet& ts) {
  os.write("CPTT", 4);
  put_le<std::uint16_t>(os, 1);
  put_le<std::uint32_t>(os, ts.shard_id);
  put_le<std::uint8_t>(os, ts.aligned ? 1 : 0);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.targets.rows));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n));
  for (float f : ts.targets.v) put_f32(os, f);
}

TargetSet read_targets(std::istream& is) {
  expect_magic(is, "CPTT");
  expect_version(is);
  TargetSet ts;
  ts.shard_id = get_le<std::uint32_t>(is);
  const auto aligned = get_le<std::uint8_t>(is);
  if (aligned > 1) throw FormatError("bad aligned flag");
  ts.aligned = aligned == 1;
  const auto count = get_le<std::uint32_t>(is);
  const auto dim = get_le<std::uint32_t>(is);
  ts.n = dim;
  ts.targets = Matrix(count, dim);
  for (float& f : ts.targets.v) f = get_f32(is);
  return ts;
}

void write_shard_file(const std::string& path, const Shard& shard,
                      std::uint32_t dim) {
  auto os = open_out(path);
  write_shard(os, shard, dim);
}

Shard read_shard_file(const std::string& path) {
  auto is = open_in(path);
  return read_shard(is);
}

void write_targets_file(const std::string& path, const TargetSet& ts) {
  auto os = open_out(path);
  write_targets(os, ts);
}

TargetSet read_targets_file(const std::string& path) {
  auto is = open_in(path);
  return read_targets(is);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t digest_matrix(const Matrix& m) {
  std::ostringstream os(std::ios::binary);
  put_le<std::uint64_t>(os, m.rows);
  put_le<std::uint64_t>(os, m.cols);
  for (float f : m.v) put_f32(os, f);
  const std::string s = os.str();
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::uint64_t digest_samples(std::span<const Sample> samples) {
  std::ostringstream os(std::ios::binary);
  for (const Sample& s : samples) {
    put_le<std::uint64_t>(os, s.id);
    for (float f : s.x) put_f32(os, f);
  }
  const std::string str = os.str();
  return fnv1a64(
      {reinterpret_cast<const std::uint8_t*>(str.data()), str.size()});
}

std::uint64_t digest_file(const std::string& path) {
  auto is = open_in(path);
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string s = buf.str();
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(d));
  return buf;
}

}  // namespace coopt
