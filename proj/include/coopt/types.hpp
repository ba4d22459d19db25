#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coopt {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public Error {
  using Error::Error;
};
// Binary file format violations (bad magic, truncation, version).
class FormatError : public Error {
  using Error::Error;
};
// Coordinator/participant phase violations and failed rounds.
class ProtocolError : public Error {
  using Error::Error;
};
// Non-finite inputs, ill-posed solves, degenerate numeric preconditions.
class NumericError : public Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

// Dense row-major float matrix. Row-major because every hot path here is
// "apply something to each sample row independently".
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0f) {}

  float& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  float* row(std::size_t i) { return v.data() + i * cols; }
  const float* row(std::size_t i) const { return v.data() + i * cols; }
  std::span<const float> row_span(std::size_t i) const {
    return {v.data() + i * cols, cols};
  }

  bool operator==(const Matrix&) const = default;

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0f;
    return m;
  }

  bool all_finite() const;
};

// ---------------------------------------------------------------------------
// Dataset types
// ---------------------------------------------------------------------------

struct Sample {
  std::uint64_t id = 0;
  std::vector<float> x;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t m = 0;
  // Present only for evaluation and the oracle prior; the optimization
  // pipeline never reads labels.
  std::optional<std::vector<int>> labels;

  std::size_t size() const { return samples.size(); }
};

struct Shard {
  std::uint32_t shard_id = 0;
  std::vector<std::uint64_t> sample_ids;  // strictly increasing
  std::vector<Sample> samples;            // same order as sample_ids

  std::size_t size() const { return samples.size(); }
};

struct TargetSet {
  std::uint32_t shard_id = 0;
  std::size_t n = 0;
  Matrix targets;  // shard_size x n
  bool aligned = false;
};

// Merged (sample, target) pairs ordered by global sample id.
struct OptimizedDataset {
  std::vector<Sample> samples;
  Matrix targets;  // samples.size() x n, row i belongs to samples[i]
  std::size_t n = 0;
};

}  // namespace coopt
