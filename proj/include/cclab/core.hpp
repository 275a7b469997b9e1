#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cclab {

/// Largest ambient dimension handled (the lifted Heisenberg product lives in R^6).
inline constexpr int kMaxDim = 6;
/// Largest number of fields in an extended frame (2p - m).
inline constexpr int kMaxFields = 16;

// Fixed-capacity dynamic vectors: no heap traffic in the inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Control = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxFields, 1>;
using FieldMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxFields>;
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
  UnsupportedFrame,
  OutOfDomain,
  InvalidParameter,
  ResolutionTooCoarse,
  NoConvergence,
  CoordinateFailure,
  StabilityError,
  DomainTooSmall,
  InsufficientData,
  DegenerateInfimum,
  Diverged,
  DegenerateDenominator,
  ManifestIncomplete,
  ParseError,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

/// Parses "a,b,c" into a vector.
Vec parse_point(const std::string& text);
std::string format_point(const Vec& x);

// ---------------------------------------------------------------------------
// Threading. Work is split into fixed-size chunks so that results never depend
// on how many workers run them.

void set_num_threads(int n);
int num_threads();

/// Calls fn(chunk_begin, chunk_end) for every chunk of [0, n); chunks are
/// distributed over the worker threads. fn must only write disjoint data.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& fn);

template <class F>
void parallel_for(std::size_t n, F&& fn, std::size_t chunk = 256) {
  parallel_chunks(n, chunk, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

// ---------------------------------------------------------------------------
// Randomness. Every stream is derived from (seed, stream id), so batches can
// be generated in any order.

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

using Engine = std::mt19937_64;
Engine make_engine(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0,1) computed directly from (seed, stream, index).
double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// 64-bit FNV-1a, used for config and cache keys.
std::uint64_t fnv1a(const std::string& text);

}  // namespace cclab
