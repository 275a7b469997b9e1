#include "cclab/core.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>
#include <vector>

namespace cclab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedFrame: return "UnsupportedFrame";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::CoordinateFailure: return "CoordinateFailure";
    case ErrorKind::StabilityError: return "StabilityError";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateInfimum: return "DegenerateInfimum";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::ManifestIncomplete: return "ManifestIncomplete";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

Vec parse_point(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::ParseError, "bad coordinate '" + item + "' in '" + text + "'");
    }
  }
  if (values.empty() || values.size() > static_cast<std::size_t>(kMaxDim))
    fail(ErrorKind::ParseError, "point '" + text + "' has unsupported dimension");
  Vec x(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) x[static_cast<int>(i)] = values[i];
  return x;
}

std::string format_point(const Vec& x) {
  std::string out;
  char buf[64];
  for (int i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", x[i]);
    if (i) out += ';';
    out += buf;
  }
  return out;
}

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const int workers = static_cast<int>(std::min<std::size_t>(chunks, g_threads.load()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks || failed) return;
      try {
        fn(c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer applied to a combination of both words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t s = mix_seed(seed, stream);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = mix_seed(mix_seed(seed, stream), index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace cclab
