#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hetfuse {

/// Error type for all user-facing failures: bad input data, shape
/// mismatches, numerical breakdown. The message carries the context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

/// Derives an independent substream seed from a master seed (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a, for deriving per-source seeds from text labels.
std::uint64_t hash_label(const std::string& s);

/// Deterministic RNG. Uniform and normal draws are built from raw
/// mt19937_64 output so streams do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  /// Uniform in {0, ..., n-1} without modulo bias.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Thread cap from HETFUSE_THREADS; 0 or unset means hardware concurrency.
int thread_budget();

/// Runs fn(i) for i in [0, n). Items must be independent and results must
/// not depend on execution order. The first exception thrown by an item is
/// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

/// Exact inverse of format_double; throws on malformed input.
double parse_double(const std::string& s);

}  // namespace hetfuse
