#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace metakg {

// Deterministic 64-bit stream (splitmix64). Distributions are implemented
// here rather than with <random> adaptors so that sequences are identical
// across standard libraries.
class RngStream {
 public:
  explicit RngStream(uint64_t state) : state_(state) {}

  uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // Box-Muller, one draw per call
  int64_t uniform_int(int64_t n);         // unbiased in [0, n)

  // Deterministic sample of k distinct indices from [0, n), order arbitrary
  // but reproducible.
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      int64_t j = uniform_int(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

 private:
  uint64_t state_;
};

// Streams are derived from (seed, tag, salt) so every stochastic choice in the
// system is independently reproducible.
RngStream derive_stream(uint64_t seed, std::string_view tag, uint64_t salt = 0);

uint64_t fnv1a64(std::string_view s);

}  // namespace metakg
