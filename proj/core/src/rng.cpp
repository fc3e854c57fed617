#include "metakg/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metakg {

namespace {
uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
  // top 53 bits -> double in [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int64_t RngStream::uniform_int(int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return static_cast<int64_t>(v % un);
}

std::vector<int64_t> RngStream::sample_without_replacement(int64_t n, int64_t k) {
  if (k > n || k < 0) throw std::invalid_argument("sample_without_replacement: k out of range");
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  // partial Fisher-Yates: first k slots are the sample
  for (int64_t i = 0; i < k; ++i) {
    int64_t j = i + uniform_int(n - i);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RngStream derive_stream(uint64_t seed, std::string_view tag, uint64_t salt) {
  uint64_t x = seed;
  uint64_t a = splitmix64(x);
  x = a ^ fnv1a64(tag);
  uint64_t b = splitmix64(x);
  x = b ^ (salt * 0x9e3779b97f4a7c15ULL + 0x85ebca6bULL);
  uint64_t c = splitmix64(x);
  return RngStream(c);
}

}  // namespace metakg
