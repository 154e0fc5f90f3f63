#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ndb {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Used only for seed mixing.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a substream seed from a parent seed and a stream index.
// mix_seed(master, rep) gives the repetition seed; mix_seed(rep_seed, tag)
// gives one of the per-repetition streams below.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Fixed stream tags. New consumers get new tags so existing streams never
// shift when diagnostics are added.
enum class StreamTag : std::uint64_t {
  environment = 1,  // contexts, theta*, feedback draws
  network_init = 2, // symmetric initialization
  policy = 3,       // TS sampling, random baseline
};

// Deterministic random stream: mt19937_64 with explicit double conversion,
// so traces are bit-reproducible on a given build.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; one value per pair of uniforms.
  double normal() {
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n) by rejection, n >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

// Per-repetition bundle of independent streams.
struct StreamSet {
  RandomStream environment;
  RandomStream network_init;
  RandomStream policy;

  static StreamSet for_repetition(std::uint64_t master_seed, std::uint64_t rep) {
    const std::uint64_t rep_seed = mix_seed(master_seed, rep);
    return StreamSet{
        RandomStream(mix_seed(rep_seed, static_cast<std::uint64_t>(StreamTag::environment))),
        RandomStream(mix_seed(rep_seed, static_cast<std::uint64_t>(StreamTag::network_init))),
        RandomStream(mix_seed(rep_seed, static_cast<std::uint64_t>(StreamTag::policy)))};
  }
};

}  // namespace ndb
