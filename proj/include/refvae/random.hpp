#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace refvae {

/// Explicitly threaded random source. Every stochastic operation takes one
/// of these; there is no global generator.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : RandomStream({seed}) {}

  /// Independent stream keyed by several integers, e.g. (seed, iteration).
  RandomStream(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    for (auto k : keys) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Uniform integer in [0, n).
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace refvae
