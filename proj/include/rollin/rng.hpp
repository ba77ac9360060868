#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace rollin {

/// Random stream identified by a master seed plus a path of integer labels
/// (e.g. gradient step, trajectory index). The same (seed, labels) always
/// yields the same draws, independent of which thread consumes it.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels = {})
      : seed_(master_seed), labels_(labels) {
    reseed();
  }

  RngStream(std::uint64_t master_seed, std::span<const std::uint64_t> labels)
      : seed_(master_seed), labels_(labels.begin(), labels.end()) {
    reseed();
  }

  /// Independent child stream with one more label appended.
  RngStream derive(std::uint64_t label) const {
    std::vector<std::uint64_t> labels = labels_;
    labels.push_back(label);
    return RngStream(seed_, labels);
  }

  RngStream derive(std::initializer_list<std::uint64_t> more) const {
    std::vector<std::uint64_t> labels = labels_;
    labels.insert(labels.end(), more.begin(), more.end());
    return RngStream(seed_, labels);
  }

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& labels() const { return labels_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_positive() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

 private:
  void reseed() {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * labels_.size() + 1);
    auto push = [&](std::uint64_t v) {
      words.push_back(static_cast<std::uint32_t>(v));
      words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed_);
    words.push_back(static_cast<std::uint32_t>(labels_.size()));
    for (auto l : labels_) push(l);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    engine_.seed((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
  }

  std::uint64_t seed_;
  std::vector<std::uint64_t> labels_;
  std::mt19937_64 engine_;
};

}  // namespace rollin
