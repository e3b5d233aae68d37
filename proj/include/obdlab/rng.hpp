#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace obdlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn names (scenario, session id) into stream key parts.
inline constexpr std::uint64_t hash_name(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// A stream is identified by a key derived from an arbitrary tuple of
/// integers, e.g. (seed, scenario, replication, patient). Any stream can be
/// regenerated in isolation without replaying the others. Satisfies
/// UniformRandomBitGenerator, so it plugs into <random> distributions.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr StreamRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr StreamRng keyed(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t k = 0x6a09e667f3bcc908ULL;
    for (auto p : parts) k = splitmix64(k ^ splitmix64(p));
    return StreamRng(k);
  }

  /// Child stream; the parent is unaffected.
  [[nodiscard]] constexpr StreamRng split(std::uint64_t tag) const noexcept {
    return StreamRng(splitmix64(key_ ^ splitmix64(tag ^ 0xd1b54a32d192ed03ULL)));
  }

  constexpr result_type operator()() noexcept {
    return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace obdlab
