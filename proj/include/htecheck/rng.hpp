#pragma once

// Counter-based random streams.
//
// A Stream is identified by a 64-bit key and produces the sequence
// mix(key + k * gamma) for k = 0, 1, 2, ...  Substreams are derived from
// (key, index) alone, so any replicate or Monte Carlo run can be regenerated
// independently of how work is scheduled across threads.

#include <cstdint>
#include <span>

#include <boost/math/special_functions/erf.hpp>

namespace htecheck {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Name of the normal variate algorithm, echoed into reports.
inline constexpr const char* kNormalMethod = "inverse-cdf(erfc_inv, splitmix64 uniform)";

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  /// Child stream for `index`; does not advance this stream.
  constexpr Stream split(std::uint64_t index) const noexcept {
    return Stream(detail::mix64(key_ ^ detail::mix64(index + detail::kGolden)));
  }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  constexpr double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by inversion of the CDF.
  double normal() {
    const double u = uniform();
    return -M_SQRT2 * boost::math::erfc_inv(2.0 * u);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stable 64-bit hash for combining grid coordinates into a stream index.
constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return detail::mix64(seed ^ (detail::mix64(value) + detail::kGolden + (seed << 6) + (seed >> 2)));
}

}  // namespace htecheck
