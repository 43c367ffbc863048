#pragma once

// Small shared helpers: stable hashing, a platform-independent RNG facade,
// and order statistics used across preprocessing, splitting and evaluation.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vpg {

// --- hashing --------------------------------------------------------------

/// FNV-1a over raw bytes. Used for content checksums and manifest hashes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// SplitMix64 finalizer; the mixing function behind fingerprint hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed,
                                     std::uint64_t value) noexcept {
  return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::string hex64(std::uint64_t value);

// --- random numbers ---------------------------------------------------------

/// mt19937_64 with hand-written conversions so that draws do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// --- statistics -------------------------------------------------------------

double mean(std::span<const double> xs);
/// Population standard deviation (n denominator).
double population_std(std::span<const double> xs);
/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
double sample_std(std::span<const double> xs);

/// Quantile by linear interpolation between order statistics: with sorted
/// values x_0..x_{n-1}, h = (n-1)p and Q(p) = x_floor(h) + frac(h)(x_ceil(h) - x_floor(h)).
double quantile(std::span<const double> xs, double p);
double quantile_sorted(std::span<const double> sorted, double p);
double median(std::span<const double> xs);
/// Median absolute deviation around the median (unscaled).
double mad(std::span<const double> xs);

// --- strings ----------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace vpg
