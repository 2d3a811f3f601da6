#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace berrygrip {

// Deterministic stream RNG. Streams are addressed by (seed, stream id) so that
// independently seeded consumers (trials, fingers) draw identical sequences no
// matter how work is scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    for (auto& w : s_) w = splitmix64(sm);
    if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the polar (Marsaglia) method; second deviate cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double gaussian(double mean, double std_dev) { return mean + std_dev * gaussian(); }

  // Truncated normal by rejection. std_dev == 0 degenerates to the mean.
  double truncated_normal(double mean, double std_dev, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("truncated_normal: lo > hi");
    if (std_dev < 0.0) throw std::invalid_argument("truncated_normal: negative std dev");
    if (std_dev == 0.0) {
      if (mean < lo || mean > hi)
        throw std::invalid_argument("truncated_normal: zero-spread mean outside bounds");
      return mean;
    }
    for (int i = 0; i < 100000; ++i) {
      const double x = gaussian(mean, std_dev);
      if (x >= lo && x <= hi) return x;
    }
    throw std::runtime_error("truncated_normal: bounds admit no practical mass");
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace berrygrip
