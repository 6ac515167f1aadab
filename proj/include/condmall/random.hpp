#ifndef CONDMALL_RANDOM_HPP
#define CONDMALL_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace condmall {

// splitmix64 finalizer, used to derive child stream identifiers.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// A reproducible random stream identified by (seed, stream id). Streams with
// distinct ids are seeded independently, so work split into blocks gives the
// same numbers regardless of how blocks are assigned to threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  RandomStream split(std::uint64_t index) const {
    return RandomStream(seed_, mix64(stream_ ^ mix64(index + 1)));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Box-Muller, one draw per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename Derived>
  Eigen::Index categorical(const Eigen::DenseBase<Derived>& probs) {
    double u = uniform();
    double acc = 0.0;
    Eigen::Index last = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      double w = static_cast<double>(probs(i));
      if (w <= 0.0) continue;
      acc += w;
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace condmall

#endif  // CONDMALL_RANDOM_HPP
