#ifndef MABICAP_RNG_HPP_
#define MABICAP_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mabicap {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is fully specified by the standard); the value mappings are done
// here because the std distributions are implementation-defined and would
// break bit-exact checkpoint resume across toolchains.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps the mapping unbiased
  // and independent of the engine's word size.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; one value per call, no caching, so the
  // stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string save_state() const;
  void load_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mabicap

#endif  // MABICAP_RNG_HPP_
