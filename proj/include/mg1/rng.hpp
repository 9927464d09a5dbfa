#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mg1 {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic random stream.  Substreams are keyed by (seed, index) so a
// single regeneration cycle can be replayed in isolation and a batch can be
// sharded across workers without the results depending on the sharding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(detail::splitmix64(seed)) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t mixed = detail::splitmix64(
        detail::splitmix64(seed) ^
        (index * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull));
    return Rng(raw_tag{}, mixed);
  }

  // Uniform on the open interval (0,1): 53 random bits centered in the cell,
  // so 0 and 1 are unreachable and -log(u) is always finite.
  double u01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double exp_time(double rate) { return -std::log(u01()) / rate; }

  std::uint64_t raw() { return gen_(); }

 private:
  struct raw_tag {};
  Rng(raw_tag, std::uint64_t state) : gen_(state) {}
  std::mt19937_64 gen_;
};

}  // namespace mg1
