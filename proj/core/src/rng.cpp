#include "mfsmp/rng.hpp"

#include <cmath>

namespace mfsmp::rng {

namespace {

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                  std::uint64_t channel) {
  std::uint64_t z = splitmix(seed);
  z = splitmix(z ^ (stream + 0x632be59bd9b4e019ULL));
  z = splitmix(z ^ (step + 0x9e6c63d0876a9a47ULL));
  z = splitmix(z ^ (channel + 0xd1b54a32d192ed03ULL));
  return z;
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
               std::uint64_t channel) {
  const std::uint64_t z = mix(seed, stream, step, channel);
  // 53-bit mantissa, shifted into (0, 1).
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
              std::uint64_t channel) {
  const double u1 = uniform(seed, stream, step, 2 * channel);
  const double u2 = uniform(seed, stream, step, 2 * channel + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  return mix(seed, salt, 0x5eedULL, 0);
}

}  // namespace mfsmp::rng
