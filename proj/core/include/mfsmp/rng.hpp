#pragma once

#include <cstdint>

namespace mfsmp {

// Counter-based random streams: every draw is a pure function of
// (seed, stream, step, channel), so results do not depend on scheduling
// or worker count.
namespace rng {

/// 64-bit mix of a key tuple (SplitMix64 finalizer over a combined counter).
std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                  std::uint64_t channel);

/// Uniform draw in (0, 1), never exactly 0 or 1.
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
               std::uint64_t channel);

/// Standard normal draw keyed by the counter tuple (Box-Muller).
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
              std::uint64_t channel);

/// Derive a child seed, e.g. one seed per optimizer iteration.
std::uint64_t derive(std::uint64_t seed, std::uint64_t salt);

}  // namespace rng
}  // namespace mfsmp
