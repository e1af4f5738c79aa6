#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedgan {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for a named sub-stream, e.g. derive_seed(master, {agent_id}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

/// Stream tags so that derived seeds for different purposes never collide.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kData = 3;
inline constexpr std::uint64_t kPartition = 4;
inline constexpr std::uint64_t kHoldout = 5;
inline constexpr std::uint64_t kReplay = 6;
inline constexpr std::uint64_t kProbe = 7;
inline constexpr std::uint64_t kOracle = 8;
inline constexpr std::uint64_t kMetrics = 9;
}  // namespace stream

}  // namespace fedgan
