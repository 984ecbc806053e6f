#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace osb {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over the bytes of `text`. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view text);

// Independent child seed for a named or numbered stream of `base`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

std::string hex64(std::uint64_t value);

}  // namespace osb
