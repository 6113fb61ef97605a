#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace nelson {

/// Worker count from NELSON_WORKERS (default 1, minimum 1).
std::size_t default_workers();

/// Seed from NELSON_SEED, or `fallback` when unset or malformed.
std::uint64_t default_seed(std::uint64_t fallback);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Items are assigned
/// round-robin; fn must only write to item-owned state.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// SplitMix64 finalizer, used to derive per-chunk seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace nelson
