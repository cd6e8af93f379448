#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mrlab/rng.hpp"

namespace mrlab::parallel {

/// Worker count used by every Monte Carlo reduction. Defaults to 1; the CLI
/// sets it from --workers.
unsigned workers();
void set_workers(unsigned n);

/// Runs fn(i) for i in [0, count) across the configured workers. Order of
/// execution is unspecified; fn must only write to slot i of its outputs.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Replicas are grouped in fixed-size blocks independent of the worker count.
inline constexpr std::size_t kBlockSize = 512;

/// Map-reduce over replicas. Each replica gets its own derived generator;
/// blocks accumulate sequentially and block results merge pairwise in index
/// order, so the result is bit-identical for any worker count.
///
/// Acc must be copyable and provide `void merge(const Acc&)`.
/// body(Rng&, std::size_t replica, Acc&) adds one replica's contribution.
template <class Acc, class Body>
Acc replica_reduce(std::uint64_t seed, std::size_t replicas, const Acc& zero, Body&& body) {
  const std::size_t blocks = (replicas + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> partial(blocks, zero);
  for_each_index(blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlockSize;
    const std::size_t hi = std::min(replicas, lo + kBlockSize);
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng = replica_rng(seed, r);
      body(rng, r, partial[b]);
    }
  });
  if (blocks == 0) return zero;
  for (std::size_t stride = 1; stride < blocks; stride *= 2) {
    for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) {
      partial[i].merge(partial[i + stride]);
    }
  }
  return std::move(partial[0]);
}

}  // namespace mrlab::parallel
