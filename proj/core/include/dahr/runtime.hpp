#pragma once

// In-process stand-in for the central/local machine fabric. The central
// machine is shard 0; a gradient round broadcasts the p-vector iterate to the
// m - 1 locals and gathers one p-vector back from each.

#include <cstdint>
#include <span>
#include <vector>

#include "dahr/model.hpp"

namespace dahr {

/// Communication cost in scalar values (one double each).
struct CommLedger {
  std::uint64_t rounds = 0;
  std::uint64_t values_sent = 0;

  void record_gradient_round(std::size_t m, std::size_t p);
  std::uint64_t bits() const noexcept { return values_sent * 64; }
};

struct GatherResult {
  Vector mean_gradient;
  std::vector<Vector> per_shard;  // filled only when requested
};

/// Throws std::invalid_argument if shards is empty or the dimensions differ.
void check_homogeneous(std::span<const Shard> shards);

/// Equal-weight mean of the shard gradients at beta, reduced in span order.
GatherResult gather_gradients(std::span<const Shard> shards, const Coefficients& beta,
                              double tau, CommLedger& ledger, bool keep_per_shard = false);

/// Splits rows into m contiguous shards of equal size; unequal splits are rejected.
std::vector<Shard> partition(const DesignMatrix& x, const Vector& y, std::size_t m);

}  // namespace dahr
