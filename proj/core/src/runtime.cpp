#include "dahr/runtime.hpp"

#include <stdexcept>
#include <string>

namespace dahr {

void CommLedger::record_gradient_round(std::size_t m, std::size_t p) {
  rounds += 1;
  values_sent += 2 * static_cast<std::uint64_t>(m - 1) * static_cast<std::uint64_t>(p);
}

void check_homogeneous(std::span<const Shard> shards) {
  if (shards.empty()) throw std::invalid_argument("no shards");
  const Eigen::Index p = shards.front().dim();
  for (const auto& s : shards) {
    if (s.dim() != p) {
      throw std::invalid_argument("shard " + std::to_string(s.id()) + " has dimension " +
                                  std::to_string(s.dim()) + ", expected " + std::to_string(p));
    }
  }
}

GatherResult gather_gradients(std::span<const Shard> shards, const Coefficients& beta, double tau,
                              CommLedger& ledger, bool keep_per_shard) {
  check_homogeneous(shards);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  GatherResult out;
  out.mean_gradient = Vector::Zero(shards.front().dim());
  if (keep_per_shard) out.per_shard.reserve(shards.size());
  for (const auto& s : shards) {
    Vector g = shard_gradient(s, beta, tau);
    out.mean_gradient += g;
    if (keep_per_shard) out.per_shard.push_back(std::move(g));
  }
  out.mean_gradient /= static_cast<double>(shards.size());
  ledger.record_gradient_round(shards.size(), static_cast<std::size_t>(shards.front().dim()));
  return out;
}

std::vector<Shard> partition(const DesignMatrix& x, const Vector& y, std::size_t m) {
  if (m < 1) throw std::invalid_argument("need at least one shard");
  const auto rows = static_cast<std::size_t>(x.rows());
  if (rows % m != 0) {
    throw std::invalid_argument(std::to_string(rows) + " rows cannot be split into " +
                                std::to_string(m) + " equal shards");
  }
  if (y.size() != x.rows()) throw std::invalid_argument("response length does not match design rows");
  const auto n = static_cast<Eigen::Index>(rows / m);
  std::vector<Shard> shards;
  shards.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Index start = static_cast<Eigen::Index>(j) * n;
    shards.emplace_back(j, y.segment(start, n), x.middleRows(start, n));
  }
  return shards;
}

}  // namespace dahr
