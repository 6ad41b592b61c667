#pragma once

// Simulated heteroscedastic regression data:
//   y_i = x_i' beta* + c^{-1} (x_i' beta*)^2 eps_i,   c = sqrt(3) * ||beta*||_2^2,
// with x_i = (1, z_2, ..., z_p), z_j ~ N(0,1), and eps_i drawn from one of four
// centered error laws. Every shard draws from its own seeded stream.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dahr/model.hpp"

namespace dahr {

using Rng = std::mt19937_64;

enum class ErrorKind { normal, t2, pareto, burr };

std::string_view to_string(ErrorKind kind);
/// Accepts "normal", "t2", "pareto", "burr"; throws std::invalid_argument.
ErrorKind parse_error_kind(std::string_view tag);

/// An error law plus its parameters. Pareto is (scale, shape); Burr is the
/// Burr XII / Singh-Maddala law with CDF 1 - (1 + (x/scale)^c)^(-k).
struct ErrorDist {
  ErrorKind kind = ErrorKind::normal;
  double pareto_scale = 4.0;
  double pareto_shape = 2.0;
  double burr_c = 1.0;
  double burr_k = 2.0;
  double burr_scale = 1.0;

  static ErrorDist of(ErrorKind kind) { return ErrorDist{.kind = kind}; }

  /// Mean of the raw (uncentered) law; zero for normal and t2.
  double raw_mean() const;
  /// Inverse CDF of the raw law at probability q in (0, 1); Pareto and Burr only.
  double raw_quantile(double q) const;
};

/// One centered draw.
double sample_error(const ErrorDist& dist, Rng& rng);

enum class Regime { lowdim, highdim };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view tag);

struct GenConfig {
  std::size_t n = 400;
  std::size_t p = 20;
  std::size_t m = 10;
  ErrorDist dist;
  Regime regime = Regime::lowdim;
  std::size_t s = 5;
  std::uint64_t seed = 1;
  /// Multiplies every error draw; 0 gives noiseless responses.
  double noise_scale = 1.0;

  /// Throws std::invalid_argument when n, p, m or s are out of range.
  void validate() const;
};

struct Dataset {
  std::vector<Shard> shards;
  Coefficients beta_star;

  std::size_t total_rows() const;
  Shard pooled() const { return pool_shards(shards); }
};

/// (1.5, ..., 1.5) for lowdim; 1.5 on the first s entries and 0 elsewhere for highdim.
Coefficients default_beta_star(Regime regime, std::size_t p, std::size_t s);

/// sqrt(3) * ||beta*||_2^2, which makes E{c^{-1} (x' beta*)^2}^2 approximately 1.
double heteroscedastic_scale(const Coefficients& beta_star);

/// SplitMix64 finaliser, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

/// m shards of n rows, shard j drawn from stream mix_seed(seed, j).
Dataset generate(const GenConfig& config, const Coefficients& beta_star);

/// A single block of `rows` observations from the same model, drawn from the
/// stream mix_seed(config.seed, stream). Used for held-out validation data.
Shard generate_block(const GenConfig& config, const Coefficients& beta_star, std::size_t rows,
                     std::uint64_t stream);

/// CSV with header `y,x1,...,xp`; one row per observation, shards in order.
void write_csv(std::ostream& out, std::span<const Shard> shards);
/// Reads the CSV above and splits it into m contiguous equal-size shards.
std::vector<Shard> read_csv(std::istream& in, std::size_t m);

}  // namespace dahr
