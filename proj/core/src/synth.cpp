#include "dahr/synth.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dahr/runtime.hpp"

namespace dahr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::normal: return "normal";
    case ErrorKind::t2: return "t2";
    case ErrorKind::pareto: return "pareto";
    case ErrorKind::burr: return "burr";
  }
  return "unknown";
}

ErrorKind parse_error_kind(std::string_view tag) {
  if (tag == "normal") return ErrorKind::normal;
  if (tag == "t2") return ErrorKind::t2;
  if (tag == "pareto") return ErrorKind::pareto;
  if (tag == "burr") return ErrorKind::burr;
  throw std::invalid_argument("unknown error distribution '" + std::string(tag) + "'");
}

std::string_view to_string(Regime regime) {
  return regime == Regime::lowdim ? "lowdim" : "highdim";
}

Regime parse_regime(std::string_view tag) {
  if (tag == "lowdim") return Regime::lowdim;
  if (tag == "highdim") return Regime::highdim;
  throw std::invalid_argument("unknown regime '" + std::string(tag) + "'");
}

double ErrorDist::raw_mean() const {
  switch (kind) {
    case ErrorKind::normal:
    case ErrorKind::t2:
      return 0.0;
    case ErrorKind::pareto:
      if (!(pareto_shape > 1.0)) throw std::invalid_argument("Pareto mean needs shape > 1");
      return pareto_shape * pareto_scale / (pareto_shape - 1.0);
    case ErrorKind::burr:
      // E X = scale * k * B(k - 1/c, 1 + 1/c), finite for c k > 1.
      if (!(burr_c * burr_k > 1.0)) throw std::invalid_argument("Burr mean needs c * k > 1");
      return burr_scale * burr_k * std::beta(burr_k - 1.0 / burr_c, 1.0 + 1.0 / burr_c);
  }
  throw std::invalid_argument("unknown error distribution");
}

double ErrorDist::raw_quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  switch (kind) {
    case ErrorKind::pareto:
      return pareto_scale * std::pow(1.0 - q, -1.0 / pareto_shape);
    case ErrorKind::burr:
      return burr_scale * std::pow(std::pow(1.0 - q, -1.0 / burr_k) - 1.0, 1.0 / burr_c);
    default:
      throw std::invalid_argument("raw_quantile is defined for pareto and burr only");
  }
}

double sample_error(const ErrorDist& dist, Rng& rng) {
  switch (dist.kind) {
    case ErrorKind::normal:
      return std::normal_distribution<double>{}(rng);
    case ErrorKind::t2: {
      const double z = std::normal_distribution<double>{}(rng);
      const double chi2 = std::chi_squared_distribution<double>{2.0}(rng);
      return z / std::sqrt(chi2 / 2.0);
    }
    case ErrorKind::pareto:
    case ErrorKind::burr: {
      // uniform_real_distribution is [0, 1); use the draw as the upper tail mass.
      const double u = std::uniform_real_distribution<double>{}(rng);
      return dist.raw_quantile(1.0 - u) - dist.raw_mean();
    }
  }
  throw std::invalid_argument("unknown error distribution");
}

void GenConfig::validate() const {
  if (n < 1 || p < 1 || m < 1) throw std::invalid_argument("n, p and m must be at least 1");
  if (regime == Regime::highdim && (s < 1 || s + 1 > p)) {
    throw std::invalid_argument("highdim sparsity must satisfy 1 <= s <= p - 1");
  }
}

std::size_t Dataset::total_rows() const {
  std::size_t rows = 0;
  for (const auto& s : shards) rows += static_cast<std::size_t>(s.rows());
  return rows;
}

Coefficients default_beta_star(Regime regime, std::size_t p, std::size_t s) {
  const auto dim = static_cast<Eigen::Index>(p);
  if (regime == Regime::lowdim) return Coefficients::Constant(dim, 1.5);
  Coefficients beta = Coefficients::Zero(dim);
  beta.head(static_cast<Eigen::Index>(std::min(s, p))).setConstant(1.5);
  return beta;
}

double heteroscedastic_scale(const Coefficients& beta_star) {
  return std::sqrt(3.0) * beta_star.squaredNorm();
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Shard draw_block(const GenConfig& config, const Coefficients& beta_star, std::size_t rows,
                 std::size_t id, std::uint64_t stream_seed) {
  const auto p = static_cast<Eigen::Index>(config.p);
  const double scale = heteroscedastic_scale(beta_star);
  Rng rng(stream_seed);
  std::normal_distribution<double> gauss;
  DesignMatrix x(static_cast<Eigen::Index>(rows), p);
  Vector y(static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) x(i, j) = gauss(rng);
    const double signal = x.row(i).dot(beta_star);
    const double eps = sample_error(config.dist, rng);
    y[i] = signal + (signal * signal / scale) * (config.noise_scale * eps);
  }
  return Shard(id, std::move(y), std::move(x));
}

void check_beta(const GenConfig& config, const Coefficients& beta_star) {
  config.validate();
  if (beta_star.size() != static_cast<Eigen::Index>(config.p)) {
    throw std::invalid_argument("beta_star length does not match p");
  }
  if (!beta_star.allFinite()) throw std::invalid_argument("beta_star holds non-finite values");
}

}  // namespace

Dataset generate(const GenConfig& config, const Coefficients& beta_star) {
  check_beta(config, beta_star);
  Dataset data;
  data.beta_star = beta_star;
  data.shards.reserve(config.m);
  for (std::size_t j = 0; j < config.m; ++j) {
    data.shards.push_back(draw_block(config, beta_star, config.n, j, mix_seed(config.seed, j)));
  }
  return data;
}

Shard generate_block(const GenConfig& config, const Coefficients& beta_star, std::size_t rows,
                     std::uint64_t stream) {
  check_beta(config, beta_star);
  if (rows < 1) throw std::invalid_argument("block needs at least one row");
  return draw_block(config, beta_star, rows, 0, mix_seed(config.seed, stream));
}

void write_csv(std::ostream& out, std::span<const Shard> shards) {
  if (shards.empty()) throw std::invalid_argument("nothing to write");
  const Eigen::Index p = shards.front().dim();
  out << "y";
  for (Eigen::Index j = 1; j <= p; ++j) out << ",x" << j;
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const auto& s : shards) {
    if (s.dim() != p) throw std::invalid_argument("shards disagree on dimension");
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      put(s.y()[i]);
      for (Eigen::Index j = 0; j < p; ++j) {
        out << ',';
        put(s.x()(i, j));
      }
      out << '\n';
    }
  }
}

std::vector<Shard> read_csv(std::istream& in, std::size_t m) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV input");
  std::size_t cols = 1;
  for (char c : line) cols += (c == ',');
  if (cols < 2 || line.rfind("y,x1", 0) != 0) {
    throw std::invalid_argument("CSV header must be y,x1,...,xp");
  }
  const std::size_t p = cols - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(fields, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0) {
        throw std::invalid_argument("bad number '" + cell + "' on data row " + std::to_string(rows + 1));
      }
      values.push_back(v);
      ++count;
    }
    if (count != cols) {
      throw std::invalid_argument("data row " + std::to_string(rows + 1) + " has " +
                                  std::to_string(count) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("CSV has no data rows");
  Vector y(static_cast<Eigen::Index>(rows));
  DesignMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows; ++i) {
    y[static_cast<Eigen::Index>(i)] = values[i * cols];
    for (std::size_t j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + 1 + j];
    }
  }
  return partition(x, y, m);
}

}  // namespace dahr
