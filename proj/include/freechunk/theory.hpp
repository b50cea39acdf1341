#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freechunk/numerics.hpp"
#include "freechunk/rng.hpp"

namespace freechunk::theory {

/// |cos(q, e) - cos(q, v)| for unit vectors; throws NotUnitNorm otherwise.
double substitution_loss(std::span<const double> q, std::span<const double> e, std::span<const double> v);

/// s(1 - rho) + sqrt(1 - s^2) sqrt(1 - rho^2): the loss when the query and
/// the substitute sit on opposite sides of the true embedding.
double worst_case_bound(double s, double rho);

/// s(1 - rho) + (2/pi) sqrt(1 - s^2) sqrt(1 - rho^2): the mean loss bound
/// when the azimuth of v around e is uniform relative to q.
double expected_bound(double s, double rho);

struct GeometryConfig {
  double s = 0.0;    // cos(q, e)
  double rho = 1.0;  // cos(e, v)
  std::size_t d = 3;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  /// Trials are split into this many independently seeded partitions; the
  /// result depends on the partition count but not on the thread count.
  std::size_t partitions = 1;
  std::size_t threads = 1;
};

struct Configuration {
  std::vector<double> q, e, v;
  double phi = 0.0;  // azimuth of v around e, measured from q's tangential direction
};

/// Builds unit e, q at angle acos(s) from e and v at angle acos(rho) from e
/// with azimuth phi ~ U[0, 2pi), inside a random orthonormal 3-frame of R^d.
/// Passing `forced_phi` fixes the azimuth instead of sampling it.
Configuration sample_configuration(const GeometryConfig& config, Rng& rng,
                                   std::optional<double> forced_phi = std::nullopt);

/// cos(alpha)cos(beta) + sin(alpha)sin(beta)cos(phi): cos(q, v) predicted by
/// the spherical law of cosines.
double spherical_cosine(double s, double rho, double phi);

struct BoundReport {
  double s = 0.0;
  double rho = 0.0;
  std::size_t trials = 0;
  double max_loss = 0.0;
  double mean_loss = 0.0;
  double stddev_loss = 0.0;
  double worst_case = 0.0;
  double expected = 0.0;
  std::size_t violations = 0;  // trials with loss > worst_case + 1e-9
  double mean_abs_cos_phi = 0.0;
  double max_identity_error = 0.0;  // spherical-cosine identity residual

  /// mean_loss <= expected + 3 * stddev / sqrt(trials)
  bool mean_within_expected() const;
};

inline constexpr double kBoundTolerance = 1e-9;

BoundReport monte_carlo_verify(const GeometryConfig& config);

/// Loss at the adversarial azimuth phi = pi.
double adversarial_loss(double s, double rho, std::uint64_t seed = 0, std::size_t d = 3);

/// Substitution loss measured on real encoder output: row i of `truth` is the
/// teacher embedding of chunk i, row i of `approx` the encoder's embedding.
/// Every (chunk, query) pair contributes one sample.
struct EmpiricalReport {
  std::size_t pairs = 0;
  std::size_t checked_pairs = 0;  // pairs with s >= 0, where both bounds apply
  std::size_t worst_case_violations = 0;
  double mean_loss = 0.0;
  double mean_expected_bound = 0.0;
  double mean_worst_case_bound = 0.0;
  double mean_rho = 0.0;
  double mean_abs_cos_phi = 0.0;
  std::vector<double> abs_cos_phi;  // observed azimuth distribution
};

EmpiricalReport empirical_substitution(const Matrix& truth, const Matrix& approx, const Matrix& queries);

/// Text table and CSV for a list of reports.
std::string format_reports_table(const std::vector<BoundReport>& reports);
std::string format_reports_csv(const std::vector<BoundReport>& reports);

}  // namespace freechunk::theory
