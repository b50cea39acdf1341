#include "freechunk/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "freechunk/error.hpp"

namespace freechunk::theory {
namespace {

constexpr double kUnitTolerance = 1e-6;

double dot3(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_unit(std::span<const double> x, const char* name) {
  const double norm = std::sqrt(dot3(x, x));
  if (std::abs(norm - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::kNotUnitNorm, std::string(name) + " has norm " + std::to_string(norm));
  }
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

double sine_of(double cosine) { return std::sqrt(std::max(0.0, 1.0 - cosine * cosine)); }

// Three orthonormal vectors in R^d from Gram-Schmidt on Gaussian draws.
std::vector<std::vector<double>> random_frame(std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> frame;
  while (frame.size() < 3) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.normal();
    for (const auto& b : frame) {
      const double p = dot3(x, b);
      for (std::size_t i = 0; i < d; ++i) x[i] -= p * b[i];
    }
    const double norm = std::sqrt(dot3(x, x));
    if (norm < 1e-6) continue;
    for (auto& v : x) v /= norm;
    frame.push_back(std::move(x));
  }
  return frame;
}

// Streaming moments merged with Chan's parallel update.
struct Accumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double max = 0.0;
  double abs_cos_phi_sum = 0.0;
  double max_identity_error = 0.0;
  std::size_t violations = 0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
    max = std::max(max, x);
  }

  void merge(const Accumulator& o) {
    if (o.count == 0) return;
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    mean += delta * static_cast<double>(o.count) / n;
    count += o.count;
    max = std::max(max, o.max);
    abs_cos_phi_sum += o.abs_cos_phi_sum;
    max_identity_error = std::max(max_identity_error, o.max_identity_error);
    violations += o.violations;
  }
};

Accumulator run_partition(const GeometryConfig& config, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Accumulator acc;
  const double bound = worst_case_bound(config.s, config.rho);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = sample_configuration(config, rng);
    const double loss = substitution_loss(c.q, c.e, c.v);
    acc.add(loss);
    if (loss > bound + kBoundTolerance) ++acc.violations;
    acc.abs_cos_phi_sum += std::abs(std::cos(c.phi));
    const double identity = std::abs(dot3(c.q, c.v) - spherical_cosine(config.s, config.rho, c.phi));
    acc.max_identity_error = std::max(acc.max_identity_error, identity);
  }
  return acc;
}

}  // namespace

double substitution_loss(std::span<const double> q, std::span<const double> e, std::span<const double> v) {
  if (q.size() != e.size() || e.size() != v.size()) {
    throw Error(ErrorCode::kShapeMismatch, "substitution loss needs vectors of equal length");
  }
  require_unit(q, "q");
  require_unit(e, "e");
  require_unit(v, "v");
  return std::abs(dot3(q, e) - dot3(q, v));
}

double worst_case_bound(double s, double rho) {
  return s * (1.0 - rho) + sine_of(s) * sine_of(rho);
}

double expected_bound(double s, double rho) {
  return s * (1.0 - rho) + (2.0 / std::numbers::pi) * sine_of(s) * sine_of(rho);
}

double spherical_cosine(double s, double rho, double phi) {
  return s * rho + sine_of(s) * sine_of(rho) * std::cos(phi);
}

Configuration sample_configuration(const GeometryConfig& config, Rng& rng, std::optional<double> forced_phi) {
  if (config.d < 3) throw Error(ErrorCode::kInvalidArgument, "azimuth needs d >= 3");
  if (std::abs(config.s) > 1.0 || std::abs(config.rho) > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "s and rho must lie in [-1, 1]");
  }
  const auto frame = random_frame(config.d, rng);
  const double phi = forced_phi ? *forced_phi : rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sin_alpha = sine_of(config.s);
  const double sin_beta = sine_of(config.rho);
  const double c = std::cos(phi);
  const double sn = std::sin(phi);
  Configuration out;
  out.phi = phi;
  out.e = frame[0];
  out.q.resize(config.d);
  out.v.resize(config.d);
  for (std::size_t i = 0; i < config.d; ++i) {
    out.q[i] = config.s * frame[0][i] + sin_alpha * frame[1][i];
    out.v[i] = config.rho * frame[0][i] + sin_beta * (c * frame[1][i] + sn * frame[2][i]);
  }
  return out;
}

bool BoundReport::mean_within_expected() const {
  if (trials == 0) return true;
  return mean_loss <= expected + 3.0 * stddev_loss / std::sqrt(static_cast<double>(trials));
}

BoundReport monte_carlo_verify(const GeometryConfig& config) {
  if (config.trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  const std::size_t partitions = std::max<std::size_t>(1, std::min(config.partitions, config.trials));
  std::vector<Accumulator> results(partitions);
  auto run = [&](std::size_t p) {
    const std::size_t begin = config.trials * p / partitions;
    const std::size_t end = config.trials * (p + 1) / partitions;
    results[p] = run_partition(config, end - begin, derive_seed(config.seed, p));
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, partitions));
  if (threads == 1) {
    for (std::size_t p = 0; p < partitions; ++p) run(p);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t p = t; p < partitions; p += threads) run(p);
      });
    }
    for (auto& th : pool) th.join();
  }
  Accumulator total;
  for (const auto& r : results) total.merge(r);

  BoundReport report;
  report.s = config.s;
  report.rho = config.rho;
  report.trials = total.count;
  report.max_loss = total.max;
  report.mean_loss = total.mean;
  report.stddev_loss = total.count > 1 ? std::sqrt(total.m2 / static_cast<double>(total.count - 1)) : 0.0;
  report.worst_case = worst_case_bound(config.s, config.rho);
  report.expected = expected_bound(config.s, config.rho);
  report.violations = total.violations;
  report.mean_abs_cos_phi = total.abs_cos_phi_sum / static_cast<double>(total.count);
  report.max_identity_error = total.max_identity_error;
  return report;
}

double adversarial_loss(double s, double rho, std::uint64_t seed, std::size_t d) {
  GeometryConfig config;
  config.s = s;
  config.rho = rho;
  config.d = d;
  Rng rng(seed);
  const auto c = sample_configuration(config, rng, std::numbers::pi);
  return substitution_loss(c.q, c.e, c.v);
}

EmpiricalReport empirical_substitution(const Matrix& truth, const Matrix& approx, const Matrix& queries) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols() || queries.cols() != truth.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "empirical substitution inputs disagree in shape");
  }
  EmpiricalReport report;
  const std::size_t d = truth.cols();
  std::vector<double> e(d), v(d), q(d);
  auto load_unit = [](std::span<const float> src, std::vector<double>& dst) {
    double norm = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) norm += static_cast<double>(src[i]) * src[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "empirical substitution input");
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / norm;
  };
  double phi_sum = 0.0;
  std::size_t phi_count = 0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    load_unit(truth.row(i), e);
    load_unit(approx.row(i), v);
    const double rho = clamp_unit(dot3(e, v));
    for (std::size_t k = 0; k < queries.rows(); ++k) {
      load_unit(queries.row(k), q);
      const double s = clamp_unit(dot3(q, e));
      const double loss = std::abs(s - dot3(q, v));
      ++report.pairs;
      report.mean_rho += rho;
      report.mean_loss += loss;
      if (s >= 0.0) {
        ++report.checked_pairs;
        const double wc = worst_case_bound(s, rho);
        report.mean_worst_case_bound += wc;
        report.mean_expected_bound += expected_bound(s, rho);
        if (loss > wc + kBoundTolerance) ++report.worst_case_violations;
      }
      // Tangential parts of q and v around e give the azimuth.
      double qt_norm = 0.0, vt_norm = 0.0, cross = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double qt = q[j] - s * e[j];
        const double vt = v[j] - rho * e[j];
        qt_norm += qt * qt;
        vt_norm += vt * vt;
        cross += qt * vt;
      }
      if (qt_norm > 1e-18 && vt_norm > 1e-18) {
        const double c = std::abs(clamp_unit(cross / std::sqrt(qt_norm * vt_norm)));
        report.abs_cos_phi.push_back(c);
        phi_sum += c;
        ++phi_count;
      }
    }
  }
  if (report.pairs > 0) {
    report.mean_loss /= static_cast<double>(report.pairs);
    report.mean_rho /= static_cast<double>(report.pairs);
  }
  if (report.checked_pairs > 0) {
    report.mean_worst_case_bound /= static_cast<double>(report.checked_pairs);
    report.mean_expected_bound /= static_cast<double>(report.checked_pairs);
  }
  if (phi_count > 0) report.mean_abs_cos_phi = phi_sum / static_cast<double>(phi_count);
  return report;
}

std::string format_reports_table(const std::vector<BoundReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%6s %6s %8s %10s %10s %10s %10s %6s %10s %9s\n", "s", "rho", "trials",
                "max_eps", "wc_bound", "mean_eps", "exp_bound", "viol", "|cos phi|", "mean_ok");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%6.3f %6.3f %8zu %10.6f %10.6f %10.6f %10.6f %6zu %10.6f %9s\n", r.s,
                  r.rho, r.trials, r.max_loss, r.worst_case, r.mean_loss, r.expected, r.violations,
                  r.mean_abs_cos_phi, r.mean_within_expected() ? "yes" : "NO");
    out << line;
  }
  return out.str();
}

std::string format_reports_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream out;
  out.precision(12);
  out << "s,rho,trials,max_loss,worst_case_bound,mean_loss,stddev_loss,expected_bound,violations,"
         "mean_abs_cos_phi,max_identity_error,mean_within_expected\n";
  for (const auto& r : reports) {
    out << r.s << ',' << r.rho << ',' << r.trials << ',' << r.max_loss << ',' << r.worst_case << ','
        << r.mean_loss << ',' << r.stddev_loss << ',' << r.expected << ',' << r.violations << ','
        << r.mean_abs_cos_phi << ',' << r.max_identity_error << ',' << (r.mean_within_expected() ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace freechunk::theory
