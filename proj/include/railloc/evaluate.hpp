#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "railloc/sensors.hpp"
#include "railloc/state_log.hpp"

namespace railloc::eval {

struct ErrorSample {
  double t = 0.0;
  double err_along = 0.0;  // m, signed, vs ground truth
  double err_cross = 0.0;
  double sigma3_along = 0.0;
  double sigma3_cross = 0.0;
  double sigma3_max = 0.0;  // 3 * sqrt(largest covariance eigenvalue)
  bool available = true;
};

// Rotates position error and reported covariance into the truth heading
// frame (nearest-truth alignment within 0.05 s; misaligned epochs are
// dropped and counted). Set use_fused to evaluate the map-fused columns.
std::vector<ErrorSample> decompose_errors(const std::vector<io::StateLogRow>& estimates,
                                          const std::vector<sim::TruthSample>& truth,
                                          bool use_fused = false,
                                          std::size_t* dropped = nullptr);

enum class Channel { kMax, kAlong, kCross };

// Empirical CDF of the 3-sigma error; unavailable epochs contribute +inf so
// the CDF saturates at the availability fraction.
struct CdfTable {
  std::vector<double> values;  // sorted finite values
  std::size_t n_total = 0;     // including unavailable epochs

  double availability() const {
    return n_total == 0 ? 0.0
                        : static_cast<double>(values.size()) / static_cast<double>(n_total);
  }
  double cdf_at(double x) const;     // fraction of epochs with value <= x
  double quantile(double p) const;   // nearest-rank; +inf beyond availability
};

CdfTable cdf(const std::vector<ErrorSample>& samples, Channel channel);

struct EvalReport {
  std::string method;
  std::vector<double> epoch_times;
  CdfTable along, cross, max3;
  double availability = 0.0;
  // Fraction of available epochs whose true error stays within the reported
  // 3-sigma bound (filter consistency; only meaningful on synthetic truth).
  double consistency_along = 0.0;
  double consistency_cross = 0.0;
};

EvalReport make_report(const std::string& method, const std::vector<ErrorSample>& samples);

struct MethodSummary {
  std::string method;
  double at_q[3] = {0.0, 0.0, 0.0};  // quantiles at CDF 0.90 / 0.99 / 1.00
  double ct_q[3] = {0.0, 0.0, 0.0};
  double cdf_at_5m_along = 0.0;      // Table-2 fixed thresholds
  double cdf_at_1p5m_cross = 0.0;
  double availability = 0.0;
};

struct Improvement {
  std::string base, method;
  double at_pct[3] = {0.0, 0.0, 0.0};  // 100 * (1 - q_new / q_base); NaN if inf
  double ct_pct[3] = {0.0, 0.0, 0.0};
};

struct Comparison {
  std::vector<MethodSummary> methods;
  std::vector<Improvement> improvements;  // every ordered pair
};

inline constexpr double kCdfLevels[3] = {0.90, 0.99, 1.00};

// Quantile table at CDF {0.90, 0.99, 1.00}, fixed-threshold availabilities
// and pairwise improvement percentages. Reports must cover identical epochs.
Comparison compare_methods(const std::vector<EvalReport>& reports);

struct EllipseRow {
  double t = 0.0, x = 0.0, y = 0.0;
  double semi_major3 = 0.0;  // 3 sigma
  double semi_minor3 = 0.0;
  double orientation = 0.0;  // rad, major axis CCW from east
  bool ok = true;            // false when the covariance was not PSD
};

std::vector<EllipseRow> ellipse_export(const std::vector<io::StateLogRow>& rows,
                                       std::size_t every_n, bool use_fused = false);

}  // namespace railloc::eval
