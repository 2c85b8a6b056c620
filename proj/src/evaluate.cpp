#include "railloc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "railloc/errors.hpp"
#include "railloc/geometry.hpp"

namespace railloc::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlignTolerance = 0.05;  // s

struct Cov2 {
  double xx, xy, yy;
};

// Eigenvalues of a symmetric 2x2 (closed form).
void eigen2(const Cov2& c, double& lmin, double& lmax, double& theta) {
  const double tr = 0.5 * (c.xx + c.yy);
  const double det = std::sqrt(std::max(0.25 * (c.xx - c.yy) * (c.xx - c.yy) +
                                        c.xy * c.xy, 0.0));
  lmax = tr + det;
  lmin = tr - det;
  theta = 0.5 * std::atan2(2.0 * c.xy, c.xx - c.yy);
}

}  // namespace

std::vector<ErrorSample> decompose_errors(const std::vector<io::StateLogRow>& estimates,
                                          const std::vector<sim::TruthSample>& truth,
                                          bool use_fused, std::size_t* dropped) {
  if (truth.empty()) throw DomainError("decompose_errors: empty truth stream");
  std::size_t drop_count = 0;
  std::vector<ErrorSample> out;
  out.reserve(estimates.size());

  for (const auto& row : estimates) {
    // Nearest truth sample by time.
    auto it = std::lower_bound(truth.begin(), truth.end(), row.t,
                               [](const sim::TruthSample& a, double t) { return a.t < t; });
    const sim::TruthSample* best = nullptr;
    if (it != truth.end()) best = &*it;
    if (it != truth.begin()) {
      const sim::TruthSample* prev = &*(it - 1);
      if (best == nullptr || std::abs(prev->t - row.t) < std::abs(best->t - row.t)) {
        best = prev;
      }
    }
    if (best == nullptr || std::abs(best->t - row.t) > kAlignTolerance) {
      ++drop_count;
      continue;
    }

    ErrorSample s;
    s.t = row.t;
    s.available = row.available;
    if (!row.available) {
      s.err_along = s.err_cross = std::numeric_limits<double>::quiet_NaN();
      s.sigma3_along = s.sigma3_cross = s.sigma3_max = kInf;
      out.push_back(s);
      continue;
    }

    const double px = use_fused && row.has_fused ? row.fused_x : row.x;
    const double py = use_fused && row.has_fused ? row.fused_y : row.y;
    Cov2 c{row.p_diag[0], row.cov_xy, row.p_diag[1]};
    if (use_fused && row.has_fused) {
      c = {row.fused_cov_xx, row.fused_cov_xy, row.fused_cov_yy};
    }

    const double ex = px - best->pose.x;
    const double ey = py - best->pose.y;
    const double ct = std::cos(best->pose.heading), st = std::sin(best->pose.heading);
    s.err_along = ex * ct + ey * st;
    s.err_cross = -ex * st + ey * ct;

    const double var_along = ct * (c.xx * ct + c.xy * st) + st * (c.xy * ct + c.yy * st);
    const double var_cross = st * (c.xx * st - c.xy * ct) - ct * (c.xy * st - c.yy * ct);
    s.sigma3_along = 3.0 * std::sqrt(std::max(var_along, 0.0));
    s.sigma3_cross = 3.0 * std::sqrt(std::max(var_cross, 0.0));
    double lmin, lmax, theta;
    eigen2(c, lmin, lmax, theta);
    s.sigma3_max = 3.0 * std::sqrt(std::max(lmax, 0.0));
    out.push_back(s);
  }
  if (dropped != nullptr) *dropped = drop_count;
  return out;
}

double CdfTable::cdf_at(double x) const {
  if (n_total == 0) return 0.0;
  const auto it = std::upper_bound(values.begin(), values.end(), x);
  return static_cast<double>(it - values.begin()) / static_cast<double>(n_total);
}

double CdfTable::quantile(double p) const {
  if (n_total == 0) return kInf;
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n_total) - 1e-9));
  rank = std::max<std::size_t>(rank, 1);
  if (rank > values.size()) return kInf;
  return values[rank - 1];
}

CdfTable cdf(const std::vector<ErrorSample>& samples, Channel channel) {
  if (samples.empty()) throw DomainError("cdf: no samples");
  CdfTable t;
  t.n_total = samples.size();
  t.values.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.available) continue;
    double v = s.sigma3_max;
    if (channel == Channel::kAlong) v = s.sigma3_along;
    if (channel == Channel::kCross) v = s.sigma3_cross;
    if (std::isfinite(v)) t.values.push_back(v);
  }
  std::sort(t.values.begin(), t.values.end());
  return t;
}

EvalReport make_report(const std::string& method, const std::vector<ErrorSample>& samples) {
  EvalReport r;
  r.method = method;
  r.epoch_times.reserve(samples.size());
  for (const auto& s : samples) r.epoch_times.push_back(s.t);
  r.along = cdf(samples, Channel::kAlong);
  r.cross = cdf(samples, Channel::kCross);
  r.max3 = cdf(samples, Channel::kMax);
  r.availability = r.max3.availability();

  std::size_t n_avail = 0, ok_along = 0, ok_cross = 0;
  for (const auto& s : samples) {
    if (!s.available) continue;
    ++n_avail;
    if (std::abs(s.err_along) <= s.sigma3_along) ++ok_along;
    if (std::abs(s.err_cross) <= s.sigma3_cross) ++ok_cross;
  }
  r.consistency_along = n_avail ? static_cast<double>(ok_along) / n_avail : 0.0;
  r.consistency_cross = n_avail ? static_cast<double>(ok_cross) / n_avail : 0.0;
  return r;
}

Comparison compare_methods(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw DomainError("compare_methods: need >= 2 reports");
  const auto& t0 = reports.front().epoch_times;
  for (const auto& r : reports) {
    if (r.epoch_times.size() != t0.size()) {
      throw DomainError("compare_methods: mismatched epoch sets (" + r.method + ")");
    }
    for (std::size_t i = 0; i < t0.size(); ++i) {
      if (std::abs(r.epoch_times[i] - t0[i]) > 1e-9) {
        throw DomainError("compare_methods: epoch grids differ at index " +
                          std::to_string(i));
      }
    }
  }

  Comparison cmp;
  for (const auto& r : reports) {
    MethodSummary m;
    m.method = r.method;
    for (int i = 0; i < 3; ++i) {
      m.at_q[i] = r.along.quantile(kCdfLevels[i]);
      m.ct_q[i] = r.cross.quantile(kCdfLevels[i]);
    }
    m.cdf_at_5m_along = r.along.cdf_at(5.0);
    m.cdf_at_1p5m_cross = r.cross.cdf_at(1.5);
    m.availability = r.availability;
    cmp.methods.push_back(m);
  }
  for (const auto& base : cmp.methods) {
    for (const auto& other : cmp.methods) {
      if (&base == &other) continue;
      Improvement imp;
      imp.base = base.method;
      imp.method = other.method;
      for (int i = 0; i < 3; ++i) {
        imp.at_pct[i] = (std::isfinite(base.at_q[i]) && std::isfinite(other.at_q[i]))
                            ? 100.0 * (1.0 - other.at_q[i] / base.at_q[i])
                            : std::numeric_limits<double>::quiet_NaN();
        imp.ct_pct[i] = (std::isfinite(base.ct_q[i]) && std::isfinite(other.ct_q[i]))
                            ? 100.0 * (1.0 - other.ct_q[i] / base.ct_q[i])
                            : std::numeric_limits<double>::quiet_NaN();
      }
      cmp.improvements.push_back(imp);
    }
  }
  return cmp;
}

std::vector<EllipseRow> ellipse_export(const std::vector<io::StateLogRow>& rows,
                                       std::size_t every_n, bool use_fused) {
  if (every_n == 0) throw DomainError("ellipse_export: every_n must be >= 1");
  std::vector<EllipseRow> out;
  for (std::size_t i = 0; i < rows.size(); i += every_n) {
    const auto& row = rows[i];
    if (!row.available) continue;
    EllipseRow e;
    e.t = row.t;
    e.x = use_fused && row.has_fused ? row.fused_x : row.x;
    e.y = use_fused && row.has_fused ? row.fused_y : row.y;
    Cov2 c{row.p_diag[0], row.cov_xy, row.p_diag[1]};
    if (use_fused && row.has_fused) c = {row.fused_cov_xx, row.fused_cov_xy, row.fused_cov_yy};
    double lmin, lmax, theta;
    eigen2(c, lmin, lmax, theta);
    if (lmin < -1e-9) {
      e.ok = false;
      lmin = std::max(lmin, 0.0);
    }
    e.semi_major3 = 3.0 * std::sqrt(std::max(lmax, 0.0));
    e.semi_minor3 = 3.0 * std::sqrt(std::max(lmin, 0.0));
    e.orientation = theta;
    out.push_back(e);
  }
  return out;
}

}  // namespace railloc::eval
