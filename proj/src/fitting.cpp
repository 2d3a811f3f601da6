#include "berrygrip/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace berrygrip {
namespace {

// Gaussian elimination with partial pivoting; returns false on a singular
// system (relative pivot collapse).
template <int N>
bool solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N> b,
                  std::array<double, N>* x) {
  double scale = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) scale = std::max(scale, std::abs(a[i][j]));
  if (scale == 0.0) return false;
  for (int col = 0; col < N; ++col) {
    int pivot = col;
    for (int r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12 * scale) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = N - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < N; ++c) s -= a[r][c] * (*x)[c];
    (*x)[r] = s / a[r][r];
  }
  return true;
}

}  // namespace

CircleFit circle_fit(const std::vector<Vec2>& points_mm) {
  if (points_mm.size() < 3)
    throw std::invalid_argument("circle fit needs at least three points");

  // Shift to the centroid: makes the normal equations well-conditioned and
  // the fit exactly translation-covariant.
  double cx = 0.0;
  double cy = 0.0;
  for (const Vec2& p : points_mm) {
    cx += p.x_mm;
    cy += p.y_mm;
  }
  cx /= static_cast<double>(points_mm.size());
  cy /= static_cast<double>(points_mm.size());

  // Kasa: minimize sum (x^2 + y^2 + D x + E y + F)^2 over D, E, F.
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> atb{};
  for (const Vec2& p : points_mm) {
    const double x = p.x_mm - cx;
    const double y = p.y_mm - cy;
    const double z = x * x + y * y;
    const double row[3] = {x, y, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
      atb[i] += row[i] * -z;
    }
  }

  CircleFit fit;
  std::array<double, 3> sol{};
  const bool ok = solve_linear<3>(ata, atb, &sol);
  double r2 = 0.0;
  if (ok) r2 = 0.25 * (sol[0] * sol[0] + sol[1] * sol[1]) - sol[2];
  if (!ok || !(r2 > 0.0) || !std::isfinite(r2)) {
    fit.straight = true;
    fit.radius_mm = std::numeric_limits<double>::infinity();
    fit.curvature_per_m = 0.0;
    return fit;
  }
  fit.center = Vec2{cx - 0.5 * sol[0], cy - 0.5 * sol[1]};
  fit.radius_mm = std::sqrt(r2);
  fit.curvature_per_m = 1000.0 / fit.radius_mm;
  return fit;
}

FitReport quadratic_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                        bool zero_intercept) {
  if (xs.size() != ys.size()) throw std::invalid_argument("mismatched fit input lengths");
  if (xs.size() < 3) throw std::invalid_argument("quadratic fit needs at least three points");

  FitReport report;
  report.coefficients.assign(3, 0.0);
  if (zero_intercept) {
    // Columns x, x^2.
    std::array<std::array<double, 2>, 2> ata{};
    std::array<double, 2> atb{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double row[2] = {xs[i], xs[i] * xs[i]};
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) ata[r][c] += row[r] * row[c];
        atb[r] += row[r] * ys[i];
      }
    }
    std::array<double, 2> sol{};
    if (!solve_linear<2>(ata, atb, &sol))
      throw std::invalid_argument("rank-deficient quadratic fit (degenerate x values)");
    report.coefficients = {0.0, sol[0], sol[1]};
  } else {
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> atb{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double row[3] = {1.0, xs[i], xs[i] * xs[i]};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
        atb[r] += row[r] * ys[i];
      }
    }
    std::array<double, 3> sol{};
    if (!solve_linear<3>(ata, atb, &sol))
      throw std::invalid_argument("rank-deficient quadratic fit (degenerate x values)");
    report.coefficients = {sol[0], sol[1], sol[2]};
  }

  report.residuals.reserve(xs.size());
  double abs_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = report.coefficients[0] + report.coefficients[1] * xs[i] +
                       report.coefficients[2] * xs[i] * xs[i];
    const double resid = ys[i] - fit;
    report.residuals.push_back(resid);
    abs_sum += std::abs(resid);
    if (std::abs(ys[i]) >= 1e-9) {
      pct_sum += std::abs(resid) / std::abs(ys[i]);
      ++pct_n;
    }
  }
  report.mean_abs_error = abs_sum / static_cast<double>(xs.size());
  report.mean_percent_error = pct_n ? 100.0 * pct_sum / static_cast<double>(pct_n) : 0.0;
  return report;
}

FingerAnalysis finger_force_analysis(const CsvTable& table, double threshold_n) {
  if (threshold_n <= 0.0) throw std::invalid_argument("negligibility threshold must be positive");
  const int c_name = table.column("finger");
  const int c_force = table.column("force_N");
  if (c_name < 0 || c_force < 0)
    throw std::invalid_argument("finger force table needs columns finger, force_N");
  if (table.rows.empty()) throw std::invalid_argument("finger force table is empty");

  FingerAnalysis out;
  out.threshold_n = threshold_n;
  std::vector<double> sums;
  std::vector<int> counts;
  for (const auto& row : table.rows) {
    const std::string& name = row[c_name];
    const double force = parse_number(row[c_force]);
    std::size_t k = 0;
    for (; k < out.all.size(); ++k)
      if (out.all[k].name == name) break;
    if (k == out.all.size()) {
      out.all.push_back({name, 0.0});
      sums.push_back(0.0);
      counts.push_back(0);
    }
    sums[k] += force;
    counts[k] += 1;
  }
  for (std::size_t k = 0; k < out.all.size(); ++k)
    out.all[k].mean_force_n = sums[k] / counts[k];

  for (const FingerRank& f : out.all)
    if (f.mean_force_n >= threshold_n) out.ranking.push_back(f);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const FingerRank& a, const FingerRank& b) {
                     return a.mean_force_n > b.mean_force_n;
                   });
  out.recommended_fingers = static_cast<int>(out.ranking.size());
  out.none_significant = out.ranking.empty();
  return out;
}

}  // namespace berrygrip
