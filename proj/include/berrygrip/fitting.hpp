#pragma once

#include <string>
#include <vector>

#include "berrygrip/csv.hpp"
#include "berrygrip/geometry.hpp"

namespace berrygrip {

struct CircleFit {
  Vec2 center{};
  double radius_mm = 0.0;       // infinite when straight
  double curvature_per_m = 0.0; // 0 when straight
  bool straight = false;
};

// Algebraic least-squares circle through planar points (Kasa form), solved
// on centroid-shifted coordinates so rigid motions of the input move the
// center and nothing else. Collinear input is reported as a straight
// segment, not an error.
CircleFit circle_fit(const std::vector<Vec2>& points_mm);

struct FitReport {
  std::vector<double> coefficients;  // ascending powers: c0 + c1 x + c2 x^2
  double mean_abs_error = 0.0;
  double mean_percent_error = 0.0;   // over points with |y| >= 1e-9
  std::vector<double> residuals;     // y - fit, data order
};

// Least-squares quadratic; with zero_intercept the constant term is pinned
// to 0 (curvature maps pass through the origin).
FitReport quadratic_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                        bool zero_intercept = false);

struct FingerRank {
  std::string name;
  double mean_force_n = 0.0;
};

struct FingerAnalysis {
  std::vector<FingerRank> ranking;   // fingers at or above threshold, descending
  std::vector<FingerRank> all;       // every finger, input order
  int recommended_fingers = 0;
  double threshold_n = 0.0;
  bool none_significant = false;
};

// Ranks fingers of a force table (columns: finger, force_N; repeated rows
// average) against a negligibility threshold.
FingerAnalysis finger_force_analysis(const CsvTable& table, double threshold_n);

}  // namespace berrygrip
