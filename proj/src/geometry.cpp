#include "berrygrip/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace berrygrip {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// sin(t)/t with a series fallback near zero.
double sinc(double t) {
  if (std::abs(t) < 1e-6) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

// (1 - cos(t))/t as 2 sin^2(t/2)/t, which stays well conditioned for small t
// where 1 - cos(t) would cancel; the series only covers the 0/0 at zero.
double versine_over(double t) {
  if (std::abs(t) < 1e-6) return t * 0.5 - t * t * t / 24.0;
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / t;
}

}  // namespace

void FingerGeometry::validate() const {
  if (!(length_mm > 0.0)) throw std::invalid_argument("finger length must be positive");
  if (!(tendon_offset_mm > 0.0)) throw std::invalid_argument("tendon offset must be positive");
  if (!(backbone_thickness_mm > 0.0) || !(backbone_width_mm >= backbone_thickness_mm))
    throw std::invalid_argument("backbone requires 0 < thickness <= width");
  if (!(max_tendon_force_n > 0.0)) throw std::invalid_argument("max tendon force must be positive");
}

void CurvatureMap::validate() const {
  if (!(retraction_max_mm > retraction_min_mm) || retraction_min_mm < 0.0)
    throw std::invalid_argument("curvature map: bad retraction domain");
  if (retraction_a2 < 0.0 || retraction_a1 < 0.0 || force_b2 < 0.0 || force_b1 < 0.0)
    throw std::invalid_argument("curvature map: coefficients must be nonnegative");
  if (retraction_a1 == 0.0 && retraction_a2 == 0.0)
    throw std::invalid_argument("curvature map: retraction response is identically zero");
}

void GripperGeometry::validate() const {
  for (const auto& f : fingers) f.validate();
  const FingerGeometry& a = fingers[0];
  for (const auto& f : fingers) {
    if (f.length_mm != a.length_mm || f.tendon_offset_mm != a.tendon_offset_mm ||
        f.backbone_width_mm != a.backbone_width_mm ||
        f.backbone_thickness_mm != a.backbone_thickness_mm ||
        f.max_tendon_force_n != a.max_tendon_force_n)
      throw std::invalid_argument("gripper requires three identical fingers");
  }
  if (angular_spacing_deg != 120.0)
    throw std::invalid_argument("three-finger gripper requires 120 degree spacing");
  if (!(mount_offset_angle_deg > 0.0 && mount_offset_angle_deg < 90.0))
    throw std::invalid_argument("mount offset angle out of range");
  if (!(max_aperture_mm > 0.0)) throw std::invalid_argument("max aperture must be positive");
  if (!(palm_radius_mm > 0.0))
    throw std::invalid_argument("palm radius must be positive (aperture infeasible for this finger)");
}

GripperGeometry make_gripper_geometry(const FingerGeometry& finger, double max_aperture_mm,
                                      double mount_offset_angle_deg) {
  GripperGeometry g;
  g.fingers = {finger, finger, finger};
  g.mount_offset_angle_deg = mount_offset_angle_deg;
  g.max_aperture_mm = max_aperture_mm;
  // Open aperture = 2 * (palm_radius + L*sin(tilt)); solve for the palm radius.
  g.palm_radius_mm =
      max_aperture_mm / 2.0 - finger.length_mm * std::sin(deg_to_rad(mount_offset_angle_deg));
  g.validate();
  return g;
}

double backbone_stiffness_ratio(double width_mm, double thickness_mm) {
  if (!(thickness_mm > 0.0) || !(width_mm >= thickness_mm))
    throw std::invalid_argument("stiffness ratio requires 0 < thickness <= width");
  const double r = width_mm / thickness_mm;
  return r * r;
}

double curvature_from_retraction(double retraction_mm, const CurvatureMap& map) {
  if (retraction_mm < map.retraction_min_mm || retraction_mm > map.retraction_max_mm)
    throw std::out_of_range("retraction outside curvature map domain");
  return map.retraction_a2 * retraction_mm * retraction_mm + map.retraction_a1 * retraction_mm;
}

double curvature_from_tendon_force(double force_n, const CurvatureMap& map,
                                   double max_tendon_force_n) {
  if (force_n < 0.0) throw std::out_of_range("tendon force must be nonnegative");
  if (force_n > max_tendon_force_n)
    throw std::out_of_range("tendon force exceeds actuator limit");
  return map.force_b2 * force_n * force_n + map.force_b1 * force_n;
}

Vec2 arc_point(double kappa_per_m, double length_mm, double s) {
  if (s < 0.0 || s > 1.0) throw std::out_of_range("arc fraction must lie in [0, 1]");
  if (kappa_per_m < 0.0) throw std::out_of_range("curvature must be nonnegative");
  if (!(length_mm > 0.0)) throw std::invalid_argument("arc length must be positive");
  const double chord_mm = s * length_mm;
  const double theta = kappa_per_m * chord_mm * 1e-3;  // curvature is per meter
  return {chord_mm * versine_over(theta), chord_mm * sinc(theta)};
}

double grip_aperture(double retraction_mm, const GripperGeometry& gripper,
                     const CurvatureMap& map) {
  const double kappa = curvature_from_retraction(retraction_mm, map);
  const Vec2 tip = arc_point(kappa, gripper.fingers[0].length_mm, 1.0);
  const double a = deg_to_rad(gripper.mount_offset_angle_deg);
  // Finger frame in the radial/axial plane: the finger leaves the palm tilted
  // outward by the mount angle and bends inward toward the axis.
  const double tip_radius_mm =
      gripper.palm_radius_mm - std::cos(a) * tip.x_mm + std::sin(a) * tip.y_mm;
  return std::max(0.0, 2.0 * tip_radius_mm);
}

double contact_retraction(double object_diameter_mm, const GripperGeometry& gripper,
                          const CurvatureMap& map) {
  if (!(object_diameter_mm > 0.0))
    throw std::out_of_range("object diameter must be positive");
  if (object_diameter_mm > gripper.max_aperture_mm)
    throw std::out_of_range("object wider than the gripper opening");
  if (grip_aperture(map.retraction_min_mm, gripper, map) <= object_diameter_mm)
    return map.retraction_min_mm;
  if (grip_aperture(map.retraction_max_mm, gripper, map) > object_diameter_mm)
    throw std::out_of_range("gripper cannot close onto this diameter within travel");
  double lo = map.retraction_min_mm;  // aperture(lo) > d
  double hi = map.retraction_max_mm;  // aperture(hi) <= d
  while (hi - lo > 5e-4) {
    const double mid = 0.5 * (lo + hi);
    if (grip_aperture(mid, gripper, map) <= object_diameter_mm)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace berrygrip
