#pragma once

#include <array>

namespace berrygrip {

struct Vec2 {
  double x_mm = 0.0;
  double y_mm = 0.0;
};

// One tendon-driven finger: a spring-steel backbone with the tendon routed at
// a fixed offset, molded into a soft body. Bending toward the tendon side only.
struct FingerGeometry {
  double length_mm = 64.5;
  double tendon_offset_mm = 3.0;
  double backbone_width_mm = 5.0;
  double backbone_thickness_mm = 0.3;
  double max_tendon_force_n = 20.0;

  void validate() const;
};

// Empirical curvature response, quadratic with zero intercept so a slack
// tendon leaves the finger straight. Curvature in 1/m; retraction in mm;
// tendon force in N.
struct CurvatureMap {
  double retraction_a2 = 0.20;   // 1/m per mm^2
  double retraction_a1 = 2.25;   // 1/m per mm
  double force_b2 = 0.065;       // 1/m per N^2
  double force_b1 = 0.85;        // 1/m per N
  double retraction_min_mm = 0.0;
  double retraction_max_mm = 10.0;

  void validate() const;
};

// Three identical fingers mounted on a circular palm, tilted outward from the
// gripper axis. palm_radius_mm is solved at construction so that the open
// aperture equals max_aperture_mm; use make_gripper_geometry().
struct GripperGeometry {
  std::array<FingerGeometry, 3> fingers{};
  double angular_spacing_deg = 120.0;
  double mount_offset_angle_deg = 20.0;
  double palm_radius_mm = 0.0;
  double max_aperture_mm = 55.0;

  void validate() const;
};

GripperGeometry make_gripper_geometry(const FingerGeometry& finger = FingerGeometry{},
                                      double max_aperture_mm = 55.0,
                                      double mount_offset_angle_deg = 20.0);

// Ratio of the backbone's lateral to bending stiffness, (width/thickness)^2;
// dimensionless. Requires 0 < thickness <= width.
double backbone_stiffness_ratio(double width_mm, double thickness_mm);

// kappa(dl) = a2*dl^2 + a1*dl over the retraction domain.
double curvature_from_retraction(double retraction_mm, const CurvatureMap& map);

// kappa(F) = b2*F^2 + b1*F for tendon force up to the actuator limit.
double curvature_from_tendon_force(double force_n, const CurvatureMap& map,
                                   double max_tendon_force_n = 20.0);

// Point at arc-length fraction s along a constant-curvature arc of total
// length length_mm, in the finger frame: y along the undeflected finger,
// x toward the bending side. Continuous at kappa = 0.
Vec2 arc_point(double kappa_per_m, double length_mm, double s);

// Diameter of the circle the three fingertips inscribe about the gripper
// axis, clamped at 0 once the fingertips meet the axis.
double grip_aperture(double retraction_mm, const GripperGeometry& gripper,
                     const CurvatureMap& map);

// Smallest retraction at which the aperture has closed onto an object of the
// given diameter; bisection to 1e-3 mm.
double contact_retraction(double object_diameter_mm, const GripperGeometry& gripper,
                          const CurvatureMap& map);

}  // namespace berrygrip
