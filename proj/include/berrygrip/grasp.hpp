#pragma once

#include <string>
#include <vector>

#include "berrygrip/csv.hpp"
#include "berrygrip/geometry.hpp"

namespace berrygrip {

struct PushPullForces {
  double push_n = 0.0;
  double pull_n = 0.0;
};

// Push/pull force pair for a draft-cone test piece gripped by n fingertips,
// each pressing with finger_force_n normal to the cone wall. cone_angle_deg is
// the full included draft angle; friction_coeff the tip/wall friction.
//
// The pair is computed so that push - pull cancels the friction term exactly
// in floating point (each addend is quantized to 33 significant bits, making
// both sums exact). The inverse below then recovers the finger force
// bit-identically for any friction coefficient, at a cost of ~1e-10 relative
// quantization error, far below the fixture's measurement resolution.
PushPullForces cone_push_pull(double finger_force_n, int finger_count, double cone_angle_deg,
                              double friction_coeff);

// Per-finger normal force back from a measured push/pull pair. Friction-free
// by construction: (push - pull) / (2 n sin(angle/2)).
double finger_force_from_push_pull(double push_n, double pull_n, int finger_count,
                                   double cone_angle_deg);

// Post-contact fingertip force model: zero until the aperture closes onto the
// object, then linear in the extra retraction. The stiffness is anchored so
// the model reproduces anchor_force_n at (anchor_retraction_mm,
// anchor_diameter_mm) exactly.
struct ContactModel {
  double anchor_force_n = 4.92;
  double anchor_retraction_mm = 9.0;
  double anchor_diameter_mm = 47.0;

  void validate() const;
};

// Optional per-diameter stiffness refinement fitted from a digitized force
// surface (retraction_mm, diameter_mm, force_N rows).
class StiffnessTable {
 public:
  static StiffnessTable fit(const CsvTable& table, const GripperGeometry& gripper,
                            const CurvatureMap& map);

  bool empty() const { return entries_.empty(); }
  double stiffness_n_per_mm(double diameter_mm) const;  // linear in d, clamped ends

 private:
  struct Entry {
    double diameter_mm;
    double stiffness_n_per_mm;
  };
  std::vector<Entry> entries_;
};

// Evaluator bound to one object diameter; precomputes the contact retraction
// so per-tick evaluation is a clamped linear map.
class ContactPlant {
 public:
  ContactPlant(const GripperGeometry& gripper, const CurvatureMap& map,
               const ContactModel& model, double object_diameter_mm);
  ContactPlant(const GripperGeometry& gripper, const CurvatureMap& map,
               const ContactModel& model, double object_diameter_mm,
               const StiffnessTable& table);

  double force_n(double retraction_mm) const {
    const double squeeze = retraction_mm - contact_retraction_mm_;
    if (squeeze <= 0.0) return 0.0;
    return anchor_force_n_ * (squeeze / anchor_denom_mm_);
  }

  double contact_retraction_mm() const { return contact_retraction_mm_; }
  double stiffness_n_per_mm() const { return anchor_force_n_ / anchor_denom_mm_; }

 private:
  double contact_retraction_mm_;
  double anchor_force_n_;
  double anchor_denom_mm_;
};

// Convenience single evaluation of the model above.
double fingertip_force(double retraction_mm, double object_diameter_mm,
                       const GripperGeometry& gripper, const CurvatureMap& map,
                       const ContactModel& model);

enum class RetentionShape {
  sphere,
  cylinder,
  cube,
  upright_cone,
  inverted_cone,
  icosahedron,
  stellated_dodecahedron,
};

RetentionShape retention_shape_from_string(const std::string& name);
std::string to_string(RetentionShape shape);

struct RetentionRecord {
  RetentionShape shape;
  double retraction_mm;
  double force_n;
};

// Bench-measured pull-off retention forces per test shape and retraction.
class RetentionDataset {
 public:
  static RetentionDataset from_table(const CsvTable& table);
  static RetentionDataset from_csv_file(const std::string& path);

  void merge(const RetentionDataset& other);

  // Exact grid value, or linear interpolation between the two neighboring
  // retractions of the same shape. Queries outside the grid throw.
  double query(RetentionShape shape, double retraction_mm) const;

  const std::vector<RetentionRecord>& records() const { return records_; }

 private:
  std::vector<RetentionRecord> records_;
};

}  // namespace berrygrip
