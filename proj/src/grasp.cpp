#include "berrygrip/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace berrygrip {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void check_cone_args(int finger_count, double cone_angle_deg) {
  if (finger_count < 1) throw std::invalid_argument("finger count must be at least 1");
  if (!(cone_angle_deg > 0.0 && cone_angle_deg < 180.0))
    throw std::invalid_argument("cone angle must lie in (0, 180) degrees");
}

// Round to 33 significant bits (Veltkamp split with C = 2^20 + 1).
double quantize33(double v) {
  constexpr double c = 1048577.0;  // 2^20 + 1
  const double t = c * v;
  return t - (t - v);
}

}  // namespace

PushPullForces cone_push_pull(double finger_force_n, int finger_count, double cone_angle_deg,
                              double friction_coeff) {
  check_cone_args(finger_count, cone_angle_deg);
  if (finger_force_n < 0.0) throw std::out_of_range("finger force must be nonnegative");
  if (friction_coeff < 0.0) throw std::out_of_range("friction coefficient must be nonnegative");
  const double half = cone_angle_deg * kPi / 360.0;
  const double wedge = quantize33(finger_count * finger_force_n * std::sin(half));
  const double grip = quantize33(finger_count * finger_force_n * friction_coeff * std::cos(half));
  return {grip + wedge, grip - wedge};
}

double finger_force_from_push_pull(double push_n, double pull_n, int finger_count,
                                   double cone_angle_deg) {
  check_cone_args(finger_count, cone_angle_deg);
  const double half = cone_angle_deg * kPi / 360.0;
  return (push_n - pull_n) / (2.0 * finger_count * std::sin(half));
}

void ContactModel::validate() const {
  if (!(anchor_force_n > 0.0)) throw std::invalid_argument("anchor force must be positive");
  if (!(anchor_retraction_mm > 0.0))
    throw std::invalid_argument("anchor retraction must be positive");
  if (!(anchor_diameter_mm > 0.0)) throw std::invalid_argument("anchor diameter must be positive");
}

StiffnessTable StiffnessTable::fit(const CsvTable& table, const GripperGeometry& gripper,
                                   const CurvatureMap& map) {
  const int c_dl = table.column("retraction_mm");
  const int c_d = table.column("diameter_mm");
  const int c_f = table.column("force_N");
  if (c_dl < 0 || c_d < 0 || c_f < 0)
    throw std::runtime_error("stiffness fit needs retraction_mm, diameter_mm, force_N columns");

  // Zero-intercept least squares of force on post-contact squeeze, one
  // stiffness per distinct diameter.
  std::map<double, std::pair<double, double>> acc;  // d -> (sum squeeze*f, sum squeeze^2)
  for (const auto& row : table.rows) {
    const double dl = parse_number(row[c_dl]);
    const double d = parse_number(row[c_d]);
    const double f = parse_number(row[c_f]);
    const double squeeze = dl - contact_retraction(d, gripper, map);
    if (squeeze <= 0.0) continue;
    auto& [sxy, sxx] = acc[d];
    sxy += squeeze * f;
    sxx += squeeze * squeeze;
  }
  StiffnessTable out;
  for (const auto& [d, sums] : acc) {
    if (sums.second <= 0.0) continue;
    out.entries_.push_back({d, sums.first / sums.second});
  }
  if (out.entries_.empty())
    throw std::runtime_error("stiffness fit: no post-contact samples in the dataset");
  return out;
}

double StiffnessTable::stiffness_n_per_mm(double diameter_mm) const {
  if (entries_.empty()) throw std::runtime_error("stiffness table is empty");
  if (diameter_mm <= entries_.front().diameter_mm) return entries_.front().stiffness_n_per_mm;
  if (diameter_mm >= entries_.back().diameter_mm) return entries_.back().stiffness_n_per_mm;
  for (size_t i = 1; i < entries_.size(); ++i) {
    if (diameter_mm <= entries_[i].diameter_mm) {
      const auto& a = entries_[i - 1];
      const auto& b = entries_[i];
      const double t = (diameter_mm - a.diameter_mm) / (b.diameter_mm - a.diameter_mm);
      return a.stiffness_n_per_mm + t * (b.stiffness_n_per_mm - a.stiffness_n_per_mm);
    }
  }
  return entries_.back().stiffness_n_per_mm;
}

ContactPlant::ContactPlant(const GripperGeometry& gripper, const CurvatureMap& map,
                           const ContactModel& model, double object_diameter_mm) {
  model.validate();
  contact_retraction_mm_ = contact_retraction(object_diameter_mm, gripper, map);
  anchor_force_n_ = model.anchor_force_n;
  anchor_denom_mm_ =
      model.anchor_retraction_mm - contact_retraction(model.anchor_diameter_mm, gripper, map);
  if (!(anchor_denom_mm_ > 0.0))
    throw std::invalid_argument("contact anchor lies before first contact; no stiffness defined");
}

ContactPlant::ContactPlant(const GripperGeometry& gripper, const CurvatureMap& map,
                           const ContactModel& model, double object_diameter_mm,
                           const StiffnessTable& table) {
  model.validate();
  contact_retraction_mm_ = contact_retraction(object_diameter_mm, gripper, map);
  const double k = table.stiffness_n_per_mm(object_diameter_mm);
  if (!(k > 0.0)) throw std::invalid_argument("stiffness table gave a nonpositive stiffness");
  anchor_force_n_ = k;
  anchor_denom_mm_ = 1.0;
}

double fingertip_force(double retraction_mm, double object_diameter_mm,
                       const GripperGeometry& gripper, const CurvatureMap& map,
                       const ContactModel& model) {
  if (retraction_mm < map.retraction_min_mm || retraction_mm > map.retraction_max_mm)
    throw std::out_of_range("retraction outside travel");
  ContactPlant plant(gripper, map, model, object_diameter_mm);
  return plant.force_n(retraction_mm);
}

RetentionShape retention_shape_from_string(const std::string& name) {
  if (name == "sphere") return RetentionShape::sphere;
  if (name == "cylinder") return RetentionShape::cylinder;
  if (name == "cube") return RetentionShape::cube;
  if (name == "upright_cone") return RetentionShape::upright_cone;
  if (name == "inverted_cone") return RetentionShape::inverted_cone;
  if (name == "icosahedron") return RetentionShape::icosahedron;
  if (name == "stellated_dodecahedron") return RetentionShape::stellated_dodecahedron;
  throw std::out_of_range("unknown test shape: " + name);
}

std::string to_string(RetentionShape shape) {
  switch (shape) {
    case RetentionShape::sphere: return "sphere";
    case RetentionShape::cylinder: return "cylinder";
    case RetentionShape::cube: return "cube";
    case RetentionShape::upright_cone: return "upright_cone";
    case RetentionShape::inverted_cone: return "inverted_cone";
    case RetentionShape::icosahedron: return "icosahedron";
    case RetentionShape::stellated_dodecahedron: return "stellated_dodecahedron";
  }
  throw std::logic_error("unreachable shape");
}

RetentionDataset RetentionDataset::from_table(const CsvTable& table) {
  const int c_s = table.column("shape");
  const int c_r = table.column("retraction_mm");
  const int c_f = table.column("force_N");
  if (c_s < 0 || c_r < 0 || c_f < 0)
    throw std::runtime_error("retention data needs shape, retraction_mm, force_N columns");
  RetentionDataset out;
  for (const auto& row : table.rows) {
    out.records_.push_back({retention_shape_from_string(row[c_s]), parse_number(row[c_r]),
                            parse_number(row[c_f])});
  }
  return out;
}

RetentionDataset RetentionDataset::from_csv_file(const std::string& path) {
  return from_table(read_csv(path));
}

void RetentionDataset::merge(const RetentionDataset& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

double RetentionDataset::query(RetentionShape shape, double retraction_mm) const {
  // Collect this shape's grid, sorted by retraction.
  std::vector<const RetentionRecord*> grid;
  for (const auto& r : records_)
    if (r.shape == shape) grid.push_back(&r);
  if (grid.empty()) throw std::out_of_range("shape not present in the retention dataset");
  std::sort(grid.begin(), grid.end(),
            [](const RetentionRecord* a, const RetentionRecord* b) {
              return a->retraction_mm < b->retraction_mm;
            });
  for (const auto* r : grid)
    if (r->retraction_mm == retraction_mm) return r->force_n;
  if (retraction_mm < grid.front()->retraction_mm || retraction_mm > grid.back()->retraction_mm)
    throw std::out_of_range("retraction outside the retention grid for this shape");
  for (size_t i = 1; i < grid.size(); ++i) {
    if (retraction_mm <= grid[i]->retraction_mm) {
      const auto* a = grid[i - 1];
      const auto* b = grid[i];
      const double t = (retraction_mm - a->retraction_mm) / (b->retraction_mm - a->retraction_mm);
      return a->force_n + t * (b->force_n - a->force_n);
    }
  }
  throw std::logic_error("unreachable retention query");
}

}  // namespace berrygrip
