#include "viewcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "viewcal/error.hpp"

namespace viewcal::geometry {

namespace {

void check_rigid(const Mat4& m) {
  if (!m.allFinite()) throw InvalidInput("pose matrix has a non-finite entry");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw InvalidInput("pose matrix bottom row must be (0, 0, 0, 1)");
  }
  const Mat3 r = m.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > Pose::kTolerance) {
    throw InvalidInput("pose rotation is not orthonormal (|R^T R - I| = " + std::to_string(ortho) + ")");
  }
  if (std::abs(r.determinant() - 1.0) > Pose::kTolerance) {
    throw InvalidInput("pose rotation determinant is not +1");
  }
}

Vec3 uniform_unit_vector(CounterRng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace

Pose::Pose(const Mat4& matrix) : matrix_(matrix) { check_rigid(matrix_); }

Pose::Pose(const Mat3& rotation, const Vec3& position) : matrix_(Mat4::Identity()) {
  matrix_.topLeftCorner<3, 3>() = rotation;
  matrix_.topRightCorner<3, 1>() = position;
  check_rigid(matrix_);
}

std::array<double, 16> Pose::to_row_major() const {
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = matrix_(r, c);
  return out;
}

Pose Pose::from_row_major(const std::array<double, 16>& values) {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  return Pose(m);
}

bool RelativeTransform::is_finite() const {
  return std::isfinite(t_x) && std::isfinite(t_y) && std::isfinite(t_z) &&
         std::isfinite(theta_x) && std::isfinite(theta_y) && std::isfinite(theta_z);
}

Mat3 axis_rotation_x(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << 1, 0, 0,
       0, c, s,
       0, -s, c;
  return m;
}

Mat3 axis_rotation_y(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << c, 0, -s,
       0, 1, 0,
       s, 0, c;
  return m;
}

Mat3 axis_rotation_z(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << c, s, 0,
       -s, c, 0,
       0, 0, 1;
  return m;
}

Mat3 axis_rotation_x_derivative(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << 0, 0, 0,
       0, -s, c,
       0, -c, -s;
  return m;
}

Mat3 axis_rotation_y_derivative(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << -s, 0, -c,
       0, 0, 0,
       c, 0, -s;
  return m;
}

Mat3 axis_rotation_z_derivative(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << -s, c, 0,
       -c, -s, 0,
       0, 0, 0;
  return m;
}

Mat3 euler_to_rotation(const RelativeTransform& rt) {
  return axis_rotation_x(rt.theta_x) * axis_rotation_y(rt.theta_y) * axis_rotation_z(rt.theta_z);
}

Mat4 relative_matrix(const RelativeTransform& rt) {
  Mat4 g = Mat4::Identity();
  g.topLeftCorner<3, 3>() = euler_to_rotation(rt);
  g.topRightCorner<3, 1>() = rt.translation();
  return g;
}

Pose calibrate(const Pose& initial, const RelativeTransform& rt) {
  if (!rt.is_finite()) throw InvalidInput("relative transform has a non-finite entry");
  Mat4 out = relative_matrix(rt) * initial.matrix();
  out.row(3) << 0.0, 0.0, 0.0, 1.0;
  return Pose(out);
}

Rot6D encode_rot6d(const Mat3& rotation) {
  return {rotation(0, 0), rotation(1, 0), rotation(2, 0),
          rotation(0, 1), rotation(1, 1), rotation(2, 1)};
}

Mat3 decode_rot6d(const Rot6D& values) {
  const Vec3 a1(values[0], values[1], values[2]);
  const Vec3 a2(values[3], values[4], values[5]);
  const double n1 = a1.norm();
  const double n2 = a2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0) || !std::isfinite(n1) || !std::isfinite(n2)) {
    throw DegenerateInput("6D rotation has a zero or non-finite column");
  }
  const double sin_angle = a1.cross(a2).norm() / (n1 * n2);
  if (sin_angle < std::sin(1e-6)) {
    throw DegenerateInput("6D rotation columns are (anti)parallel");
  }
  const Vec3 b1 = a1 / n1;
  const Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

void PoseDistribution::validate() const {
  if (!(radius > 0.0)) throw InvalidInput("pose distribution radius must be positive");
  if (!(azimuth_deg[0] <= azimuth_deg[1])) throw InvalidInput("azimuth range is empty");
  if (!(elevation_deg[0] <= elevation_deg[1])) throw InvalidInput("elevation range is empty");
  if (!(lookat_stddev >= 0.0)) throw InvalidInput("look-at stddev must be nonnegative");
  if (std::abs(up.norm() - 1.0) > 1e-9) throw InvalidInput("up vector must have unit norm");
}

Mat3 look_at_rotation(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 to_target = target - position;
  const double dist = to_target.norm();
  if (!(dist > 1e-12)) throw DegenerateInput("camera position coincides with the look-at point");
  const Vec3 forward = to_target / dist;
  const Vec3 side = forward.cross(up);
  if (side.norm() < 1e-9 * up.norm()) {
    throw DegenerateInput("camera forward direction is parallel to the up vector");
  }
  const Vec3 right = side.normalized();
  const Vec3 true_up = right.cross(forward);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = true_up;
  r.col(2) = -forward;
  return r;
}

Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  return Pose(look_at_rotation(position, target, up), position);
}

Pose sample_pose(const PoseDistribution& dist, CounterRng& rng) {
  dist.validate();
  const double azimuth = deg_to_rad(rng.uniform(dist.azimuth_deg[0], dist.azimuth_deg[1]));
  const double elevation = deg_to_rad(rng.uniform(dist.elevation_deg[0], dist.elevation_deg[1]));
  const Vec3 position = dist.radius * Vec3(std::cos(elevation) * std::cos(azimuth),
                                           std::cos(elevation) * std::sin(azimuth),
                                           std::sin(elevation));
  Vec3 lookat = dist.lookat_mean;
  if (dist.lookat_stddev > 0.0) {
    for (int k = 0; k < 3; ++k) lookat[k] += rng.normal(0.0, dist.lookat_stddev);
  }
  return look_at(position, lookat, dist.up);
}

Pose sample_pose(const PoseDistribution& dist, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_pose(dist, rng);
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat4 random_rigid_motion(double max_angle_deg, double max_translation, CounterRng& rng) {
  const Vec3 axis = uniform_unit_vector(rng);
  const double angle = deg_to_rad(rng.uniform(0.0, max_angle_deg));
  const Vec3 direction = uniform_unit_vector(rng);
  const double length = rng.uniform(0.0, max_translation);
  Mat4 g = Mat4::Identity();
  g.topLeftCorner<3, 3>() = axis_angle_rotation(axis, angle);
  g.topRightCorner<3, 1>() = length * direction;
  return g;
}

Pose perturb_pose(const Pose& pose, double max_angle_deg, double max_translation, CounterRng& rng) {
  Mat4 out = random_rigid_motion(max_angle_deg, max_translation, rng) * pose.matrix();
  out.row(3) << 0.0, 0.0, 0.0, 1.0;
  return Pose(out);
}

double rotation_angle(const Mat3& r) {
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

PoseError pose_error(const Pose& estimate, const Pose& truth) {
  const double angle = rotation_angle(estimate.rotation().transpose() * truth.rotation());
  return {std::clamp(rad_to_deg(angle), 0.0, 180.0), (estimate.position() - truth.position()).norm()};
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace viewcal::geometry
