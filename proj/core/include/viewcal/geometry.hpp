#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "viewcal/rng.hpp"

namespace viewcal::geometry {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;

/// Rigid camera-to-world transform. The rotation is orthonormal with det +1 (within 1e-9)
/// and the bottom row is (0, 0, 0, 1). Cameras look along their local -z axis with +y up.
class Pose {
 public:
  static constexpr double kTolerance = 1e-9;

  Pose() : matrix_(Mat4::Identity()) {}
  /// Throws InvalidInput if `matrix` is not a rigid transform.
  explicit Pose(const Mat4& matrix);
  Pose(const Mat3& rotation, const Vec3& position);

  const Mat4& matrix() const noexcept { return matrix_; }
  Mat3 rotation() const { return matrix_.topLeftCorner<3, 3>(); }
  Vec3 position() const { return matrix_.topRightCorner<3, 1>(); }

  /// Row-major 16 entries.
  std::array<double, 16> to_row_major() const;
  static Pose from_row_major(const std::array<double, 16>& values);

  bool operator==(const Pose& other) const { return matrix_ == other.matrix_; }

 private:
  Mat4 matrix_;
};

/// Six relative-transform parameters; angles in radians.
struct RelativeTransform {
  double t_x = 0.0;
  double t_y = 0.0;
  double t_z = 0.0;
  double theta_x = 0.0;
  double theta_y = 0.0;
  double theta_z = 0.0;

  Vec3 translation() const { return {t_x, t_y, t_z}; }
  std::array<double, 6> to_array() const { return {t_x, t_y, t_z, theta_x, theta_y, theta_z}; }
  static RelativeTransform from_array(const std::array<double, 6>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  bool is_finite() const;
};

/// The three axis factors of the relative rotation, in the sign convention
///   X = [1 0 0; 0 c s; 0 -s c], Y = [c 0 -s; 0 1 0; s 0 c], Z = [c s 0; -s c 0; 0 0 1].
Mat3 axis_rotation_x(double theta);
Mat3 axis_rotation_y(double theta);
Mat3 axis_rotation_z(double theta);

/// Derivatives of the axis factors with respect to their angle.
Mat3 axis_rotation_x_derivative(double theta);
Mat3 axis_rotation_y_derivative(double theta);
Mat3 axis_rotation_z_derivative(double theta);

/// Delta R = X(theta_x) * Y(theta_y) * Z(theta_z).
Mat3 euler_to_rotation(const RelativeTransform& rt);

/// [[Delta R, Delta t], [0, 1]].
Mat4 relative_matrix(const RelativeTransform& rt);

/// Left-multiplies the initial pose by the relative transform.
Pose calibrate(const Pose& initial, const RelativeTransform& rt);

/// First two rotation columns, flattened column by column.
using Rot6D = std::array<double, 6>;

Rot6D encode_rot6d(const Mat3& rotation);
/// Gram-Schmidt on the two columns, third column by cross product.
/// Throws DegenerateInput when a column vanishes or the columns are within 1e-6 rad of parallel.
Mat3 decode_rot6d(const Rot6D& values);

/// Camera placement law on an origin-centered sphere. Angles in degrees.
struct PoseDistribution {
  double radius = 4.0;
  std::array<double, 2> azimuth_deg{0.0, 360.0};
  std::array<double, 2> elevation_deg{-30.0, 90.0};
  Vec3 lookat_mean = Vec3::Zero();
  /// Per-axis standard deviation of a Gaussian look-at; zero means a fixed point.
  double lookat_stddev = 0.0;
  Vec3 up = Vec3::UnitZ();

  /// Throws InvalidInput on empty ranges, non-positive radius or non-unit up vector.
  void validate() const;
};

/// Rotation whose columns are (right, true_up, -forward) for a camera at `position`
/// looking at `target`. Throws DegenerateInput on coincident points or forward parallel to up.
Mat3 look_at_rotation(const Vec3& position, const Vec3& target, const Vec3& up);

Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up);

/// Draws one pose: azimuth then elevation uniform over their ranges, camera at
/// radius * (cos e cos a, cos e sin a, sin e), then the look-at point (three normals when
/// lookat_stddev > 0), then the look-at rotation.
Pose sample_pose(const PoseDistribution& dist, std::uint64_t seed);

/// Same as sample_pose but drawing from an existing stream.
Pose sample_pose(const PoseDistribution& dist, CounterRng& rng);

/// Rotation by `angle` (radians) about the unit `axis`.
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

/// Random world-frame rigid motion with rotation angle in [0, max_angle_deg] about a uniform
/// axis and translation of length in [0, max_translation] along a uniform direction.
Mat4 random_rigid_motion(double max_angle_deg, double max_translation, CounterRng& rng);

/// `random_rigid_motion(...) * pose`.
Pose perturb_pose(const Pose& pose, double max_angle_deg, double max_translation, CounterRng& rng);

struct PoseError {
  double rot_deg = 0.0;
  double trans = 0.0;
};

/// Geodesic angle between the rotations in degrees (in [0, 180]) and the distance between
/// camera positions.
PoseError pose_error(const Pose& estimate, const Pose& truth);

/// Rotation angle of a rotation matrix in radians, stable near 0 and pi.
double rotation_angle(const Mat3& rotation);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace viewcal::geometry
