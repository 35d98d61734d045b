#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewcal/geometry.hpp"
#include "viewcal/image.hpp"
#include "viewcal/ot.hpp"
#include "viewcal/regressor.hpp"
#include "viewcal/render.hpp"

namespace viewcal::calib {

using geometry::Pose;
using geometry::RelativeTransform;

struct MatchConfig {
  int grid = 8;   ///< l = grid * grid
  int dim = 256;  ///< descriptor length d
  Eigen::Index feature_count() const { return static_cast<Eigen::Index>(grid) * grid; }
};

/// Everything needed to go from a pose to a transport plan against another view.
struct ViewMatchConfig {
  render::Intrinsics intrinsics;
  render::RenderConfig render;
  MatchConfig match;
  ot::UotConfig uot;
};

/// Features of both images, cosine cost, uniform masses, unbalanced Sinkhorn.
ot::UotSolution match_views(const ImageGrid& source, const ImageGrid& target,
                            const MatchConfig& match, const ot::UotConfig& uot);

/// ||G(rt) * A - B||_F^2 with G(rt) = [[Delta R, Delta t], [0, 1]].
double pose_matrix_loss(const RelativeTransform& rt, const Pose& pose_a, const Pose& pose_b);

/// Gradient of pose_matrix_loss with respect to (t_x, t_y, t_z, theta_x, theta_y, theta_z).
Eigen::Matrix<double, 6, 1> pose_matrix_loss_gradient(const RelativeTransform& rt,
                                                      const Pose& pose_a, const Pose& pose_b);

struct LossEvaluation {
  double loss = 0.0;
  RelativeTransform prediction;
  /// dL/dparameters in Regressor::parameters() layout; empty unless requested.
  Eigen::VectorXd gradient;
};

/// Calibration loss for a fixed plan between views rendered at pose_a (source) and pose_b
/// (target). The plan is treated as a constant input.
LossEvaluation calibration_loss_from_plan(const Regressor& reg, const ot::TransportPlan& plan,
                                          const Pose& pose_a, const Pose& pose_b,
                                          bool with_gradient);

/// Full pipeline: render both poses, match, predict, calibrate pose_a, compare with pose_b.
double calibration_loss(const Regressor& reg, const render::RadianceField& field,
                        const Pose& pose_a, const Pose& pose_b, const ViewMatchConfig& cfg,
                        std::uint64_t render_seed = 0);

struct TrainConfig {
  int pairs_per_epoch = 50;
  int epochs = 10;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  Eigen::Index hidden_width = 128;
  geometry::PoseDistribution pose_distribution;
  double max_relative_angle_deg = 10.0;
  double max_relative_translation = 0.25;

  void validate() const;
};

struct TrainResult {
  Regressor regressor;
  std::vector<double> epoch_mean_loss;
};

/// Initial weights used by train_regressor for a given config.
Regressor initial_regressor(const TrainConfig& cfg, Eigen::Index input_width);

/// Pair sampled for training step `step`: pose_a from the distribution, pose_b = random rigid
/// motion (bounded by the config) applied to pose_a.
std::pair<Pose, Pose> training_pair(const TrainConfig& cfg, long step);

/// Adam on the calibration loss, one pose pair per step, pairs_per_epoch * epochs steps.
/// Throws NumericError naming the step and its pair seed when the loss is not finite.
TrainResult train_regressor(const render::RadianceField& field, const TrainConfig& cfg,
                            const ViewMatchConfig& view_cfg);

struct RefineConfig {
  int steps = 30;
  /// Fraction of the damped Gauss-Newton step tried first.
  double step_size = 1.0;
  double fd_step = 1e-3;
  int max_halvings = 5;
  /// Initial Levenberg-Marquardt damping, relative to the diagonal of J^T J.
  double damping = 1e-2;

  /// Throws InvalidInput on negative counts or non-positive sizes.
  void validate() const;
};

struct RefineResult {
  Pose pose;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  /// Loss of every accepted iterate, starting with the input.
  std::vector<double> curve;
};

/// Nine pose parameters: Rot6D columns then camera position.
using PoseParams = Eigen::Matrix<double, 9, 1>;
PoseParams pose_to_params(const Pose& pose);
/// Throws DegenerateInput when the rotation columns are degenerate.
Pose params_to_pose(const PoseParams& params);

/// Photometric pose refinement with the field held fixed. Central finite differences over the
/// nine parameters give the Jacobian of the per-pixel residuals, hence the loss gradient 2 J^T r,
/// and each step moves along the Levenberg-Marquardt direction (J^T J + damping diag)^{-1} J^T r
/// scaled by `step_size`. A step that does not lower the loss is halved up to `max_halvings`
/// times; if all attempts fail the damping grows and the next step is tried. The lowest-loss
/// iterate is returned, so the final loss never exceeds the initial one.
RefineResult refine_pose(const render::RadianceField& field, const Pose& pose,
                         const ImageGrid& target, const render::Intrinsics& intr,
                         const render::RenderConfig& render_cfg, const RefineConfig& cfg);

struct PoseErrorSummary {
  std::vector<geometry::PoseError> per_pose;
  double mean_rot_deg = 0.0;
  double mean_trans = 0.0;
};

/// Index-aligned pose errors and their arithmetic means.
PoseErrorSummary evaluate(std::span<const Pose> estimates, std::span<const Pose> truths);

struct CalibrationReport {
  std::vector<int> ids;
  PoseErrorSummary initial;
  PoseErrorSummary final;
  std::vector<double> training_curve;
  std::vector<std::vector<double>> refine_curves;
};

struct ViewCalibration {
  Pose initial;
  RelativeTransform predicted;
  Pose calibrated;
  /// Whether the calibrated pose lowered the photometric loss and was kept.
  bool calibration_accepted = false;
  Pose final;
  double loss_initial = 0.0;
  double loss_calibrated = 0.0;
  double loss_final = 0.0;
  std::vector<double> refine_curve;
};

struct CalibrationOptions {
  bool refine = true;
  RefineConfig refine_cfg;
};

/// Calibrate one view: render the initial pose, match it to the real image, predict and apply
/// the relative transform, keep it only if it lowers the photometric loss, then optionally refine.
ViewCalibration calibrate_view(const render::RadianceField& field, const Regressor& reg,
                               const Pose& initial, const ImageGrid& real,
                               const ViewMatchConfig& cfg, const CalibrationOptions& opts);

}  // namespace viewcal::calib
