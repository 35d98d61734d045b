#include "viewcal/calib.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>

#include "viewcal/error.hpp"
#include "viewcal/matching.hpp"

namespace viewcal::calib {

using geometry::Mat3;
using geometry::Mat4;

ot::UotSolution match_views(const ImageGrid& source, const ImageGrid& target,
                            const MatchConfig& match, const ot::UotConfig& uot) {
  const matching::FeatureSet fs = matching::extract_features(source, match.grid, match.dim);
  const matching::FeatureSet ft = matching::extract_features(target, match.grid, match.dim);
  const ot::CostMatrix cost = matching::cosine_cost(fs, ft);
  const ot::MassVector mu_s = matching::uniform_masses(fs.count());
  const ot::MassVector mu_t = matching::uniform_masses(ft.count());
  return ot::solve_uot(cost, mu_s, mu_t, uot);
}

double pose_matrix_loss(const RelativeTransform& rt, const Pose& pose_a, const Pose& pose_b) {
  const Mat4 diff = geometry::relative_matrix(rt) * pose_a.matrix() - pose_b.matrix();
  return diff.squaredNorm();
}

Eigen::Matrix<double, 6, 1> pose_matrix_loss_gradient(const RelativeTransform& rt,
                                                      const Pose& pose_a, const Pose& pose_b) {
  const Mat4 diff = geometry::relative_matrix(rt) * pose_a.matrix() - pose_b.matrix();
  // dL/dG for L = ||G A - B||^2.
  const Mat4 dG = 2.0 * diff * pose_a.matrix().transpose();
  const Mat3 dR = dG.topLeftCorner<3, 3>();

  const Mat3 rx = geometry::axis_rotation_x(rt.theta_x);
  const Mat3 ry = geometry::axis_rotation_y(rt.theta_y);
  const Mat3 rz = geometry::axis_rotation_z(rt.theta_z);
  const Mat3 drx = geometry::axis_rotation_x_derivative(rt.theta_x) * ry * rz;
  const Mat3 dry = rx * geometry::axis_rotation_y_derivative(rt.theta_y) * rz;
  const Mat3 drz = rx * ry * geometry::axis_rotation_z_derivative(rt.theta_z);

  Eigen::Matrix<double, 6, 1> g;
  g << dG(0, 3), dG(1, 3), dG(2, 3), (dR.array() * drx.array()).sum(),
      (dR.array() * dry.array()).sum(), (dR.array() * drz.array()).sum();
  return g;
}

LossEvaluation calibration_loss_from_plan(const Regressor& reg, const ot::TransportPlan& plan,
                                          const Pose& pose_a, const Pose& pose_b,
                                          bool with_gradient) {
  if (plan.rows() * plan.cols() != reg.input_width()) {
    throw InvalidInput("plan size does not match the regressor input width");
  }
  const Regressor::Activations act = reg.forward(plan_input(plan));
  const Eigen::VectorXd& y = act.output;
  LossEvaluation out;
  out.prediction = {y[0], y[1], y[2], y[3], y[4], y[5]};
  out.loss = pose_matrix_loss(out.prediction, pose_a, pose_b);
  if (with_gradient) {
    const Eigen::VectorXd dy = pose_matrix_loss_gradient(out.prediction, pose_a, pose_b);
    out.gradient = reg.backward(act, dy);
  }
  return out;
}

double calibration_loss(const Regressor& reg, const render::RadianceField& field,
                        const Pose& pose_a, const Pose& pose_b, const ViewMatchConfig& cfg,
                        std::uint64_t render_seed) {
  const ImageGrid image_a = render::render(field, pose_a, cfg.intrinsics, cfg.render, render_seed);
  const ImageGrid image_b = render::render(field, pose_b, cfg.intrinsics, cfg.render, render_seed);
  const ot::UotSolution sol = match_views(image_a, image_b, cfg.match, cfg.uot);
  return calibration_loss_from_plan(reg, sol.plan, pose_a, pose_b, false).loss;
}

void TrainConfig::validate() const {
  if (pairs_per_epoch <= 0 || epochs <= 0) throw InvalidInput("training counts must be positive");
  if (!(learning_rate >= 0.0)) throw InvalidInput("learning rate must be nonnegative");
  if (hidden_width <= 0) throw InvalidInput("hidden width must be positive");
  if (!(max_relative_angle_deg >= 0.0) || !(max_relative_translation >= 0.0)) {
    throw InvalidInput("perturbation bounds must be nonnegative");
  }
  pose_distribution.validate();
}

Regressor initial_regressor(const TrainConfig& cfg, Eigen::Index input_width) {
  return Regressor::initialized(input_width, cfg.hidden_width, CounterRng::derive(cfg.seed, 0));
}

std::pair<Pose, Pose> training_pair(const TrainConfig& cfg, long step) {
  CounterRng rng(CounterRng::derive(cfg.seed, static_cast<std::uint64_t>(step) + 1));
  Pose a = geometry::sample_pose(cfg.pose_distribution, rng);
  Pose b = geometry::perturb_pose(a, cfg.max_relative_angle_deg, cfg.max_relative_translation, rng);
  return {a, b};
}

TrainResult train_regressor(const render::RadianceField& field, const TrainConfig& cfg,
                            const ViewMatchConfig& view_cfg) {
  cfg.validate();
  const Eigen::Index l = view_cfg.match.feature_count();
  Regressor reg = initial_regressor(cfg, l * l);
  Eigen::VectorXd params = reg.parameters();
  AdamOptimizer adam(params.size(), cfg.learning_rate);

  TrainResult result{reg, {}};
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (int k = 0; k < cfg.pairs_per_epoch; ++k, ++step) {
      const auto [pose_a, pose_b] = training_pair(cfg, step);
      const std::uint64_t render_seed = CounterRng::derive(cfg.seed ^ 0x52454E44ULL, static_cast<std::uint64_t>(step));
      const ImageGrid image_a = render::render(field, pose_a, view_cfg.intrinsics, view_cfg.render, render_seed);
      const ImageGrid image_b = render::render(field, pose_b, view_cfg.intrinsics, view_cfg.render, render_seed);
      const ot::UotSolution sol = match_views(image_a, image_b, view_cfg.match, view_cfg.uot);

      reg.set_parameters(params);
      const LossEvaluation eval = calibration_loss_from_plan(reg, sol.plan, pose_a, pose_b, true);
      if (!std::isfinite(eval.loss) || !eval.gradient.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite calibration loss at step " << step << " (training seed " << cfg.seed
            << ", pair seed " << CounterRng::derive(cfg.seed, static_cast<std::uint64_t>(step) + 1)
            << ", render seed " << render_seed << ")";
        throw NumericError(msg.str());
      }
      sum += eval.loss;
      adam.step(params, eval.gradient);
    }
    result.epoch_mean_loss.push_back(sum / cfg.pairs_per_epoch);
  }
  reg.set_parameters(params);
  result.regressor = std::move(reg);
  return result;
}

void RefineConfig::validate() const {
  if (steps < 0 || max_halvings < 0) throw InvalidInput("refinement counts must be nonnegative");
  if (!(step_size > 0.0) || !(fd_step > 0.0) || !(damping > 0.0)) {
    throw InvalidInput("refinement step size, finite-difference step and damping must be positive");
  }
}

PoseParams pose_to_params(const Pose& pose) {
  const geometry::Rot6D r6 = geometry::encode_rot6d(pose.rotation());
  const geometry::Vec3 p = pose.position();
  PoseParams out;
  out << r6[0], r6[1], r6[2], r6[3], r6[4], r6[5], p[0], p[1], p[2];
  return out;
}

Pose params_to_pose(const PoseParams& params) {
  const geometry::Rot6D r6{params[0], params[1], params[2], params[3], params[4], params[5]};
  return Pose(geometry::decode_rot6d(r6), params.tail<3>());
}

RefineResult refine_pose(const render::RadianceField& field, const Pose& pose,
                         const ImageGrid& target, const render::Intrinsics& intr,
                         const render::RenderConfig& render_cfg, const RefineConfig& cfg) {
  cfg.validate();
  if (target.width() != intr.width || target.height() != intr.height) {
    throw InvalidInput("target image does not match the intrinsics");
  }
  const std::span<const double> real = target.data();
  const auto n_res = static_cast<Eigen::Index>(real.size());
  // Per-pixel residual; empty when the parameters do not decode to a rotation.
  const auto residual_at = [&](const PoseParams& p, Eigen::VectorXd& out) {
    Pose candidate;
    try {
      candidate = params_to_pose(p);
    } catch (const DegenerateInput&) {
      return false;
    }
    const ImageGrid img = render::render(field, candidate, intr, render_cfg);
    out.resize(n_res);
    for (Eigen::Index i = 0; i < n_res; ++i) out[i] = img.data()[i] - real[i];
    return true;
  };
  // The photometric loss of a single view is the squared residual norm.
  const auto loss_of = [](const Eigen::VectorXd& r) { return r.squaredNorm(); };

  PoseParams params = pose_to_params(pose);
  Eigen::VectorXd residual;
  residual_at(params, residual);
  double loss = loss_of(residual);
  RefineResult result{pose, loss, loss, {loss}};

  double damping = cfg.damping;
  Eigen::MatrixXd jacobian(n_res, 9);
  Eigen::VectorXd hi_res, lo_res, trial_res;
  for (int step = 0; step < cfg.steps && loss > 0.0; ++step) {
    bool jacobian_ok = true;
    for (int k = 0; k < 9 && jacobian_ok; ++k) {
      PoseParams hi = params, lo = params;
      hi[k] += cfg.fd_step;
      lo[k] -= cfg.fd_step;
      jacobian_ok = residual_at(hi, hi_res) && residual_at(lo, lo_res);
      if (jacobian_ok) jacobian.col(k) = (hi_res - lo_res) / (2.0 * cfg.fd_step);
    }
    if (!jacobian_ok) break;

    // Damped Gauss-Newton step on the residuals; the gradient of the loss is 2 J^T r.
    const Eigen::Matrix<double, 9, 9> normal = jacobian.transpose() * jacobian;
    const Eigen::Matrix<double, 9, 1> gradient = jacobian.transpose() * residual;
    Eigen::Matrix<double, 9, 9> damped = normal;
    damped.diagonal().array() += damping * (normal.diagonal().array() + 1e-12);
    const PoseParams direction = damped.ldlt().solve(gradient);
    if (!direction.allFinite()) break;

    double scale = cfg.step_size;
    int halvings = 0;
    bool accepted = false;
    for (; halvings <= cfg.max_halvings; ++halvings, scale *= 0.5) {
      const PoseParams trial = params - scale * direction;
      if (!residual_at(trial, trial_res)) continue;
      const double trial_loss = loss_of(trial_res);
      if (trial_loss < loss) {
        params = trial;
        residual.swap(trial_res);
        loss = trial_loss;
        accepted = true;
        break;
      }
    }
    if (accepted) {
      // Full steps mean the quadratic model is trustworthy; halved ones mean it is not.
      damping = halvings == 0 ? std::max(damping * 0.3, 1e-9) : damping * 2.0;
      result.curve.push_back(loss);
    } else {
      damping *= 10.0;
      if (damping > 1e6) break;
    }
  }

  // Only strictly improving steps are accepted, so the last accepted iterate is the best one.
  if (loss < result.initial_loss) {
    result.pose = params_to_pose(params);
    result.final_loss = loss;
  }
  return result;
}

PoseErrorSummary evaluate(std::span<const Pose> estimates, std::span<const Pose> truths) {
  if (estimates.size() != truths.size()) {
    throw InvalidInput("got " + std::to_string(estimates.size()) + " estimates for " +
                       std::to_string(truths.size()) + " ground-truth poses");
  }
  PoseErrorSummary out;
  out.per_pose.reserve(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out.per_pose.push_back(geometry::pose_error(estimates[i], truths[i]));
  }
  if (!out.per_pose.empty()) {
    double rot = 0.0, trans = 0.0;
    for (const auto& e : out.per_pose) {
      rot += e.rot_deg;
      trans += e.trans;
    }
    out.mean_rot_deg = rot / static_cast<double>(out.per_pose.size());
    out.mean_trans = trans / static_cast<double>(out.per_pose.size());
  }
  return out;
}

ViewCalibration calibrate_view(const render::RadianceField& field, const Regressor& reg,
                               const Pose& initial, const ImageGrid& real,
                               const ViewMatchConfig& cfg, const CalibrationOptions& opts) {
  const auto loss_of = [&](const ImageGrid& img) {
    return render::photometric_loss(std::span(&img, 1), std::span(&real, 1));
  };
  ViewCalibration out;
  out.initial = initial;
  const ImageGrid rendered = render::render(field, initial, cfg.intrinsics, cfg.render);
  out.loss_initial = loss_of(rendered);

  const ot::UotSolution sol = match_views(rendered, real, cfg.match, cfg.uot);
  out.predicted = predict_relative(reg, sol.plan);
  out.calibrated = geometry::calibrate(initial, out.predicted);
  out.loss_calibrated = loss_of(render::render(field, out.calibrated, cfg.intrinsics, cfg.render));
  out.calibration_accepted = out.loss_calibrated < out.loss_initial;

  const Pose& start = out.calibration_accepted ? out.calibrated : out.initial;
  out.final = start;
  out.loss_final = out.calibration_accepted ? out.loss_calibrated : out.loss_initial;
  if (opts.refine) {
    RefineResult refined = refine_pose(field, start, real, cfg.intrinsics, cfg.render, opts.refine_cfg);
    out.final = refined.pose;
    out.loss_final = refined.final_loss;
    out.refine_curve = std::move(refined.curve);
  }
  return out;
}

}  // namespace viewcal::calib
