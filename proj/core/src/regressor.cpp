#include "viewcal/regressor.hpp"

#include <cmath>
#include <string>

#include "viewcal/error.hpp"
#include "viewcal/rng.hpp"

namespace viewcal::calib {

Regressor::Regressor(Eigen::Index input_width, Eigen::Index hidden_width) {
  if (input_width <= 0 || hidden_width <= 0) throw InvalidInput("regressor widths must be positive");
  w1_ = Eigen::MatrixXd::Zero(hidden_width, input_width);
  b1_ = Eigen::VectorXd::Zero(hidden_width);
  w2_ = Eigen::MatrixXd::Zero(kOutputs, hidden_width);
  b2_ = Eigen::VectorXd::Zero(kOutputs);
}

Regressor Regressor::initialized(Eigen::Index input_width, Eigen::Index hidden_width,
                                 std::uint64_t seed) {
  Regressor reg(input_width, hidden_width);
  CounterRng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_width));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_width));
  for (Eigen::Index k = 0; k < reg.w1_.size(); ++k) reg.w1_.data()[k] = rng.uniform(-bound1, bound1);
  for (Eigen::Index k = 0; k < reg.b1_.size(); ++k) reg.b1_[k] = rng.uniform(-bound1, bound1);
  for (Eigen::Index k = 0; k < reg.w2_.size(); ++k) reg.w2_.data()[k] = rng.uniform(-bound2, bound2);
  for (Eigen::Index k = 0; k < reg.b2_.size(); ++k) reg.b2_[k] = rng.uniform(-bound2, bound2);
  return reg;
}

Eigen::Index Regressor::parameter_count() const noexcept {
  return w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

Eigen::VectorXd Regressor::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  flat.segment(at, w1_.size()) = w1_.reshaped();
  at += w1_.size();
  flat.segment(at, b1_.size()) = b1_;
  at += b1_.size();
  flat.segment(at, w2_.size()) = w2_.reshaped();
  at += w2_.size();
  flat.segment(at, b2_.size()) = b2_;
  return flat;
}

void Regressor::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw InvalidInput("expected " + std::to_string(parameter_count()) + " parameters, got " +
                       std::to_string(flat.size()));
  }
  Eigen::Index at = 0;
  w1_.reshaped() = flat.segment(at, w1_.size());
  at += w1_.size();
  b1_ = flat.segment(at, b1_.size());
  at += b1_.size();
  w2_.reshaped() = flat.segment(at, w2_.size());
  at += w2_.size();
  b2_ = flat.segment(at, b2_.size());
}

bool Regressor::all_finite() const {
  return w1_.allFinite() && b1_.allFinite() && w2_.allFinite() && b2_.allFinite();
}

Regressor::Activations Regressor::forward(const Eigen::VectorXd& input) const {
  if (input.size() != input_width()) {
    throw InvalidInput("regressor expects " + std::to_string(input_width()) + " inputs, got " +
                       std::to_string(input.size()));
  }
  Activations act;
  act.input = input;
  act.hidden = (w1_ * input + b1_).array().tanh();
  act.output = w2_ * act.hidden + b2_;
  return act;
}

Eigen::VectorXd Regressor::backward(const Activations& act, const Eigen::VectorXd& output_grad) const {
  if (output_grad.size() != kOutputs) throw InvalidInput("output gradient must have 6 entries");
  const Eigen::VectorXd hidden_grad =
      (w2_.transpose() * output_grad).array() * (1.0 - act.hidden.array().square());
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  flat.segment(at, w1_.size()) = (hidden_grad * act.input.transpose()).reshaped();
  at += w1_.size();
  flat.segment(at, b1_.size()) = hidden_grad;
  at += b1_.size();
  flat.segment(at, w2_.size()) = (output_grad * act.hidden.transpose()).reshaped();
  at += w2_.size();
  flat.segment(at, b2_.size()) = output_grad;
  return flat;
}

Eigen::VectorXd plan_input(const ot::TransportPlan& plan) {
  const Eigen::MatrixXd normalized = plan.values() / plan.total();
  // Row-major flattening: entry (i, j) lands at i * cols + j.
  return normalized.transpose().reshaped();
}

geometry::RelativeTransform predict_relative(const Regressor& reg, const ot::TransportPlan& plan) {
  if (plan.rows() * plan.cols() != reg.input_width()) {
    throw InvalidInput("plan is " + std::to_string(plan.rows()) + "x" + std::to_string(plan.cols()) +
                       " but the regressor takes " + std::to_string(reg.input_width()) + " inputs");
  }
  const Eigen::VectorXd y = reg.forward(plan_input(plan)).output;
  return {y[0], y[1], y[2], y[3], y[4], y[5]};
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double learning_rate, double beta1, double beta2,
                             double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {
  if (!(learning_rate >= 0.0)) throw InvalidInput("learning rate must be nonnegative");
}

Eigen::VectorXd AdamOptimizer::direction(const Eigen::VectorXd& grad) {
  if (grad.size() != m_.size()) throw InvalidInput("gradient size does not match the optimizer");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  return (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps_);
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  const Eigen::VectorXd d = direction(grad);
  params -= lr_ * d;
}

}  // namespace viewcal::calib
