#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "viewcal/geometry.hpp"
#include "viewcal/ot.hpp"

namespace viewcal::calib {

/// Two-layer perceptron mapping a flattened transport plan to six relative-pose values:
/// y = W2 tanh(W1 x + b1) + b2, read as (t_x, t_y, t_z, theta_x, theta_y, theta_z).
class Regressor {
 public:
  static constexpr Eigen::Index kOutputs = 6;

  /// All-zero weights.
  Regressor(Eigen::Index input_width, Eigen::Index hidden_width);

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from CounterRng(seed).
  static Regressor initialized(Eigen::Index input_width, Eigen::Index hidden_width,
                               std::uint64_t seed);

  Eigen::Index input_width() const noexcept { return w1_.cols(); }
  Eigen::Index hidden_width() const noexcept { return w1_.rows(); }
  Eigen::Index parameter_count() const noexcept;

  Eigen::MatrixXd& w1() noexcept { return w1_; }
  Eigen::VectorXd& b1() noexcept { return b1_; }
  Eigen::MatrixXd& w2() noexcept { return w2_; }
  Eigen::VectorXd& b2() noexcept { return b2_; }
  const Eigen::MatrixXd& w1() const noexcept { return w1_; }
  const Eigen::VectorXd& b1() const noexcept { return b1_; }
  const Eigen::MatrixXd& w2() const noexcept { return w2_; }
  const Eigen::VectorXd& b2() const noexcept { return b2_; }

  /// Flat parameter vector: W1 (column-major), b1, W2 (column-major), b2.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  bool all_finite() const;

  struct Activations {
    Eigen::VectorXd input;
    Eigen::VectorXd hidden;  ///< tanh outputs
    Eigen::VectorXd output;
  };

  Activations forward(const Eigen::VectorXd& input) const;

  /// Gradient of a scalar loss with respect to the flat parameters, given dL/dy.
  Eigen::VectorXd backward(const Activations& act, const Eigen::VectorXd& output_grad) const;

  bool operator==(const Regressor&) const = default;

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
};

/// Row-major flattening of the plan divided by its total mass.
Eigen::VectorXd plan_input(const ot::TransportPlan& plan);

/// Forward pass on the normalized plan. Throws InvalidInput when rows * cols differs from the
/// regressor's input width.
geometry::RelativeTransform predict_relative(const Regressor& reg, const ot::TransportPlan& plan);

/// Adam with bias-corrected first and second moments.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  /// Bias-corrected update direction m_hat / (sqrt(v_hat) + eps) after folding in `grad`.
  Eigen::VectorXd direction(const Eigen::VectorXd& grad);

  double learning_rate() const noexcept { return lr_; }
  long steps() const noexcept { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace viewcal::calib
