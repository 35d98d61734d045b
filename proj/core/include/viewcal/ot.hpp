#pragma once

#include <limits>

#include <Eigen/Core>

namespace viewcal::ot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Nonnegative feature masses; at least one entry is positive.
class MassVector {
 public:
  explicit MassVector(Vector values);

  /// Every entry equal to 1/l.
  static MassVector uniform(Eigen::Index l);

  const Vector& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  double total() const noexcept { return values_.sum(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Vector values_;
};

/// Pairwise moving cost between source and target features. Entries must be finite.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  CostMatrix transposed() const { return CostMatrix(values_.transpose()); }

 private:
  Matrix values_;
};

/// Coupling between source (rows) and target (columns) masses.
/// Entries are finite and nonnegative with positive total mass.
class TransportPlan {
 public:
  explicit TransportPlan(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  double total() const noexcept { return values_.sum(); }
  Vector row_sums() const { return values_.rowwise().sum(); }
  Vector col_sums() const { return values_.colwise().sum().transpose(); }

 private:
  Matrix values_;
};

struct UotConfig {
  /// Passing this as epsilon turns the KL marginal penalties into hard constraints.
  static constexpr double kBalanced = std::numeric_limits<double>::infinity();

  double eta = 0.005;
  double epsilon = 1.0;
  int max_iter = 5000;
  double tol = 1e-9;

  bool balanced() const noexcept { return epsilon == kBalanced; }
  /// Throws InvalidInput unless eta > 0, epsilon > 0 (or balanced), max_iter > 0, tol > 0.
  void validate() const;
};

struct UotSolution {
  TransportPlan plan;
  /// Dual potentials; the plan is exp((u_i + v_j - M_ij) / eta). Zero-mass entries carry -inf.
  Vector dual_u;
  Vector dual_v;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Entropic unbalanced transport via log-domain Sinkhorn scaling.
///
/// Minimizes <T, M> - eta H(T) + epsilon KL(T1 || mu_s) + epsilon KL(T^T 1 || mu_t) by
/// alternating u <- lambda (eta log mu_s - eta LSE_j((v_j - M_ij) / eta)) and the symmetric
/// v update, with lambda = epsilon / (epsilon + eta). Iteration stops once the sup-norm change
/// of u drops below cfg.tol. Hitting max_iter is reported through `converged`, not thrown.
UotSolution solve_uot(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t,
                      const UotConfig& cfg);

/// Hard-marginal entropic transport. Requires equal total masses (within 1e-9) and stops once
/// the L1 violation of both marginals is at most `tol`.
UotSolution solve_balanced(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t,
                           double eta, int max_iter = 5000, double tol = 1e-9);

/// T_ij = exp((u_i + v_j - M_ij) / eta). Throws NumericError if any entry overflows.
TransportPlan plan_from_duals(const Vector& u, const Vector& v, const CostMatrix& cost, double eta);

/// H(T) = -sum T_ij (log T_ij - 1), with 0 log 0 = 0.
double entropy(const Matrix& plan);

/// Generalized KL for unnormalized masses: sum a_i log(a_i / b_i) - a_i + b_i.
/// Throws InvalidInput when a_i > 0 meets b_i = 0, or on negative entries.
double kl_divergence(const Vector& a, const Vector& b);

/// Transport cost - eta H(T) + epsilon-weighted KL marginal penalties.
/// With epsilon == UotConfig::kBalanced the penalties are dropped.
double uot_objective(const Matrix& plan, const CostMatrix& cost, const MassVector& mu_s,
                     const MassVector& mu_t, double eta, double epsilon);

inline double uot_objective(const TransportPlan& plan, const CostMatrix& cost,
                            const MassVector& mu_s, const MassVector& mu_t, double eta,
                            double epsilon) {
  return uot_objective(plan.values(), cost, mu_s, mu_t, eta, epsilon);
}

}  // namespace viewcal::ot
