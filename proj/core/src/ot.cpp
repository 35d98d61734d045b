#include "viewcal/ot.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "viewcal/error.hpp"

namespace viewcal::ot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dims(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t) {
  if (cost.rows() != mu_s.size() || cost.cols() != mu_t.size()) {
    throw InvalidInput("cost matrix is " + std::to_string(cost.rows()) + "x" +
                       std::to_string(cost.cols()) + " but masses have lengths " +
                       std::to_string(mu_s.size()) + " and " + std::to_string(mu_t.size()));
  }
}

double x_log_x_over_y(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }

enum class StopRule { kDualChange, kMarginalL1 };

// Absorb a scaling into its potential once |log scaling| exceeds this.
constexpr double kAbsorbThreshold = 30.0;

// Shared scaling loop; epsilon == kBalanced gives exponent 1 (hard marginals).
//
// Potentials are tracked in the log domain as phi + log(a) (rows) and psi + log(b) (columns),
// all in units of eta. phi and psi are the absorbed parts baked into the stabilized kernel
// exp(phi_i + psi_j - M_ij / eta); a and b stay within exp(+-kAbsorbThreshold), so every
// iteration is two matrix-vector products without overflow. A row or column whose kernel sum
// underflows is recomputed exactly with a log-sum-exp.
UotSolution sinkhorn(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t,
                     double eta, double epsilon, int max_iter, double tol, StopRule rule) {
  const double lambda = epsilon == UotConfig::kBalanced ? 1.0 : epsilon / (epsilon + eta);
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  const Matrix scaled = cost.values() / eta;

  Vector log_mu_s(n), log_mu_t(m);
  for (Eigen::Index i = 0; i < n; ++i) log_mu_s[i] = mu_s[i] > 0.0 ? std::log(mu_s[i]) : kNegInf;
  for (Eigen::Index j = 0; j < m; ++j) log_mu_t[j] = mu_t[j] > 0.0 ? std::log(mu_t[j]) : kNegInf;

  // Zero-mass entries are pinned at -inf and never updated.
  Vector phi = Vector::Zero(n), psi = Vector::Zero(m);
  for (Eigen::Index i = 0; i < n; ++i) if (mu_s[i] <= 0.0) phi[i] = kNegInf;
  for (Eigen::Index j = 0; j < m; ++j) if (mu_t[j] <= 0.0) psi[j] = kNegInf;
  Vector log_a = Vector::Zero(n), log_b = Vector::Zero(m);
  Vector a = Vector::Ones(n), b = Vector::Ones(m);
  for (Eigen::Index i = 0; i < n; ++i) if (mu_s[i] <= 0.0) a[i] = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) if (mu_t[j] <= 0.0) b[j] = 0.0;

  Matrix kernel(n, m);
  auto rebuild_kernel = [&] {
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) kernel(i, j) = std::exp(phi[i] + psi[j] - scaled(i, j));
  };
  rebuild_kernel();

  // log sum_j exp(full_psi_j - M_ij / eta) for one row, evaluated directly.
  auto exact_row_lse = [&](Eigen::Index i) {
    double hi = kNegInf;
    for (Eigen::Index j = 0; j < m; ++j) hi = std::max(hi, psi[j] + log_b[j] - scaled(i, j));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) acc += std::exp(psi[j] + log_b[j] - scaled(i, j) - hi);
    return hi + std::log(acc);
  };
  auto exact_col_lse = [&](Eigen::Index j) {
    double hi = kNegInf;
    for (Eigen::Index i = 0; i < n; ++i) hi = std::max(hi, phi[i] + log_a[i] - scaled(i, j));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += std::exp(phi[i] + log_a[i] - scaled(i, j) - hi);
    return hi + std::log(acc);
  };

  // One half-step. Returns the sup-norm change of the full potential (in units of eta) and,
  // through `marginal_l1`, the L1 violation of this side's marginal before the update.
  auto half_step = [&](Vector& pot, Vector& log_s, Vector& s, const Vector& log_mu,
                       const Vector& kernel_sum, auto&& exact_lse, double& marginal_l1) {
    double change = 0.0;
    bool absorb = false;
    marginal_l1 = 0.0;
    for (Eigen::Index i = 0; i < pot.size(); ++i) {
      if (pot[i] == kNegInf) continue;
      // log sum_j exp(full_other_j - M_ij / eta), i.e. LSE minus this side's absorbed potential.
      const double lse = kernel_sum[i] > 0.0 ? std::log(kernel_sum[i]) - pot[i] : exact_lse(i);
      const double full_old = pot[i] + log_s[i];
      marginal_l1 += std::abs(std::exp(full_old + lse) - std::exp(log_mu[i]));
      const double full_new = lambda * (log_mu[i] - lse);
      change = std::max(change, std::abs(full_new - full_old));
      log_s[i] = full_new - pot[i];
      if (std::abs(log_s[i]) > kAbsorbThreshold) absorb = true;
    }
    s = log_s.array().exp();
    for (Eigen::Index i = 0; i < pot.size(); ++i) if (pot[i] == kNegInf) s[i] = 0.0;
    return std::pair{change * eta, absorb};
  };
  auto absorb_all = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (phi[i] == kNegInf) continue;
      phi[i] += log_a[i];
      log_a[i] = 0.0;
      a[i] = 1.0;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (psi[j] == kNegInf) continue;
      psi[j] += log_b[j];
      log_b[j] = 0.0;
      b[j] = 1.0;
    }
    rebuild_kernel();
  };

  // Shifting (u, v) to (u + c, v - c) leaves the plan unchanged, and the scaling updates damp
  // that direction only by lambda^2 per sweep, which stalls near the balanced limit. The dual
  // objective restricted to the shift is maximized in closed form at
  // c = (epsilon / 2) log(sum mu_s e^{-u/epsilon} / sum mu_t e^{-v/epsilon}).
  const double ratio = eta / epsilon;
  auto log_weighted_sum = [&](const Vector& pot, const Vector& log_s, const Vector& log_mu) {
    double hi = kNegInf;
    for (Eigen::Index i = 0; i < pot.size(); ++i)
      if (pot[i] != kNegInf) hi = std::max(hi, log_mu[i] - ratio * (pot[i] + log_s[i]));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pot.size(); ++i)
      if (pot[i] != kNegInf) acc += std::exp(log_mu[i] - ratio * (pot[i] + log_s[i]) - hi);
    return hi + std::log(acc);
  };
  auto translate = [&] {
    const double shift = 0.5 / ratio *
        (log_weighted_sum(phi, log_a, log_mu_s) - log_weighted_sum(psi, log_b, log_mu_t));
    log_a.array() += shift;
    log_b.array() -= shift;
    a = log_a.array().exp();
    b = log_b.array().exp();
    for (Eigen::Index i = 0; i < n; ++i) if (phi[i] == kNegInf) a[i] = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) if (psi[j] == kNegInf) b[j] = 0.0;
  };

  int iter = 0;
  bool converged = false;
  while (iter < max_iter) {
    ++iter;
    double row_violation = 0.0, col_violation = 0.0;
    const Vector kb = kernel * b;
    const auto [change, absorb_rows] =
        half_step(phi, log_a, a, log_mu_s, kb, exact_row_lse, row_violation);
    if (rule == StopRule::kMarginalL1 && iter > 1 && row_violation <= tol) {
      // Columns were exact after the previous update; finish this sweep so they are exact again.
      converged = true;
    }
    if (absorb_rows) absorb_all();
    const Vector kta = kernel.transpose() * a;
    const auto [col_change, absorb_cols] =
        half_step(psi, log_b, b, log_mu_t, kta, exact_col_lse, col_violation);
    (void)col_change;
    if (lambda < 1.0) translate();
    if (absorb_cols || log_a.cwiseAbs().maxCoeff() > kAbsorbThreshold ||
        log_b.cwiseAbs().maxCoeff() > kAbsorbThreshold) {
      absorb_all();
    }
    if (!std::isfinite(change)) {
      throw NumericError("Sinkhorn potentials diverged at iteration " + std::to_string(iter));
    }
    if (converged) break;
    if (rule == StopRule::kDualChange && change < tol) {
      converged = true;
      break;
    }
  }

  Vector u(n), v(m);
  for (Eigen::Index i = 0; i < n; ++i) u[i] = phi[i] == kNegInf ? kNegInf : eta * (phi[i] + log_a[i]);
  for (Eigen::Index j = 0; j < m; ++j) v[j] = psi[j] == kNegInf ? kNegInf : eta * (psi[j] + log_b[j]);
  TransportPlan plan = plan_from_duals(u, v, cost, eta);
  const double objective = uot_objective(plan, cost, mu_s, mu_t, eta, epsilon);
  return UotSolution{std::move(plan), std::move(u), std::move(v), objective, iter, converged};
}

}  // namespace

MassVector::MassVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidInput("mass vector is empty");
  bool any_positive = false;
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double x = values_[i];
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidInput("mass entry " + std::to_string(i) + " is negative or non-finite");
    }
    any_positive = any_positive || x > 0.0;
  }
  if (!any_positive) throw InvalidInput("mass vector has no positive entry");
}

MassVector MassVector::uniform(Eigen::Index l) {
  if (l <= 0) throw InvalidInput("uniform masses need l > 0");
  return MassVector(Vector::Constant(l, 1.0 / static_cast<double>(l)));
}

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidInput("cost matrix is empty");
  if (!values_.allFinite()) throw InvalidInput("cost matrix has a non-finite entry");
}

TransportPlan::TransportPlan(Matrix values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidInput("transport plan is empty");
  if (!values_.allFinite()) throw InvalidInput("transport plan has a non-finite entry");
  if ((values_.array() < 0.0).any()) throw InvalidInput("transport plan has a negative entry");
  if (!(values_.sum() > 0.0)) throw InvalidInput("transport plan carries no mass");
}

void UotConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be positive and finite");
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive (or the balanced sentinel)");
  if (max_iter <= 0) throw InvalidInput("max_iter must be positive");
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
}

UotSolution solve_uot(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t,
                      const UotConfig& cfg) {
  cfg.validate();
  check_dims(cost, mu_s, mu_t);
  return sinkhorn(cost, mu_s, mu_t, cfg.eta, cfg.epsilon, cfg.max_iter, cfg.tol,
                  StopRule::kDualChange);
}

UotSolution solve_balanced(const CostMatrix& cost, const MassVector& mu_s, const MassVector& mu_t,
                           double eta, int max_iter, double tol) {
  UotConfig cfg{eta, UotConfig::kBalanced, max_iter, tol};
  cfg.validate();
  check_dims(cost, mu_s, mu_t);
  if (std::abs(mu_s.total() - mu_t.total()) > 1e-9) {
    throw InvalidInput("balanced transport needs equal total masses, got " +
                       std::to_string(mu_s.total()) + " and " + std::to_string(mu_t.total()));
  }
  return sinkhorn(cost, mu_s, mu_t, eta, UotConfig::kBalanced, max_iter, tol,
                  StopRule::kMarginalL1);
}

TransportPlan plan_from_duals(const Vector& u, const Vector& v, const CostMatrix& cost, double eta) {
  if (!(eta > 0.0)) throw InvalidInput("eta must be positive");
  if (u.size() != cost.rows() || v.size() != cost.cols()) {
    throw InvalidInput("dual vector lengths do not match the cost matrix");
  }
  Matrix t(cost.rows(), cost.cols());
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double x = std::exp((u[i] + v[j] - cost(i, j)) / eta);
      if (!std::isfinite(x)) {
        throw NumericError("plan entry (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") overflowed; evaluate the duals in the log domain");
      }
      t(i, j) = x;
    }
  }
  return TransportPlan(std::move(t));
}

double entropy(const Matrix& plan) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
      const double t = plan(i, j);
      if (t > 0.0) h -= t * (std::log(t) - 1.0);
    }
  }
  return h;
}

double kl_divergence(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidInput("KL arguments differ in length");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0 || b[i] < 0.0) throw InvalidInput("KL arguments must be nonnegative");
    if (a[i] > 0.0 && b[i] == 0.0) {
      throw InvalidInput("KL undefined: a[" + std::to_string(i) + "] > 0 where b is 0");
    }
    kl += x_log_x_over_y(a[i], b[i]) - a[i] + b[i];
  }
  return kl;
}

double uot_objective(const Matrix& plan, const CostMatrix& cost, const MassVector& mu_s,
                     const MassVector& mu_t, double eta, double epsilon) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw InvalidInput("plan and cost matrix differ in shape");
  }
  check_dims(cost, mu_s, mu_t);
  if ((plan.array() < 0.0).any()) throw InvalidInput("plan has a negative entry");
  double value = (plan.array() * cost.values().array()).sum() - eta * entropy(plan);
  if (epsilon != UotConfig::kBalanced) {
    value += epsilon * kl_divergence(plan.rowwise().sum(), mu_s.values());
    value += epsilon * kl_divergence(plan.colwise().sum().transpose(), mu_t.values());
  }
  return value;
}

}  // namespace viewcal::ot
