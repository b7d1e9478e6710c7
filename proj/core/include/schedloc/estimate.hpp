#pragma once

#include <optional>
#include <vector>

#include "schedloc/geometry.hpp"
#include "schedloc/schedule.hpp"

namespace schedloc {

/// Gaussian prior over the stacked node positions [anchors..., listener].
/// Tight anchor blocks encode surveyed anchors; the listener block is wide.
struct Prior {
  Eigen::VectorXd mu;   // 2(N+1)
  Eigen::MatrixXd cov;  // Pr, symmetric positive definite

  void validate() const;
  Eigen::MatrixXd information() const;  // Pr^{-1}
};

Prior make_gaussian_prior(const std::vector<Vec2>& anchor_mu, const Vec2& listener_mu,
                          double anchor_std, double listener_std);

struct PositionEstimate {
  Eigen::VectorXd x_hat;  // stacked positions at the optimum
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;

  Vec2 listener() const { return x_hat.tail<2>(); }
};

struct ErrorEllipse {
  Vec2 center = Vec2::Zero();
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;  // radians, major-axis direction
  double confidence = 0.0;
};

/// MAP cost
///   V(x) = 1/2 ln ‖y − (1/c) S g(x) − D‖² + (β/2) ‖μ − x‖²_{Pr⁻¹},
/// β = 1/(M+2). A residual floor of 1e-30 on the squared norm guards the
/// logarithm at exact interpolation.
double map_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                const Prior& prior);

Eigen::VectorXd map_cost_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                                  const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                                  const Prior& prior);

struct MapOptions {
  int max_iterations = 500;
  double step_tol = 1e-6;  // m
  double grad_tol = 1e-9;
};

/// Iterative minimizer of V: Gauss-Newton on the residual with the log-norm
/// weight held per iteration, Armijo backtracking line search, gradient-step
/// fallback on a singular system.
PositionEstimate map_estimate(const Eigen::VectorXd& y_cal, const Eigen::VectorXd& d_vec,
                              const ScheduleMatrices& matrices, const Prior& prior,
                              std::optional<Eigen::VectorXd> init = std::nullopt,
                              const MapOptions& options = {});

/// Expected Fisher information of the measurement block:
///   J^D = (1/(c²σ²)) (∂g/∂x)^T S^T S (∂g/∂x).
/// σ is position independent in this model, so the ∂σ/∂x term contributes
/// zero; the hook is kept for models where it does not.
Eigen::MatrixXd fisher_information_data(const Eigen::VectorXd& x, const ScheduleMatrices& matrices,
                                        double sigma);

/// Hybrid information J = J^D + Pr^{-1}. Throws std::domain_error when J is
/// numerically singular (unobservable geometry).
Eigen::MatrixXd fisher_information(const Eigen::VectorXd& x, const ScheduleMatrices& matrices,
                                   double sigma, const Prior& prior);

/// Chi-square quantile with 2 degrees of freedom, q = −2 ln(1 − p).
double chi_square_quantile_2dof(double confidence);

/// Confidence ellipse of a 2x2 covariance: semi-axis_i = sqrt(λ_i q).
/// Throws std::domain_error on eigenvalues below −1e−12 (relative).
ErrorEllipse error_ellipse(const Eigen::Matrix2d& cov, const Vec2& center, double confidence);

}  // namespace schedloc
