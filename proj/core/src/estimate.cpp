#include "schedloc/estimate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace schedloc {

namespace {
constexpr double kResidualFloor = 1e-30;  // on the squared norm, guards ln
}

void Prior::validate() const {
  const auto dim = mu.size();
  if (dim < 8 || dim % 2 != 0) {
    throw std::invalid_argument("prior: mu must stack at least four 2-D nodes");
  }
  if (cov.rows() != dim || cov.cols() != dim) {
    throw std::invalid_argument("prior: covariance size does not match mu");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) {
    throw std::invalid_argument("prior: covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("prior: covariance must be positive definite");
  }
}

Eigen::MatrixXd Prior::information() const {
  validate();
  return cov.llt().solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

Prior make_gaussian_prior(const std::vector<Vec2>& anchor_mu, const Vec2& listener_mu,
                          double anchor_std, double listener_std) {
  if (!(anchor_std > 0.0 && listener_std > 0.0)) {
    throw std::invalid_argument("prior: standard deviations must be positive");
  }
  const int n = static_cast<int>(anchor_mu.size());
  Prior prior;
  prior.mu = stack_positions(anchor_mu, listener_mu);
  Eigen::VectorXd diag(2 * (n + 1));
  diag.head(2 * n).setConstant(anchor_std * anchor_std);
  diag.tail(2).setConstant(listener_std * listener_std);
  prior.cov = diag.asDiagonal();
  return prior;
}

namespace {

struct CostTerms {
  double value = 0.0;
  Eigen::VectorXd residual;
  double q = 0.0;  // floored squared residual norm
};

CostTerms cost_terms(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                     const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                     const Prior& prior, const Eigen::MatrixXd& pr_inv) {
  const int m = matrices.num_measurements();
  const double beta = 1.0 / (m + 2.0);
  const Eigen::VectorXd g = ranges_from_stacked(x, matrices.n_anchors);
  CostTerms t;
  t.residual = y_cal - matrices.s * g / kSpeedOfLight - d_vec;
  t.q = std::max(t.residual.squaredNorm(), kResidualFloor);
  const Eigen::VectorXd dx = x - prior.mu;
  t.value = 0.5 * std::log(t.q) + 0.5 * beta * dx.dot(pr_inv * dx);
  return t;
}

void check_inputs(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                  const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                  const Prior& prior) {
  if (x.size() != 2 * (matrices.n_anchors + 1)) {
    throw std::invalid_argument("map: x must stack all " +
                                std::to_string(matrices.n_anchors + 1) + " node positions");
  }
  if (y_cal.size() != matrices.num_measurements() || d_vec.size() != y_cal.size()) {
    throw std::invalid_argument("map: measurement/delay length != M");
  }
  if (prior.mu.size() != x.size()) {
    throw std::invalid_argument("map: prior dimension does not match x");
  }
}

}  // namespace

double map_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                const Prior& prior) {
  check_inputs(x, y_cal, d_vec, matrices, prior);
  return cost_terms(x, y_cal, d_vec, matrices, prior, prior.information()).value;
}

Eigen::VectorXd map_cost_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y_cal,
                                  const Eigen::VectorXd& d_vec, const ScheduleMatrices& matrices,
                                  const Prior& prior) {
  check_inputs(x, y_cal, d_vec, matrices, prior);
  const Eigen::MatrixXd pr_inv = prior.information();
  const CostTerms t = cost_terms(x, y_cal, d_vec, matrices, prior, pr_inv);
  const double beta = 1.0 / (matrices.num_measurements() + 2.0);
  const Eigen::MatrixXd jac = range_jacobian(x, matrices.n_anchors);
  return -jac.transpose() * (matrices.s.transpose() * t.residual) / (kSpeedOfLight * t.q) +
         beta * (pr_inv * (x - prior.mu));
}

PositionEstimate map_estimate(const Eigen::VectorXd& y_cal, const Eigen::VectorXd& d_vec,
                              const ScheduleMatrices& matrices, const Prior& prior,
                              std::optional<Eigen::VectorXd> init, const MapOptions& options) {
  Eigen::VectorXd x = init.value_or(prior.mu);
  check_inputs(x, y_cal, d_vec, matrices, prior);
  const Eigen::MatrixXd pr_inv = prior.information();
  const double beta = 1.0 / (matrices.num_measurements() + 2.0);
  const Eigen::MatrixXd sts = matrices.s.transpose() * matrices.s;

  PositionEstimate est;
  est.converged = false;

  CostTerms t = cost_terms(x, y_cal, d_vec, matrices, prior, pr_inv);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = range_jacobian(x, matrices.n_anchors);
    const Eigen::VectorXd grad =
        -jac.transpose() * (matrices.s.transpose() * t.residual) / (kSpeedOfLight * t.q) +
        beta * (pr_inv * (x - prior.mu));
    if (grad.norm() < options.grad_tol) {
      est.converged = true;
      break;
    }

    // Gauss-Newton model of the log-norm term: J^T S^T S J / (c^2 q), the
    // rank-one downdate from the ln curvature is dropped to keep the system
    // positive definite.
    const Eigen::MatrixXd hess =
        jac.transpose() * sts * jac / (kSpeedOfLight * kSpeedOfLight * t.q) + beta * pr_inv;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) {
      step = ldlt.solve(-grad);
    }
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      step = -grad;  // singular system: plain descent direction
    }

    // Armijo backtracking, factor 0.5, c1 = 1e-4.
    const double slope = grad.dot(step);
    double scale = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd candidate = x + scale * step;
      const CostTerms tc = cost_terms(candidate, y_cal, d_vec, matrices, prior, pr_inv);
      if (tc.value <= t.value + 1e-4 * scale * slope) {
        x = candidate;
        t = tc;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // no decrease along the step; best iterate stands
    if ((scale * step).norm() < options.step_tol) {
      est.converged = true;
      ++iter;
      break;
    }
  }

  est.x_hat = x;
  est.cost = t.value;
  est.iterations = iter;
  return est;
}

Eigen::MatrixXd fisher_information_data(const Eigen::VectorXd& x, const ScheduleMatrices& matrices,
                                        double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("fisher: sigma must be positive");
  if (x.size() != 2 * (matrices.n_anchors + 1)) {
    throw std::invalid_argument("fisher: x must stack all node positions");
  }
  const Eigen::MatrixXd jac = range_jacobian(x, matrices.n_anchors);
  Eigen::MatrixXd jd = jac.transpose() * (matrices.s.transpose() * matrices.s) * jac /
                       (kSpeedOfLight * kSpeedOfLight * sigma * sigma);
  // The (M / 2σ⁴) ∂σ/∂x_i ∂σ/∂x_j term is identically zero here: σ does not
  // depend on position in this model.
  return jd;
}

Eigen::MatrixXd fisher_information(const Eigen::VectorXd& x, const ScheduleMatrices& matrices,
                                   double sigma, const Prior& prior) {
  const Eigen::MatrixXd j = fisher_information_data(x, matrices, sigma) + prior.information();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
  if (!lu.isInvertible()) {
    throw std::domain_error("fisher: information matrix singular, geometry unobservable");
  }
  return j;
}

double chi_square_quantile_2dof(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("ellipse: confidence must lie in (0, 1)");
  }
  return -2.0 * std::log(1.0 - confidence);
}

ErrorEllipse error_ellipse(const Eigen::Matrix2d& cov, const Vec2& center, double confidence) {
  const double q = chi_square_quantile_2dof(confidence);
  const Eigen::Matrix2d sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw std::domain_error("ellipse: eigendecomposition failed");
  }
  Eigen::Vector2d lambda = eig.eigenvalues();  // ascending
  if (lambda[0] < -1e-12) {
    throw std::domain_error("ellipse: covariance has negative eigenvalue " +
                            std::to_string(lambda[0]));
  }
  lambda = lambda.cwiseMax(0.0);

  ErrorEllipse e;
  e.center = center;
  e.semi_major = std::sqrt(lambda[1] * q);
  e.semi_minor = std::sqrt(lambda[0] * q);
  const Eigen::Vector2d principal = eig.eigenvectors().col(1);
  e.orientation = std::atan2(principal[1], principal[0]);
  e.confidence = confidence;
  return e;
}

}  // namespace schedloc
