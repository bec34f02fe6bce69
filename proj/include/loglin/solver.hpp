#ifndef LOGLIN_SOLVER_HPP
#define LOGLIN_SOLVER_HPP

#include <optional>

#include <Eigen/Dense>

#include "loglin/likelihood.hpp"

namespace loglin {

struct FitConfig {
  Mode mode = Mode::Conditional;
  double rho = 0.0;       // ridge strength; the intercept is never penalized
  double tol = 1e-8;      // relative objective change at convergence
  int max_iter = 100;
  int max_halvings = 20;
  std::size_t dense_threshold = 2000; // above this, solve by CG
  bool compute_covariance = false;
};

struct FitResult {
  Eigen::VectorXd lambda;
  double loglik = 0.0; // unpenalized, in the fit's own mode
  int iterations = 0;
  bool converged = false;
  std::optional<Eigen::MatrixXd> covariance;
  Mode mode = Mode::Conditional;
  double rho = 0.0;
  int weight_clamps = 0; // cells where W was floored for the WLS divide
};

/// Working response z = eta + W^{-1}(n - mu*); in Poisson mode mu* := mu and
/// W := mu. W is floored at 1e-12 for the division.
Eigen::VectorXd working_response(const RateCache &rc, const DesignMatrix &dm,
                                 Mode mode, int *clamps = nullptr);

/// One penalized weighted least-squares update:
/// lambda' = (M^t W M + 2 rho P)^{-1} M^t W z, P = diag(0, 1, ..., 1).
Eigen::VectorXd wls_step(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
                         double rho, Mode mode,
                         std::size_t dense_threshold = 2000);

/// IRWLS / Fisher scoring with step-halving on the penalized objective.
FitResult fit(const DesignMatrix &dm, const FitConfig &cfg,
              const Eigen::VectorXd *init = nullptr);

} // namespace loglin

#endif
