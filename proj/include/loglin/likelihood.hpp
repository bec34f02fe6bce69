#ifndef LOGLIN_LIKELIHOOD_HPP
#define LOGLIN_LIKELIHOOD_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "loglin/model.hpp"
#include "loglin/sampler.hpp"

namespace loglin {

enum class Mode { Conditional, Poisson };

/// Sparse design rows m_x for every sampled cell (positives first, then
/// zeros, both lex-ordered), plus the counts and the sampling rate. This is
/// the evaluation substrate for the likelihood, score and information.
struct DesignMatrix {
  std::vector<std::vector<std::uint32_t>> rows;
  Eigen::VectorXd counts;
  std::size_t num_params = 0;
  double log_pi = 0.0;

  double pi() const { return std::exp(log_pi); }
  double one_minus_pi() const { return -std::expm1(log_pi); }
  std::size_t num_cells() const { return rows.size(); }
};

DesignMatrix build_design(const SampledDataset &ds,
                          const ParameterIndex &index);

/// Per-cell rates at a given parameter vector.
struct RateCache {
  Eigen::VectorXd eta;     // lambda . m_x
  Eigen::VectorXd mu;      // exp(eta)
  Eigen::VectorXd mu_star; // sampling-adjusted rate (== mu at pi = 1)
  Eigen::VectorXd w;       // Fisher weights (== mu at pi = 1)
};

/// Throws Overflow when any eta exceeds half the log of the double range,
/// which signals a divergent iterate.
RateCache rates(const Eigen::VectorXd &lambda, const DesignMatrix &dm);

// Numerically stable scalar kernels; pi may be subnormal.
double inclusion_prob(double mu, double pi); // 1 - (1-pi) e^{-mu}
double mu_star(double mu, double pi);        // mu / inclusion_prob
double fisher_weight(double mu, double pi);  // W_x

double cond_loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm);
double poisson_loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm);
double loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm, Mode mode);

Eigen::VectorXd score(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
                      Mode mode = Mode::Conditional);
Eigen::MatrixXd fisher_information(const Eigen::VectorXd &lambda,
                                   const DesignMatrix &dm,
                                   Mode mode = Mode::Conditional);

/// (M^t W M)^{-1} at lambda-hat. With rho > 0 the ridge term 2*rho is added
/// on the non-intercept diagonal before inversion.
Eigen::MatrixXd covariance(const Eigen::VectorXd &lambda_hat,
                           const DesignMatrix &dm, Mode mode,
                           double rho = 0.0);

/// Small-rate adequacy diagnostic for the plain-Poisson approximation:
/// max_x (1-pi) mu_x / (mu_x + pi), the first-order relative adjustment of
/// the rates. Small when the sampled zeros vastly outnumber the counts.
double approximation_gap(const Eigen::VectorXd &lambda,
                         const DesignMatrix &dm);

} // namespace loglin

#endif
