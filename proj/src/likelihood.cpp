#include "loglin/likelihood.hpp"

#include <cmath>

#include "loglin/error.hpp"

namespace loglin {

namespace {

constexpr double kEtaOverflow = 354.9; // log(DBL_MAX) / 2

// expm1(mu) - mu * exp(mu); cancels to O(mu^2) at small mu, so switch to the
// series -sum_{k>=2} mu^k (k-1)/k! below 1e-3.
double expm1_minus_mu_exp(double mu) {
  if (mu < 1e-3)
    return -(mu * mu) * (0.5 + mu * (1.0 / 3.0 + mu * (0.125 + mu / 30.0)));
  return std::expm1(mu) - mu * std::exp(mu);
}

} // namespace

DesignMatrix build_design(const SampledDataset &ds,
                          const ParameterIndex &index) {
  DesignMatrix dm;
  dm.num_params = index.size();
  dm.log_pi = ds.log_pi;
  const std::size_t n = ds.positives.size() + ds.zeros.size();
  dm.rows.resize(n);
  dm.counts.resize(static_cast<Eigen::Index>(n));
  std::size_t r = 0;
  for (const auto &[cell, count] : ds.positives) {
    index.design_row(cell, dm.rows[r]);
    dm.counts[static_cast<Eigen::Index>(r)] = static_cast<double>(count);
    ++r;
  }
  for (const auto &cell : ds.zeros) {
    index.design_row(cell, dm.rows[r]);
    dm.counts[static_cast<Eigen::Index>(r)] = 0.0;
    ++r;
  }
  return dm;
}

double inclusion_prob(double mu, double pi) {
  return -std::expm1(-mu) + pi * std::exp(-mu);
}

double mu_star(double mu, double pi) {
  // mu (1 + (1-pi) e^{-mu} / (1 - (1-pi) e^{-mu})) = mu (1 + (1-pi)/(expm1(mu)+pi))
  return mu * (1.0 + (1.0 - pi) / (std::expm1(mu) + pi));
}

double fisher_weight(double mu, double pi) {
  // W = mu + (1-pi) mu (e^mu - mu e^mu - (1-pi)) / (e^mu - (1-pi))^2,
  // with numerator rewritten as expm1(mu) - mu e^mu + pi and denominator
  // as (expm1(mu) + pi)^2 to survive tiny mu and pi.
  const double denom = std::expm1(mu) + pi;
  const double num = expm1_minus_mu_exp(mu) + pi;
  return mu + (1.0 - pi) * mu * num / (denom * denom);
}

RateCache rates(const Eigen::VectorXd &lambda, const DesignMatrix &dm) {
  const Eigen::Index n = static_cast<Eigen::Index>(dm.num_cells());
  const double pi = dm.pi();
  const bool full = dm.log_pi == 0.0;
  RateCache rc;
  rc.eta.resize(n);
  rc.mu.resize(n);
  rc.mu_star.resize(n);
  rc.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::uint32_t pos : dm.rows[static_cast<std::size_t>(i)])
      eta += lambda[pos];
    if (eta > kEtaOverflow)
      throw Overflow("linear predictor overflow (eta = " +
                     std::to_string(eta) + ")");
    const double mu = std::exp(eta);
    rc.eta[i] = eta;
    rc.mu[i] = mu;
    if (full) {
      rc.mu_star[i] = mu;
      rc.w[i] = mu;
    } else {
      rc.mu_star[i] = mu_star(mu, pi);
      rc.w[i] = fisher_weight(mu, pi);
    }
  }
  return rc;
}

double cond_loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm) {
  const RateCache rc = rates(lambda, dm);
  const double pi = dm.pi();
  const bool full = dm.log_pi == 0.0;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < rc.mu.size(); ++i) {
    const double mu = rc.mu[i];
    const double n = dm.counts[i];
    double term = -mu;
    if (n > 0.0)
      term += n * rc.eta[i];
    if (!full)
      term -= std::log(inclusion_prob(mu, pi));
    ll += term;
  }
  if (!std::isfinite(ll))
    throw NonFiniteLikelihood("conditional log-likelihood is not finite");
  return ll;
}

double poisson_loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm) {
  const RateCache rc = rates(lambda, dm);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < rc.mu.size(); ++i) {
    ll -= rc.mu[i];
    if (dm.counts[i] > 0.0)
      ll += dm.counts[i] * rc.eta[i];
  }
  if (!std::isfinite(ll))
    throw NonFiniteLikelihood("Poisson log-likelihood is not finite");
  return ll;
}

double loglik(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
              Mode mode) {
  return mode == Mode::Conditional ? cond_loglik(lambda, dm)
                                   : poisson_loglik(lambda, dm);
}

Eigen::VectorXd score(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
                      Mode mode) {
  const RateCache rc = rates(lambda, dm);
  const Eigen::VectorXd &fitted =
      mode == Mode::Conditional ? rc.mu_star : rc.mu;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(dm.num_params));
  for (Eigen::Index i = 0; i < fitted.size(); ++i) {
    const double r = dm.counts[i] - fitted[i];
    for (std::uint32_t pos : dm.rows[static_cast<std::size_t>(i)])
      g[pos] += r;
  }
  if (!g.allFinite())
    throw NonFiniteScore("score vector is not finite");
  return g;
}

Eigen::MatrixXd fisher_information(const Eigen::VectorXd &lambda,
                                   const DesignMatrix &dm, Mode mode) {
  const RateCache rc = rates(lambda, dm);
  const Eigen::VectorXd &w = mode == Mode::Conditional ? rc.w : rc.mu;
  const Eigen::Index d = static_cast<Eigen::Index>(dm.num_params);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const auto &row = dm.rows[static_cast<std::size_t>(i)];
    const double wi = w[i];
    for (std::size_t a = 0; a < row.size(); ++a)
      for (std::size_t b = a; b < row.size(); ++b)
        info(row[a], row[b]) += wi;
  }
  info = info.selfadjointView<Eigen::Upper>();
  return info;
}

Eigen::MatrixXd covariance(const Eigen::VectorXd &lambda_hat,
                           const DesignMatrix &dm, Mode mode, double rho) {
  Eigen::MatrixXd info = fisher_information(lambda_hat, dm, mode);
  if (rho > 0.0)
    for (Eigen::Index k = 1; k < info.rows(); ++k)
      info(k, k) += 2.0 * rho;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const Eigen::MatrixXd cov =
      ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  const double resid =
      (info * cov - Eigen::MatrixXd::Identity(info.rows(), info.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (!cov.allFinite() || resid > 1e-6)
    throw SingularInformation("information matrix is numerically singular");
  return cov;
}

double approximation_gap(const Eigen::VectorXd &lambda,
                         const DesignMatrix &dm) {
  if (dm.log_pi == 0.0)
    return 0.0;
  const RateCache rc = rates(lambda, dm);
  const double pi = dm.pi();
  double gap = 0.0;
  for (Eigen::Index i = 0; i < rc.mu.size(); ++i)
    gap = std::max(gap, (1.0 - pi) * rc.mu[i] / (rc.mu[i] + pi));
  return gap;
}

} // namespace loglin
