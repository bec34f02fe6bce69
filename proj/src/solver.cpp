#include "loglin/solver.hpp"

#include <cmath>

#include "loglin/error.hpp"

namespace loglin {

namespace {

constexpr double kWeightFloor = 1e-12;

// A v = M^t W M v + 2 rho P v without forming A.
Eigen::VectorXd apply_normal(const DesignMatrix &dm, const Eigen::VectorXd &w,
                             double rho, const Eigen::VectorXd &v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (std::size_t r = 0; r < dm.rows.size(); ++r) {
    double s = 0.0;
    for (std::uint32_t pos : dm.rows[r])
      s += v[pos];
    s *= w[static_cast<Eigen::Index>(r)];
    for (std::uint32_t pos : dm.rows[r])
      out[pos] += s;
  }
  if (rho > 0.0)
    for (Eigen::Index k = 1; k < v.size(); ++k)
      out[k] += 2.0 * rho * v[k];
  return out;
}

Eigen::VectorXd solve_cg(const DesignMatrix &dm, const Eigen::VectorXd &w,
                         double rho, const Eigen::VectorXd &b) {
  const Eigen::Index d = b.size();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
  for (std::size_t r = 0; r < dm.rows.size(); ++r)
    for (std::uint32_t pos : dm.rows[r])
      diag[pos] += w[static_cast<Eigen::Index>(r)];
  for (Eigen::Index k = 1; k < d; ++k)
    diag[k] += 2.0 * rho;
  diag = diag.cwiseMax(kWeightFloor);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = r.cwiseQuotient(diag);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const double bnorm = b.norm();
  if (bnorm == 0.0)
    return x;
  const long max_iter = 2 * static_cast<long>(d) + 200;
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd Ap = apply_normal(dm, w, rho, p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0)
      throw SingularSystem("normal equations are not positive definite");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= 1e-12 * bnorm)
      break;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if ((apply_normal(dm, w, rho, x) - b).norm() > 1e-10 * (bnorm + 1.0))
    throw SingularSystem("conjugate gradient did not meet residual contract");
  return x;
}

Eigen::VectorXd solve_dense(const DesignMatrix &dm, const Eigen::VectorXd &w,
                            double rho, const Eigen::VectorXd &b) {
  const Eigen::Index d = b.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t r = 0; r < dm.rows.size(); ++r) {
    const auto &row = dm.rows[r];
    const double wr = w[static_cast<Eigen::Index>(r)];
    for (std::size_t i = 0; i < row.size(); ++i)
      for (std::size_t j = i; j < row.size(); ++j)
        a(row[i], row[j]) += wr;
  }
  a = a.selfadjointView<Eigen::Upper>();
  if (rho > 0.0)
    for (Eigen::Index k = 1; k < d; ++k)
      a(k, k) += 2.0 * rho;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd x = ldlt.solve(b);
  if (!x.allFinite() || (a * x - b).norm() > 1e-10 * (b.norm() + 1.0))
    throw SingularSystem("weighted least-squares system is singular");
  return x;
}

// Penalized objective: loglik - rho * |lambda_1|^2.
double objective(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
                 const FitConfig &cfg) {
  double obj = loglik(lambda, dm, cfg.mode);
  if (cfg.rho > 0.0)
    obj -= cfg.rho * (lambda.squaredNorm() - lambda[0] * lambda[0]);
  return obj;
}

} // namespace

Eigen::VectorXd working_response(const RateCache &rc, const DesignMatrix &dm,
                                 Mode mode, int *clamps) {
  const Eigen::VectorXd &fitted =
      mode == Mode::Conditional ? rc.mu_star : rc.mu;
  const Eigen::VectorXd &w = mode == Mode::Conditional ? rc.w : rc.mu;
  Eigen::VectorXd z(rc.eta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double wi = w[i];
    if (wi < kWeightFloor) {
      wi = kWeightFloor;
      if (clamps)
        ++*clamps;
    }
    z[i] = rc.eta[i] + (dm.counts[i] - fitted[i]) / wi;
  }
  return z;
}

Eigen::VectorXd wls_step(const Eigen::VectorXd &lambda, const DesignMatrix &dm,
                         double rho, Mode mode, std::size_t dense_threshold) {
  const RateCache rc = rates(lambda, dm);
  const Eigen::VectorXd &fitted =
      mode == Mode::Conditional ? rc.mu_star : rc.mu;
  const Eigen::VectorXd &w = mode == Mode::Conditional ? rc.w : rc.mu;
  // b = M^t W z assembled as M^t W eta + M^t (n - mu*), which avoids the
  // W^{-1} division entirely.
  Eigen::VectorXd b = Eigen::VectorXd::Zero(lambda.size());
  for (std::size_t r = 0; r < dm.rows.size(); ++r) {
    const Eigen::Index i = static_cast<Eigen::Index>(r);
    const double c = w[i] * rc.eta[i] + (dm.counts[i] - fitted[i]);
    for (std::uint32_t pos : dm.rows[r])
      b[pos] += c;
  }
  return dm.num_params <= dense_threshold ? solve_dense(dm, w, rho, b)
                                          : solve_cg(dm, w, rho, b);
}

FitResult fit(const DesignMatrix &dm, const FitConfig &cfg,
              const Eigen::VectorXd *init) {
  FitResult res;
  res.mode = cfg.mode;
  res.rho = cfg.rho;

  Eigen::VectorXd lambda;
  if (init) {
    lambda = *init;
  } else {
    lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dm.num_params));
    const double n1 = dm.counts.sum();
    const double cells = static_cast<double>(dm.num_cells());
    lambda[0] = std::log(std::max(n1, 0.5) / std::max(cells, 1.0));
  }

  double obj = objective(lambda, dm, cfg);
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    res.iterations = iter;
    Eigen::VectorXd target;
    try {
      target = wls_step(lambda, dm, cfg.rho, cfg.mode, cfg.dense_threshold);
    } catch (const Overflow &) {
      throw Diverged("rate overflow while forming the WLS system");
    }
    Eigen::VectorXd delta = target - lambda;

    // step-halving until the penalized objective does not decrease
    double new_obj = 0.0;
    Eigen::VectorXd candidate;
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
      candidate = lambda + t * delta;
      try {
        new_obj = objective(candidate, dm, cfg);
      } catch (const Overflow &) {
        continue;
      } catch (const NonFiniteLikelihood &) {
        continue;
      }
      if (new_obj >= obj - 1e-12 * (1.0 + std::abs(obj))) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Diverged("step-halving exhausted without objective improvement");

    lambda = candidate;
    const double change = std::abs(new_obj - obj);
    obj = new_obj;
    if (change <= cfg.tol * (1.0 + std::abs(obj))) {
      res.converged = true;
      break;
    }
  }

  res.lambda = lambda;
  res.loglik = loglik(lambda, dm, cfg.mode);
  {
    const RateCache rc = rates(lambda, dm);
    int clamps = 0;
    working_response(rc, dm, cfg.mode, &clamps);
    res.weight_clamps = clamps;
  }
  if (cfg.compute_covariance)
    res.covariance = covariance(lambda, dm, cfg.mode, cfg.rho);
  return res;
}

} // namespace loglin
