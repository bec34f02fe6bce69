#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "loglin/error.hpp"
#include "loglin/rng.hpp"
#include "loglin/sampler.hpp"
#include "loglin/solver.hpp"

using namespace loglin;

namespace {

VariableSchema uniform(int p, int k) {
  std::vector<Variable> vars;
  for (int j = 0; j < p; ++j) {
    Variable v{"v" + std::to_string(j + 1), {}};
    for (int l = 0; l < k; ++l)
      v.levels.push_back("l" + std::to_string(l + 1));
    vars.push_back(v);
  }
  return VariableSchema(vars);
}

// dataset + design for a full small table at pi = 1
DesignMatrix full_design(const VariableSchema &schema,
                         std::map<Cell, std::int64_t> counts,
                         const ParameterIndex &index) {
  SparseCountTable table(schema, std::move(counts));
  return build_design(full_table_dataset(table), index);
}

// every cell positive, so every margin is positive and the MLE is finite
SparseCountTable positive_table(const VariableSchema &schema,
                                std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::map<Cell, std::int64_t> counts;
  Cell cell(schema.num_variables(), 0);
  for (;;) {
    counts[cell] = 1 + static_cast<std::int64_t>(rng.below(9));
    std::size_t j = schema.num_variables();
    bool done = true;
    while (j-- > 0) {
      if (++cell[j] < schema.num_levels(j)) {
        done = false;
        break;
      }
      cell[j] = 0;
    }
    if (done)
      break;
  }
  return SparseCountTable(schema, std::move(counts));
}

Eigen::MatrixXd dense_matrix(const DesignMatrix &dm) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dm.num_cells(), dm.num_params);
  for (std::size_t r = 0; r < dm.rows.size(); ++r)
    for (auto pos : dm.rows[r])
      m(r, pos) = 1.0;
  return m;
}

// plain dense Newton on the Poisson likelihood; independent of the solver
Eigen::VectorXd newton_poisson(const DesignMatrix &dm) {
  const Eigen::MatrixXd m = dense_matrix(dm);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(dm.num_params);
  lambda[0] = std::log(dm.counts.sum() / dm.num_cells());
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd mu = (m * lambda).array().exp();
    const Eigen::VectorXd g = m.transpose() * (dm.counts - mu);
    const Eigen::MatrixXd h = m.transpose() * mu.asDiagonal() * m;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    lambda += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13)
      break;
  }
  return lambda;
}

} // namespace

TEST_CASE("working response at a single empty cell") {
  // one zero cell, mu = 1, pi = 0.5: z = eta + (0 - mu*)/W
  VariableSchema schema({{"a", {"a1", "a2"}}});
  SampledDataset ds{schema, {}, {Cell{0}}, std::log(0.5), std::log(2.0)};
  ParameterIndex index(ModelTerms::intercept_only(), schema);
  auto dm = build_design(ds, index);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(1);
  auto rc = rates(lambda, dm);
  const double ms = mu_star(1.0, 0.5);
  const double w = fisher_weight(1.0, 0.5);
  const Eigen::VectorXd z = working_response(rc, dm, Mode::Conditional);
  CHECK(z[0] == doctest::Approx(0.0 - ms / w).epsilon(1e-12));
  const Eigen::VectorXd zp = working_response(rc, dm, Mode::Poisson);
  CHECK(zp[0] == doctest::Approx(-1.0).epsilon(1e-12)); // eta + (0-mu)/mu
}

TEST_CASE("intercept-only fit recovers the mean rate") {
  auto schema = uniform(2, 3); // 9 cells
  auto index = ParameterIndex(ModelTerms::intercept_only(), schema);
  auto dm = full_design(schema, {{Cell{0, 0}, 4}, {Cell{1, 2}, 5}}, index);
  auto res = fit(dm, {});
  REQUIRE(res.converged);
  CHECK(res.lambda[0] == doctest::Approx(std::log(9.0 / 9.0)).epsilon(1e-9));
}

TEST_CASE("saturated fit reproduces the counts") {
  auto schema = uniform(2, 2);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::complete(2), 0), schema);
  auto dm = full_design(schema,
                        {{Cell{0, 0}, 5}, {Cell{0, 1}, 3},
                         {Cell{1, 0}, 2}, {Cell{1, 1}, 7}},
                        index);
  auto res = fit(dm, {});
  REQUIRE(res.converged);
  const auto rc = rates(res.lambda, dm);
  for (std::size_t r = 0; r < dm.num_cells(); ++r)
    CHECK(rc.mu[r] == doctest::Approx(dm.counts[r]).epsilon(1e-7));
}

TEST_CASE("huge ridge shrinks all non-intercept parameters to zero") {
  auto schema = uniform(3, 2);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::complete(3), 2), schema);
  auto dm = full_design(schema,
                        {{Cell{0, 0, 0}, 9}, {Cell{1, 1, 1}, 3},
                         {Cell{0, 1, 0}, 2}},
                        index);
  auto res = fit(dm, {.rho = 1e8});
  REQUIRE(res.converged);
  for (std::size_t j = 1; j < dm.num_params; ++j)
    CHECK(std::abs(res.lambda[j]) < 1e-6);
  // and the intercept still matches the mean rate
  CHECK(res.lambda[0] == doctest::Approx(std::log(14.0 / 8.0)).epsilon(1e-4));
}

TEST_CASE("fit ends stationary and beats the cold start") {
  auto schema = uniform(3, 3);
  auto table = positive_table(schema, 81);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::banded(3), 2), schema);
  for (double pi : {1.0, 0.6}) {
    auto ds = sample_zeros(table, {.seed = 2, .pi = pi});
    auto dm = build_design(ds, index);
    for (double rho : {0.0, 0.37}) {
      CAPTURE(pi);
      CAPTURE(rho);
      auto res = fit(dm, {.rho = rho});
      REQUIRE(res.converged);
      // stationarity of the penalized score
      Eigen::VectorXd g = score(res.lambda, dm, Mode::Conditional);
      for (std::size_t j = 1; j < dm.num_params; ++j)
        g[j] -= 2.0 * rho * res.lambda[j];
      CHECK(g.cwiseAbs().maxCoeff() < 1e-5);
      auto pen = [&](const Eigen::VectorXd &l) {
        double o = cond_loglik(l, dm);
        for (std::size_t j = 1; j < dm.num_params; ++j)
          o -= rho * l[j] * l[j];
        return o;
      };
      Eigen::VectorXd cold = Eigen::VectorXd::Zero(dm.num_params);
      cold[0] = std::log(double(ds.n1()) / dm.num_cells());
      CHECK(pen(res.lambda) >= pen(cold));
      // the optimum is a fixed point of the WLS update
      const Eigen::VectorXd next =
          wls_step(res.lambda, dm, rho, Mode::Conditional);
      CHECK((next - res.lambda).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("full-rate conditional fit collapses to the Poisson fit") {
  auto schema = uniform(3, 2);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::banded(3), 2), schema);
  auto dm = full_design(schema,
                        {{Cell{0, 0, 0}, 7}, {Cell{1, 0, 1}, 4},
                         {Cell{0, 1, 1}, 2}, {Cell{1, 1, 0}, 1}},
                        index);
  auto cond = fit(dm, {.mode = Mode::Conditional});
  auto pois = fit(dm, {.mode = Mode::Poisson});
  REQUIRE(cond.converged);
  REQUIRE(pois.converged);
  CHECK((cond.lambda - pois.lambda).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(cond.loglik == doctest::Approx(pois.loglik).epsilon(1e-10));
}

TEST_CASE("Poisson fit matches an independent dense Newton solve") {
  auto schema = uniform(3, 3);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph(3, {{0, 2}}), 2), schema);
  auto dm = build_design(full_table_dataset(positive_table(schema, 5)), index);
  auto res = fit(dm, {.mode = Mode::Poisson});
  REQUIRE(res.converged);
  const Eigen::VectorXd ref = newton_poisson(dm);
  CHECK((res.lambda - ref).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("dense and conjugate gradient paths agree") {
  auto schema = uniform(4, 2);
  auto table = positive_table(schema, 14);
  auto ds = full_table_dataset(table);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::complete(4), 2), schema);
  auto dm = build_design(ds, index);
  auto dense = fit(dm, {.dense_threshold = 100000});
  auto cg = fit(dm, {.dense_threshold = 0});
  REQUIRE(dense.converged);
  REQUIRE(cg.converged);
  CHECK((dense.lambda - cg.lambda).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(dense.loglik == doctest::Approx(cg.loglik).epsilon(1e-10));
}

TEST_CASE("refitting from the solution converges immediately") {
  auto schema = uniform(3, 2);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::banded(3), 2), schema);
  auto dm = build_design(full_table_dataset(positive_table(schema, 3)), index);
  auto first = fit(dm, {});
  REQUIRE(first.converged);
  auto second = fit(dm, {}, &first.lambda);
  REQUIRE(second.converged);
  CHECK(second.iterations <= 2);
  CHECK(second.loglik == doctest::Approx(first.loglik).epsilon(1e-12));
}

TEST_CASE("ridge path is continuous at zero") {
  auto schema = uniform(2, 3);
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::complete(2), 2), schema);
  auto dm = build_design(full_table_dataset(positive_table(schema, 27)), index);
  auto base = fit(dm, {.rho = 0.0});
  auto tiny = fit(dm, {.rho = 1e-10});
  REQUIRE(base.converged);
  REQUIRE(tiny.converged);
  CHECK((base.lambda - tiny.lambda).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("covariance closed forms for the intercept-only model") {
  // full table, intercept only: var(lambda0-hat) = 1/sum(mu) = 1/n1
  auto schema = uniform(2, 2);
  ParameterIndex index(ModelTerms::intercept_only(), schema);
  auto dm = full_design(schema, {{Cell{0, 0}, 12}, {Cell{1, 1}, 4}}, index);
  auto res = fit(dm, {.compute_covariance = true});
  REQUIRE(res.converged);
  REQUIRE(res.covariance.has_value());
  CHECK((*res.covariance)(0, 0) == doctest::Approx(1.0 / 16.0).epsilon(1e-7));

  // saturated model: the diagonal of M cov M^t is 1/n_x cell by cell
  ParameterIndex sat(
      ModelTerms::from_graph(InteractionGraph::complete(2), 0), schema);
  auto dms = full_design(schema,
                         {{Cell{0, 0}, 5}, {Cell{0, 1}, 3},
                          {Cell{1, 0}, 2}, {Cell{1, 1}, 7}},
                         sat);
  auto rs = fit(dms, {.compute_covariance = true});
  REQUIRE(rs.converged);
  const Eigen::MatrixXd m = dense_matrix(dms);
  const Eigen::MatrixXd cell_cov = m * *rs.covariance * m.transpose();
  for (std::size_t r = 0; r < dms.num_cells(); ++r)
    CHECK(cell_cov(r, r) == doctest::Approx(1.0 / dms.counts[r]).epsilon(1e-6));
}
