#include "loglin/simulation.hpp"

#include <cmath>

#include "loglin/error.hpp"
#include "loglin/rng.hpp"

namespace loglin {

namespace {

VariableSchema uniform_schema(int p, int k) {
  std::vector<Variable> vars(p);
  for (int j = 0; j < p; ++j) {
    vars[j].name = "v" + std::to_string(j + 1);
    for (int l = 0; l < k; ++l)
      vars[j].levels.push_back("l" + std::to_string(l + 1));
  }
  return VariableSchema(std::move(vars));
}

template <typename Fn>
void for_each_cell(const VariableSchema &schema, Fn fn) {
  const std::size_t p = schema.num_variables();
  Cell cell(p, 0);
  for (;;) {
    fn(cell);
    std::size_t j = p;
    while (j-- > 0) {
      if (++cell[j] < schema.num_levels(j))
        break;
      cell[j] = 0;
      if (j == 0)
        return;
    }
  }
}

} // namespace

TruthSet generate_truth(const SimSpec &spec) {
  if (spec.p < 2 || spec.k < 2)
    throw InvalidSpec("simulation needs p >= 2 and k >= 2");
  if (spec.beta_a <= 0.0 || spec.beta_b <= 0.0)
    throw InvalidSpec("Beta shapes must be positive");

  VariableSchema schema = uniform_schema(spec.p, spec.k);
  if (spec.intercept.kind != SimSpec::Intercept::Explicit &&
      !schema.enumerable())
    throw EnumerationRequired(
        "intercept calibration requires an enumerable table");

  InteractionGraph truth_graph =
      spec.edges ? InteractionGraph(spec.p, *spec.edges)
                 : InteractionGraph::banded(spec.p);

  // parameters live on the full two-way index so estimates align directly
  ParameterIndex index(
      ModelTerms::from_graph(InteractionGraph::complete(spec.p), 2), schema);
  Eigen::VectorXd lambda =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index.size()));

  SplitMix64 rng = SplitMix64::stream(spec.seed, "effects");
  for (std::size_t pos = 1; pos < index.size(); ++pos) {
    const auto e = index.entry(pos);
    const bool structural =
        e.term.size() == 1 ||
        (e.term.size() == 2 && truth_graph.has_edge(e.term[0], e.term[1]));
    if (structural)
      lambda[static_cast<Eigen::Index>(pos)] =
          rng.beta(spec.beta_a, spec.beta_b) - 0.5;
  }

  TruthSet truth{std::move(schema), std::move(truth_graph), std::move(index),
                 std::move(lambda), 0.0};

  // sum of exp(lambda_1 . m1_x) over all cells, with the intercept at 0
  double sum_exp = 0.0;
  std::vector<std::uint32_t> row;
  for_each_cell(truth.schema, [&](const Cell &cell) {
    truth.index.design_row(cell, row);
    double eta = 0.0;
    for (std::uint32_t pos : row)
      if (pos != 0)
        eta += truth.lambda[pos];
    sum_exp += std::exp(eta);
  });

  double intercept = 0.0;
  switch (spec.intercept.kind) {
  case SimSpec::Intercept::Explicit:
    intercept = spec.intercept.value;
    break;
  case SimSpec::Intercept::TargetTotal:
    if (spec.intercept.value <= 0.0)
      throw InvalidSpec("target total count must be positive");
    intercept = std::log(spec.intercept.value) - std::log(sum_exp);
    break;
  case SimSpec::Intercept::TargetOccupancy: {
    if (spec.intercept.value <= 0.0 || spec.intercept.value >= 1.0)
      throw InvalidSpec("target occupancy must lie in (0, 1)");
    const double target =
        spec.intercept.value * std::exp(truth.schema.log_table_size());
    intercept = std::log(target) - std::log(sum_exp);
    break;
  }
  }
  if (!std::isfinite(intercept))
    throw InvalidSpec("intercept calibration produced a non-finite value");
  truth.lambda[0] = intercept;
  truth.sum_mu = std::exp(intercept) * sum_exp;
  return truth;
}

SparseCountTable generate_table(const TruthSet &truth, std::uint64_t seed) {
  if (!truth.schema.enumerable())
    throw EnumerationRequired("table generation requires enumeration");
  SplitMix64 rng = SplitMix64::stream(seed, "counts");
  std::map<Cell, std::int64_t> counts;
  std::vector<std::uint32_t> row;
  for_each_cell(truth.schema, [&](const Cell &cell) {
    truth.index.design_row(cell, row);
    double eta = 0.0;
    for (std::uint32_t pos : row)
      eta += truth.lambda[pos];
    const std::int64_t n = rng.poisson(std::exp(eta));
    if (n > 0)
      counts.emplace(cell, n);
  });
  return SparseCountTable(truth.schema, std::move(counts));
}

double bias_slope(const Eigen::VectorXd &estimated,
                  const Eigen::VectorXd &truth) {
  if (estimated.size() != truth.size())
    throw InvalidSpec("parameter vectors must share an index");
  const Eigen::Index n = truth.size() - 1; // intercept excluded
  if (n < 2)
    throw DegenerateTruth("too few parameters for a slope");
  const double mean_t = truth.tail(n).mean();
  const double mean_e = estimated.tail(n).mean();
  double sxy = 0.0, sxx = 0.0;
  for (Eigen::Index i = 1; i < truth.size(); ++i) {
    const double dx = truth[i] - mean_t;
    sxy += (estimated[i] - mean_e) * dx;
    sxx += dx * dx;
  }
  if (sxx == 0.0)
    throw DegenerateTruth("true parameters have zero variance");
  return std::abs(1.0 - sxy / sxx);
}

EdgeMetrics edge_metrics(const std::set<Edge> &selected,
                         const std::set<Edge> &truth, int p) {
  const double all_pairs = static_cast<double>(p) * (p - 1) / 2.0;
  double tp = 0.0;
  for (const Edge &e : selected)
    if (truth.count(e))
      tp += 1.0;
  const double fp = static_cast<double>(selected.size()) - tp;
  const double fn = static_cast<double>(truth.size()) - tp;
  const double tn = all_pairs - tp - fp - fn;
  EdgeMetrics m;
  m.sensitivity = truth.empty() ? 1.0 : tp / static_cast<double>(truth.size());
  const double negatives = all_pairs - static_cast<double>(truth.size());
  m.specificity = negatives == 0.0 ? 1.0 : tn / negatives;
  m.f1 = (2.0 * tp + fp + fn) == 0.0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  return m;
}

std::vector<StudyRow> run_study(const SimSpec &spec, const StudyConfig &cfg) {
  std::vector<StudyRow> rows;
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    SimSpec rep_spec = spec;
    rep_spec.seed = spec.seed + static_cast<std::uint64_t>(rep);
    const TruthSet truth = generate_truth(rep_spec);
    const SparseCountTable table = generate_table(truth, rep_spec.seed);
    const std::int64_t n1 = table.total_count();
    if (n1 < 1)
      throw InvalidSpec("replicate produced an empty table");

    for (double ratio : cfg.ratios) {
      SamplerConfig sc;
      sc.seed = rep_spec.seed * 1000003ull + static_cast<std::uint64_t>(ratio);
      sc.n0 = static_cast<std::int64_t>(
          std::llround(ratio * static_cast<double>(n1)));
      const SampledDataset ds = sample_zeros(table, sc);
      const DesignMatrix dm = build_design(ds, truth.index);

      for (Mode mode : cfg.modes) {
        FitConfig fc;
        fc.mode = mode;
        fc.rho = cfg.rho;
        const FitResult fr = fit(dm, fc);
        rows.push_back({rep, ratio, mode, "bias_slope",
                        bias_slope(fr.lambda, truth.lambda)});

        if (cfg.with_selection) {
          SearchConfig sel;
          sel.criterion = cfg.criterion;
          sel.fit = fc;
          sel.max_order = 2;
          const SearchResult sr = stepwise_search(ds, sel);
          rows.push_back({rep, ratio, mode, "criterion", sr.score.value});
          const EdgeMetrics em =
              edge_metrics(sr.graph.edges(), truth.graph.edges(), spec.p);
          rows.push_back({rep, ratio, mode, "f1", em.f1});
          rows.push_back({rep, ratio, mode, "sensitivity", em.sensitivity});
          rows.push_back({rep, ratio, mode, "specificity", em.specificity});
        }
      }
    }
  }
  return rows;
}

} // namespace loglin
