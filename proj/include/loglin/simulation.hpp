#ifndef LOGLIN_SIMULATION_HPP
#define LOGLIN_SIMULATION_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loglin/selection.hpp"

namespace loglin {

struct SimSpec {
  int p = 0;
  int k = 0; // levels per variable, uniform
  // nullopt = banded truth (edges between consecutive variables)
  std::optional<std::vector<Edge>> edges;
  double beta_a = 0.25, beta_b = 0.25; // effect law: Beta(a, b) - 0.5
  struct Intercept {
    enum Kind { Explicit, TargetTotal, TargetOccupancy } kind = Explicit;
    double value = 0.0;
  } intercept;
  std::uint64_t seed = 0;
};

/// Ground truth: a two-way loglinear model over the full two-way parameter
/// index (all pairs), with nonzero entries only on the intercept, the main
/// effects and the truth-graph edges.
struct TruthSet {
  VariableSchema schema;
  InteractionGraph graph{1};
  ParameterIndex index; // full two-way model index
  Eigen::VectorXd lambda;
  double sum_mu = 0.0; // realized total rate over all cells
};

/// Draw main and edge effects i.i.d. Beta(a,b) - 0.5 and calibrate the
/// intercept per rule (target_total_count enumerates the table exactly).
TruthSet generate_truth(const SimSpec &spec);

/// Independent Poisson draw N_x ~ Poi(mu_x) for every cell; positives stored.
SparseCountTable generate_table(const TruthSet &truth, std::uint64_t seed);

/// |1 - OLS slope| of estimated vs true parameters, intercept excluded.
/// Both vectors must live on the same parameter index.
double bias_slope(const Eigen::VectorXd &estimated,
                  const Eigen::VectorXd &truth);

struct EdgeMetrics {
  double f1 = 0.0, sensitivity = 0.0, specificity = 0.0;
};
EdgeMetrics edge_metrics(const std::set<Edge> &selected,
                         const std::set<Edge> &truth, int p);

struct StudyConfig {
  std::vector<double> ratios = {1, 2, 5, 10, 20, 40}; // n0 = ratio * n1
  std::vector<Mode> modes = {Mode::Poisson, Mode::Conditional};
  int replicates = 10;
  bool with_selection = false;
  Criterion criterion = Criterion::BIC;
  double rho = 0.0;
};

struct StudyRow {
  int replicate = 0;
  double ratio = 0.0;
  Mode mode = Mode::Poisson;
  std::string metric; // bias_slope | criterion | f1 | sensitivity | specificity
  double value = 0.0;
};

/// One sampled dataset per (replicate, ratio), shared across modes; each mode
/// refits the full two-way model (bias) and optionally runs the stepwise
/// search (criterion value and edge metrics against the truth graph).
std::vector<StudyRow> run_study(const SimSpec &spec, const StudyConfig &cfg);

} // namespace loglin

#endif
