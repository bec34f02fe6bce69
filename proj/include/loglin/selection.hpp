#ifndef LOGLIN_SELECTION_HPP
#define LOGLIN_SELECTION_HPP

#include <vector>

#include "loglin/solver.hpp"

namespace loglin {

enum class Criterion { AIC, BIC };

struct ModelScore {
  Criterion criterion = Criterion::BIC;
  double value = 0.0;
  int df = 0;
  double loglik = 0.0;
  std::int64_t n1 = 0; // effective sample size: total counts, never n0
};

/// BIC = -2 loglik + log(n1) df; AIC = -2 loglik + 2 df. n1 is the total
/// observed count regardless of how many zero cells were sampled.
ModelScore information_criterion(double loglik, std::int64_t n1, int df,
                                 Criterion criterion);

struct TraceEntry {
  int step = 0;
  Move move;
  double score_before = 0.0;
  double score_after = 0.0;
  bool accepted = false;
};

struct SearchConfig {
  Criterion criterion = Criterion::BIC;
  FitConfig fit;
  int max_order = 3;   // clique-term cap; 0 = unbounded
  int batch_k = 1;     // accept up to k improving moves per step
  int max_steps = -1;  // accepted-move steps; -1 = unlimited
  long fit_budget = -1; // total candidate fits; -1 = unlimited
  double min_improve = 1e-6;
};

struct SearchResult {
  InteractionGraph graph{1};
  FitResult fit;
  ModelScore score;
  std::vector<TraceEntry> trace;
  long fits_performed = 0;
  bool budget_exhausted = false;
};

/// Stepwise search through graph space starting from the empty graph
/// (main effects only). Each step refits every candidate single-edge move,
/// warm-started from the incumbent, and accepts the best strictly improving
/// one (ties: removals first, then lexicographic edge order). Stops when no
/// move improves the criterion by more than min_improve.
SearchResult stepwise_search(const SampledDataset &ds, const SearchConfig &cfg);

/// Fit the model induced by a fixed graph on a sampled dataset.
FitResult fit_graph(const SampledDataset &ds, const InteractionGraph &g,
                    const FitConfig &cfg, int max_order = 3,
                    const Eigen::VectorXd *warm = nullptr,
                    const ParameterIndex *warm_index = nullptr);

} // namespace loglin

#endif
