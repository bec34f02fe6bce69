#ifndef LOGLIN_SAMPLER_HPP
#define LOGLIN_SAMPLER_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "loglin/schema.hpp"

namespace loglin {

struct SamplerConfig {
  std::uint64_t seed = 0;
  // exactly one of the two targets must be set
  std::optional<std::int64_t> n0; // number of empty cells to draw
  std::optional<double> pi;       // per-cell inclusion probability
};

/// The fit input: all positive-count cells plus a random sample of empty
/// cells, with the effective sampling rate carried in log space (pi can be
/// ~1e-79 for survey-scale tables). Both cell lists are lex-sorted.
struct SampledDataset {
  VariableSchema schema;
  std::vector<std::pair<Cell, std::int64_t>> positives;
  std::vector<Cell> zeros;
  double log_pi = 0.0; // 0 => pi = 1; -inf => pi = 0
  double log_s = 0.0;

  std::int64_t n1() const {
    std::int64_t t = 0;
    for (const auto &[c, n] : positives)
      t += n;
    return t;
  }
  std::int64_t n0() const { return static_cast<std::int64_t>(zeros.size()); }
};

/// Draw S = positive cells + random empty cells. With an n0 target, exactly
/// n0 distinct empty cells uniformly without replacement (rejection sampling
/// of uniform cells on huge tables; enumeration when the table is small and
/// the target is a large fraction of it). With a pi target the table must be
/// enumerable and each empty cell enters independently with probability pi.
/// Deterministic given (table, cfg).
SampledDataset sample_zeros(const SparseCountTable &table,
                            const SamplerConfig &cfg);

/// log(n0) - log(s): the empirical sampling rate of an n0-target draw.
double effective_log_pi(const SampledDataset &ds);

/// The full table as a dataset (pi = 1): every cell, observed or empty.
/// Requires an enumerable schema.
SampledDataset full_table_dataset(const SparseCountTable &table);

} // namespace loglin

#endif
