#include "loglin/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "loglin/error.hpp"
#include "loglin/rng.hpp"

namespace loglin {

namespace {

// Enumerate all cells in lex order, invoking fn on each.
template <typename Fn> void for_each_cell(const VariableSchema &schema, Fn fn) {
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

Cell uniform_cell(const VariableSchema &schema, SplitMix64 &rng) {
  Cell cell(schema.num_variables());
  for (std::size_t j = 0; j < cell.size(); ++j)
    cell[j] = static_cast<std::uint8_t>(rng.below(schema.num_levels(j)));
  return cell;
}

} // namespace

SampledDataset sample_zeros(const SparseCountTable &table,
                            const SamplerConfig &cfg) {
  if (cfg.n0.has_value() == cfg.pi.has_value())
    throw InvalidSpec("exactly one of n0 / pi must be set");

  const VariableSchema &schema = table.schema();
  SampledDataset ds{schema, {}, {}, 0.0, schema.log_table_size()};
  ds.positives.assign(table.counts().begin(), table.counts().end());

  std::unordered_set<Cell, CellHash> taken;
  for (const auto &[c, n] : ds.positives)
    taken.insert(c);

  SplitMix64 rng = SplitMix64::stream(cfg.seed, "zero-cells");

  if (cfg.pi) {
    const double pi = *cfg.pi;
    if (pi < 0.0 || pi > 1.0)
      throw InvalidSpec("pi must be in [0, 1]");
    if (!schema.enumerable())
      throw EnumerationRequired("pi-target sampling needs an enumerable table");
    for_each_cell(schema, [&](const Cell &cell) {
      if (taken.count(cell))
        return;
      if (pi >= 1.0 || rng.uniform01() < pi)
        ds.zeros.push_back(cell);
    });
    ds.log_pi = pi > 0.0 ? std::log(pi)
                         : -std::numeric_limits<double>::infinity();
    return ds; // enumeration order is already lex
  }

  const std::int64_t n0 = *cfg.n0;
  if (n0 < 0)
    throw InvalidSpec("n0 must be >= 0");
  if (n0 > 0) {
    if (schema.enumerable()) {
      const std::uint64_t s = schema.table_size();
      const std::uint64_t empties = s - taken.size();
      if (static_cast<std::uint64_t>(n0) > empties)
        throw TargetInfeasible("n0 = " + std::to_string(n0) + " exceeds " +
                               std::to_string(empties) + " empty cells");
      if (static_cast<std::uint64_t>(n0) * 2 > empties) {
        // dense draw: enumerate empties, partial Fisher-Yates
        std::vector<Cell> empty_cells;
        empty_cells.reserve(empties);
        for_each_cell(schema, [&](const Cell &cell) {
          if (!taken.count(cell))
            empty_cells.push_back(cell);
        });
        for (std::int64_t i = 0; i < n0; ++i) {
          const std::uint64_t j = i + rng.below(empty_cells.size() - i);
          std::swap(empty_cells[i], empty_cells[j]);
        }
        empty_cells.resize(n0);
        ds.zeros = std::move(empty_cells);
      }
    }
    if (ds.zeros.empty() && n0 > 0) {
      // sparse draw: uniform cells with rejection; n0 << s makes repeats rare
      ds.zeros.reserve(n0);
      while (static_cast<std::int64_t>(ds.zeros.size()) < n0) {
        Cell cell = uniform_cell(schema, rng);
        if (taken.insert(cell).second)
          ds.zeros.push_back(std::move(cell));
      }
    }
  }
  std::sort(ds.zeros.begin(), ds.zeros.end());
  ds.log_pi = n0 > 0 ? std::log(static_cast<double>(n0)) - ds.log_s
                     : -std::numeric_limits<double>::infinity();
  return ds;
}

double effective_log_pi(const SampledDataset &ds) {
  if (ds.zeros.empty())
    throw ZeroSample("no sampled zero cells");
  return std::log(static_cast<double>(ds.zeros.size())) - ds.log_s;
}

SampledDataset full_table_dataset(const SparseCountTable &table) {
  const VariableSchema &schema = table.schema();
  if (!schema.enumerable())
    throw EnumerationRequired("full-table dataset needs an enumerable table");
  SampledDataset ds{schema, {}, {}, 0.0, schema.log_table_size()};
  ds.positives.assign(table.counts().begin(), table.counts().end());
  const auto &counts = table.counts();
  for_each_cell(schema, [&](const Cell &cell) {
    if (!counts.count(cell))
      ds.zeros.push_back(cell);
  });
  ds.log_pi = 0.0;
  return ds;
}

} // namespace loglin
