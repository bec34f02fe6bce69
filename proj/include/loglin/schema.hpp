#ifndef LOGLIN_SCHEMA_HPP
#define LOGLIN_SCHEMA_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace loglin {

struct Variable {
  std::string name;
  std::vector<std::string> levels; // ordered; index 0 is the reference level
};

/// Ordered categorical variables and their level sets. Defines the cell space
/// of a contingency table whose size is tracked only in log form, since the
/// number of cells can vastly exceed 2^64.
class VariableSchema {
public:
  explicit VariableSchema(std::vector<Variable> variables);

  std::size_t num_variables() const { return variables_.size(); }
  const Variable &variable(std::size_t j) const { return variables_[j]; }
  std::size_t num_levels(std::size_t j) const {
    return variables_[j].levels.size();
  }
  const std::vector<Variable> &variables() const { return variables_; }

  /// Natural log of the total number of cells, sum of log |L_j|.
  double log_table_size() const { return log_table_size_; }

  /// Whether the full cell space can be enumerated (at most `cap` cells).
  bool enumerable(std::uint64_t cap = (1ull << 26)) const;
  std::uint64_t table_size() const; // throws EnumerationRequired if too large

  std::optional<std::size_t> variable_index(const std::string &name) const;
  std::optional<std::uint8_t> level_index(std::size_t j,
                                          const std::string &label) const;

  static VariableSchema from_json(const nlohmann::json &j);
  static VariableSchema from_json_file(const std::string &path);
  nlohmann::json to_json() const;

  bool operator==(const VariableSchema &other) const;

private:
  std::vector<Variable> variables_;
  double log_table_size_ = 0.0;
  std::map<std::string, std::size_t> name_index_;
  std::vector<std::map<std::string, std::uint8_t>> level_index_;
};

/// A cell is a vector of 0-based level indices, one per variable. Cells are
/// never flattened to a single integer: at p = 70 the flat index does not fit
/// in 64 bits.
using Cell = std::vector<std::uint8_t>;

struct CellHash {
  std::size_t operator()(const Cell &c) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto v : c) {
      h ^= v;
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

Cell encode_cell(const VariableSchema &schema,
                 std::span<const std::string> labels);
std::vector<std::string> decode_cell(const VariableSchema &schema,
                                     const Cell &cell);

/// Positive-count cells of a (possibly astronomically large) table; empty
/// cells are implicit. Immutable after construction.
class SparseCountTable {
public:
  // Cells are kept lex-sorted so every export and iteration order is
  // canonical regardless of how the counts were accumulated.
  SparseCountTable(VariableSchema schema,
                   std::map<Cell, std::int64_t> counts);

  const VariableSchema &schema() const { return schema_; }
  const std::map<Cell, std::int64_t> &counts() const { return counts_; }
  std::int64_t total_count() const { return n1_; } // n1
  std::size_t num_positive_cells() const { return counts_.size(); }

private:
  VariableSchema schema_;
  std::map<Cell, std::int64_t> counts_;
  std::int64_t n1_ = 0;
};

/// Tally raw label rows into a sparse count table. Rows must match the schema
/// arity and use known level labels only.
SparseCountTable
ingest_records(const VariableSchema &schema,
               const std::vector<std::vector<std::string>> &records);

inline double log_table_size(const VariableSchema &schema) {
  return schema.log_table_size();
}

} // namespace loglin

#endif
