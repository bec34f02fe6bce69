#include "loglin/schema.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "loglin/error.hpp"

namespace loglin {

VariableSchema::VariableSchema(std::vector<Variable> variables)
    : variables_(std::move(variables)) {
  if (variables_.empty())
    throw InvalidSpec("schema must contain at least one variable");
  level_index_.resize(variables_.size());
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto &v = variables_[j];
    if (v.levels.size() < 2)
      throw InvalidSpec("variable '" + v.name + "' needs at least 2 levels");
    if (!name_index_.emplace(v.name, j).second)
      throw InvalidSpec("duplicate variable name '" + v.name + "'");
    for (std::size_t l = 0; l < v.levels.size(); ++l) {
      if (!level_index_[j]
               .emplace(v.levels[l], static_cast<std::uint8_t>(l))
               .second)
        throw InvalidSpec("duplicate level '" + v.levels[l] +
                          "' in variable '" + v.name + "'");
    }
    log_table_size_ += std::log(static_cast<double>(v.levels.size()));
  }
}

bool VariableSchema::enumerable(std::uint64_t cap) const {
  return log_table_size_ <= std::log(static_cast<double>(cap)) + 1e-9;
}

std::uint64_t VariableSchema::table_size() const {
  if (!enumerable())
    throw EnumerationRequired("table too large to enumerate (log size " +
                              std::to_string(log_table_size_) + ")");
  std::uint64_t s = 1;
  for (const auto &v : variables_)
    s *= v.levels.size();
  return s;
}

std::optional<std::size_t>
VariableSchema::variable_index(const std::string &name) const {
  auto it = name_index_.find(name);
  if (it == name_index_.end())
    return std::nullopt;
  return it->second;
}

std::optional<std::uint8_t>
VariableSchema::level_index(std::size_t j, const std::string &label) const {
  auto it = level_index_[j].find(label);
  if (it == level_index_[j].end())
    return std::nullopt;
  return it->second;
}

VariableSchema VariableSchema::from_json(const nlohmann::json &j) {
  std::vector<Variable> vars;
  for (const auto &v : j.at("variables")) {
    Variable var;
    var.name = v.at("name").get<std::string>();
    for (const auto &l : v.at("levels"))
      var.levels.push_back(l.get<std::string>());
    vars.push_back(std::move(var));
  }
  return VariableSchema(std::move(vars));
}

VariableSchema VariableSchema::from_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open schema file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json VariableSchema::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto &v : variables_)
    vars.push_back({{"name", v.name}, {"levels", v.levels}});
  return {{"variables", vars}};
}

bool VariableSchema::operator==(const VariableSchema &other) const {
  if (variables_.size() != other.variables_.size())
    return false;
  for (std::size_t j = 0; j < variables_.size(); ++j)
    if (variables_[j].name != other.variables_[j].name ||
        variables_[j].levels != other.variables_[j].levels)
      return false;
  return true;
}

Cell encode_cell(const VariableSchema &schema,
                 std::span<const std::string> labels) {
  if (labels.size() != schema.num_variables())
    throw RowArityMismatch(0, labels.size(), schema.num_variables());
  Cell cell(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto idx = schema.level_index(j, labels[j]);
    if (!idx)
      throw UnknownLevel(labels[j], schema.variable(j).name);
    cell[j] = *idx;
  }
  return cell;
}

std::vector<std::string> decode_cell(const VariableSchema &schema,
                                     const Cell &cell) {
  std::vector<std::string> labels(cell.size());
  for (std::size_t j = 0; j < cell.size(); ++j)
    labels[j] = schema.variable(j).levels[cell[j]];
  return labels;
}

SparseCountTable::SparseCountTable(VariableSchema schema,
                                   std::map<Cell, std::int64_t> counts)
    : schema_(std::move(schema)), counts_(std::move(counts)) {
  for (const auto &[cell, n] : counts_) {
    if (n < 1)
      throw InvalidSpec("stored counts must be positive");
    if (cell.size() != schema_.num_variables())
      throw RowArityMismatch(0, cell.size(), schema_.num_variables());
    n1_ += n;
  }
}

SparseCountTable
ingest_records(const VariableSchema &schema,
               const std::vector<std::vector<std::string>> &records) {
  std::map<Cell, std::int64_t> counts;
  const std::size_t p = schema.num_variables();
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto &row = records[r];
    if (row.size() != p)
      throw RowArityMismatch(r + 1, row.size(), p);
    Cell cell(p);
    for (std::size_t j = 0; j < p; ++j) {
      auto idx = schema.level_index(j, row[j]);
      if (!idx)
        throw UnknownLevel(row[j], schema.variable(j).name, r + 1);
      cell[j] = *idx;
    }
    ++counts[cell];
  }
  return SparseCountTable(schema, std::move(counts));
}

} // namespace loglin
