#ifndef LOGLIN_IO_HPP
#define LOGLIN_IO_HPP

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loglin/model.hpp"
#include "loglin/sampler.hpp"
#include "loglin/selection.hpp"

namespace loglin {

/// Provenance stamp embedded in every output file.
struct RunMeta {
  std::string version;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json to_json() const;
  /// `# key=value ...` comment line placed at the top of CSV outputs.
  std::string csv_comment() const;
};

std::string tool_version();

/// FNV-1a over a canonical string form of the run configuration.
std::string config_hash(const nlohmann::json &config);

// --- CSV primitives (RFC 4180 fields; `#` comment lines are tolerated) ---
std::vector<std::vector<std::string>> read_csv(const std::string &path);
std::string csv_escape(const std::string &field);
void write_csv(const std::string &path,
               const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows,
               const std::string &comment = {});

// --- count tables ---
void write_count_table(const std::string &path, const SparseCountTable &table,
                       const RunMeta &meta);
SparseCountTable read_count_table(const std::string &path,
                                  const VariableSchema &schema);
/// Records CSV: header row of variable names, one respondent per row.
SparseCountTable ingest_csv(const std::string &path,
                            const VariableSchema &schema);

// --- sampled datasets (CSV with count column + JSON metadata sidecar) ---
void write_dataset(const std::string &csv_path, const std::string &meta_path,
                   const SampledDataset &ds, const RunMeta &meta);
SampledDataset read_dataset(const std::string &csv_path,
                            const std::string &meta_path,
                            const VariableSchema &schema);

// --- fit and search reports ---
nlohmann::json fit_report(const FitResult &fit, const ParameterIndex &index,
                          const RunMeta &meta);
void write_coefficients_csv(const std::string &path, const FitResult &fit,
                            const ParameterIndex &index, const RunMeta &meta);
void write_trace_csv(const std::string &path,
                     const std::vector<TraceEntry> &trace, Criterion criterion,
                     const RunMeta &meta);

/// Two-way effect block re-expressed under a sum-to-zero constraint
/// (double-centered over the full level grid, reference row/column included
/// as structural zeros before centering). Reporting only; fits always use
/// set-first-to-zero.
std::vector<std::vector<double>>
sum_to_zero_block(const Eigen::VectorXd &lambda, const ParameterIndex &index,
                  const Term &pair);
void write_sum_to_zero_csv(const std::string &path,
                           const Eigen::VectorXd &lambda,
                           const ParameterIndex &index, const RunMeta &meta);

void write_text(const std::string &path, const std::string &content);
void write_json(const std::string &path, const nlohmann::json &j);
nlohmann::json read_json(const std::string &path);

} // namespace loglin

#endif
