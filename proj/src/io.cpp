#include "loglin/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loglin/error.hpp"
#include "loglin/rng.hpp"

namespace loglin {

std::string tool_version() { return "0.1.0"; }

nlohmann::json RunMeta::to_json() const {
  return {{"version", version}, {"seed", seed}, {"config_hash", config_hash},
          {"rng_name", SplitMix64::kName}};
}

std::string RunMeta::csv_comment() const {
  return "# version=" + version + " seed=" + std::to_string(seed) +
         " config_hash=" + config_hash;
}

std::string config_hash(const nlohmann::json &config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open CSV file '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, in_field = false, at_line_start = true;
  char c;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    in_field = false;
  };
  auto end_line = [&] {
    if (in_field || !row.empty()) {
      end_field();
      rows.push_back(row);
      row.clear();
    }
    at_line_start = true;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (at_line_start && c == '#') { // metadata comment line
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    at_line_start = false;
    switch (c) {
    case '"':
      quoted = true;
      in_field = true;
      break;
    case ',':
      end_field();
      in_field = true;
      break;
    case '\r':
      break;
    case '\n':
      end_line();
      break;
    default:
      field += c;
      in_field = true;
      break;
    }
  }
  end_line();
  return rows;
}

std::string csv_escape(const std::string &field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos)
    return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(const std::string &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows,
               const std::string &comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write CSV file '" + path + "'");
  if (!comment.empty())
    out << comment << "\n";
  auto emit = [&](const std::vector<std::string> &r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i)
        out << ',';
      out << csv_escape(r[i]);
    }
    out << "\n";
  };
  emit(header);
  for (const auto &r : rows)
    emit(r);
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> header_with_count(const VariableSchema &schema) {
  std::vector<std::string> h;
  for (const auto &v : schema.variables())
    h.push_back(v.name);
  h.push_back("count");
  return h;
}

} // namespace

void write_count_table(const std::string &path, const SparseCountTable &table,
                       const RunMeta &meta) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &[cell, n] : table.counts()) {
    auto labels = decode_cell(table.schema(), cell);
    labels.push_back(std::to_string(n));
    rows.push_back(std::move(labels));
  }
  write_csv(path, header_with_count(table.schema()), rows, meta.csv_comment());
}

namespace {

// Map CSV columns onto schema order via the header; last column is `count`
// when with_count is set.
struct ColumnMap {
  std::vector<std::size_t> schema_to_col;
  std::size_t count_col = 0;
};

ColumnMap map_columns(const std::vector<std::string> &header,
                      const VariableSchema &schema, bool with_count) {
  const std::size_t p = schema.num_variables();
  if (header.size() != p + (with_count ? 1 : 0))
    throw RowArityMismatch(1, header.size(), p + (with_count ? 1 : 0));
  ColumnMap cm;
  cm.schema_to_col.assign(p, static_cast<std::size_t>(-1));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (with_count && header[c] == "count") {
      cm.count_col = c;
      continue;
    }
    auto j = schema.variable_index(header[c]);
    if (!j)
      throw Error("CSV column '" + header[c] + "' is not a schema variable");
    cm.schema_to_col[*j] = c;
  }
  for (std::size_t j = 0; j < p; ++j)
    if (cm.schema_to_col[j] == static_cast<std::size_t>(-1))
      throw Error("CSV is missing column for variable '" +
                  schema.variable(j).name + "'");
  return cm;
}

} // namespace

SparseCountTable read_count_table(const std::string &path,
                                  const VariableSchema &schema) {
  const auto rows = read_csv(path);
  if (rows.empty())
    throw Error("count table CSV '" + path + "' is empty");
  const ColumnMap cm = map_columns(rows[0], schema, true);
  std::map<Cell, std::int64_t> counts;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Cell cell(schema.num_variables());
    for (std::size_t j = 0; j < cell.size(); ++j) {
      auto idx = schema.level_index(j, rows[r][cm.schema_to_col[j]]);
      if (!idx)
        throw UnknownLevel(rows[r][cm.schema_to_col[j]],
                           schema.variable(j).name, r + 1);
      cell[j] = *idx;
    }
    const std::int64_t n = std::stoll(rows[r][cm.count_col]);
    if (n > 0)
      counts[cell] += n;
  }
  return SparseCountTable(schema, std::move(counts));
}

SparseCountTable ingest_csv(const std::string &path,
                            const VariableSchema &schema) {
  const auto rows = read_csv(path);
  if (rows.empty())
    throw Error("records CSV '" + path + "' is empty");
  const ColumnMap cm = map_columns(rows[0], schema, false);
  std::vector<std::vector<std::string>> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != schema.num_variables())
      throw RowArityMismatch(r + 1, rows[r].size(), schema.num_variables());
    std::vector<std::string> rec(schema.num_variables());
    for (std::size_t j = 0; j < rec.size(); ++j)
      rec[j] = rows[r][cm.schema_to_col[j]];
    records.push_back(std::move(rec));
  }
  return ingest_records(schema, records);
}

void write_dataset(const std::string &csv_path, const std::string &meta_path,
                   const SampledDataset &ds, const RunMeta &meta) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &[cell, n] : ds.positives) {
    auto labels = decode_cell(ds.schema, cell);
    labels.push_back(std::to_string(n));
    rows.push_back(std::move(labels));
  }
  for (const auto &cell : ds.zeros) {
    auto labels = decode_cell(ds.schema, cell);
    labels.push_back("0");
    rows.push_back(std::move(labels));
  }
  write_csv(csv_path, header_with_count(ds.schema), rows, meta.csv_comment());

  nlohmann::json j = meta.to_json();
  j["n1"] = ds.n1();
  j["n0"] = ds.n0();
  j["log_s"] = ds.log_s;
  j["log_pi"] = std::isfinite(ds.log_pi)
                    ? nlohmann::json(ds.log_pi)
                    : nlohmann::json("-inf");
  write_json(meta_path, j);
}

SampledDataset read_dataset(const std::string &csv_path,
                            const std::string &meta_path,
                            const VariableSchema &schema) {
  const auto rows = read_csv(csv_path);
  if (rows.empty())
    throw Error("dataset CSV '" + csv_path + "' is empty");
  const ColumnMap cm = map_columns(rows[0], schema, true);
  SampledDataset ds{schema, {}, {}, 0.0, schema.log_table_size()};
  std::map<Cell, std::int64_t> positives;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Cell cell(schema.num_variables());
    for (std::size_t j = 0; j < cell.size(); ++j) {
      auto idx = schema.level_index(j, rows[r][cm.schema_to_col[j]]);
      if (!idx)
        throw UnknownLevel(rows[r][cm.schema_to_col[j]],
                           schema.variable(j).name, r + 1);
      cell[j] = *idx;
    }
    const std::int64_t n = std::stoll(rows[r][cm.count_col]);
    if (n > 0)
      positives[cell] += n;
    else
      ds.zeros.push_back(std::move(cell));
  }
  ds.positives.assign(positives.begin(), positives.end());
  std::sort(ds.zeros.begin(), ds.zeros.end());

  const nlohmann::json meta = read_json(meta_path);
  const auto &lp = meta.at("log_pi");
  ds.log_pi = lp.is_string() ? -std::numeric_limits<double>::infinity()
                             : lp.get<double>();
  return ds;
}

namespace {

std::string term_label(const ParameterIndex &index, std::size_t pos) {
  if (pos == 0)
    return "(intercept)";
  const auto e = index.entry(pos);
  std::string term, levels;
  for (std::size_t i = 0; i < e.term.size(); ++i) {
    const auto &var = index.schema().variable(e.term[i]);
    if (i) {
      term += ":";
      levels += ":";
    }
    term += var.name;
    levels += var.levels[e.combo[i]];
  }
  return term + "=" + levels;
}

} // namespace

nlohmann::json fit_report(const FitResult &fit, const ParameterIndex &index,
                          const RunMeta &meta) {
  nlohmann::json j = meta.to_json();
  j["mode"] = fit.mode == Mode::Conditional ? "conditional" : "poisson";
  j["rho"] = fit.rho;
  j["loglik"] = fit.loglik;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["weight_clamps"] = fit.weight_clamps;
  nlohmann::json coefs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.lambda.size(); ++i) {
    nlohmann::json c = {{"term", term_label(index, i)},
                        {"estimate", fit.lambda[i]}};
    if (fit.covariance)
      c["std_error"] = std::sqrt(std::max(0.0, (*fit.covariance)(i, i)));
    coefs.push_back(std::move(c));
  }
  j["lambda"] = std::move(coefs);
  return j;
}

void write_coefficients_csv(const std::string &path, const FitResult &fit,
                            const ParameterIndex &index, const RunMeta &meta) {
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < fit.lambda.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i), term_label(index, i),
                                    format_double(fit.lambda[i])};
    if (fit.covariance)
      row.push_back(
          format_double(std::sqrt(std::max(0.0, (*fit.covariance)(i, i)))));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header = {"position", "term", "estimate"};
  if (fit.covariance)
    header.push_back("std_error");
  write_csv(path, header, rows, meta.csv_comment());
}

void write_trace_csv(const std::string &path,
                     const std::vector<TraceEntry> &trace, Criterion criterion,
                     const RunMeta &meta) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &t : trace)
    rows.push_back({std::to_string(t.step),
                    t.move.kind == Move::Add ? "+" : "-",
                    std::to_string(t.move.edge.first + 1) + "-" +
                        std::to_string(t.move.edge.second + 1),
                    format_double(t.score_before),
                    format_double(t.score_after),
                    t.accepted ? "1" : "0"});
  write_csv(path,
            {"step", "move", "edge",
             criterion == Criterion::BIC ? "bic_before" : "aic_before",
             criterion == Criterion::BIC ? "bic_after" : "aic_after",
             "accepted"},
            rows, meta.csv_comment());
}

std::vector<std::vector<double>>
sum_to_zero_block(const Eigen::VectorXd &lambda, const ParameterIndex &index,
                  const Term &pair) {
  if (pair.size() != 2)
    throw InvalidSpec("sum-to-zero reporting applies to two-way terms");
  const std::size_t ki = index.schema().num_levels(pair[0]);
  const std::size_t kj = index.schema().num_levels(pair[1]);
  std::vector<std::vector<double>> block(ki, std::vector<double>(kj, 0.0));
  for (std::size_t a = 1; a < ki; ++a)
    for (std::size_t b = 1; b < kj; ++b) {
      const std::uint8_t combo[2] = {static_cast<std::uint8_t>(a),
                                     static_cast<std::uint8_t>(b)};
      const std::size_t pos = index.position(pair, combo);
      if (pos == ParameterIndex::npos)
        throw InvalidSpec("term is not in the model");
      block[a][b] = lambda[static_cast<Eigen::Index>(pos)];
    }
  // double-centering: subtract row and column means, add the grand mean
  std::vector<double> row_mean(ki, 0.0), col_mean(kj, 0.0);
  double grand = 0.0;
  for (std::size_t a = 0; a < ki; ++a)
    for (std::size_t b = 0; b < kj; ++b) {
      row_mean[a] += block[a][b] / static_cast<double>(kj);
      col_mean[b] += block[a][b] / static_cast<double>(ki);
      grand += block[a][b] / static_cast<double>(ki * kj);
    }
  for (std::size_t a = 0; a < ki; ++a)
    for (std::size_t b = 0; b < kj; ++b)
      block[a][b] += grand - row_mean[a] - col_mean[b];
  return block;
}

void write_sum_to_zero_csv(const std::string &path,
                           const Eigen::VectorXd &lambda,
                           const ParameterIndex &index, const RunMeta &meta) {
  std::vector<std::vector<std::string>> rows;
  for (const Term &t : index.terms().terms()) {
    if (t.size() != 2)
      continue;
    const auto block = sum_to_zero_block(lambda, index, t);
    const auto &vi = index.schema().variable(t[0]);
    const auto &vj = index.schema().variable(t[1]);
    for (std::size_t a = 0; a < block.size(); ++a)
      for (std::size_t b = 0; b < block[a].size(); ++b)
        rows.push_back({vi.name, vi.levels[a], vj.name, vj.levels[b],
                        format_double(block[a][b])});
  }
  write_csv(path, {"var1", "level1", "var2", "level2", "effect"}, rows,
            meta.csv_comment());
}

void write_text(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write file '" + path + "'");
  out << content;
}

void write_json(const std::string &path, const nlohmann::json &j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

} // namespace loglin
