// Command-line front end: ingestion, zero sampling, fitting, stepwise graph
// selection, synthetic data generation, and graph evaluation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "loglin/error.hpp"
#include "loglin/io.hpp"
#include "loglin/simulation.hpp"

namespace fs = std::filesystem;
using namespace loglin;

namespace {

constexpr int kExitError = 2;
constexpr int kExitNotConverged = 3;

struct CommonOpts {
  std::uint64_t seed = 0;
  int threads = 1;
};

RunMeta make_meta(const nlohmann::json &config, std::uint64_t seed) {
  return RunMeta{tool_version(), seed, config_hash(config)};
}

Mode parse_mode(const std::string &s) {
  if (s == "conditional")
    return Mode::Conditional;
  if (s == "poisson")
    return Mode::Poisson;
  throw Error("unknown mode '" + s + "'");
}

Criterion parse_criterion(const std::string &s) {
  if (s == "aic")
    return Criterion::AIC;
  if (s == "bic")
    return Criterion::BIC;
  throw Error("unknown criterion '" + s + "'");
}

std::vector<std::string> schema_names(const VariableSchema &schema) {
  std::vector<std::string> names;
  for (const auto &v : schema.variables())
    names.push_back(v.name);
  return names;
}

struct SampleFlags {
  double n0_mult = -1.0;
  std::int64_t n0 = -1;
  double pi = -1.0;

  SamplerConfig to_config(std::uint64_t seed, std::int64_t n1) const {
    int set = (n0_mult >= 0.0) + (n0 >= 0) + (pi >= 0.0);
    if (set != 1)
      throw Error("exactly one of --n0, --n0-mult, --pi is required");
    SamplerConfig sc;
    sc.seed = seed;
    if (pi >= 0.0)
      sc.pi = pi;
    else if (n0 >= 0)
      sc.n0 = n0;
    else
      sc.n0 = static_cast<std::int64_t>(
          std::llround(n0_mult * static_cast<double>(n1)));
    return sc;
  }
};

void add_sample_flags(CLI::App *cmd, SampleFlags &f) {
  auto *a = cmd->add_option("--n0", f.n0, "number of empty cells to sample");
  auto *b = cmd->add_option("--n0-mult", f.n0_mult,
                            "sample n0 = mult * n1 empty cells");
  auto *c = cmd->add_option("--pi", f.pi,
                            "per-cell inclusion probability (enumerable "
                            "tables only)");
  a->excludes(b)->excludes(c);
  b->excludes(c);
}

nlohmann::json truth_to_json(const TruthSet &truth, const SimSpec &spec,
                             const RunMeta &meta) {
  nlohmann::json j = meta.to_json();
  j["schema"] = truth.schema.to_json();
  j["graph"] = truth.graph.to_json(schema_names(truth.schema));
  j["lambda"] = std::vector<double>(
      truth.lambda.data(), truth.lambda.data() + truth.lambda.size());
  j["sum_mu"] = truth.sum_mu;
  j["beta_a"] = spec.beta_a;
  j["beta_b"] = spec.beta_b;
  return j;
}

int run(int argc, char **argv) {
  CLI::App app{"loglinear modelling of huge sparse contingency tables"};
  app.require_subcommand(1);
  CommonOpts common;
  app.add_option("--seed", common.seed, "master RNG seed");
  app.add_option("--threads", common.threads,
                 "worker threads (overrides LOGLIN_THREADS)")
      ->envname("LOGLIN_THREADS");

  // ---- ingest ----
  auto *ingest = app.add_subcommand("ingest", "tally records into a table");
  std::string schema_path, records_path, out_path;
  ingest->add_option("--schema", schema_path, "schema JSON")->required();
  ingest->add_option("--records", records_path, "records CSV")->required();
  ingest->add_option("--out", out_path, "output count-table CSV")->required();

  // ---- sample ----
  auto *sample = app.add_subcommand("sample", "sample zero cells");
  std::string table_path, out_prefix;
  SampleFlags sample_flags;
  sample->add_option("--schema", schema_path, "schema JSON")->required();
  sample->add_option("--table", table_path, "count-table CSV")->required();
  sample->add_option("--out", out_prefix, "output prefix")->required();
  add_sample_flags(sample, sample_flags);

  // ---- fit ----
  auto *fitc = app.add_subcommand("fit", "fit a loglinear model");
  std::string sample_prefix, graph_path, out_dir, mode_str = "conditional";
  double rho = 0.0;
  int max_order = 3;
  bool sum_to_zero = false, with_cov = false;
  SampleFlags fit_sample_flags;
  fitc->add_option("--schema", schema_path, "schema JSON")->required();
  fitc->add_option("--sample", sample_prefix,
                   "sampled dataset prefix (from `sample`)");
  fitc->add_option("--records", records_path,
                   "records CSV (sampled internally)");
  add_sample_flags(fitc, fit_sample_flags);
  fitc->add_option("--graph", graph_path,
                   "graph JSON (default: full two-way model)");
  fitc->add_option("--mode", mode_str, "conditional|poisson");
  fitc->add_option("--rho", rho, "ridge strength");
  fitc->add_option("--max-order", max_order, "interaction order cap");
  fitc->add_flag("--sum-to-zero", sum_to_zero,
                 "also report two-way effects under sum-to-zero");
  fitc->add_flag("--covariance", with_cov, "report standard errors");
  fitc->add_option("--out", out_dir, "output directory")->required();

  // ---- select ----
  auto *select = app.add_subcommand("select", "stepwise graph search");
  std::string criterion_str = "bic";
  int batch_k = 1, max_steps = -1;
  long fit_budget = -1;
  SampleFlags select_sample_flags;
  select->add_option("--schema", schema_path, "schema JSON")->required();
  select->add_option("--sample", sample_prefix, "sampled dataset prefix");
  select->add_option("--records", records_path,
                     "records CSV (sampled internally)");
  add_sample_flags(select, select_sample_flags);
  select->add_option("--criterion", criterion_str, "aic|bic");
  select->add_option("--mode", mode_str, "conditional|poisson");
  select->add_option("--rho", rho, "ridge strength");
  select->add_option("--max-order", max_order, "interaction order cap");
  select->add_option("--batch-k", batch_k, "accept up to k moves per step");
  select->add_option("--max-steps", max_steps, "accepted-move step budget");
  select->add_option("--fit-budget", fit_budget,
                     "total candidate-fit budget");
  select->add_option("--out", out_dir, "output directory")->required();

  // ---- simulate ----
  auto *simulate = app.add_subcommand("simulate", "generate synthetic data");
  int sim_p = 13, sim_k = 3;
  std::string edges_path;
  double intercept_value = 0.0, target_count = -1.0, target_occupancy = -1.0;
  bool banded = false, study = false, study_select = false;
  std::vector<double> ratios = {1, 2, 5, 10, 20, 40};
  int replicates = 10;
  simulate->add_option("--p", sim_p, "number of variables");
  simulate->add_option("--k", sim_k, "levels per variable");
  simulate->add_flag("--banded", banded, "banded truth graph (default)");
  simulate->add_option("--edges", edges_path, "truth graph JSON");
  simulate->add_option("--intercept", intercept_value, "explicit intercept");
  simulate->add_option("--target-count", target_count,
                       "calibrate intercept to this expected total count");
  simulate->add_option("--target-occupancy", target_occupancy,
                       "calibrate intercept to this non-empty fraction");
  simulate->add_flag("--study", study,
                     "run the ratio sweep study instead of emitting one table");
  simulate->add_flag("--select", study_select,
                     "include stepwise selection in the study");
  simulate->add_option("--ratios", ratios, "n0/n1 multipliers for the study");
  simulate->add_option("--replicates", replicates, "study replicates");
  simulate->add_option("--criterion", criterion_str, "aic|bic");
  simulate->add_option("--out", out_dir, "output directory")->required();

  // ---- evaluate ----
  auto *evaluate = app.add_subcommand("evaluate", "compare graphs/estimates");
  std::string truth_path, selected_path, est_path;
  evaluate->add_option("--truth", truth_path, "truth JSON from simulate")
      ->required();
  evaluate->add_option("--selected", selected_path, "selected graph JSON")
      ->required();
  evaluate->add_option("--est", est_path,
                       "coefficients CSV of a full two-way fit (adds "
                       "bias_slope)");
  evaluate->add_option("--out", out_path, "output metrics JSON")->required();

  CLI11_PARSE(app, argc, argv);

  nlohmann::json config = {{"seed", common.seed}};
  for (const auto *sub : app.get_subcommands()) {
    config["command"] = sub->get_name();
    for (const auto *opt : sub->get_options())
      if (opt->count() && opt->get_name() != "--out")
        config[opt->get_name()] = opt->results();
  }
  const RunMeta meta = make_meta(config, common.seed);

  auto load_dataset = [&](const SampleFlags &flags) {
    const VariableSchema schema = VariableSchema::from_json_file(schema_path);
    if (!sample_prefix.empty())
      return read_dataset(sample_prefix + ".csv", sample_prefix + ".meta.json",
                          schema);
    if (records_path.empty())
      throw Error("either --sample or --records is required");
    const SparseCountTable table = ingest_csv(records_path, schema);
    return sample_zeros(table, flags.to_config(common.seed,
                                               table.total_count()));
  };

  if (*ingest) {
    const VariableSchema schema = VariableSchema::from_json_file(schema_path);
    const SparseCountTable table = ingest_csv(records_path, schema);
    write_count_table(out_path, table, meta);
    return 0;
  }

  if (*sample) {
    const VariableSchema schema = VariableSchema::from_json_file(schema_path);
    const SparseCountTable table = read_count_table(table_path, schema);
    const SampledDataset ds = sample_zeros(
        table, sample_flags.to_config(common.seed, table.total_count()));
    write_dataset(out_prefix + ".csv", out_prefix + ".meta.json", ds, meta);
    return 0;
  }

  if (*fitc) {
    const SampledDataset ds = load_dataset(fit_sample_flags);
    const int p = static_cast<int>(ds.schema.num_variables());
    const InteractionGraph g =
        graph_path.empty() ? InteractionGraph::complete(p)
                           : InteractionGraph::from_json_file(graph_path);
    const int order = graph_path.empty() ? 2 : max_order;
    const ParameterIndex index(ModelTerms::from_graph(g, order), ds.schema);
    const DesignMatrix dm = build_design(ds, index);
    FitConfig fc;
    fc.mode = parse_mode(mode_str);
    fc.rho = rho;
    fc.compute_covariance = with_cov;
    const FitResult fr = fit(dm, fc);

    fs::create_directories(out_dir);
    nlohmann::json report = fit_report(fr, index, meta);
    if (ds.log_pi < 0.0) {
      report["approximation_gap"] = approximation_gap(fr.lambda, dm);
      report["n0_over_n1"] =
          static_cast<double>(ds.n0()) / static_cast<double>(ds.n1());
    }
    write_json(out_dir + "/fit.json", report);
    write_coefficients_csv(out_dir + "/coefficients.csv", fr, index, meta);
    if (sum_to_zero)
      write_sum_to_zero_csv(out_dir + "/sum_to_zero.csv", fr.lambda, index,
                            meta);
    if (!fr.converged) {
      std::cerr << "fit did not converge in " << fr.iterations
                << " iterations\n";
      return kExitNotConverged;
    }
    return 0;
  }

  if (*select) {
    const SampledDataset ds = load_dataset(select_sample_flags);
    SearchConfig sc;
    sc.criterion = parse_criterion(criterion_str);
    sc.fit.mode = parse_mode(mode_str);
    sc.fit.rho = rho;
    sc.max_order = max_order;
    sc.batch_k = batch_k;
    sc.max_steps = max_steps;
    sc.fit_budget = fit_budget;
    const SearchResult sr = stepwise_search(ds, sc);

    fs::create_directories(out_dir);
    const auto names = schema_names(ds.schema);
    write_json(out_dir + "/graph.json", [&] {
      nlohmann::json j = sr.graph.to_json(names);
      j["meta"] = meta.to_json();
      j["criterion"] = criterion_str;
      j["score"] = sr.score.value;
      j["df"] = sr.score.df;
      j["fits_performed"] = sr.fits_performed;
      j["budget_exhausted"] = sr.budget_exhausted;
      return j;
    }());
    write_text(out_dir + "/graph.dot", sr.graph.to_dot(names));
    write_trace_csv(out_dir + "/trace.csv", sr.trace, sc.criterion, meta);
    const ParameterIndex index(
        ModelTerms::from_graph(sr.graph, sc.max_order), ds.schema);
    write_json(out_dir + "/fit.json", fit_report(sr.fit, index, meta));
    if (!sr.fit.converged) {
      std::cerr << "final fit did not converge\n";
      return kExitNotConverged;
    }
    return 0;
  }

  if (*simulate) {
    SimSpec spec;
    spec.p = sim_p;
    spec.k = sim_k;
    spec.seed = common.seed;
    if (!edges_path.empty()) {
      const InteractionGraph g = InteractionGraph::from_json_file(edges_path);
      spec.edges = std::vector<Edge>(g.edges().begin(), g.edges().end());
    }
    if (target_count > 0.0)
      spec.intercept = {SimSpec::Intercept::TargetTotal, target_count};
    else if (target_occupancy > 0.0)
      spec.intercept = {SimSpec::Intercept::TargetOccupancy, target_occupancy};
    else
      spec.intercept = {SimSpec::Intercept::Explicit, intercept_value};

    fs::create_directories(out_dir);
    if (study) {
      StudyConfig study_cfg;
      study_cfg.ratios = ratios;
      study_cfg.replicates = replicates;
      study_cfg.with_selection = study_select;
      study_cfg.criterion = parse_criterion(criterion_str);
      const auto rows = run_study(spec, study_cfg);
      std::vector<std::vector<std::string>> csv_rows;
      for (const auto &r : rows)
        csv_rows.push_back({std::to_string(r.replicate),
                            std::to_string(r.ratio),
                            r.mode == Mode::Conditional ? "conditional"
                                                        : "poisson",
                            r.metric, std::to_string(r.value)});
      write_csv(out_dir + "/study.csv",
                {"replicate", "ratio", "mode", "metric", "value"}, csv_rows,
                meta.csv_comment());
      return 0;
    }
    const TruthSet truth = generate_truth(spec);
    const SparseCountTable table = generate_table(truth, spec.seed);
    write_json(out_dir + "/schema.json", truth.schema.to_json());
    write_json(out_dir + "/truth.json", truth_to_json(truth, spec, meta));
    write_count_table(out_dir + "/table.csv", table, meta);
    return 0;
  }

  if (*evaluate) {
    const nlohmann::json truth_json = read_json(truth_path);
    const InteractionGraph truth_graph =
        InteractionGraph::from_json(truth_json.at("graph"));
    const InteractionGraph selected =
        InteractionGraph::from_json(read_json(selected_path));
    const EdgeMetrics em = edge_metrics(selected.edges(), truth_graph.edges(),
                                        truth_graph.num_vertices());
    nlohmann::json out = meta.to_json();
    out["f1"] = em.f1;
    out["sensitivity"] = em.sensitivity;
    out["specificity"] = em.specificity;
    if (!est_path.empty()) {
      const auto rows = read_csv(est_path);
      Eigen::VectorXd est(static_cast<Eigen::Index>(rows.size() - 1));
      for (std::size_t r = 1; r < rows.size(); ++r)
        est[static_cast<Eigen::Index>(r - 1)] = std::stod(rows[r][2]);
      const auto lambda_json =
          truth_json.at("lambda").get<std::vector<double>>();
      const Eigen::VectorXd truth_lambda = Eigen::Map<const Eigen::VectorXd>(
          lambda_json.data(), static_cast<Eigen::Index>(lambda_json.size()));
      out["bias_slope"] = bias_slope(est, truth_lambda);
    }
    write_json(out_path, out);
    return 0;
  }

  return kExitError;
}

} // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
