#include "loglin/selection.hpp"

#include <cmath>
#include <limits>

#include "loglin/error.hpp"

namespace loglin {

ModelScore information_criterion(double loglik, std::int64_t n1, int df,
                                 Criterion criterion) {
  if (n1 < 1)
    throw InvalidSpec("information criterion needs n1 >= 1");
  ModelScore s;
  s.criterion = criterion;
  s.df = df;
  s.loglik = loglik;
  s.n1 = n1;
  const double penalty =
      criterion == Criterion::BIC ? std::log(static_cast<double>(n1)) : 2.0;
  s.value = -2.0 * loglik + penalty * static_cast<double>(df);
  return s;
}

FitResult fit_graph(const SampledDataset &ds, const InteractionGraph &g,
                    const FitConfig &cfg, int max_order,
                    const Eigen::VectorXd *warm,
                    const ParameterIndex *warm_index) {
  const ModelTerms terms = ModelTerms::from_graph(g, max_order);
  const ParameterIndex index(terms, ds.schema);
  const DesignMatrix dm = build_design(ds, index);
  if (warm && warm_index) {
    const std::vector<double> old(warm->data(), warm->data() + warm->size());
    const std::vector<double> moved = transfer_parameters(*warm_index, old, index);
    Eigen::VectorXd init =
        Eigen::Map<const Eigen::VectorXd>(moved.data(), moved.size());
    return fit(dm, cfg, &init);
  }
  return fit(dm, cfg);
}

namespace {

struct Candidate {
  Move move;
  double value = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// tie-break: lower criterion, then removals before additions, then lex edge
bool better(const Candidate &a, const Candidate &b) {
  if (a.value != b.value)
    return a.value < b.value;
  if (a.move.kind != b.move.kind)
    return a.move.kind == Move::Remove;
  return a.move.edge < b.move.edge;
}

} // namespace

SearchResult stepwise_search(const SampledDataset &ds,
                             const SearchConfig &cfg) {
  const int p = static_cast<int>(ds.schema.num_variables());
  const std::int64_t n1 = ds.n1();

  SearchResult res;
  res.graph = InteractionGraph(p);
  ParameterIndex index(ModelTerms::from_graph(res.graph, cfg.max_order),
                       ds.schema);
  res.fit = fit(build_design(ds, index), cfg.fit);
  res.score = information_criterion(res.fit.loglik, n1,
                                    static_cast<int>(index.size()),
                                    cfg.criterion);

  int step = 0;
  while (cfg.max_steps < 0 || step < cfg.max_steps) {
    ++step;
    const auto moves = candidate_moves(res.graph);
    std::vector<Candidate> cands;
    cands.reserve(moves.size());
    bool out_of_budget = false;
    for (const Move &mv : moves) {
      if (cfg.fit_budget >= 0 && res.fits_performed >= cfg.fit_budget) {
        out_of_budget = true;
        break;
      }
      Candidate c;
      c.move = mv;
      InteractionGraph g = res.graph;
      if (mv.kind == Move::Add)
        g.add_edge(mv.edge.first, mv.edge.second);
      else
        g.remove_edge(mv.edge.first, mv.edge.second);
      try {
        ++res.fits_performed;
        const FitResult fr =
            fit_graph(ds, g, cfg.fit, cfg.max_order, &res.fit.lambda, &index);
        const ParameterIndex idx(ModelTerms::from_graph(g, cfg.max_order),
                                 ds.schema);
        c.value = information_criterion(fr.loglik, n1,
                                        static_cast<int>(idx.size()),
                                        cfg.criterion)
                      .value;
        c.ok = true;
      } catch (const Error &) {
        // divergent or singular candidate: scored +inf, recorded in trace
        c.ok = false;
      }
      cands.push_back(c);
    }
    if (cands.empty()) {
      res.budget_exhausted = out_of_budget;
      break;
    }

    std::sort(cands.begin(), cands.end(), better);
    std::vector<Candidate> accepted;
    for (const Candidate &c : cands) {
      if (!c.ok || c.value >= res.score.value - cfg.min_improve)
        break;
      accepted.push_back(c);
      if (static_cast<int>(accepted.size()) >= cfg.batch_k)
        break;
    }

    if (accepted.empty()) {
      // record the best rejected move so the trace shows the stopping step
      if (!cands.empty())
        res.trace.push_back({step, cands.front().move, res.score.value,
                             cands.front().value, false});
      res.budget_exhausted = out_of_budget;
      break;
    }

    auto apply = [&](const InteractionGraph &base,
                     std::span<const Candidate> moves_to_apply) {
      InteractionGraph g = base;
      for (const Candidate &c : moves_to_apply) {
        if (c.move.kind == Move::Add)
          g.add_edge(c.move.edge.first, c.move.edge.second);
        else
          g.remove_edge(c.move.edge.first, c.move.edge.second);
      }
      return g;
    };

    InteractionGraph next = apply(res.graph, accepted);
    FitResult next_fit =
        fit_graph(ds, next, cfg.fit, cfg.max_order, &res.fit.lambda, &index);
    ParameterIndex next_index(ModelTerms::from_graph(next, cfg.max_order),
                              ds.schema);
    ModelScore next_score = information_criterion(
        next_fit.loglik, n1, static_cast<int>(next_index.size()),
        cfg.criterion);
    if (accepted.size() > 1 && next_score.value > accepted.front().value) {
      // a joint batch move may interact badly; fall back to the single best
      accepted.resize(1);
      next = apply(res.graph, accepted);
      next_fit =
          fit_graph(ds, next, cfg.fit, cfg.max_order, &res.fit.lambda, &index);
      next_index = ParameterIndex(ModelTerms::from_graph(next, cfg.max_order),
                                  ds.schema);
      next_score = information_criterion(next_fit.loglik, n1,
                                         static_cast<int>(next_index.size()),
                                         cfg.criterion);
    }

    for (const Candidate &c : accepted)
      res.trace.push_back({step, c.move, res.score.value, next_score.value,
                           true});
    res.graph = std::move(next);
    res.fit = std::move(next_fit);
    index = std::move(next_index);
    res.score = next_score;
    if (out_of_budget) {
      res.budget_exhausted = true;
      break;
    }
  }
  return res;
}

} // namespace loglin
