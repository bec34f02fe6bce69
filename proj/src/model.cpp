#include "loglin/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loglin/error.hpp"

namespace loglin {

InteractionGraph::InteractionGraph(int p, const std::vector<Edge> &edges)
    : p_(p) {
  for (const auto &[a, b] : edges)
    add_edge(a, b);
}

void InteractionGraph::add_edge(int a, int b) {
  if (a == b)
    throw InvalidSpec("self-loop edge");
  if (a < 0 || b < 0 || a >= p_ || b >= p_)
    throw InvalidSpec("edge endpoint out of range");
  edges_.insert(make_edge(a, b));
}

void InteractionGraph::remove_edge(int a, int b) {
  edges_.erase(make_edge(a, b));
}

InteractionGraph InteractionGraph::banded(int p) {
  InteractionGraph g(p);
  for (int i = 0; i + 1 < p; ++i)
    g.add_edge(i, i + 1);
  return g;
}

InteractionGraph InteractionGraph::complete(int p) {
  InteractionGraph g(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      g.add_edge(i, j);
  return g;
}

InteractionGraph InteractionGraph::from_json(const nlohmann::json &j) {
  InteractionGraph g(j.at("p").get<int>());
  for (const auto &e : j.at("edges"))
    g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
  return g;
}

InteractionGraph InteractionGraph::from_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open graph file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json
InteractionGraph::to_json(const std::vector<std::string> &names) const {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto &[a, b] : edges_)
    edges.push_back({a, b});
  nlohmann::json j = {{"p", p_}, {"edges", edges}};
  if (!names.empty())
    j["names"] = names;
  return j;
}

std::string
InteractionGraph::to_dot(const std::vector<std::string> &names) const {
  auto label = [&](int v) {
    return names.empty() ? "v" + std::to_string(v + 1) : names[v];
  };
  std::ostringstream os;
  os << "graph G {\n";
  for (int v = 0; v < p_; ++v)
    os << "  \"" << label(v) << "\";\n";
  for (const auto &[a, b] : edges_)
    os << "  \"" << label(a) << "\" -- \"" << label(b) << "\";\n";
  os << "}\n";
  return os.str();
}

std::vector<Move> candidate_moves(const InteractionGraph &g) {
  std::vector<Move> moves;
  const int p = g.num_vertices();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (!g.has_edge(i, j))
        moves.push_back({Move::Add, {i, j}});
  for (const auto &e : g.edges())
    moves.push_back({Move::Remove, e});
  return moves;
}

namespace {

bool term_less(const Term &a, const Term &b) {
  if (a.size() != b.size())
    return a.size() < b.size();
  return a < b;
}

bool is_clique(const InteractionGraph &g, const Term &t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j)
      if (!g.has_edge(t[i], t[j]))
        return false;
  return true;
}

// Enumerate all complete subsets of size >= 2, bounded by max_order, by
// extending cliques with higher-numbered adjacent vertices.
void extend_clique(const InteractionGraph &g, Term &current, int max_order,
                   std::vector<Term> &out) {
  if (current.size() >= 2)
    out.push_back(current);
  if (max_order > 0 && static_cast<int>(current.size()) >= max_order)
    return;
  const int p = g.num_vertices();
  for (int v = current.back() + 1; v < p; ++v) {
    bool adjacent = true;
    for (int u : current)
      if (!g.has_edge(u, v)) {
        adjacent = false;
        break;
      }
    if (adjacent) {
      current.push_back(v);
      extend_clique(g, current, max_order, out);
      current.pop_back();
    }
  }
}

} // namespace

ModelTerms ModelTerms::from_graph(const InteractionGraph &g, int max_order) {
  if (max_order < 0)
    throw InvalidSpec("max_order must be >= 0 (0 = unbounded)");
  ModelTerms mt;
  mt.terms_.push_back({}); // intercept
  const int p = g.num_vertices();
  for (int v = 0; v < p; ++v)
    mt.terms_.push_back({v});
  if (max_order == 1)
    return mt;
  std::vector<Term> cliques;
  for (const auto &[a, b] : g.edges()) {
    Term t = {a, b};
    extend_clique(g, t, max_order, cliques);
  }
  std::sort(cliques.begin(), cliques.end(), term_less);
  cliques.erase(std::unique(cliques.begin(), cliques.end()), cliques.end());
  mt.terms_.insert(mt.terms_.end(), cliques.begin(), cliques.end());
  return mt;
}

ModelTerms ModelTerms::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), term_less);
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  ModelTerms mt;
  mt.terms_ = std::move(terms);
  if (mt.terms_.empty() || !mt.terms_.front().empty())
    throw InvalidSpec("term set must include the intercept {}");
  if (!mt.is_hierarchical())
    throw InvalidSpec("term set is not hierarchical");
  return mt;
}

ModelTerms ModelTerms::intercept_only() {
  ModelTerms mt;
  mt.terms_.push_back({});
  return mt;
}

bool ModelTerms::contains(const Term &t) const {
  return std::binary_search(terms_.begin(), terms_.end(), t, term_less);
}

bool ModelTerms::is_hierarchical() const {
  for (const auto &t : terms_) {
    if (t.size() < 2)
      continue;
    // all subsets one element smaller must be present
    for (std::size_t drop = 0; drop < t.size(); ++drop) {
      Term sub;
      for (std::size_t i = 0; i < t.size(); ++i)
        if (i != drop)
          sub.push_back(t[i]);
      if (!contains(sub))
        return false;
    }
  }
  return true;
}

int ModelTerms::max_term_size() const {
  return static_cast<int>(terms_.back().size());
}

ParameterIndex::ParameterIndex(const ModelTerms &terms,
                               const VariableSchema &schema)
    : terms_(terms), schema_(schema) {
  size_ = 1; // intercept
  for (const auto &t : terms_.terms()) {
    if (t.empty())
      continue;
    Block b;
    b.term = t;
    b.start = size_;
    b.stride.resize(t.size());
    std::uint64_t block = 1;
    for (std::size_t i = t.size(); i-- > 0;) {
      if (t[i] < 0 || static_cast<std::size_t>(t[i]) >= schema_.num_variables())
        throw InvalidSpec("term variable out of schema range");
      b.stride[i] = static_cast<std::uint32_t>(block);
      block *= schema_.num_levels(t[i]) - 1;
    }
    block_of_term_.emplace(t, blocks_.size());
    blocks_.push_back(std::move(b));
    size_ += block;
  }
}

ParameterIndex::Entry ParameterIndex::entry(std::size_t pos) const {
  if (pos == 0)
    return {};
  // blocks are contiguous and ordered; binary search by start
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), pos,
                             [](std::size_t v, const Block &b) {
                               return v < b.start;
                             });
  const Block &b = *std::prev(it);
  Entry e;
  e.term = b.term;
  std::size_t off = pos - b.start;
  e.combo.resize(b.term.size());
  for (std::size_t i = 0; i < b.term.size(); ++i) {
    e.combo[i] = static_cast<std::uint8_t>(off / b.stride[i] + 1);
    off %= b.stride[i];
  }
  return e;
}

std::size_t ParameterIndex::position(const Term &term,
                                     std::span<const std::uint8_t> combo) const {
  if (term.empty())
    return 0;
  auto it = block_of_term_.find(term);
  if (it == block_of_term_.end())
    return npos;
  const Block &b = blocks_[it->second];
  std::size_t pos = b.start;
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (combo[i] < 1 ||
        combo[i] >= schema_.num_levels(term[i]))
      return npos;
    pos += static_cast<std::size_t>(combo[i] - 1) * b.stride[i];
  }
  return pos;
}

void ParameterIndex::design_row(const Cell &cell,
                                std::vector<std::uint32_t> &out) const {
  out.clear();
  out.push_back(0);
  for (const Block &b : blocks_) {
    std::size_t pos = b.start;
    bool active = true;
    for (std::size_t i = 0; i < b.term.size(); ++i) {
      const std::uint8_t lvl = cell[b.term[i]];
      if (lvl == 0) { // set-first-to-zero: reference level kills the term
        active = false;
        break;
      }
      pos += static_cast<std::size_t>(lvl - 1) * b.stride[i];
    }
    if (active)
      out.push_back(static_cast<std::uint32_t>(pos));
  }
}

std::vector<std::uint32_t> ParameterIndex::design_row(const Cell &cell) const {
  std::vector<std::uint32_t> out;
  design_row(cell, out);
  return out;
}

std::size_t parameter_count(const ModelTerms &terms,
                            const VariableSchema &schema) {
  return ParameterIndex(terms, schema).size();
}

std::vector<double> transfer_parameters(const ParameterIndex &from,
                                        const std::vector<double> &values,
                                        const ParameterIndex &to) {
  std::vector<double> out(to.size(), 0.0);
  out[0] = values.empty() ? 0.0 : values[0];
  for (std::size_t pos = 1; pos < from.size() && pos < values.size(); ++pos) {
    if (values[pos] == 0.0)
      continue;
    const auto e = from.entry(pos);
    const std::size_t tpos = to.position(e.term, e.combo);
    if (tpos != ParameterIndex::npos)
      out[tpos] = values[pos];
  }
  return out;
}

} // namespace loglin
