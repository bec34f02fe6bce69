#ifndef LOGLIN_MODEL_HPP
#define LOGLIN_MODEL_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loglin/schema.hpp"

namespace loglin {

using Edge = std::pair<int, int>; // canonical: first < second

inline Edge make_edge(int a, int b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

/// Conditional-independence graph: missing edges encode vanishing two-way
/// (and higher) interactions between the corresponding variables.
class InteractionGraph {
public:
  explicit InteractionGraph(int p) : p_(p) {}
  InteractionGraph(int p, const std::vector<Edge> &edges);

  int num_vertices() const { return p_; }
  const std::set<Edge> &edges() const { return edges_; }
  bool has_edge(int a, int b) const { return edges_.count(make_edge(a, b)); }
  void add_edge(int a, int b);
  void remove_edge(int a, int b);

  static InteractionGraph banded(int p); // path graph, edges (i, i+1)
  static InteractionGraph complete(int p);

  static InteractionGraph from_json(const nlohmann::json &j);
  static InteractionGraph from_json_file(const std::string &path);
  nlohmann::json to_json(const std::vector<std::string> &names = {}) const;
  std::string to_dot(const std::vector<std::string> &names = {}) const;

  bool operator==(const InteractionGraph &o) const {
    return p_ == o.p_ && edges_ == o.edges_;
  }

private:
  int p_;
  std::set<Edge> edges_;
};

struct Move {
  enum Kind { Add, Remove } kind;
  Edge edge;
};

/// All single-edge moves from a graph: every non-edge as Add, every edge as
/// Remove, each list in canonical (i < j) order.
std::vector<Move> candidate_moves(const InteractionGraph &g);

using Term = std::vector<int>; // strictly increasing variable indices

/// Hierarchical interaction-term set: every subset of a present term is also
/// present, and every term of size >= 2 is a clique of the generating graph.
class ModelTerms {
public:
  /// All complete subsets of g with size <= max_order (0 = unbounded), plus
  /// the intercept and all singletons.
  static ModelTerms from_graph(const InteractionGraph &g, int max_order);
  static ModelTerms from_terms(std::vector<Term> terms); // validates closure
  static ModelTerms intercept_only();

  // Sorted by (size, lexicographic); terms_[0] is the intercept {}.
  const std::vector<Term> &terms() const { return terms_; }
  bool contains(const Term &t) const;
  bool is_hierarchical() const;
  int max_term_size() const;

private:
  std::vector<Term> terms_;
};

/// Flat indexing of all free parameters under the set-first-to-zero
/// constraint. Position 0 is the intercept; each non-empty term D owns a
/// contiguous block of size prod_{j in D}(|L_j| - 1), level combos in
/// odometer order (last variable fastest), combo levels starting at 1.
class ParameterIndex {
public:
  ParameterIndex(const ModelTerms &terms, const VariableSchema &schema);

  std::size_t size() const { return size_; }
  const ModelTerms &terms() const { return terms_; }
  const VariableSchema &schema() const { return schema_; }

  struct Entry {
    Term term;                       // empty for the intercept
    std::vector<std::uint8_t> combo; // level index per term variable, >= 1
  };
  Entry entry(std::size_t pos) const;

  /// Position of (term, combo), or npos when absent. Used to transfer warm
  /// starts between nested models.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t position(const Term &term,
                       std::span<const std::uint8_t> combo) const;

  /// Sparse indicator row m_x for a cell: strictly increasing positions whose
  /// parameter is active at this cell (the intercept always is).
  void design_row(const Cell &cell, std::vector<std::uint32_t> &out) const;
  std::vector<std::uint32_t> design_row(const Cell &cell) const;

private:
  struct Block {
    Term term;
    std::size_t start;
    std::vector<std::uint32_t> stride; // per term variable
  };
  ModelTerms terms_;
  VariableSchema schema_;
  std::vector<Block> blocks_; // non-empty terms, in term order
  std::map<Term, std::size_t> block_of_term_;
  std::size_t size_ = 0;
};

std::size_t parameter_count(const ModelTerms &terms,
                            const VariableSchema &schema);

/// Carry coefficients from one parameter index to another by (term, combo)
/// identity; parameters absent from the target are dropped, new ones are 0.
std::vector<double> transfer_parameters(const ParameterIndex &from,
                                        const std::vector<double> &values,
                                        const ParameterIndex &to);

} // namespace loglin

#endif
