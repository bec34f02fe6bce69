#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "loglin/error.hpp"
#include "loglin/sampler.hpp"

using namespace loglin;

namespace {

VariableSchema uniform(int p, int k) {
  std::vector<Variable> vars;
  for (int j = 0; j < p; ++j) {
    Variable v{"v" + std::to_string(j + 1), {}};
    for (int l = 0; l < k; ++l)
      v.levels.push_back("l" + std::to_string(l + 1));
    vars.push_back(v);
  }
  return VariableSchema(vars);
}

SparseCountTable small_table() {
  auto schema = uniform(3, 3); // 27 cells
  std::map<Cell, std::int64_t> counts{{Cell{0, 0, 0}, 4},
                                      {Cell{1, 2, 0}, 1},
                                      {Cell{2, 2, 2}, 2}};
  return SparseCountTable(schema, std::move(counts));
}

bool disjoint_and_sorted(const SampledDataset &ds) {
  if (!std::is_sorted(ds.zeros.begin(), ds.zeros.end()))
    return false;
  if (std::adjacent_find(ds.zeros.begin(), ds.zeros.end()) != ds.zeros.end())
    return false;
  std::set<Cell> pos;
  for (const auto &[c, n] : ds.positives)
    pos.insert(c);
  for (const auto &c : ds.zeros)
    if (pos.count(c))
      return false;
  return true;
}

} // namespace

TEST_CASE("pi = 1 keeps every empty cell, pi = 0 keeps none") {
  auto table = small_table();
  auto all = sample_zeros(table, {.seed = 1, .pi = 1.0});
  CHECK(all.zeros.size() == 27 - 3);
  CHECK(all.log_pi == 0.0);
  CHECK(disjoint_and_sorted(all));

  auto none = sample_zeros(table, {.seed = 1, .pi = 0.0});
  CHECK(none.zeros.empty());
  CHECK(std::isinf(none.log_pi));
  CHECK(none.log_pi < 0.0);
  CHECK_THROWS_AS(effective_log_pi(none), ZeroSample);
}

TEST_CASE("pi target draws a plausible fraction of empties") {
  auto schema = uniform(6, 3); // 729 cells
  SparseCountTable table(schema, {{Cell{0, 0, 0, 0, 0, 0}, 5}});
  auto ds = sample_zeros(table, {.seed = 9, .pi = 0.25});
  CHECK(ds.log_pi == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(disjoint_and_sorted(ds));
  // 728 Bernoulli(0.25) draws; 6 sigma is about 70
  CHECK(ds.zeros.size() > 182 - 70);
  CHECK(ds.zeros.size() < 182 + 70);
}

TEST_CASE("n0 target draws exactly n0 distinct empty cells") {
  auto table = small_table();
  for (std::int64_t n0 : {0, 1, 5, 12, 24}) {
    auto ds = sample_zeros(table, {.seed = 3, .n0 = n0});
    CHECK(ds.n0() == n0);
    CHECK(disjoint_and_sorted(ds));
    CHECK(ds.n1() == 7);
    if (n0 > 0) {
      CHECK(ds.log_pi ==
            doctest::Approx(std::log(double(n0)) - ds.log_s).epsilon(1e-12));
      CHECK(effective_log_pi(ds) == doctest::Approx(ds.log_pi).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  auto table = small_table();
  auto a = sample_zeros(table, {.seed = 42, .n0 = 10});
  auto b = sample_zeros(table, {.seed = 42, .n0 = 10});
  CHECK(a.zeros == b.zeros);
  auto c = sample_zeros(table, {.seed = 43, .n0 = 10});
  CHECK(a.zeros != c.zeros);

  auto d = sample_zeros(table, {.seed = 7, .pi = 0.5});
  auto e = sample_zeros(table, {.seed = 7, .pi = 0.5});
  CHECK(d.zeros == e.zeros);
}

TEST_CASE("n0 draws are roughly uniform over the empty cells") {
  auto schema = uniform(2, 4); // 16 cells
  SparseCountTable table(schema, {{Cell{0, 0}, 1}});
  std::map<Cell, int> hits;
  const int reps = 3000;
  for (int r = 0; r < reps; ++r) {
    auto ds = sample_zeros(table, {.seed = std::uint64_t(r), .n0 = 3});
    for (const auto &c : ds.zeros)
      ++hits[c];
  }
  CHECK(hits.size() == 15);
  const double expect = reps * 3.0 / 15.0; // 600
  for (const auto &[c, h] : hits) {
    CHECK(h > expect * 0.8);
    CHECK(h < expect * 1.2);
  }
}

TEST_CASE("dense and sparse n0 paths both cover the feasibility edge") {
  auto table = small_table(); // 24 empties
  // dense path: n0 * 2 > empties
  auto dense = sample_zeros(table, {.seed = 11, .n0 = 20});
  CHECK(dense.n0() == 20);
  CHECK(disjoint_and_sorted(dense));
  // exact boundary: every empty cell
  auto all = sample_zeros(table, {.seed = 11, .n0 = 24});
  CHECK(all.n0() == 24);
  CHECK(disjoint_and_sorted(all));
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 11, .n0 = 25}),
                  TargetInfeasible);
}

TEST_CASE("rejection sampling works on a non-enumerable table") {
  auto schema = uniform(70, 4); // 4^70 cells, far beyond enumeration
  SparseCountTable table(schema, {{Cell(70, 0), 2}, {Cell(70, 1), 1}});
  auto ds = sample_zeros(table, {.seed = 5, .n0 = 2000});
  CHECK(ds.n0() == 2000);
  CHECK(disjoint_and_sorted(ds));
  CHECK(ds.log_pi ==
        doctest::Approx(std::log(2000.0) - 70.0 * std::log(4.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 5, .pi = 0.1}),
                  EnumerationRequired);
}

TEST_CASE("effective sampling rate at survey scale") {
  // 150140 sampled zeros against log s = 90.8 gives log pi near -78.9
  SampledDataset ds{uniform(2, 2), {}, std::vector<Cell>(150140, Cell{0, 0}),
                    0.0, 90.8};
  CHECK(effective_log_pi(ds) ==
        doctest::Approx(std::log(150140.0) - 90.8).epsilon(1e-12));
  CHECK(effective_log_pi(ds) == doctest::Approx(-78.88).epsilon(1e-3));
}

TEST_CASE("config validation") {
  auto table = small_table();
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 1}), InvalidSpec);
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 1, .n0 = 2, .pi = 0.5}),
                  InvalidSpec);
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 1, .n0 = -1}), InvalidSpec);
  CHECK_THROWS_AS(sample_zeros(table, {.seed = 1, .pi = 1.5}), InvalidSpec);
}

TEST_CASE("full table dataset enumerates every cell") {
  auto table = small_table();
  auto ds = full_table_dataset(table);
  CHECK(ds.log_pi == 0.0);
  CHECK(ds.positives.size() + ds.zeros.size() == 27);
  CHECK(disjoint_and_sorted(ds));
  CHECK(ds.n1() == 7);

  SparseCountTable huge(uniform(70, 4), {{Cell(70, 0), 1}});
  CHECK_THROWS_AS(full_table_dataset(huge), EnumerationRequired);
}
