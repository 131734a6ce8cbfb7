/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <set>

#include "doctest.h"
#include "nsk/neighbors.hpp"
#include "nsk/synth.hpp"
#include "test_util.hpp"

using namespace nsk;
using namespace nsk::testutil;

namespace {

KernelConfig path_cfg(bool normalize = false) {
  KernelConfig c;
  c.structure_kind = StructureKind::Path;
  c.normalize = normalize;
  return c;
}

LabeledDataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.id = "r" + std::to_string(i);
    ex.label = int(i % 2);
    ex.structure = random_path(rng, 6, 4, 6);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

// Single-bucket index: every item collides, so probing degenerates to the
// whole dataset and hashed construction must match the exact graph.
HashIndex single_bucket_index(std::size_t n) {
  HashIndex idx;
  idx.anchors.indices = {0};
  idx.functions.family = HashFamily::Rknn;
  idx.functions.H = 1;
  idx.functions.rknn_subset1 = {{0}};
  idx.functions.rknn_subset2 = {{0}};  // always ties -> bit 1 for everything
  HashCode code{1, 1};
  for (std::size_t i = 0; i < n; ++i) idx.buckets[code].push_back(i);
  idx.indexed_count = n;
  return idx;
}

void check_transpose(const KnnGraph& g) {
  // every out-edge appears exactly once as an in-edge with matching rank
  std::size_t out_total = 0, in_total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out_total += g.out_edges[i].size();
    in_total += g.in_edges[i].size();
    for (std::size_t r = 0; r < g.out_edges[i].size(); ++r) {
      const auto& e = g.out_edges[i][r];
      CHECK(e.neighbor != i);
      bool found = false;
      for (const auto& in : g.in_edges[e.neighbor])
        if (in.source == i && in.rank == r && in.similarity == e.similarity)
          found = true;
      CHECK(found);
    }
  }
  CHECK(out_total == in_total);
}

}  // namespace

TEST_CASE("exact_knn_graph small cases") {
  SUBCASE("identical structures break ties by lower index") {
    LabeledDataset ds;
    auto p = make_path({{"a", "x"}});
    ds.examples = {{"0", p, 0}, {"1", p, 0}, {"2", p, 0}};
    KernelEngine e(path_cfg());
    auto g = exact_knn_graph(e, ds, 1);
    CHECK(g.out_edges[0][0].neighbor == 1);
    CHECK(g.out_edges[1][0].neighbor == 0);
    CHECK(g.out_edges[2][0].neighbor == 0);
  }
  SUBCASE("k >= N-1 gives the complete graph") {
    auto ds = random_dataset(5, 1);
    KernelEngine e(path_cfg());
    auto g = exact_knn_graph(e, ds, 10);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(g.out_edges[i].size() == 4);
      std::set<std::size_t> nb;
      for (auto& ed : g.out_edges[i]) nb.insert(ed.neighbor);
      CHECK(nb.size() == 4);
      CHECK(nb.count(i) == 0);
    }
  }
  SUBCASE("all-zero similarities fall back to index order") {
    LabeledDataset ds;
    ds.examples = {{"0", make_path({{"a", "x"}}), 0},
                   {"1", make_path({{"b", "y"}}), 0},
                   {"2", make_path({{"c", "z"}}), 0}};
    KernelEngine e(path_cfg());
    auto g = exact_knn_graph(e, ds, 2);
    CHECK(g.out_edges[2][0].neighbor == 0);
    CHECK(g.out_edges[2][1].neighbor == 1);
  }
}

TEST_CASE("transpose consistency after every construction") {
  auto ds = random_dataset(40, 7);
  KernelEngine e(path_cfg());
  check_transpose(exact_knn_graph(e, ds, 3));
  auto idx = single_bucket_index(ds.size());
  check_transpose(hashed_knn_graph(e, ds, 3, idx, 3));
  std::vector<std::size_t> subset{1, 5, 9, 13, 21, 30, 33};
  check_transpose(exact_knn_graph_subset(e, ds, subset, 2));
}

TEST_CASE("hashed graph with a single bucket equals the exact graph") {
  auto ds = random_dataset(30, 9);
  KernelEngine e(path_cfg());
  auto exact = exact_knn_graph(e, ds, 3);
  auto hashed = hashed_knn_graph(e, ds, 3, single_bucket_index(ds.size()), 3);
  REQUIRE(hashed.size() == exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) {
    REQUIRE(hashed.out_edges[i].size() == exact.out_edges[i].size());
    for (std::size_t r = 0; r < exact.out_edges[i].size(); ++r) {
      CHECK(hashed.out_edges[i][r].neighbor == exact.out_edges[i][r].neighbor);
      CHECK(hashed.out_edges[i][r].similarity ==
            exact.out_edges[i][r].similarity);
    }
  }
}

TEST_CASE("hashed graph pads to full degree when probing under-delivers") {
  auto ds = random_dataset(20, 11);
  // index where every node sits alone in its own bucket
  HashIndex idx;
  idx.functions.family = HashFamily::Rknn;
  idx.functions.H = 8;
  for (std::size_t i = 0; i < ds.size(); ++i)
    idx.buckets[HashCode{i, 8}].push_back(i);
  idx.indexed_count = ds.size();

  KernelEngine e(path_cfg());
  auto g = hashed_knn_graph(e, ds, 4, idx, 4, 0, 77);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(g.out_edges[i].size() == 4);
    for (auto& ed : g.out_edges[i]) CHECK(ed.neighbor != i);
  }

  SUBCASE("padding is seeded") {
    auto g2 = hashed_knn_graph(e, ds, 4, idx, 4, 0, 77);
    for (std::size_t i = 0; i < ds.size(); ++i)
      for (std::size_t r = 0; r < 4; ++r)
        CHECK(g.out_edges[i][r].neighbor == g2.out_edges[i][r].neighbor);
  }
}

TEST_CASE("hashed recall beats the random baseline") {
  SyntheticSpec spec;
  spec.n_examples = 500;
  spec.rng_seed = 13;
  auto ds = generate_synthetic(spec);
  KernelEngine e(path_cfg());
  const std::size_t k = 4;
  auto exact = exact_knn_graph(e, ds, k);

  auto anchors = sample_anchors(ds.size(), 23, 3);
  auto fns = build_rknn_functions(23, 8, default_alpha_subset(23), 3);
  auto idx = build_index(e, ds, anchors, fns);
  auto hashed = hashed_knn_graph(e, ds, k, idx, k, 2, 3);

  double overlap = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::set<std::size_t> ex;
    for (auto& ed : exact.out_edges[i]) ex.insert(ed.neighbor);
    for (auto& ed : hashed.out_edges[i]) overlap += ex.count(ed.neighbor);
  }
  double recall = overlap / double(ds.size() * k);
  double random_baseline = double(k) / double(ds.size() - 1);
  CHECK(recall > random_baseline);

  SUBCASE("hashed top-1 quality sits between exact and random") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    double exact_mean = 0, hashed_mean = 0, random_mean = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      exact_mean += exact.out_edges[i][0].similarity;
      hashed_mean += hashed.out_edges[i][0].similarity;
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      random_mean += e.structure_kernel(ds.examples[i].structure,
                                        ds.examples[j].structure);
    }
    CHECK(hashed_mean <= exact_mean);
    CHECK(hashed_mean >= random_mean);
  }
}

TEST_CASE("get_neighbors") {
  // hand-built 4-node graph
  KnnGraph g;
  g.k = 2;
  g.out_edges = {
      {{1, 0.9}, {2, 0.5}},  // 0 -> 1, 2
      {{0, 0.9}, {3, 0.4}},  // 1 -> 0, 3
      {{0, 0.5}, {1, 0.2}},  // 2 -> 0, 1
      {{1, 0.4}, {2, 0.1}},  // 3 -> 1, 2
  };
  g.rebuild_in_edges();

  SUBCASE("mode=out, k'=1 takes each node's best neighbor") {
    auto n = get_neighbors(g, {0, 3}, 1, NeighborDirection::Out);
    CHECK(n == std::set<std::size_t>{1});
  }
  SUBCASE("mode=out full degree") {
    auto n = get_neighbors(g, {0}, 2, NeighborDirection::Out);
    CHECK(n == std::set<std::size_t>{1, 2});
  }
  SUBCASE("mode=in respects edge rank") {
    // sources listing node 1 at rank 0: nodes 0 and 3
    auto n = get_neighbors(g, {1}, 1, NeighborDirection::In);
    CHECK(n == std::set<std::size_t>{0, 3});
    // at k'=2 node 2 joins (1 is its rank-1 neighbor)
    auto n2 = get_neighbors(g, {1}, 2, NeighborDirection::In);
    CHECK(n2 == std::set<std::size_t>{0, 2, 3});
  }
  SUBCASE("mode=in on an unreferenced node is empty") {
    KnnGraph h;
    h.k = 1;
    h.out_edges = {{{1, 1.0}}, {{0, 1.0}}, {{0, 0.5}}};
    h.rebuild_in_edges();
    CHECK(get_neighbors(h, {2}, 1, NeighborDirection::In).empty());
  }
  SUBCASE("out/in symmetry") {
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t y = 0; y < 4; ++y) {
        bool out = get_neighbors(g, {y}, 2, NeighborDirection::Out).count(x);
        bool in = get_neighbors(g, {x}, 2, NeighborDirection::In).count(y);
        CHECK(out == in);
      }
  }
}

TEST_CASE("classify_knn") {
  KernelEngine e(path_cfg());
  auto p = make_path({{"a", "x"}});
  auto q = make_path({{"b", "y"}});

  SUBCASE("majority vote") {
    LabeledDataset ds;
    ds.examples = {{"0", p, 1}, {"1", p, 1}, {"2", p, 0}};
    auto idx = single_bucket_index(3);
    auto c = classify_knn(e, ds, idx, p, 3);
    CHECK(c.label == 1);
  }
  SUBCASE("vote tie broken by summed similarity") {
    LabeledDataset ds;
    ds.examples = {{"0", p, 1}, {"1", q, 0}};
    auto idx = single_bucket_index(2);
    auto c = classify_knn(e, ds, idx, p, 2);  // sims: 0.64 vs 0
    CHECK(c.label == 1);
  }
  SUBCASE("full tie falls to label 0") {
    LabeledDataset ds;
    ds.examples = {{"0", p, 1}, {"1", p, 0}};
    auto idx = single_bucket_index(2);
    auto c = classify_knn(e, ds, idx, p, 2);
    CHECK(c.label == 0);
  }
  SUBCASE("single-bucket classification equals brute force top-k") {
    auto ds = random_dataset(30, 17);
    auto idx = single_bucket_index(ds.size());
    std::mt19937_64 rng(19);
    for (int t = 0; t < 20; ++t) {
      Structure query = random_path(rng, 6, 4, 6);
      auto c = classify_knn(e, ds, idx, query, 5);
      // brute force: all similarities, top-5 by (sim desc, index asc)
      std::vector<std::pair<double, std::size_t>> sims;
      for (std::size_t i = 0; i < ds.size(); ++i)
        sims.emplace_back(
            e.structure_kernel(query, ds.examples[i].structure), i);
      std::sort(sims.begin(), sims.end(), [](auto& a, auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      double votes[2] = {0, 0};
      for (int r = 0; r < 5; ++r)
        votes[ds.examples[sims[r].second].label] += sims[r].first;
      int want;
      double n1 = 0, n0 = 0;
      for (int r = 0; r < 5; ++r)
        (ds.examples[sims[r].second].label ? n1 : n0) += 1;
      if (n1 != n0)
        want = n1 > n0;
      else
        want = votes[1] > votes[0] ? 1 : 0;
      CHECK(c.label == want);
    }
  }
  SUBCASE("empty training set rejected") {
    LabeledDataset empty;
    auto idx = single_bucket_index(0);
    CHECK_THROWS_AS(classify_knn(e, empty, idx, p, 1), DataError);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("frozen arithmetic TP=2 FP=1 FN=2") {
    std::vector<int> pred{1, 1, 0, 0, 1, 0};
    std::vector<int> gold{1, 1, 1, 1, 0, 0};
    auto r = evaluate(pred, gold);
    CHECK(r.tp == 2);
    CHECK(r.fp == 1);
    CHECK(r.fn == 2);
    CHECK(r.tn == 1);
    CHECK(r.precision == doctest::Approx(0.6667).epsilon(1e-3));
    CHECK(r.recall == doctest::Approx(0.5));
    CHECK(r.f1 == doctest::Approx(0.5714).epsilon(1e-3));
  }
  SUBCASE("perfect predictions") {
    std::vector<int> v{1, 0, 1};
    CHECK(evaluate(v, v).f1 == doctest::Approx(1.0));
  }
  SUBCASE("no predicted positives guards the zero denominators") {
    std::vector<int> pred{0, 0};
    std::vector<int> gold{1, 0};
    auto r = evaluate(pred, gold);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(evaluate({1}, {1, 0}), DataError);
  }
  SUBCASE("permutation invariance") {
    std::vector<int> pred{1, 1, 0, 0, 1, 0};
    std::vector<int> gold{1, 1, 1, 1, 0, 0};
    auto base = evaluate(pred, gold);
    std::mt19937_64 rng(23);
    std::vector<std::size_t> perm{0, 1, 2, 3, 4, 5};
    for (int t = 0; t < 10; ++t) {
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<int> p2, g2;
      for (auto i : perm) p2.push_back(pred[i]), g2.push_back(gold[i]);
      auto r = evaluate(p2, g2);
      CHECK(r.f1 == base.f1);
      CHECK(r.tp == base.tp);
    }
  }
}
