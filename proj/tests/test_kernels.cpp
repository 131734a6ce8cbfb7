/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nsk/kernels.hpp"
#include "test_util.hpp"

using namespace nsk;
using namespace nsk::testutil;

namespace {

KernelConfig path_cfg(double lambda = 0.8) {
  KernelConfig c;
  c.structure_kind = StructureKind::Path;
  c.lambda_decay = lambda;
  return c;
}

KernelConfig tree_cfg(double lambda = 0.8) {
  KernelConfig c;
  c.structure_kind = StructureKind::Tree;
  c.lambda_decay = lambda;
  return c;
}

std::shared_ptr<EmbeddingTable> tiny_embeddings() {
  auto t = std::make_shared<EmbeddingTable>();
  t->dim = 2;
  t->vectors["u"] = {1.0, 0.0};
  t->vectors["v"] = {0.0, 1.0};
  t->vectors["w"] = {1.0, 0.0};
  return t;
}

// Independent indicator tuple match used by the annihilation oracle below.
bool tuples_match(const TupleLabel& a, const TupleLabel& b) {
  return a.edge_label == b.edge_label && a.node_label == b.node_label;
}

// Independent enumeration of matching equal-length subsequence pairs with
// every tuple whose edge label equals `banned` excluded from selection,
// spans measured on the original sequences (inclusive).
double filtered_bruteforce(const PathStructure& a, const PathStructure& b,
                           double lambda, const std::string& banned) {
  const std::size_t n = a.tuples.size(), m = b.tuples.size();
  double total = 0.0;
  for (std::uint32_t ma = 1; ma < (1u << n); ++ma) {
    std::vector<std::size_t> ia;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      if (ma & (1u << i)) {
        if (a.tuples[i].edge_label == banned) { ok = false; break; }
        ia.push_back(i);
      }
    if (!ok) continue;
    for (std::uint32_t mb = 1; mb < (1u << m); ++mb) {
      std::vector<std::size_t> ib;
      bool okb = true;
      for (std::size_t j = 0; j < m; ++j)
        if (mb & (1u << j)) {
          if (b.tuples[j].edge_label == banned) { okb = false; break; }
          ib.push_back(j);
        }
      if (!okb || ib.size() != ia.size()) continue;
      bool match = true;
      for (std::size_t p = 0; p < ia.size(); ++p)
        if (!tuples_match(a.tuples[ia[p]], b.tuples[ib[p]])) {
          match = false;
          break;
        }
      if (!match) continue;
      std::size_t span_a = ia.back() - ia.front() + 1;
      std::size_t span_b = ib.back() - ib.front() + 1;
      total += std::pow(lambda, double(span_a + span_b));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("tuple kernel, indicator") {
  KernelEngine e(path_cfg());
  TupleLabel ax{"a", "x"};
  CHECK(e.tuple_kernel(ax, ax) == 1.0);
  CHECK(e.tuple_kernel(ax, TupleLabel{"a", "y"}) == 0.0);
  CHECK(e.tuple_kernel(ax, TupleLabel{"b", "x"}) == 0.0);
  // bare tuples match each other but never a labeled tuple
  TupleLabel bare{std::nullopt, "x"};
  CHECK(e.tuple_kernel(bare, bare) == 1.0);
  CHECK(e.tuple_kernel(bare, ax) == 0.0);

  SUBCASE("sigma annihilation") {
    SigmaMap s;
    s.set("a", 0);
    KernelEngine e0(path_cfg(), s);
    CHECK(e0.tuple_kernel(ax, ax) == 0.0);
    CHECK(e0.tuple_kernel(TupleLabel{"b", "x"}, TupleLabel{"b", "x"}) == 1.0);
    CHECK(e0.tuple_kernel(bare, bare) == 1.0);  // bare tuples never screened
  }
}

TEST_CASE("tuple kernel, wordvec") {
  KernelConfig c = path_cfg();
  c.tuple_kernel = TupleKernelKind::WordVec;
  c.gamma_sparsity = 0.6;
  KernelEngine e(c, {}, tiny_embeddings());

  // identical unit vectors: exp(0) * ((1 - 0.6)/0.4) = 1
  CHECK(e.tuple_kernel({"a", "u"}, {"a", "u"}) == doctest::Approx(1.0));
  // identical vectors under different words
  CHECK(e.tuple_kernel({"a", "u"}, {"a", "w"}) == doctest::Approx(1.0));
  // orthogonal vectors: positive-part truncation forces 0
  CHECK(e.tuple_kernel({"a", "u"}, {"a", "v"}) == 0.0);
  // edge mismatch always kills the tuple kernel
  CHECK(e.tuple_kernel({"a", "u"}, {"b", "u"}) == 0.0);
  // out-of-vocabulary falls back to exact string match
  CHECK(e.tuple_kernel({"a", "zzz"}, {"a", "zzz"}) == 1.0);
  CHECK(e.tuple_kernel({"a", "zzz"}, {"a", "yyy"}) == 0.0);
}

TEST_CASE("path kernel, frozen small cases") {
  const double l = 0.8;
  KernelEngine e(path_cfg(l));
  auto single = make_path({{"a", "x"}});
  auto pair = make_path({{"a", "x"}, {"b", "y"}});

  CHECK(e.path_kernel(single, single) == doctest::Approx(l * l).epsilon(1e-12));
  CHECK(e.path_kernel(pair, pair) ==
        doctest::Approx(2 * l * l + std::pow(l, 4)).epsilon(1e-12));

  SUBCASE("sigma_b = 0 leaves only the a-match") {
    SigmaMap s;
    s.set("b", 0);
    KernelEngine e0(path_cfg(l), s);
    CHECK(e0.path_kernel(pair, pair) == doctest::Approx(l * l).epsilon(1e-12));
  }

  SUBCASE("disjoint vocabularies") {
    CHECK(e.path_kernel(single, make_path({{"c", "z"}})) == 0.0);
  }

  SUBCASE("frozen values agree with the brute-force enumerator") {
    CHECK(e.path_kernel_bruteforce(single, single) ==
          doctest::Approx(l * l).epsilon(1e-12));
    CHECK(e.path_kernel_bruteforce(pair, pair) ==
          doctest::Approx(2 * l * l + std::pow(l, 4)).epsilon(1e-12));
  }
}

TEST_CASE("path kernel equals brute force on random pairs") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 500; ++it) {
    auto a = random_path(rng, 6, 4, 4);
    auto b = random_path(rng, 6, 4, 4);
    KernelEngine e(path_cfg(), random_sigma(rng, 4));
    double fast = e.path_kernel(a, b);
    double slow = e.path_kernel_bruteforce(a, b);
    CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
  }
}

TEST_CASE("sigma annihilation matches the label-filtered oracle") {
  std::mt19937_64 rng(11);
  SigmaMap s;
  s.set("e0", 0);
  KernelEngine e0(path_cfg(), s);
  for (int it = 0; it < 100; ++it) {
    auto a = random_path(rng, 5, 3, 3);
    auto b = random_path(rng, 5, 3, 3);
    double got = e0.path_kernel(a, b);
    double want = filtered_bruteforce(a, b, 0.8, "e0");
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("sigma identity engine reduces to the baseline bitwise") {
  std::mt19937_64 rng(13);
  SigmaMap ones;
  for (int i = 0; i < 4; ++i) ones.set("e" + std::to_string(i), 1);
  KernelEngine base(path_cfg());
  KernelEngine withones(path_cfg(), ones);
  for (int it = 0; it < 100; ++it) {
    auto a = random_path(rng, 6, 4, 4);
    auto b = random_path(rng, 6, 4, 4);
    CHECK(base.path_kernel(a, b) == withones.path_kernel(a, b));
  }
}

TEST_CASE("gap decay is monotone in lambda < 1") {
  KernelEngine e(path_cfg());
  auto tight = make_path({{"a", "x"}, {"b", "y"}});
  auto gapped = make_path({{"a", "x"}, {"c", "z"}, {"b", "y"}});
  CHECK(e.path_kernel(gapped, tight) < e.path_kernel(tight, tight));
}

TEST_CASE("tree kernel, frozen small cases") {
  const double l = 0.8;
  KernelEngine e(tree_cfg(l));

  TreeStructure leaf;
  leaf.label = {std::nullopt, "x"};
  CHECK(e.tree_kernel(leaf, leaf) == doctest::Approx(1.0).epsilon(1e-12));

  TreeStructure one_child = leaf;
  one_child.children.push_back({{"a", "y"}, {}});
  CHECK(e.tree_kernel(one_child, one_child) ==
        doctest::Approx(1.0 + l).epsilon(1e-12));

  TreeStructure other;
  other.label = {std::nullopt, "q"};
  CHECK(e.tree_kernel(leaf, other) == 0.0);

  SUBCASE("single nodes are the squared tuple kernel") {
    CHECK(e.tree_kernel_bruteforce(leaf, leaf) == doctest::Approx(1.0));
  }
  SUBCASE("brute force agrees on the frozen cases") {
    CHECK(e.tree_kernel_bruteforce(one_child, one_child) ==
          doctest::Approx(1.0 + l).epsilon(1e-12));
  }
}

TEST_CASE("tree kernel equals brute force on random pairs") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 200; ++it) {
    auto a = random_tree(rng, 7, 3, 3);
    auto b = random_tree(rng, 7, 3, 3);
    KernelEngine e(tree_cfg(), random_sigma(rng, 3));
    double fast = e.tree_kernel(a, b);
    double slow = e.tree_kernel_bruteforce(a, b);
    CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
  }
}

TEST_CASE("structure kernel normalization") {
  KernelConfig c = path_cfg();
  c.normalize = true;
  KernelEngine e(c);
  Structure a = make_path({{"a", "x"}, {"b", "y"}});
  CHECK(e.structure_kernel(a, a) == doctest::Approx(1.0));

  SUBCASE("degenerate self-similarity guard") {
    SigmaMap s;
    s.set("a", 0);
    s.set("b", 0);
    KernelEngine dead(c, s);
    CHECK(dead.structure_kernel(a, a) == 0.0);
  }

  SUBCASE("normalize=false passes the raw value through") {
    KernelEngine raw(path_cfg());
    CHECK(raw.structure_kernel(a, a) == raw.path_kernel(
              std::get<PathStructure>(a), std::get<PathStructure>(a)));
  }

  SUBCASE("eval counter bumps once per call") {
    KernelEngine raw(path_cfg());
    raw.reset_eval_count();
    raw.structure_kernel(a, a);
    raw.structure_kernel(a, a);
    CHECK(raw.eval_count() == 2);
  }
}

TEST_CASE("gram matrix symmetry and PSD") {
  std::mt19937_64 rng(19);
  std::vector<Structure> paths;
  for (int i = 0; i < 20; ++i) paths.emplace_back(random_path(rng, 5, 3, 3));
  std::vector<const Structure*> ptrs;
  for (auto& p : paths) ptrs.push_back(&p);

  KernelEngine e(path_cfg());
  auto g = gram_matrix(e, ptrs);
  REQUIRE(g.size() == 20);

  Eigen::MatrixXd m(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      CHECK(g[i][j] == g[j][i]);
      m(i, j) = g[i][j];
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);

  SUBCASE("singleton gram") {
    std::vector<const Structure*> one{ptrs[0]};
    auto g1 = gram_matrix(e, one);
    REQUIRE(g1.size() == 1);
    CHECK(g1[0][0] == e.structure_kernel(paths[0], paths[0]));
  }
}

TEST_CASE("gram stays PSD under random sigma maps") {
  std::mt19937_64 rng(23);
  std::vector<Structure> paths;
  for (int i = 0; i < 15; ++i) paths.emplace_back(random_path(rng, 5, 4, 3));
  std::vector<const Structure*> ptrs;
  for (auto& p : paths) ptrs.push_back(&p);
  for (int rep = 0; rep < 5; ++rep) {
    KernelEngine e(path_cfg(), random_sigma(rng, 4, 0.5));
    auto g = gram_matrix(e, ptrs);
    Eigen::MatrixXd m(15, 15);
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j) m(i, j) = g[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("relabeling invariance and a nonstationarity witness") {
  std::mt19937_64 rng(29);
  std::vector<Structure> paths;
  for (int i = 0; i < 12; ++i) paths.emplace_back(random_path(rng, 5, 3, 3));

  auto rename = [](const Structure& s, auto&& node_map, auto&& edge_map) {
    PathStructure out = std::get<PathStructure>(s);
    for (auto& t : out.tuples) {
      t.node_label = node_map(t.node_label);
      if (t.edge_label) t.edge_label = edge_map(*t.edge_label);
    }
    return Structure{out};
  };

  SUBCASE("bijective relabeling leaves the sigma-free gram bitwise unchanged") {
    std::vector<Structure> renamed;
    for (auto& p : paths)
      renamed.push_back(rename(
          p, [](const std::string& w) { return "R_" + w; },
          [](const std::string& e) { return "R_" + e; }));
    std::vector<const Structure*> a, b;
    for (auto& p : paths) a.push_back(&p);
    for (auto& p : renamed) b.push_back(&p);
    KernelEngine e(path_cfg());
    auto g1 = gram_matrix(e, a);
    auto g2 = gram_matrix(e, b);
    CHECK(g1 == g2);
  }

  SUBCASE("renaming a screened label restores kernel mass") {
    SigmaMap s;
    s.set("e0", 0);
    KernelEngine e(path_cfg(), s);
    Structure w = make_path({{"e0", "x"}});
    Structure w2 = rename(
        w, [](const std::string& n) { return n; },
        [](const std::string&) { return std::string("fresh"); });
    CHECK(e.structure_kernel(w, w) == 0.0);
    CHECK(e.structure_kernel(w2, w2) > 0.0);
  }
}

TEST_CASE("kernel config validation") {
  KernelConfig c = path_cfg();
  c.lambda_decay = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.lambda_decay = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = path_cfg();
  c.tuple_kernel = TupleKernelKind::WordVec;
  c.gamma_sparsity = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(SigmaMap{}.set("a", 2), ConfigError);
}
