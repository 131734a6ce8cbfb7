/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/neighbors.hpp"

#include <algorithm>
#include <random>

#include "nsk/parallel.hpp"

namespace nsk {

void KnnGraph::rebuild_in_edges() {
  in_edges.assign(out_edges.size(), {});
  for (std::size_t i = 0; i < out_edges.size(); ++i)
    for (std::size_t r = 0; r < out_edges[i].size(); ++r)
      in_edges[out_edges[i][r].neighbor].push_back(
          {i, r, out_edges[i][r].similarity});
}

namespace {

// top-k by descending similarity, ties by lower index
std::vector<KnnEdge> top_k(std::vector<KnnEdge>& scored, std::size_t k) {
  auto cmp = [](const KnnEdge& a, const KnnEdge& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.neighbor < b.neighbor;
  };
  if (scored.size() > k) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k),
                      scored.end(), cmp);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), cmp);
  }
  return scored;
}

}  // namespace

KnnGraph exact_knn_graph(const KernelEngine& engine,
                         const LabeledDataset& dataset, std::size_t k,
                         std::size_t n_threads) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (dataset.size() < 2) throw ConfigError("dataset must hold >= 2 examples");
  const std::size_t n = dataset.size();
  KnnGraph g;
  g.k = k;
  g.out_edges.resize(n);
  // symmetric evaluation: compute the upper triangle once
  std::vector<std::vector<double>> sims(n);
  for (std::size_t i = 0; i < n; ++i) sims[i].resize(n - i - 1);
  parallel_for(
      n,
      [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j)
          sims[i][j - i - 1] = engine.structure_kernel(
              dataset.examples[i].structure, dataset.examples[j].structure);
      },
      n_threads);
  auto sim_at = [&](std::size_t i, std::size_t j) {
    return i < j ? sims[i][j - i - 1] : sims[j][i - j - 1];
  };
  parallel_for(
      n,
      [&](std::size_t i) {
        std::vector<KnnEdge> scored;
        scored.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) scored.push_back({j, sim_at(i, j)});
        g.out_edges[i] = top_k(scored, k);
      },
      n_threads);
  g.rebuild_in_edges();
  return g;
}

KnnGraph hashed_knn_graph(const KernelEngine& engine,
                          const LabeledDataset& dataset, std::size_t k,
                          const HashIndex& index, std::size_t min_candidates,
                          std::uint32_t max_radius, std::uint64_t pad_seed,
                          std::size_t n_threads) {
  if (k < 1) throw ConfigError("k must be >= 1");
  const std::size_t n = dataset.size();
  if (index.indexed_count != n)
    throw ConfigError("hash index was built over a different dataset size");
  KnnGraph g;
  g.k = k;
  g.out_edges.resize(n);

  // node -> its own code, recoverable from the bucket table
  std::vector<HashCode> code_of(n);
  for (const auto& [code, items] : index.buckets)
    for (std::size_t i : items) code_of[i] = code;

  parallel_for(
      n,
      [&](std::size_t i) {
        auto cands = probe(index, code_of[i], min_candidates, max_radius);
        std::vector<KnnEdge> scored;
        std::vector<char> seen(n, 0);
        seen[i] = 1;
        for (std::size_t c : cands) {
          if (seen[c]) continue;
          seen[c] = 1;
          scored.push_back({c, engine.structure_kernel(
                                   dataset.examples[i].structure,
                                   dataset.examples[c].structure)});
        }
        if (scored.size() < k) {
          // pad with random unseen nodes so every node keeps degree k
          std::mt19937_64 rng(pad_seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
          std::vector<std::size_t> unseen;
          for (std::size_t j = 0; j < n; ++j)
            if (!seen[j]) unseen.push_back(j);
          std::shuffle(unseen.begin(), unseen.end(), rng);
          for (std::size_t j : unseen) {
            if (scored.size() >= k) break;
            scored.push_back({j, engine.structure_kernel(
                                     dataset.examples[i].structure,
                                     dataset.examples[j].structure)});
          }
        }
        g.out_edges[i] = top_k(scored, k);
      },
      n_threads);
  g.rebuild_in_edges();
  return g;
}

KnnGraph exact_knn_graph_subset(const KernelEngine& engine,
                                const LabeledDataset& dataset,
                                const std::vector<std::size_t>& subset,
                                std::size_t k, std::size_t n_threads) {
  LabeledDataset view;
  view.structure_kind = dataset.structure_kind;
  view.examples.reserve(subset.size());
  for (std::size_t idx : subset) view.examples.push_back(dataset.examples[idx]);
  return exact_knn_graph(engine, view, k, n_threads);
}

std::set<std::size_t> get_neighbors(const KnnGraph& graph,
                                    const std::set<std::size_t>& nodes,
                                    std::size_t k, NeighborDirection mode) {
  if (k > graph.k) throw ConfigError("k' exceeds graph degree");
  std::set<std::size_t> out;
  for (std::size_t node : nodes) {
    if (node >= graph.size()) throw ConfigError("node index out of range");
    if (mode == NeighborDirection::Out) {
      const auto& edges = graph.out_edges[node];
      for (std::size_t r = 0; r < std::min(k, edges.size()); ++r)
        out.insert(edges[r].neighbor);
    } else {
      for (const auto& e : graph.in_edges[node])
        if (e.rank < k) out.insert(e.source);
    }
  }
  return out;
}

Classification classify_knn(const KernelEngine& engine,
                            const LabeledDataset& train,
                            const HashIndex& index, const Structure& query,
                            std::size_t k, std::size_t min_candidates,
                            std::uint32_t max_radius) {
  if (train.size() == 0) throw DataError("empty training set");
  if (min_candidates == 0) min_candidates = k;
  HashCode code =
      hash_structure(engine, query, index.anchors, index.functions, train);
  auto cands = probe(index, code, min_candidates, max_radius);
  std::vector<KnnEdge> scored;
  scored.reserve(cands.size());
  for (std::size_t c : cands)
    scored.push_back(
        {c, engine.structure_kernel(query, train.examples[c].structure)});
  auto top = top_k(scored, k);

  Classification result;
  std::size_t count[2] = {0, 0};
  for (const auto& e : top) {
    int y = train.examples[e.neighbor].label;
    ++count[y];
    result.votes[y] += e.similarity;
    result.neighbors.emplace_back(e.neighbor, e.similarity);
  }
  if (count[1] > count[0])
    result.label = 1;
  else if (count[1] < count[0])
    result.label = 0;
  else
    result.label = result.votes[1] > result.votes[0] ? 1 : 0;
  return result;
}

EvalReport evaluate(const std::vector<int>& predictions,
                    const std::vector<int>& gold) {
  if (predictions.size() != gold.size())
    throw DataError("predictions and gold differ in length");
  EvalReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == 1)
      (gold[i] == 1 ? r.tp : r.fp)++;
    else
      (gold[i] == 1 ? r.fn : r.tn)++;
  }
  r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

}  // namespace nsk
