/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "nsk/kernels.hpp"
#include "nsk/klsh.hpp"
#include "nsk/structures.hpp"

namespace nsk {

struct KnnEdge {
  std::size_t neighbor = 0;
  double similarity = 0.0;
};

/// Directed k-NN graph. Out-edges are ordered by descending similarity,
/// ties by lower index; in_edges mirror them with the originating rank.
struct KnnGraph {
  std::size_t k = 0;
  std::vector<std::vector<KnnEdge>> out_edges;

  struct InEdge {
    std::size_t source = 0;
    std::size_t rank = 0;  // 0-based rank of this edge in source's out list
    double similarity = 0.0;
  };
  std::vector<std::vector<InEdge>> in_edges;

  std::size_t size() const { return out_edges.size(); }
  void rebuild_in_edges();
};

enum class NeighborDirection { Out, In };

KnnGraph exact_knn_graph(const KernelEngine& engine,
                         const LabeledDataset& dataset, std::size_t k,
                         std::size_t n_threads = 0);

/// Candidates per node come from probing the hash index; short bucket yields
/// are padded with seeded-random unseen nodes so degrees stay uniform.
KnnGraph hashed_knn_graph(const KernelEngine& engine,
                          const LabeledDataset& dataset, std::size_t k,
                          const HashIndex& index, std::size_t min_candidates,
                          std::uint32_t max_radius = 2,
                          std::uint64_t pad_seed = 0,
                          std::size_t n_threads = 0);

/// Exact k-NN graph restricted to a subset of dataset indices. Node i of the
/// result corresponds to subset[i].
KnnGraph exact_knn_graph_subset(const KernelEngine& engine,
                                const LabeledDataset& dataset,
                                const std::vector<std::size_t>& subset,
                                std::size_t k, std::size_t n_threads = 0);

std::set<std::size_t> get_neighbors(const KnnGraph& graph,
                                    const std::set<std::size_t>& nodes,
                                    std::size_t k, NeighborDirection mode);

struct Classification {
  int label = 0;
  double votes[2] = {0.0, 0.0};  // summed similarity per class
  std::vector<std::pair<std::size_t, double>> neighbors;  // (index, sim)
};

Classification classify_knn(const KernelEngine& engine,
                            const LabeledDataset& train,
                            const HashIndex& index, const Structure& query,
                            std::size_t k, std::size_t min_candidates = 0,
                            std::uint32_t max_radius = 2);

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

EvalReport evaluate(const std::vector<int>& predictions,
                    const std::vector<int>& gold);

}  // namespace nsk
