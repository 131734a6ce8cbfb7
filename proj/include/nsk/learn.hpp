/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nsk/kernels.hpp"
#include "nsk/neighbors.hpp"
#include "nsk/structures.hpp"

namespace nsk {

enum class SamplerKind { Neighborhood, PureRandom };

std::string to_string(SamplerKind s);
SamplerKind sampler_from_string(const std::string& s);

struct LearnConfig {
  std::size_t beta = 550;     // inducing points per trial
  std::size_t trials = 10;    // trials per parameter
  std::size_t k_global = 4;   // global-graph degree
  bool include_second_hop = true;
  double label_fraction = 0.5;
  SamplerKind sampler = SamplerKind::Neighborhood;
  std::size_t refresh_iterations = 1;
  std::uint64_t rng_seed = 0;

  // global k-NN graph approximation; 0 means derive from N
  std::size_t anchor_count = 0;  // default ceil(sqrt(N))
  std::uint32_t hash_bits = 0;   // default max(4, floor(log2 N) - 3)
  std::size_t min_candidates = 0;

  void validate() const;
};

struct LossReport {
  double total = 0.0;          // mismatch - reward, mean per point
  double mismatch_term = 0.0;  // mean per point, >= 0
  double reward_term = 0.0;    // mean per point, >= 0
  double raw_total = 0.0;      // unnormalized sum
  std::size_t n_points = 0;
  std::vector<double> contributions;  // signed, per subset point
};

/// Loss Function over a 1-NN graph: kernel-weighted penalty for
/// label-disagreeing nearest-neighbor pairs minus a reward for
/// positive-positive pairs, normalized per subset point.
LossReport loss(const KernelEngine& engine, const LabeledDataset& subset,
                const KnnGraph& nn_graph);

/// Inducing points plus their directed graph neighborhood (and optionally
/// the neighbors' first nearest neighbors). Returns sorted indices.
std::vector<std::size_t> sample_neighborhood(
    const KnnGraph& graph, const std::vector<std::size_t>& candidate_pool,
    std::size_t beta, std::size_t k_global, bool include_second_hop,
    std::mt19937_64& rng);

struct TrialRecord {
  std::size_t iteration = 0;
  std::size_t param_index = 0;
  std::string label;
  std::size_t trial = 0;
  int value = 0;
  double loss = 0.0;
  std::size_t subset_size = 0;
};

struct OptimizeResult {
  SigmaMap sigma;
  std::vector<std::string> parameter_order;  // by descending frequency
  std::vector<TrialRecord> trace;
  std::vector<double> iteration_full_losses;  // empty unless recorded
  std::vector<std::string> warnings;
};

/// Binary coordinate descent over the per-label sigma parameters, driven by
/// stochastic neighborhood subsampling of the loss.
OptimizeResult optimize_sigma(KernelEngine& engine, const LabeledDataset& train,
                              const LearnConfig& cfg,
                              std::size_t n_threads = 0);

/// Loss over the exact 1-NN graph of the whole training set.
LossReport full_loss(const KernelEngine& engine, const LabeledDataset& train,
                     std::size_t n_threads = 0);

struct LossEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  bool stddev_defined = true;  // false when trials == 1
  std::vector<double> samples;
};

/// Mean and std of subset losses over repeated neighborhood samples drawn
/// from the whole dataset.
LossEstimate estimate_loss(const KernelEngine& engine,
                           const LabeledDataset& train, const KnnGraph& graph,
                           std::size_t beta, std::size_t trials,
                           bool include_second_hop, std::size_t k_global,
                           std::uint64_t rng_seed, std::size_t n_threads = 0);

}  // namespace nsk
