/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsk/corpus.hpp"
#include "nsk/parallel.hpp"

namespace nsk {

std::string to_string(SamplerKind s) {
  return s == SamplerKind::Neighborhood ? "neighborhood" : "pure_random";
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "neighborhood") return SamplerKind::Neighborhood;
  if (s == "pure_random") return SamplerKind::PureRandom;
  throw ConfigError("unknown sampler: " + s);
}

void LearnConfig::validate() const {
  if (beta < 1) throw ConfigError("beta must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (k_global < 1) throw ConfigError("k_global must be >= 1");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0))
    throw ConfigError("label_fraction must lie in (0,1]");
  if (refresh_iterations < 1)
    throw ConfigError("refresh_iterations must be >= 1");
}

LossReport loss(const KernelEngine& engine, const LabeledDataset& subset,
                const KnnGraph& nn_graph) {
  (void)engine;  // similarities come from the graph built with this engine
  if (subset.size() < 2) throw DataError("loss requires a subset of >= 2");
  if (nn_graph.size() != subset.size())
    throw ConfigError("1-NN graph does not match the subset");
  LossReport r;
  r.n_points = subset.size();
  r.contributions.resize(subset.size(), 0.0);
  double mismatch = 0.0, reward = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (nn_graph.out_edges[i].empty()) continue;
    const auto& e = nn_graph.out_edges[i][0];
    int yi = subset.examples[i].label;
    int yn = subset.examples[e.neighbor].label;
    if (yi != yn) {
      mismatch += e.similarity;
      r.contributions[i] = e.similarity;
    } else if (yi == 1) {
      reward += e.similarity;
      r.contributions[i] = -e.similarity;
    }
  }
  double inv = 1.0 / static_cast<double>(r.n_points);
  r.raw_total = mismatch - reward;
  r.mismatch_term = mismatch * inv;
  r.reward_term = reward * inv;
  r.total = r.mismatch_term - r.reward_term;
  return r;
}

std::vector<std::size_t> sample_neighborhood(
    const KnnGraph& graph, const std::vector<std::size_t>& candidate_pool,
    std::size_t beta, std::size_t k_global, bool include_second_hop,
    std::mt19937_64& rng) {
  if (candidate_pool.empty()) throw ConfigError("empty candidate pool");
  std::vector<std::size_t> pool = candidate_pool;
  std::size_t take = std::min(beta, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
    std::swap(pool[i], pool[d(rng)]);
  }
  std::set<std::size_t> r(pool.begin(), pool.begin() + static_cast<long>(take));

  std::size_t k = std::min(k_global, graph.k);
  std::set<std::size_t> n = get_neighbors(graph, r, k, NeighborDirection::Out);
  std::set<std::size_t> nbar =
      get_neighbors(graph, r, k, NeighborDirection::In);

  std::set<std::size_t> a = r;
  a.insert(n.begin(), n.end());
  a.insert(nbar.begin(), nbar.end());
  if (include_second_hop) {
    std::set<std::size_t> joined = n;
    joined.insert(nbar.begin(), nbar.end());
    auto nn = get_neighbors(graph, joined, 1, NeighborDirection::Out);
    a.insert(nn.begin(), nn.end());
  }
  return {a.begin(), a.end()};
}

namespace {

KnnGraph build_global_graph(const KernelEngine& engine,
                            const LabeledDataset& train, const LearnConfig& cfg,
                            std::size_t n_threads) {
  const std::size_t n = train.size();
  std::size_t m = cfg.anchor_count
                      ? cfg.anchor_count
                      : static_cast<std::size_t>(
                            std::ceil(std::sqrt(static_cast<double>(n))));
  m = std::clamp<std::size_t>(m, 2, n);
  std::uint32_t h = cfg.hash_bits ? cfg.hash_bits : default_hash_bits(n);
  std::size_t min_cand =
      cfg.min_candidates ? cfg.min_candidates : 2 * cfg.k_global;
  auto anchors = sample_anchors(n, m, cfg.rng_seed ^ 0xa5a5a5a5ULL);
  auto fns = build_rknn_functions(m, h, default_alpha_subset(m),
                                  cfg.rng_seed ^ 0x5a5a5a5aULL);
  auto index = build_index(engine, train, std::move(anchors), std::move(fns),
                           n_threads);
  return hashed_knn_graph(engine, train, cfg.k_global, index, min_cand, 2,
                          cfg.rng_seed ^ 0x3c3c3c3cULL, n_threads);
}

double subset_loss(const KernelEngine& base, const SigmaMap& sigma,
                   const LabeledDataset& train,
                   const std::vector<std::size_t>& subset,
                   std::size_t n_threads) {
  KernelEngine local(base.config(), sigma, base.embeddings());
  LabeledDataset view;
  view.structure_kind = train.structure_kind;
  view.examples.reserve(subset.size());
  for (std::size_t idx : subset) view.examples.push_back(train.examples[idx]);
  KnnGraph g = exact_knn_graph(local, view, 1, n_threads);
  return loss(local, view, g).total;
}

}  // namespace

OptimizeResult optimize_sigma(KernelEngine& engine, const LabeledDataset& train,
                              const LearnConfig& cfg, std::size_t n_threads) {
  cfg.validate();
  if (train.size() < 2) throw DataError("training set must hold >= 2 examples");
  OptimizeResult result;
  if (train.size() < 2 * cfg.beta)
    result.warnings.push_back(
        "training set smaller than 2*beta; loss estimates will be noisy");

  // parameters, sorted by descending label frequency (ties by label string)
  auto freq = label_frequencies(train);
  std::vector<std::pair<std::string, std::size_t>> sorted(freq.begin(),
                                                          freq.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::size_t p = std::min<std::size_t>(
      sorted.size(),
      std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(
                 cfg.label_fraction * static_cast<double>(sorted.size())))));
  for (std::size_t t = 0; t < p; ++t)
    result.parameter_order.push_back(sorted[t].first);

  auto pools = indices_by_label(train, result.parameter_order);

  SigmaMap sigma = engine.sigma();
  for (const auto& l : result.parameter_order) sigma.set(l, 1);
  engine.set_sigma(sigma);

  for (std::size_t iter = 0; iter < cfg.refresh_iterations; ++iter) {
    KnnGraph global = build_global_graph(engine, train, cfg, n_threads);

    for (std::size_t t = 0; t < p; ++t) {
      const std::string& label = result.parameter_order[t];
      const auto& pool = pools[label];
      if (pool.empty()) {
        result.warnings.push_back("label \"" + label +
                                  "\" has an empty pool; sigma stays 1");
        sigma.set(label, 1);
        continue;
      }
      struct Task {
        std::size_t trial;
        int v;
        double loss = 0.0;
      };
      std::vector<Task> tasks;
      std::vector<std::vector<std::size_t>> subsets(cfg.trials);
      for (std::size_t j = 0; j < cfg.trials; ++j) {
        // per-trial substream: deterministic across thread schedules
        std::mt19937_64 rng(cfg.rng_seed ^ (0x100000001b3ULL * (iter + 1)) ^
                            (0x1000193ULL * (t + 1)) ^ (j + 1));
        if (cfg.sampler == SamplerKind::Neighborhood) {
          subsets[j] =
              sample_neighborhood(global, pool, cfg.beta, cfg.k_global,
                                  cfg.include_second_hop, rng);
        } else {
          // pure random: the inducing points only
          std::vector<std::size_t> shuffled = pool;
          std::size_t take = std::min(cfg.beta, shuffled.size());
          for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> d(i,
                                                         shuffled.size() - 1);
            std::swap(shuffled[i], shuffled[d(rng)]);
          }
          shuffled.resize(take);
          std::sort(shuffled.begin(), shuffled.end());
          subsets[j] = std::move(shuffled);
        }
        for (int v : {0, 1}) tasks.push_back({j, v});
      }

      parallel_for(
          tasks.size(),
          [&](std::size_t ti) {
            auto& task = tasks[ti];
            if (subsets[task.trial].size() < 2) {
              task.loss = 0.0;
              return;
            }
            SigmaMap local = sigma;
            local.set(label, task.v);
            task.loss =
                subset_loss(engine, local, train, subsets[task.trial], 1);
          },
          n_threads);

      double sum_v[2] = {0.0, 0.0};
      for (const auto& task : tasks) {
        sum_v[task.v] += task.loss;
        result.trace.push_back({iter, t, label, task.trial, task.v, task.loss,
                                subsets[task.trial].size()});
      }
      int decision = sum_v[0] < sum_v[1] ? 0 : 1;  // tie keeps the tuple
      sigma.set(label, decision);
      engine.set_sigma(sigma);
    }
  }

  result.sigma = sigma;
  return result;
}

LossReport full_loss(const KernelEngine& engine, const LabeledDataset& train,
                     std::size_t n_threads) {
  KnnGraph g = exact_knn_graph(engine, train, 1, n_threads);
  return loss(engine, train, g);
}

LossEstimate estimate_loss(const KernelEngine& engine,
                           const LabeledDataset& train, const KnnGraph& graph,
                           std::size_t beta, std::size_t trials,
                           bool include_second_hop, std::size_t k_global,
                           std::uint64_t rng_seed, std::size_t n_threads) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<std::size_t> pool(train.size());
  std::iota(pool.begin(), pool.end(), 0);
  LossEstimate est;
  est.samples.resize(trials);
  std::vector<std::vector<std::size_t>> subsets(trials);
  for (std::size_t j = 0; j < trials; ++j) {
    std::mt19937_64 rng(rng_seed ^ (0x9e3779b9ULL * (j + 1)));
    subsets[j] = sample_neighborhood(graph, pool, beta, k_global,
                                     include_second_hop, rng);
  }
  parallel_for(
      trials,
      [&](std::size_t j) {
        est.samples[j] =
            subset_loss(engine, engine.sigma(), train, subsets[j], 1);
      },
      n_threads);
  double sum = 0.0;
  for (double s : est.samples) sum += s;
  est.mean = sum / static_cast<double>(trials);
  if (trials == 1) {
    est.stddev = 0.0;
    est.stddev_defined = false;
  } else {
    double var = 0.0;
    for (double s : est.samples) var += (s - est.mean) * (s - est.mean);
    est.stddev = std::sqrt(var / static_cast<double>(trials - 1));
  }
  return est;
}

}  // namespace nsk
