/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/kernels.hpp"

#include <cmath>
#include <map>
#include <utility>

#include "nsk/parallel.hpp"

namespace nsk {

std::string to_string(TupleKernelKind k) {
  return k == TupleKernelKind::Indicator ? "indicator" : "wordvec";
}

TupleKernelKind tuple_kernel_from_string(const std::string& s) {
  if (s == "indicator") return TupleKernelKind::Indicator;
  if (s == "wordvec") return TupleKernelKind::WordVec;
  throw ConfigError("unknown tuple kernel: " + s);
}

void KernelConfig::validate() const {
  if (!(lambda_decay > 0.0 && lambda_decay < 1.0))
    throw ConfigError("lambda_decay must lie in (0,1)");
  if (!(gamma_sparsity > -1.0 && gamma_sparsity < 1.0))
    throw ConfigError("gamma_sparsity must lie in (-1,1)");
}

KernelEngine::KernelEngine(KernelConfig config, SigmaMap sigma,
                           std::shared_ptr<const EmbeddingTable> embeddings)
    : config_(std::move(config)),
      sigma_(std::move(sigma)),
      embeddings_(std::move(embeddings)) {
  config_.validate();
  if (config_.tuple_kernel == TupleKernelKind::WordVec && !embeddings_)
    throw ConfigError("wordvec tuple kernel requires an embedding table");
}

double KernelEngine::node_kernel(const std::string& a,
                                 const std::string& b) const {
  if (config_.tuple_kernel == TupleKernelKind::Indicator)
    return a == b ? 1.0 : 0.0;
  const auto* wa = embeddings_->find(a);
  const auto* wb = embeddings_->find(b);
  if (!wa || !wb) return a == b ? 1.0 : 0.0;  // OOV exact-match fallback
  double dot = 0.0;
  for (std::size_t i = 0; i < wa->size(); ++i) dot += (*wa)[i] * (*wb)[i];
  double sparse = (dot - config_.gamma_sparsity) / (1.0 - config_.gamma_sparsity);
  if (sparse <= 0.0) return 0.0;
  return std::exp(dot - 1.0) * sparse;
}

double KernelEngine::tuple_kernel(const TupleLabel& a,
                                  const TupleLabel& b) const {
  // Edge kernel: exact match on edge labels; absent matches absent only.
  double ke;
  if (!a.edge_label && !b.edge_label)
    ke = 1.0;
  else if (a.edge_label && b.edge_label && *a.edge_label == *b.edge_label)
    ke = 1.0;
  else
    return 0.0;
  double s = static_cast<double>(sigma_.get(a.edge_label)) *
             static_cast<double>(sigma_.get(b.edge_label));
  if (s == 0.0) return 0.0;
  return s * ke * node_kernel(a.node_label, b.node_label);
}

// Gap-weighted subsequence kernel over tuple sequences. Subsequence pairs of
// equal length contribute the product of tuple kernels times
// lambda^(span(i)+span(j)), span inclusive of both endpoints.
double KernelEngine::path_kernel(const PathStructure& a,
                                 const PathStructure& b) const {
  const std::size_t m = a.tuples.size(), n = b.tuples.size();
  const double lam = config_.lambda_decay;
  const double lam2 = lam * lam;

  std::vector<double> kmat(m * n);
  bool any = false;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = tuple_kernel(a.tuples[i], b.tuples[j]);
      kmat[i * n + j] = v;
      any = any || v != 0.0;
    }
  if (!any) return 0.0;

  const std::size_t max_len = std::min(m, n);
  // kpp[i*n+j]: sum over subsequence pairs of the current length ending
  // exactly at (i, j), weighted lambda^(span_i + span_j).
  std::vector<double> kpp(m * n), kpp_next(m * n);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      kpp[i * n + j] = kmat[i * n + j] * lam2;
      total += kpp[i * n + j];
    }

  // suffix-weighted prefix sums: S(i,j) = sum_{i'<=i, j'<=j} kpp(i',j')
  // * lambda^((i-i')+(j-j')), computed with one row of carry.
  std::vector<double> S((m + 1) * (n + 1));
  for (std::size_t p = 2; p <= max_len; ++p) {
    const std::size_t w = n + 1;
    std::fill(S.begin(), S.end(), 0.0);
    for (std::size_t i = 1; i <= m; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        S[i * w + j] = lam * S[(i - 1) * w + j] + lam * S[i * w + j - 1] -
                       lam2 * S[(i - 1) * w + j - 1] +
                       kpp[(i - 1) * n + (j - 1)];
    double layer = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v =
            (i && j) ? kmat[i * n + j] * lam2 * S[i * (n + 1) + j] : 0.0;
        kpp_next[i * n + j] = v;
        layer += v;
      }
    if (layer == 0.0) break;  // no longer subsequences can match
    total += layer;
    kpp.swap(kpp_next);
  }
  return total;
}

namespace {

// All index subsequences of {0..n-1}, grouped by length.
std::vector<std::vector<std::vector<std::size_t>>> subsequences_by_length(
    std::size_t n) {
  std::vector<std::vector<std::vector<std::size_t>>> out(n + 1);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    out[idx.size()].push_back(std::move(idx));
  }
  return out;
}

inline double span_of(const std::vector<std::size_t>& idx) {
  return static_cast<double>(idx.back() - idx.front() + 1);
}

}  // namespace

double KernelEngine::path_kernel_bruteforce(const PathStructure& a,
                                            const PathStructure& b) const {
  const std::size_t m = a.tuples.size(), n = b.tuples.size();
  if (m > 12 || n > 12)
    throw ConfigError("path_kernel_bruteforce limited to length 12");
  const double lam = config_.lambda_decay;
  auto subs_a = subsequences_by_length(m);
  auto subs_b = subsequences_by_length(n);
  double total = 0.0;
  for (std::size_t len = 1; len <= std::min(m, n); ++len)
    for (const auto& si : subs_a[len])
      for (const auto& sj : subs_b[len]) {
        double prod = 1.0;
        for (std::size_t k = 0; k < len && prod != 0.0; ++k)
          prod *= tuple_kernel(a.tuples[si[k]], b.tuples[sj[k]]);
        if (prod != 0.0)
          total += prod * std::pow(lam, span_of(si) + span_of(sj));
      }
  return total;
}

namespace {

using TreePairKey = std::pair<const TreeStructure*, const TreeStructure*>;

struct TreeKernelEval {
  const KernelEngine& engine;
  double lam;
  std::map<TreePairKey, double> memo;

  double eval(const TreeStructure& a, const TreeStructure& b) {
    auto key = TreePairKey{&a, &b};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double kr = engine.tuple_kernel(a.label, b.label);
    double result = 0.0;
    if (kr != 0.0) result = kr * (kr + child_sum(a, b));
    memo.emplace(key, result);
    return result;
  }

  // Sum over equal-length child subsequence pairs (i, j) of
  //   lambda^span(i) * (sum_s K(child_i[s], child_j[s]))
  //                  * (prod_s k(child_i[s].r, child_j[s].r)).
  // DP over end positions with two accumulators: A carries the product-only
  // weight, B carries product times running subtree-kernel sum.
  double child_sum(const TreeStructure& a, const TreeStructure& b) {
    const std::size_t m = a.children.size(), n = b.children.size();
    if (m == 0 || n == 0) return 0.0;

    std::vector<double> kroot(m * n), ksub(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        kroot[i * n + j] =
            engine.tuple_kernel(a.children[i].label, b.children[j].label);
        ksub[i * n + j] = kroot[i * n + j] != 0.0
                              ? eval(a.children[i], b.children[j])
                              : 0.0;
      }

    std::vector<double> A(m * n), B(m * n), A_next(m * n), B_next(m * n);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        A[i * n + j] = lam * kroot[i * n + j];
        B[i * n + j] = lam * kroot[i * n + j] * ksub[i * n + j];
        total += B[i * n + j];
      }

    // Prefix sums decay with lambda along the first tree's child axis only,
    // matching the lambda^span(i) term of the formula.
    const std::size_t w = n + 1;
    std::vector<double> SA((m + 1) * w), SB((m + 1) * w);
    for (std::size_t p = 2; p <= std::min(m, n); ++p) {
      std::fill(SA.begin(), SA.end(), 0.0);
      std::fill(SB.begin(), SB.end(), 0.0);
      for (std::size_t i = 1; i <= m; ++i)
        for (std::size_t j = 1; j <= n; ++j) {
          SA[i * w + j] = lam * SA[(i - 1) * w + j] + SA[i * w + j - 1] -
                          lam * SA[(i - 1) * w + j - 1] +
                          A[(i - 1) * n + (j - 1)];
          SB[i * w + j] = lam * SB[(i - 1) * w + j] + SB[i * w + j - 1] -
                          lam * SB[(i - 1) * w + j - 1] +
                          B[(i - 1) * n + (j - 1)];
        }
      double layer = 0.0;
      bool any = false;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double an = 0.0, bn = 0.0;
          if (i && j && kroot[i * n + j] != 0.0) {
            an = kroot[i * n + j] * lam * SA[i * w + j];
            bn = kroot[i * n + j] * lam *
                 (SB[i * w + j] + ksub[i * n + j] * SA[i * w + j]);
          }
          A_next[i * n + j] = an;
          B_next[i * n + j] = bn;
          any = any || an != 0.0 || bn != 0.0;
          layer += bn;
        }
      if (!any) break;
      total += layer;
      A.swap(A_next);
      B.swap(B_next);
    }
    return total;
  }
};

}  // namespace

double KernelEngine::tree_kernel(const TreeStructure& a,
                                 const TreeStructure& b) const {
  TreeKernelEval eval{*this, config_.lambda_decay, {}};
  return eval.eval(a, b);
}

namespace {

double tree_bruteforce_rec(const KernelEngine& engine, double lam,
                           const TreeStructure& a, const TreeStructure& b) {
  double kr = engine.tuple_kernel(a.label, b.label);
  if (kr == 0.0) return 0.0;
  const std::size_t m = a.children.size(), n = b.children.size();
  auto subs_a = subsequences_by_length(m);
  auto subs_b = subsequences_by_length(n);
  double inner = 0.0;
  for (std::size_t len = 1; len <= std::min(m, n); ++len)
    for (const auto& si : subs_a[len])
      for (const auto& sj : subs_b[len]) {
        double prod = 1.0, sum = 0.0;
        for (std::size_t s = 0; s < len; ++s) {
          prod *= engine.tuple_kernel(a.children[si[s]].label,
                                      b.children[sj[s]].label);
          sum += tree_bruteforce_rec(engine, lam, a.children[si[s]],
                                     b.children[sj[s]]);
        }
        if (prod != 0.0) inner += std::pow(lam, span_of(si)) * sum * prod;
      }
  return kr * (kr + inner);
}

}  // namespace

double KernelEngine::tree_kernel_bruteforce(const TreeStructure& a,
                                            const TreeStructure& b) const {
  if (a.node_count() > 8 || b.node_count() > 8)
    throw ConfigError("tree_kernel_bruteforce limited to 8 nodes");
  return tree_bruteforce_rec(*this, config_.lambda_decay, a, b);
}

double KernelEngine::raw_kernel(const Structure& a, const Structure& b) const {
  if (config_.structure_kind == StructureKind::Path)
    return path_kernel(std::get<PathStructure>(a), std::get<PathStructure>(b));
  return tree_kernel(std::get<TreeStructure>(a), std::get<TreeStructure>(b));
}

double KernelEngine::structure_kernel(const Structure& a,
                                      const Structure& b) const {
  eval_count_.fetch_add(1, std::memory_order_relaxed);
  double kab = raw_kernel(a, b);
  if (!config_.normalize) return kab;
  if (kab == 0.0) return 0.0;
  double kaa = raw_kernel(a, a);
  double kbb = raw_kernel(b, b);
  if (kaa <= 0.0 || kbb <= 0.0) return 0.0;
  return kab / std::sqrt(kaa * kbb);
}

std::vector<std::vector<double>> gram_matrix(
    const KernelEngine& engine, const std::vector<const Structure*>& items,
    std::size_t n_threads) {
  const std::size_t n = items.size();
  std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
  // one task per row; each row fills its upper-triangle part
  parallel_for(
      n,
      [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j)
          g[i][j] = engine.structure_kernel(*items[i], *items[j]);
      },
      n_threads);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g[i][j] = g[j][i];
  return g;
}

}  // namespace nsk
