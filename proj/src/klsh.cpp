/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/klsh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "nsk/parallel.hpp"

namespace nsk {

std::string to_string(HashFamily f) {
  return f == HashFamily::Rknn ? "rknn" : "kg";
}

HashFamily hash_family_from_string(const std::string& s) {
  if (s == "rknn") return HashFamily::Rknn;
  if (s == "kg") return HashFamily::Kg;
  throw ConfigError("unknown hash family: " + s);
}

std::string HashCode::to_string() const {
  std::string s(length, '0');
  for (std::uint32_t j = 0; j < length; ++j)
    if (bit(j)) s[j] = '1';
  return s;
}

std::size_t default_alpha_subset(std::size_t M) {
  return static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(M))));
}

std::uint32_t default_hash_bits(std::size_t N) {
  std::uint32_t log2n = 0;
  while ((std::size_t{1} << (log2n + 1)) <= N) ++log2n;
  return std::max<std::uint32_t>(4, log2n >= 3 ? log2n - 3 : 0);
}

AnchorSet sample_anchors(std::size_t dataset_size, std::size_t M,
                         std::uint64_t rng_seed) {
  if (M < 2) throw ConfigError("anchor count M must be >= 2");
  if (M > dataset_size)
    throw ConfigError("anchor count M exceeds dataset size");
  std::vector<std::size_t> pool(dataset_size);
  std::iota(pool.begin(), pool.end(), 0);
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < M; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, dataset_size - 1);
    std::swap(pool[i], pool[d(rng)]);
  }
  AnchorSet a;
  a.indices.assign(pool.begin(), pool.begin() + static_cast<long>(M));
  std::sort(a.indices.begin(), a.indices.end());
  return a;
}

std::vector<double> kernel_vector(const KernelEngine& engine,
                                  const Structure& x, const AnchorSet& anchors,
                                  const LabeledDataset& dataset) {
  std::vector<double> k(anchors.size());
  for (std::size_t m = 0; m < anchors.size(); ++m)
    k[m] = engine.structure_kernel(
        x, dataset.examples[anchors.indices[m]].structure);
  return k;
}

namespace {

std::vector<std::size_t> random_subset(std::size_t M, std::size_t count,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> pool(M);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, M - 1);
    std::swap(pool[i], pool[d(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

HashFunctionSet build_rknn_functions(std::size_t M, std::uint32_t H,
                                     std::size_t alpha_subset,
                                     std::uint64_t rng_seed) {
  if (H < 1) throw ConfigError("hash bit count H must be >= 1");
  if (H > 64) throw ConfigError("hash bit count H must be <= 64");
  if (alpha_subset < 1 || alpha_subset > M)
    throw ConfigError("alpha_subset must lie in [1, M]");
  HashFunctionSet f;
  f.family = HashFamily::Rknn;
  f.H = H;
  if (alpha_subset == M)
    f.warnings.push_back(
        "alpha_subset == M: both subsets cover all anchors, every bit is "
        "degenerate");
  std::mt19937_64 rng(rng_seed);
  for (std::uint32_t j = 0; j < H; ++j) {
    f.rknn_subset1.push_back(random_subset(M, alpha_subset, rng));
    f.rknn_subset2.push_back(random_subset(M, alpha_subset, rng));
  }
  return f;
}

HashCode hash_rknn(const HashFunctionSet& functions,
                   const std::vector<double>& k) {
  HashCode c;
  c.length = functions.H;
  for (std::uint32_t j = 0; j < functions.H; ++j) {
    double m1 = -std::numeric_limits<double>::infinity();
    double m2 = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : functions.rknn_subset1[j]) m1 = std::max(m1, k[idx]);
    for (std::size_t idx : functions.rknn_subset2[j]) m2 = std::max(m2, k[idx]);
    // bit 0 iff subset 1 holds the strictly closer anchor; ties -> 1
    if (!(m1 > m2)) c.bits |= (std::uint64_t{1} << j);
  }
  return c;
}

HashFunctionSet build_kg_functions(const KernelEngine& engine,
                                   const AnchorSet& anchors,
                                   const LabeledDataset& dataset,
                                   std::uint32_t H, std::size_t t,
                                   std::uint64_t rng_seed) {
  if (H < 1) throw ConfigError("hash bit count H must be >= 1");
  if (H > 64) throw ConfigError("hash bit count H must be <= 64");
  const std::size_t M = anchors.size();
  if (t < 1 || t > M) throw ConfigError("anchors-per-bit t must lie in [1, M]");
  HashFunctionSet f;
  f.family = HashFamily::Kg;
  f.H = H;
  if (t == M)
    f.warnings.push_back(
        "t == M: every bit uses the all-anchors pattern, bits are degenerate");

  Eigen::MatrixXd gram(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i; j < M; ++j) {
      double v = engine.structure_kernel(
          dataset.examples[anchors.indices[i]].structure,
          dataset.examples[anchors.indices[j]].structure);
      gram(static_cast<long>(i), static_cast<long>(j)) = v;
      gram(static_cast<long>(j), static_cast<long>(i)) = v;
    }

  f.kg_center.resize(M);
  for (std::size_t j = 0; j < M; ++j)
    f.kg_center[j] = gram.col(static_cast<long>(j)).mean();

  // double centering, then K^{-1/2} with small eigenvalues clipped out
  Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(
      f.kg_center.data(), static_cast<long>(M));
  double grand = mu.mean();
  Eigen::MatrixXd centered = gram;
  centered.colwise() -= mu;
  centered.rowwise() -= mu.transpose();
  centered.array() += grand;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered);
  if (es.info() != Eigen::Success)
    throw DataError("anchor Gram eigen-decomposition failed");
  Eigen::VectorXd inv_sqrt = es.eigenvalues();
  std::size_t clipped = 0;
  for (long i = 0; i < inv_sqrt.size(); ++i) {
    if (inv_sqrt[i] > 1e-10) {
      inv_sqrt[i] = 1.0 / std::sqrt(inv_sqrt[i]);
    } else {
      inv_sqrt[i] = 0.0;
      ++clipped;
    }
  }
  if (clipped * 2 > M)
    f.warnings.push_back("anchor Gram is numerically near-singular (" +
                         std::to_string(clipped) +
                         " eigenvalues clipped); proceeding");
  Eigen::MatrixXd k_inv_sqrt = es.eigenvectors() * inv_sqrt.asDiagonal() *
                               es.eigenvectors().transpose();

  std::mt19937_64 rng(rng_seed);
  for (std::uint32_t j = 0; j < H; ++j) {
    auto picked = random_subset(M, t, rng);
    Eigen::VectorXd e_s = Eigen::VectorXd::Zero(static_cast<long>(M));
    for (std::size_t idx : picked) e_s[static_cast<long>(idx)] = 1.0;
    Eigen::VectorXd w = k_inv_sqrt * e_s;
    f.kg_weights.emplace_back(w.data(), w.data() + w.size());
  }
  return f;
}

HashCode hash_kg(const HashFunctionSet& functions,
                 const std::vector<double>& k) {
  HashCode c;
  c.length = functions.H;
  for (std::uint32_t j = 0; j < functions.H; ++j) {
    const auto& w = functions.kg_weights[j];
    double dot = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m)
      dot += w[m] * (k[m] - functions.kg_center[m]);
    if (dot >= 0.0) c.bits |= (std::uint64_t{1} << j);
  }
  return c;
}

HashCode hash_code(const HashFunctionSet& functions,
                   const std::vector<double>& k) {
  return functions.family == HashFamily::Rknn ? hash_rknn(functions, k)
                                              : hash_kg(functions, k);
}

HashCode hash_structure(const KernelEngine& engine, const Structure& x,
                        const AnchorSet& anchors, const HashFunctionSet& fns,
                        const LabeledDataset& dataset) {
  return hash_code(fns, kernel_vector(engine, x, anchors, dataset));
}

HashIndex build_index(const KernelEngine& engine, const LabeledDataset& dataset,
                      AnchorSet anchors, HashFunctionSet functions,
                      std::size_t n_threads) {
  if (functions.H < 1) throw ConfigError("hash bit count H must be >= 1");
  HashIndex index;
  index.anchors = std::move(anchors);
  index.functions = std::move(functions);
  const std::size_t n = dataset.size();
  std::vector<HashCode> codes(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        codes[i] = hash_structure(engine, dataset.examples[i].structure,
                                  index.anchors, index.functions, dataset);
      },
      n_threads);
  for (std::size_t i = 0; i < n; ++i) index.buckets[codes[i]].push_back(i);
  index.indexed_count = n;
  return index;
}

namespace {

void codes_at_radius(const HashCode& base, std::uint32_t radius,
                     std::vector<HashCode>& out) {
  out.clear();
  const std::uint32_t H = base.length;
  if (radius == 0) {
    out.push_back(base);
  } else if (radius == 1) {
    for (std::uint32_t j = 0; j < H; ++j)
      out.push_back({base.bits ^ (std::uint64_t{1} << j), H});
  } else if (radius == 2) {
    for (std::uint32_t j = 0; j + 1 < H; ++j)
      for (std::uint32_t l = j + 1; l < H; ++l)
        out.push_back(
            {base.bits ^ (std::uint64_t{1} << j) ^ (std::uint64_t{1} << l), H});
  } else {
    // radius >= 3: recurse over the highest flipped bit
    for (std::uint32_t j = radius - 1; j < H; ++j) {
      std::vector<HashCode> inner;
      HashCode flipped{base.bits ^ (std::uint64_t{1} << j), j};
      codes_at_radius(flipped, radius - 1, inner);
      for (auto& c : inner) out.push_back({c.bits, H});
    }
  }
}

}  // namespace

std::vector<std::size_t> probe(const HashIndex& index, const HashCode& code,
                               std::size_t min_candidates,
                               std::uint32_t max_radius) {
  std::vector<std::size_t> candidates;
  std::vector<HashCode> ring;
  for (std::uint32_t radius = 0; radius <= max_radius; ++radius) {
    codes_at_radius(code, radius, ring);
    for (const auto& c : ring) {
      auto it = index.buckets.find(c);
      if (it != index.buckets.end())
        candidates.insert(candidates.end(), it->second.begin(),
                          it->second.end());
    }
    if (candidates.size() >= min_candidates) break;
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

BucketBalanceReport bucket_balance_report(const HashIndex& index) {
  BucketBalanceReport r;
  r.bucket_count = index.buckets.size();
  if (r.bucket_count == 0) return r;
  double sum = 0.0;
  for (const auto& [code, items] : index.buckets) {
    sum += static_cast<double>(items.size());
    r.occupancy_max = std::max(r.occupancy_max, items.size());
  }
  r.occupancy_mean = sum / static_cast<double>(r.bucket_count);
  double var = 0.0;
  for (const auto& [code, items] : index.buckets) {
    double d = static_cast<double>(items.size()) - r.occupancy_mean;
    var += d * d;
  }
  r.occupancy_std = std::sqrt(var / static_cast<double>(r.bucket_count));
  return r;
}

}  // namespace nsk
