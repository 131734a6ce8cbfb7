/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nsk/kernels.hpp"
#include "nsk/structures.hpp"

namespace nsk {

enum class HashFamily { Rknn, Kg };

std::string to_string(HashFamily f);
HashFamily hash_family_from_string(const std::string& s);

/// The anchor subset A against which kernel vectors are computed.
struct AnchorSet {
  std::vector<std::size_t> indices;  // distinct dataset indices

  std::size_t size() const { return indices.size(); }
};

/// Codes are packed little-endian: bit j of the code is bit j of `bits`.
struct HashCode {
  std::uint64_t bits = 0;
  std::uint32_t length = 0;

  bool operator==(const HashCode&) const = default;
  bool operator<(const HashCode& o) const { return bits < o.bits; }

  int bit(std::uint32_t j) const { return (bits >> j) & 1u; }
  std::string to_string() const;
};

struct HashFunctionSet {
  HashFamily family = HashFamily::Rknn;
  std::uint32_t H = 0;

  // rknn: per bit, two fixed random anchor-index subsets.
  std::vector<std::vector<std::size_t>> rknn_subset1;
  std::vector<std::vector<std::size_t>> rknn_subset2;

  // kg: per bit, a weight vector over anchors, plus the Gram column means
  // used to center kernel vectors before projection.
  std::vector<std::vector<double>> kg_weights;
  std::vector<double> kg_center;

  std::vector<std::string> warnings;
};

struct HashIndex {
  AnchorSet anchors;
  HashFunctionSet functions;
  std::map<HashCode, std::vector<std::size_t>> buckets;
  std::size_t indexed_count = 0;
};

struct BucketBalanceReport {
  std::size_t bucket_count = 0;
  double occupancy_mean = 0.0;
  double occupancy_std = 0.0;
  std::size_t occupancy_max = 0;
};

AnchorSet sample_anchors(std::size_t dataset_size, std::size_t M,
                         std::uint64_t rng_seed);

std::vector<double> kernel_vector(const KernelEngine& engine,
                                  const Structure& x, const AnchorSet& anchors,
                                  const LabeledDataset& dataset);

HashFunctionSet build_rknn_functions(std::size_t M, std::uint32_t H,
                                     std::size_t alpha_subset,
                                     std::uint64_t rng_seed);

HashCode hash_rknn(const HashFunctionSet& functions,
                   const std::vector<double>& k);

HashFunctionSet build_kg_functions(const KernelEngine& engine,
                                   const AnchorSet& anchors,
                                   const LabeledDataset& dataset,
                                   std::uint32_t H, std::size_t t,
                                   std::uint64_t rng_seed);

HashCode hash_kg(const HashFunctionSet& functions,
                 const std::vector<double>& k);

HashCode hash_code(const HashFunctionSet& functions,
                   const std::vector<double>& k);

/// Hash a structure through the index's anchor set and function family.
HashCode hash_structure(const KernelEngine& engine, const Structure& x,
                        const AnchorSet& anchors, const HashFunctionSet& fns,
                        const LabeledDataset& dataset);

HashIndex build_index(const KernelEngine& engine, const LabeledDataset& dataset,
                      AnchorSet anchors, HashFunctionSet functions,
                      std::size_t n_threads = 0);

/// Union of buckets by increasing Hamming radius; stops at the first radius
/// where the cumulative count reaches min_candidates, or at max_radius.
std::vector<std::size_t> probe(const HashIndex& index, const HashCode& code,
                               std::size_t min_candidates,
                               std::uint32_t max_radius = 2);

BucketBalanceReport bucket_balance_report(const HashIndex& index);

/// Default subset size for the rknn family: ceil(sqrt(M)).
std::size_t default_alpha_subset(std::size_t M);

/// Default bit count from the dataset size: max(4, floor(log2 N) - 3).
std::uint32_t default_hash_bits(std::size_t N);

}  // namespace nsk
