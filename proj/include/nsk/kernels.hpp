/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsk/structures.hpp"

namespace nsk {

enum class TupleKernelKind { Indicator, WordVec };

std::string to_string(TupleKernelKind k);
TupleKernelKind tuple_kernel_from_string(const std::string& s);

struct KernelConfig {
  StructureKind structure_kind = StructureKind::Path;
  TupleKernelKind tuple_kernel = TupleKernelKind::Indicator;
  double lambda_decay = 0.8;    // in (0,1)
  double gamma_sparsity = 0.6;  // in (-1,1), wordvec only
  bool normalize = false;

  void validate() const;
};

/// Per-edge-label binary attention weights. Absent labels have implicit 1.
struct SigmaMap {
  std::unordered_map<std::string, int> values;

  int get(const std::optional<std::string>& edge_label) const {
    if (!edge_label) return 1;  // bare/root tuples are never screened out
    auto it = values.find(*edge_label);
    return it == values.end() ? 1 : it->second;
  }
  void set(const std::string& label, int v) {
    if (v != 0 && v != 1) throw ConfigError("sigma values must be 0 or 1");
    values[label] = v;
  }
};

class KernelEngine {
 public:
  KernelEngine(KernelConfig config, SigmaMap sigma = {},
               std::shared_ptr<const EmbeddingTable> embeddings = nullptr);

  const KernelConfig& config() const { return config_; }
  const SigmaMap& sigma() const { return sigma_; }
  const std::shared_ptr<const EmbeddingTable>& embeddings() const {
    return embeddings_;
  }
  void set_sigma(SigmaMap sigma) { sigma_ = std::move(sigma); }
  void set_sigma_value(const std::string& label, int v) { sigma_.set(label, v); }

  double tuple_kernel(const TupleLabel& a, const TupleLabel& b) const;

  double path_kernel(const PathStructure& a, const PathStructure& b) const;
  double path_kernel_bruteforce(const PathStructure& a,
                                const PathStructure& b) const;

  double tree_kernel(const TreeStructure& a, const TreeStructure& b) const;
  double tree_kernel_bruteforce(const TreeStructure& a,
                                const TreeStructure& b) const;

  /// Dispatch on structure kind, with optional cosine normalization.
  /// Increments the evaluation counter once per call.
  double structure_kernel(const Structure& a, const Structure& b) const;

  /// Raw (unnormalized) kernel, no counter bump; used by normalization.
  double raw_kernel(const Structure& a, const Structure& b) const;

  std::uint64_t eval_count() const { return eval_count_.load(); }
  void reset_eval_count() const { eval_count_.store(0); }

 private:
  double node_kernel(const std::string& a, const std::string& b) const;

  KernelConfig config_;
  SigmaMap sigma_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  mutable std::atomic<std::uint64_t> eval_count_{0};
};

/// Full symmetric Gram matrix; upper triangle computed, mirrored.
std::vector<std::vector<double>> gram_matrix(
    const KernelEngine& engine, const std::vector<const Structure*>& items,
    std::size_t n_threads = 0);

}  // namespace nsk
