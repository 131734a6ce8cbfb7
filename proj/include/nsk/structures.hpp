/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace nsk {

// Exit-code oriented error categories (see tools/).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArtifactMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StructureKind { Path, Tree };

std::string to_string(StructureKind k);
StructureKind structure_kind_from_string(const std::string& s);

/// One (edge-label, node-word) tuple. Root / bare tuples carry no edge label.
struct TupleLabel {
  std::optional<std::string> edge_label;
  std::string node_label;

  bool operator==(const TupleLabel&) const = default;
};

struct PathStructure {
  std::vector<TupleLabel> tuples;  // length >= 1

  bool operator==(const PathStructure&) const = default;
};

struct TreeStructure {
  TupleLabel label;  // edge_label absent at the root
  std::vector<TreeStructure> children;

  bool operator==(const TreeStructure&) const = default;

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
  }
};

using Structure = std::variant<PathStructure, TreeStructure>;

inline StructureKind kind_of(const Structure& s) {
  return std::holds_alternative<PathStructure>(s) ? StructureKind::Path
                                                  : StructureKind::Tree;
}

struct LabeledExample {
  std::string id;
  Structure structure;
  int label = 0;  // binary {0,1}
};

struct LabeledDataset {
  StructureKind structure_kind = StructureKind::Path;
  std::vector<LabeledExample> examples;

  std::size_t size() const { return examples.size(); }
};

/// Word vectors, unit L2 normalized at load.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& word) const {
    auto it = vectors.find(word);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

std::size_t structure_hash(const Structure& s);

// Edge labels of every tuple in the structure (trees: non-root nodes only).
void collect_edge_labels(const Structure& s, std::vector<std::string>& out);
bool contains_edge_label(const Structure& s, const std::string& label);

}  // namespace nsk
