/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/structures.hpp"

namespace nsk {

std::string to_string(StructureKind k) {
  return k == StructureKind::Path ? "path" : "tree";
}

StructureKind structure_kind_from_string(const std::string& s) {
  if (s == "path") return StructureKind::Path;
  if (s == "tree") return StructureKind::Tree;
  throw ConfigError("unknown structure kind: " + s);
}

namespace {

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

std::size_t hash_tuple(const TupleLabel& t) {
  std::size_t h = std::hash<std::string>{}(t.node_label);
  hash_combine(h, t.edge_label ? std::hash<std::string>{}(*t.edge_label) : 0x517cc1b7ULL);
  return h;
}

std::size_t hash_tree(const TreeStructure& t) {
  std::size_t h = hash_tuple(t.label);
  for (const auto& c : t.children) hash_combine(h, hash_tree(c));
  return h;
}

void collect_tree_labels(const TreeStructure& t, bool is_root,
                         std::vector<std::string>& out) {
  if (!is_root && t.label.edge_label) out.push_back(*t.label.edge_label);
  for (const auto& c : t.children) collect_tree_labels(c, false, out);
}

bool tree_contains(const TreeStructure& t, const std::string& label) {
  if (t.label.edge_label && *t.label.edge_label == label) return true;
  for (const auto& c : t.children)
    if (tree_contains(c, label)) return true;
  return false;
}

}  // namespace

std::size_t structure_hash(const Structure& s) {
  if (const auto* p = std::get_if<PathStructure>(&s)) {
    std::size_t h = 0x9ae16a3bULL;
    for (const auto& t : p->tuples) hash_combine(h, hash_tuple(t));
    return h;
  }
  return hash_tree(std::get<TreeStructure>(s));
}

void collect_edge_labels(const Structure& s, std::vector<std::string>& out) {
  if (const auto* p = std::get_if<PathStructure>(&s)) {
    for (const auto& t : p->tuples)
      if (t.edge_label) out.push_back(*t.edge_label);
    return;
  }
  collect_tree_labels(std::get<TreeStructure>(s), true, out);
}

bool contains_edge_label(const Structure& s, const std::string& label) {
  if (const auto* p = std::get_if<PathStructure>(&s)) {
    for (const auto& t : p->tuples)
      if (t.edge_label && *t.edge_label == label) return true;
    return false;
  }
  return tree_contains(std::get<TreeStructure>(s), label);
}

}  // namespace nsk
