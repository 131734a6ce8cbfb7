/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace nsk {

using nlohmann::json;

namespace {

TupleLabel tuple_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw DataError("tuple must be a [edge, node] pair");
  TupleLabel t;
  if (!j[0].is_null()) {
    if (!j[0].is_string()) throw DataError("edge label must be string or null");
    t.edge_label = j[0].get<std::string>();
    if (t.edge_label->empty()) throw DataError("edge label must be non-empty");
  }
  if (!j[1].is_string()) throw DataError("node label must be a string");
  t.node_label = j[1].get<std::string>();
  if (t.node_label.empty()) throw DataError("node label must be non-empty");
  return t;
}

TreeStructure tree_from_json(const json& j, bool is_root) {
  if (!j.is_object()) throw DataError("tree node must be an object");
  TreeStructure t;
  if (j.contains("edge") && !j.at("edge").is_null()) {
    if (is_root) throw DataError("root node must not carry an edge label");
    t.label.edge_label = j.at("edge").get<std::string>();
    if (t.label.edge_label->empty())
      throw DataError("edge label must be non-empty");
  }
  t.label.node_label = j.at("node").get<std::string>();
  if (t.label.node_label.empty())
    throw DataError("node label must be non-empty");
  if (j.contains("children"))
    for (const auto& c : j.at("children"))
      t.children.push_back(tree_from_json(c, false));
  return t;
}

json tuple_to_json(const TupleLabel& t) {
  return json::array(
      {t.edge_label ? json(*t.edge_label) : json(nullptr), t.node_label});
}

json tree_to_json(const TreeStructure& t) {
  json j;
  j["edge"] = t.label.edge_label ? json(*t.label.edge_label) : json(nullptr);
  j["node"] = t.label.node_label;
  j["children"] = json::array();
  for (const auto& c : t.children) j["children"].push_back(tree_to_json(c));
  return j;
}

}  // namespace

LabeledDataset load_dataset(std::istream& in, StructureKind kind) {
  LabeledDataset ds;
  ds.structure_kind = kind;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      LabeledExample ex;
      ex.id = j.at("id").get<std::string>();
      if (!j.at("label").is_number_integer())
        throw DataError("label must be 0 or 1");
      int label = j.at("label").get<int>();
      if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
      ex.label = label;
      if (kind == StructureKind::Path) {
        PathStructure p;
        const json& arr = j.at("path");
        if (!arr.is_array() || arr.empty())
          throw DataError("path must be a non-empty array");
        for (const auto& tj : arr) p.tuples.push_back(tuple_from_json(tj));
        ex.structure = std::move(p);
      } else {
        ex.structure = tree_from_json(j.at("tree"), true);
      }
      if (!seen_ids.insert(ex.id).second)
        throw DataError("duplicate id \"" + ex.id + "\"");
      ds.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

LabeledDataset load_dataset_file(const std::string& path, StructureKind kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return load_dataset(in, kind);
}

std::string serialize_dataset(const LabeledDataset& ds) {
  std::string out;
  for (const auto& ex : ds.examples) {
    json j;
    j["id"] = ex.id;
    j["label"] = ex.label;
    if (ds.structure_kind == StructureKind::Path) {
      json arr = json::array();
      for (const auto& t : std::get<PathStructure>(ex.structure).tuples)
        arr.push_back(tuple_to_json(t));
      j["path"] = arr;
    } else {
      j["tree"] = tree_to_json(std::get<TreeStructure>(ex.structure));
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_dataset_file(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << serialize_dataset(ds);
}

LabeledDataset dedup_dataset(const LabeledDataset& ds,
                             std::vector<std::string>* warnings) {
  LabeledDataset out;
  out.structure_kind = ds.structure_kind;
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_hash;
  for (const auto& ex : ds.examples) {
    std::size_t h = structure_hash(ex.structure);
    bool dup = false;
    for (std::size_t kept : by_hash[h]) {
      if (out.examples[kept].structure == ex.structure) {
        dup = true;
        if (warnings && out.examples[kept].label != ex.label)
          warnings->push_back("duplicate of \"" + out.examples[kept].id +
                              "\" (id \"" + ex.id +
                              "\") has conflicting label; keeping first");
        break;
      }
    }
    if (!dup) {
      by_hash[h].push_back(out.examples.size());
      out.examples.push_back(ex);
    }
  }
  return out;
}

std::map<std::string, std::size_t> label_frequencies(const LabeledDataset& ds) {
  std::map<std::string, std::size_t> freq;
  std::vector<std::string> labels;
  for (const auto& ex : ds.examples) {
    labels.clear();
    collect_edge_labels(ex.structure, labels);
    for (const auto& l : labels) ++freq[l];
  }
  return freq;
}

std::map<std::string, std::vector<std::size_t>> indices_by_label(
    const LabeledDataset& ds, const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& l : labels) out[l];  // absent label -> empty list
  for (std::size_t i = 0; i < ds.examples.size(); ++i)
    for (const auto& l : labels)
      if (contains_edge_label(ds.examples[i].structure, l))
        out[l].push_back(i);
  return out;
}

EmbeddingTable load_embeddings(std::istream& in,
                               std::vector<std::string>* warnings) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (word.empty() || vec.empty())
      throw DataError("embeddings line " + std::to_string(lineno) +
                      ": malformed record");
    if (table.dim == 0) table.dim = vec.size();
    if (vec.size() != table.dim)
      throw DataError("embeddings line " + std::to_string(lineno) +
                      ": dimension mismatch (" + std::to_string(vec.size()) +
                      " vs " + std::to_string(table.dim) + ")");
    double norm2 = 0;
    for (double x : vec) norm2 += x * x;
    if (norm2 == 0.0)
      throw DataError("embeddings line " + std::to_string(lineno) +
                      ": zero vector for \"" + word + "\"");
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : vec) x *= inv;
    if (table.vectors.count(word)) {
      if (warnings)
        warnings->push_back("duplicate word \"" + word + "\"; keeping first");
      continue;
    }
    table.vectors.emplace(std::move(word), std::move(vec));
  }
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path,
                                    std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file: " + path);
  return load_embeddings(in, warnings);
}

}  // namespace nsk
