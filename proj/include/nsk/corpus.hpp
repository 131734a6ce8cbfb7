/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nsk/structures.hpp"

namespace nsk {

/// Parse a JSON-lines dataset. Throws DataError with the 1-based line number
/// on malformed records, duplicate ids, bad labels or empty structures.
LabeledDataset load_dataset(std::istream& in, StructureKind kind);
LabeledDataset load_dataset_file(const std::string& path, StructureKind kind);

std::string serialize_dataset(const LabeledDataset& ds);
void save_dataset_file(const LabeledDataset& ds, const std::string& path);

/// Keep the first occurrence of each structurally identical structure.
/// Conflicting labels among duplicates append to `warnings` (first wins).
LabeledDataset dedup_dataset(const LabeledDataset& ds,
                             std::vector<std::string>* warnings = nullptr);

/// Edge-label occurrence counts over the whole dataset.
std::map<std::string, std::size_t> label_frequencies(const LabeledDataset& ds);

/// For each requested label, the sorted indices of examples containing it.
std::map<std::string, std::vector<std::size_t>> indices_by_label(
    const LabeledDataset& ds, const std::vector<std::string>& labels);

/// "word v1 ... vd" per line; vectors are unit L2 normalized.
EmbeddingTable load_embeddings(std::istream& in,
                               std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_embeddings_file(const std::string& path,
                                    std::vector<std::string>* warnings = nullptr);

}  // namespace nsk
