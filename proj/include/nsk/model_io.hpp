/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nsk/kernels.hpp"
#include "nsk/klsh.hpp"
#include "nsk/learn.hpp"

namespace nsk {

/// Stable hash of the kernel configuration plus sigma map, embedded in every
/// persisted artifact so cross-artifact commands can detect mismatches.
std::string kernel_fingerprint(const KernelConfig& config,
                               const SigmaMap& sigma);

struct ModelFile {
  KernelConfig kernel;
  SigmaMap sigma;
  std::map<std::string, std::size_t> label_frequencies;
  LearnConfig learn;
  std::vector<TrialRecord> trace;
  std::uint64_t seed = 0;

  std::string fingerprint() const { return kernel_fingerprint(kernel, sigma); }
};

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

struct IndexFile {
  std::string kernel_fingerprint;
  HashIndex index;
};

void save_index(const IndexFile& file, const std::string& path);
IndexFile load_index(const std::string& path);

std::string trace_to_csv(const std::vector<TrialRecord>& trace);

}  // namespace nsk
