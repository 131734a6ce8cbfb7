/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsk/structures.hpp"

namespace nsk {

/// Generator for desk-scale planted-signal corpora. The binary label is a
/// deterministic function of the signal tuples: positive examples draw
/// signal node words from the positive vocabulary, negatives from the
/// negative one. Distractor tuples use class-independent shared words and
/// are inserted at `distractor_rate` regardless of the label.
struct SyntheticSpec {
  std::size_t n_examples = 2000;
  std::size_t n_signal_labels = 2;
  std::size_t n_distractor_labels = 2;
  double distractor_rate = 0.9;  // per distractor label, per scene
  std::size_t pos_vocab = 16;
  std::size_t neg_vocab = 16;
  std::size_t shared_vocab = 60;
  std::size_t filler_min = 0;  // bare filler tuples per scene
  std::size_t filler_max = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;

  std::vector<std::string> signal_labels() const;
  std::vector<std::string> distractor_labels() const;
};

LabeledDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace nsk
