/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/synth.hpp"

#include <algorithm>
#include <random>

namespace nsk {

void SyntheticSpec::validate() const {
  if (n_examples < 2) throw ConfigError("n_examples must be >= 2");
  if (n_signal_labels < 1) throw ConfigError("need at least one signal label");
  if (distractor_rate < 0.0 || distractor_rate > 1.0)
    throw ConfigError("distractor_rate must lie in [0,1]");
  if (pos_vocab < 1 || neg_vocab < 1 || shared_vocab < 1)
    throw ConfigError("vocabulary sizes must be >= 1");
  if (filler_min > filler_max)
    throw ConfigError("filler_min must not exceed filler_max");
}

std::vector<std::string> SyntheticSpec::signal_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n_signal_labels; ++i)
    out.push_back("sig_" + std::to_string(i));
  return out;
}

std::vector<std::string> SyntheticSpec::distractor_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n_distractor_labels; ++i)
    out.push_back("dis_" + std::to_string(i));
  return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution insert_distractor(spec.distractor_rate);

  auto sig = spec.signal_labels();
  auto dis = spec.distractor_labels();

  LabeledDataset ds;
  ds.structure_kind = StructureKind::Path;
  ds.examples.reserve(spec.n_examples);
  std::uniform_int_distribution<std::size_t> shared(0, spec.shared_vocab - 1);
  std::uniform_int_distribution<std::size_t> fill(spec.filler_min,
                                                  spec.filler_max);
  // Each scene emits a positive/negative sibling pair sharing the same
  // distractor and filler tuples; only the signal tuples differ. Opposite
  // classes therefore overlap exactly on the screenable labels.
  while (ds.examples.size() < spec.n_examples) {
    std::vector<TupleLabel> scene;
    for (const auto& label : dis)
      if (insert_distractor(rng))
        scene.push_back({label, "shr_w" + std::to_string(shared(rng))});
    std::size_t n_fill = fill(rng);
    for (std::size_t f = 0; f < n_fill; ++f)
      scene.push_back({std::nullopt, "shr_w" + std::to_string(shared(rng))});

    // emitted in random order so labels do not alternate deterministically
    int first = coin(rng) ? 1 : 0;
    for (int y : {first, 1 - first}) {
      if (ds.examples.size() >= spec.n_examples) break;
      std::vector<TupleLabel> tuples = scene;
      for (const auto& label : sig) {
        std::size_t vocab = y ? spec.pos_vocab : spec.neg_vocab;
        std::uniform_int_distribution<std::size_t> d(0, vocab - 1);
        tuples.push_back(
            {label, (y ? "pos_w" : "neg_w") + std::to_string(d(rng))});
      }
      std::shuffle(tuples.begin(), tuples.end(), rng);
      LabeledExample ex;
      ex.id = "synth-" + std::to_string(ds.examples.size());
      ex.label = y;
      ex.structure = PathStructure{std::move(tuples)};
      ds.examples.push_back(std::move(ex));
    }
  }

  // degenerate spec: one class never generated
  bool has[2] = {false, false};
  for (const auto& ex : ds.examples) has[ex.label] = true;
  if (!has[0] || !has[1])
    throw DataError("degenerate synthetic spec: one class is empty");
  return ds;
}

}  // namespace nsk
