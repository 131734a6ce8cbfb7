/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include "nsk/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace nsk {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json kernel_config_to_json(const KernelConfig& c) {
  return {{"structure_kind", to_string(c.structure_kind)},
          {"tuple_kernel", to_string(c.tuple_kernel)},
          {"lambda_decay", c.lambda_decay},
          {"gamma_sparsity", c.gamma_sparsity},
          {"normalize", c.normalize}};
}

KernelConfig kernel_config_from_json(const json& j) {
  KernelConfig c;
  c.structure_kind =
      structure_kind_from_string(j.at("structure_kind").get<std::string>());
  c.tuple_kernel =
      tuple_kernel_from_string(j.at("tuple_kernel").get<std::string>());
  c.lambda_decay = j.at("lambda_decay").get<double>();
  c.gamma_sparsity = j.at("gamma_sparsity").get<double>();
  c.normalize = j.at("normalize").get<bool>();
  return c;
}

json sigma_to_json(const SigmaMap& s) {
  // sorted keys for a stable byte representation
  std::map<std::string, int> sorted(s.values.begin(), s.values.end());
  json j = json::object();
  for (const auto& [k, v] : sorted) j[k] = v;
  return j;
}

SigmaMap sigma_from_json(const json& j) {
  SigmaMap s;
  for (auto it = j.begin(); it != j.end(); ++it)
    s.set(it.key(), it.value().get<int>());
  return s;
}

json learn_config_to_json(const LearnConfig& c) {
  return {{"beta", c.beta},
          {"trials", c.trials},
          {"k_global", c.k_global},
          {"include_second_hop", c.include_second_hop},
          {"label_fraction", c.label_fraction},
          {"sampler", to_string(c.sampler)},
          {"refresh_iterations", c.refresh_iterations},
          {"rng_seed", c.rng_seed},
          {"anchor_count", c.anchor_count},
          {"hash_bits", c.hash_bits},
          {"min_candidates", c.min_candidates}};
}

LearnConfig learn_config_from_json(const json& j) {
  LearnConfig c;
  c.beta = j.at("beta").get<std::size_t>();
  c.trials = j.at("trials").get<std::size_t>();
  c.k_global = j.at("k_global").get<std::size_t>();
  c.include_second_hop = j.at("include_second_hop").get<bool>();
  c.label_fraction = j.at("label_fraction").get<double>();
  c.sampler = sampler_from_string(j.at("sampler").get<std::string>());
  c.refresh_iterations = j.at("refresh_iterations").get<std::size_t>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.anchor_count = j.at("anchor_count").get<std::size_t>();
  c.hash_bits = j.at("hash_bits").get<std::uint32_t>();
  c.min_candidates = j.at("min_candidates").get<std::size_t>();
  return c;
}

json load_json_file(const std::string& path, const std::string& expect_format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (j.value("format", "") != expect_format)
    throw ArtifactMismatchError(path + ": expected format \"" + expect_format +
                                "\"");
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::string kernel_fingerprint(const KernelConfig& config,
                               const SigmaMap& sigma) {
  json j = {{"kernel", kernel_config_to_json(config)},
            {"sigma", sigma_to_json(sigma)}};
  std::ostringstream hex;
  hex << std::hex << fnv1a(j.dump());
  return hex.str();
}

void save_model(const ModelFile& model, const std::string& path) {
  json trace = json::array();
  for (const auto& t : model.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"param", t.param_index},
                     {"label", t.label},
                     {"trial", t.trial},
                     {"v", t.value},
                     {"loss", t.loss},
                     {"subset_size", t.subset_size}});
  json freq = json::object();
  for (const auto& [k, v] : model.label_frequencies) freq[k] = v;
  json j = {{"format", "nsk-model"},
            {"fingerprint", model.fingerprint()},
            {"kernel", kernel_config_to_json(model.kernel)},
            {"sigma", sigma_to_json(model.sigma)},
            {"label_frequencies", freq},
            {"learn", learn_config_to_json(model.learn)},
            {"trace", trace},
            {"seed", model.seed}};
  write_json_file(j, path);
}

ModelFile load_model(const std::string& path) {
  json j = load_json_file(path, "nsk-model");
  ModelFile m;
  m.kernel = kernel_config_from_json(j.at("kernel"));
  m.sigma = sigma_from_json(j.at("sigma"));
  for (auto it = j.at("label_frequencies").begin();
       it != j.at("label_frequencies").end(); ++it)
    m.label_frequencies[it.key()] = it.value().get<std::size_t>();
  m.learn = learn_config_from_json(j.at("learn"));
  for (const auto& t : j.at("trace"))
    m.trace.push_back({t.at("iteration").get<std::size_t>(),
                       t.at("param").get<std::size_t>(),
                       t.at("label").get<std::string>(),
                       t.at("trial").get<std::size_t>(), t.at("v").get<int>(),
                       t.at("loss").get<double>(),
                       t.at("subset_size").get<std::size_t>()});
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("fingerprint").get<std::string>() != m.fingerprint())
    throw ArtifactMismatchError(path + ": fingerprint does not match content");
  return m;
}

void save_index(const IndexFile& file, const std::string& path) {
  const auto& idx = file.index;
  json fns = {{"family", to_string(idx.functions.family)},
              {"H", idx.functions.H}};
  if (idx.functions.family == HashFamily::Rknn) {
    fns["subset1"] = idx.functions.rknn_subset1;
    fns["subset2"] = idx.functions.rknn_subset2;
  } else {
    fns["weights"] = idx.functions.kg_weights;
    fns["center"] = idx.functions.kg_center;
  }
  json buckets = json::object();
  for (const auto& [code, items] : idx.buckets)
    buckets[code.to_string()] = items;
  json j = {{"format", "nsk-index"},
            {"fingerprint", file.kernel_fingerprint},
            {"anchors", idx.anchors.indices},
            {"functions", fns},
            {"buckets", buckets},
            {"indexed_count", idx.indexed_count}};
  write_json_file(j, path);
}

IndexFile load_index(const std::string& path) {
  json j = load_json_file(path, "nsk-index");
  IndexFile f;
  f.kernel_fingerprint = j.at("fingerprint").get<std::string>();
  f.index.anchors.indices =
      j.at("anchors").get<std::vector<std::size_t>>();
  const json& fns = j.at("functions");
  f.index.functions.family =
      hash_family_from_string(fns.at("family").get<std::string>());
  f.index.functions.H = fns.at("H").get<std::uint32_t>();
  if (f.index.functions.family == HashFamily::Rknn) {
    f.index.functions.rknn_subset1 =
        fns.at("subset1").get<std::vector<std::vector<std::size_t>>>();
    f.index.functions.rknn_subset2 =
        fns.at("subset2").get<std::vector<std::vector<std::size_t>>>();
  } else {
    f.index.functions.kg_weights =
        fns.at("weights").get<std::vector<std::vector<double>>>();
    f.index.functions.kg_center =
        fns.at("center").get<std::vector<double>>();
  }
  for (auto it = j.at("buckets").begin(); it != j.at("buckets").end(); ++it) {
    const std::string& bits = it.key();
    HashCode code;
    code.length = static_cast<std::uint32_t>(bits.size());
    for (std::uint32_t b = 0; b < code.length; ++b)
      if (bits[b] == '1') code.bits |= (std::uint64_t{1} << b);
    f.index.buckets[code] = it.value().get<std::vector<std::size_t>>();
  }
  f.index.indexed_count = j.at("indexed_count").get<std::size_t>();
  return f;
}

std::string trace_to_csv(const std::vector<TrialRecord>& trace) {
  std::ostringstream out;
  out << "iteration,param,label,trial,v,loss,subset_size\n";
  for (const auto& t : trace)
    out << t.iteration << ',' << t.param_index << ',' << t.label << ','
        << t.trial << ',' << t.value << ',' << t.loss << ',' << t.subset_size
        << '\n';
  return out.str();
}

}  // namespace nsk
