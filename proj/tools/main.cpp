/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsk/corpus.hpp"
#include "nsk/kernels.hpp"
#include "nsk/klsh.hpp"
#include "nsk/learn.hpp"
#include "nsk/model_io.hpp"
#include "nsk/neighbors.hpp"
#include "nsk/parallel.hpp"
#include "nsk/synth.hpp"

using nlohmann::json;

namespace {

struct KernelFlags {
  std::string kind = "path";
  std::string tuple_kernel = "indicator";
  double lambda = 0.8;
  double gamma = 0.6;
  bool normalize = false;
  std::string embeddings_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kind", kind, "structure kind: path|tree")
        ->check(CLI::IsMember({"path", "tree"}));
    cmd->add_option("--tuple-kernel", tuple_kernel,
                    "tuple kernel: indicator|wordvec")
        ->check(CLI::IsMember({"indicator", "wordvec"}));
    cmd->add_option("--lambda", lambda, "subsequence decay, in (0,1)");
    cmd->add_option("--gamma", gamma, "wordvec sparsity, in (-1,1)");
    cmd->add_flag("--normalize", normalize, "cosine-normalize kernel values");
    cmd->add_option("--embeddings", embeddings_path,
                    "word-vector file (wordvec kernel)");
  }

  nsk::KernelConfig config() const {
    nsk::KernelConfig c;
    c.structure_kind = nsk::structure_kind_from_string(kind);
    c.tuple_kernel = nsk::tuple_kernel_from_string(tuple_kernel);
    c.lambda_decay = lambda;
    c.gamma_sparsity = gamma;
    c.normalize = normalize;
    return c;
  }

  std::shared_ptr<const nsk::EmbeddingTable> load_embeddings() const {
    if (tuple_kernel != "wordvec") return nullptr;
    if (embeddings_path.empty())
      throw nsk::ConfigError("wordvec kernel requires --embeddings");
    std::vector<std::string> warnings;
    auto table = std::make_shared<nsk::EmbeddingTable>(
        nsk::load_embeddings_file(embeddings_path, &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return table;
  }
};

nsk::KernelEngine engine_from_model(const nsk::ModelFile& model,
                                    const std::string& embeddings_path) {
  std::shared_ptr<const nsk::EmbeddingTable> table;
  if (model.kernel.tuple_kernel == nsk::TupleKernelKind::WordVec) {
    if (embeddings_path.empty())
      throw nsk::ConfigError("model uses wordvec kernel; pass --embeddings");
    table = std::make_shared<nsk::EmbeddingTable>(
        nsk::load_embeddings_file(embeddings_path));
  }
  return nsk::KernelEngine(model.kernel, model.sigma, table);
}

void print_balance(const std::string& name, const std::string& family,
                   const nsk::BucketBalanceReport& r) {
  std::cout << std::left << std::setw(24) << name << std::setw(8) << family
            << std::right << std::setw(10) << r.bucket_count << std::setw(12)
            << std::fixed << std::setprecision(2) << r.occupancy_mean
            << std::setw(12) << r.occupancy_std << std::setw(10)
            << r.occupancy_max << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"nonstationary convolution kernels with KLSH-accelerated k-NN"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON/INI config file; flags override it");
  std::size_t workers = 0;
  app.add_option("--workers", workers,
                 "worker threads (default: NSK_WORKERS or hardware)");

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "generate a planted-signal corpus");
  nsk::SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output dataset (JSON lines)")
      ->required();
  synth->add_option("--n", spec.n_examples, "number of examples");
  synth->add_option("--signal-labels", spec.n_signal_labels);
  synth->add_option("--distractor-labels", spec.n_distractor_labels);
  synth->add_option("--rate", spec.distractor_rate,
                    "distractor insertion rate in [0,1]");
  synth->add_option("--pos-vocab", spec.pos_vocab);
  synth->add_option("--neg-vocab", spec.neg_vocab);
  synth->add_option("--shared-vocab", spec.shared_vocab);
  synth->add_option("--filler-min", spec.filler_min);
  synth->add_option("--filler-max", spec.filler_max);
  synth->add_option("--seed", spec.rng_seed);

  // --- train ---
  auto* train = app.add_subcommand("train", "learn sigma parameters");
  KernelFlags train_kernel;
  train_kernel.attach(train);
  std::string train_data, model_out, trace_csv;
  nsk::LearnConfig learn_cfg;
  train->add_option("--data", train_data, "training dataset")->required();
  train->add_option("--model-out", model_out, "model file to write")
      ->required();
  train->add_option("--trace-csv", trace_csv, "optional loss-trace CSV");
  train->add_option("--beta", learn_cfg.beta, "inducing points per trial");
  train->add_option("--trials", learn_cfg.trials, "trials per parameter");
  train->add_option("--k-global", learn_cfg.k_global, "global graph degree");
  train->add_option("--label-fraction", learn_cfg.label_fraction,
                    "fraction of most-frequent labels parameterized, (0,1]");
  std::string sampler = "neighborhood";
  train->add_option("--sampler", sampler, "neighborhood|pure_random")
      ->check(CLI::IsMember({"neighborhood", "pure_random"}));
  bool no_second_hop = false;
  train->add_flag("--no-second-hop", no_second_hop,
                  "skip the neighbors-of-neighbors step");
  train->add_option("--iterations", learn_cfg.refresh_iterations,
                    "global-graph refresh iterations");
  train->add_option("--seed", learn_cfg.rng_seed);
  train->add_option("--hash-bits", learn_cfg.hash_bits,
                    "H for the global graph (0 = auto)");
  train->add_option("--anchors", learn_cfg.anchor_count,
                    "M for the global graph (0 = ceil(sqrt(N)))");
  train->add_option("--min-candidates", learn_cfg.min_candidates);

  // --- index ---
  auto* index_cmd = app.add_subcommand("index", "build a KLSH index");
  std::string index_data, index_model, index_out, family = "rknn";
  std::string index_embeddings;
  std::size_t index_m = 100, alpha = 0, kg_t = 30;
  std::uint32_t index_h = 0;
  std::uint64_t index_seed = 0;
  index_cmd->add_option("--data", index_data, "training dataset")->required();
  index_cmd->add_option("--model", index_model, "model file")->required();
  index_cmd->add_option("--out", index_out, "index file to write")->required();
  index_cmd->add_option("--family", family, "rknn|kg")
      ->check(CLI::IsMember({"rknn", "kg"}));
  index_cmd->add_option("--H", index_h, "hash bits (0 = auto from N)");
  index_cmd->add_option("--M", index_m, "anchor count");
  index_cmd->add_option("--alpha", alpha,
                        "rknn subset size (0 = ceil(sqrt(M)))");
  index_cmd->add_option("--t", kg_t, "kg anchors per bit");
  index_cmd->add_option("--seed", index_seed);
  index_cmd->add_option("--embeddings", index_embeddings,
                        "word-vector file (wordvec models)");

  // --- predict ---
  auto* predict = app.add_subcommand("predict", "classify query structures");
  std::string pred_data, pred_model, pred_index, pred_queries, pred_out;
  std::string pred_embeddings;
  std::size_t pred_k = 8, pred_min_cand = 0;
  std::uint32_t pred_radius = 2;
  double subsample = 1.0;
  std::uint64_t pred_seed = 0;
  predict->add_option("--data", pred_data, "training dataset")->required();
  predict->add_option("--model", pred_model)->required();
  predict->add_option("--index", pred_index)->required();
  predict->add_option("--queries", pred_queries, "query dataset")->required();
  predict->add_option("--out", pred_out, "predictions (JSON lines)")
      ->required();
  predict->add_option("--k", pred_k, "neighbors for voting");
  predict->add_option("--min-candidates", pred_min_cand);
  predict->add_option("--max-radius", pred_radius);
  predict->add_option("--subsample", subsample,
                      "global training subsample fraction in (0,1]");
  predict->add_option("--seed", pred_seed, "subsample seed");
  predict->add_option("--embeddings", pred_embeddings);

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold");
  std::vector<std::string> pred_files;
  std::string gold_file, gold_kind = "path";
  eval_cmd->add_option("--pred", pred_files, "prediction file(s)")->required();
  eval_cmd->add_option("--gold", gold_file, "gold dataset")->required();
  eval_cmd->add_option("--kind", gold_kind)
      ->check(CLI::IsMember({"path", "tree"}));

  // --- diag ---
  auto* diag = app.add_subcommand("diag", "bucket-balance diagnostics");
  std::vector<std::string> diag_indexes;
  std::size_t budget = 50;
  diag->add_option("--index", diag_indexes, "index file(s)")->required();
  diag->add_option("--budget", budget, "candidate budget per probe");

  CLI11_PARSE(app, argc, argv);

  if (*synth) {
    auto ds = nsk::generate_synthetic(spec);
    nsk::save_dataset_file(ds, synth_out);
    std::size_t positives = 0;
    for (const auto& ex : ds.examples) positives += ex.label;
    std::cout << "wrote " << ds.size() << " examples (" << positives
              << " positive) to " << synth_out << "\n";
    return 0;
  }

  if (*train) {
    learn_cfg.sampler = nsk::sampler_from_string(sampler);
    learn_cfg.include_second_hop = !no_second_hop;
    learn_cfg.validate();
    auto config = train_kernel.config();
    auto ds = nsk::load_dataset_file(train_data, config.structure_kind);
    std::vector<std::string> warnings;
    auto deduped = nsk::dedup_dataset(ds, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "training on " << deduped.size() << " unique examples ("
              << ds.size() - deduped.size() << " duplicates dropped)\n";

    nsk::KernelEngine engine(config, {}, train_kernel.load_embeddings());
    auto result = nsk::optimize_sigma(engine, deduped, learn_cfg, workers);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

    nsk::ModelFile model;
    model.kernel = config;
    model.sigma = result.sigma;
    model.label_frequencies = nsk::label_frequencies(deduped);
    model.learn = learn_cfg;
    model.trace = result.trace;
    model.seed = learn_cfg.rng_seed;
    nsk::save_model(model, model_out);
    if (!trace_csv.empty()) {
      std::ofstream out(trace_csv, std::ios::binary);
      out << nsk::trace_to_csv(result.trace);
    }

    std::cout << "learned sigma (" << result.parameter_order.size()
              << " parameters):\n";
    for (const auto& label : result.parameter_order)
      std::cout << "  " << std::left << std::setw(20) << label
                << result.sigma.get(label) << "\n";
    std::cout << "kernel evaluations: " << engine.eval_count() << "\n";
    std::cout << "model written to " << model_out << "\n";
    return 0;
  }

  if (*index_cmd) {
    auto model = nsk::load_model(index_model);
    auto ds_raw = nsk::load_dataset_file(index_data, model.kernel.structure_kind);
    auto ds = nsk::dedup_dataset(ds_raw);
    auto engine = engine_from_model(model, index_embeddings);
    if (index_m > ds.size())
      throw nsk::ConfigError("anchor count M exceeds dataset size");
    std::uint32_t h = index_h ? index_h : nsk::default_hash_bits(ds.size());
    auto anchors = nsk::sample_anchors(ds.size(), index_m, index_seed);
    nsk::HashFunctionSet fns;
    if (family == "rknn") {
      std::size_t a = alpha ? alpha : nsk::default_alpha_subset(index_m);
      fns = nsk::build_rknn_functions(index_m, h, a, index_seed + 1);
    } else {
      fns = nsk::build_kg_functions(engine, anchors, ds, h,
                                    std::min(kg_t, index_m), index_seed + 1);
    }
    for (const auto& w : fns.warnings) std::cerr << "warning: " << w << "\n";
    auto index = nsk::build_index(engine, ds, anchors, fns, workers);
    nsk::IndexFile file{model.fingerprint(), std::move(index)};
    nsk::save_index(file, index_out);
    auto balance = nsk::bucket_balance_report(file.index);
    std::cout << "indexed " << ds.size() << " items into "
              << balance.bucket_count << " buckets (mean "
              << balance.occupancy_mean << ", std " << balance.occupancy_std
              << ")\n";
    std::cout << "kernel evaluations: " << engine.eval_count() << "\n";
    return 0;
  }

  if (*predict) {
    auto model = nsk::load_model(pred_model);
    auto index = nsk::load_index(pred_index);
    if (index.kernel_fingerprint != model.fingerprint())
      throw nsk::ArtifactMismatchError(
          "model and index were built with different kernel configurations");
    auto train_raw =
        nsk::load_dataset_file(pred_data, model.kernel.structure_kind);
    auto train_ds = nsk::dedup_dataset(train_raw);
    if (index.index.indexed_count != train_ds.size())
      throw nsk::ArtifactMismatchError(
          "index size does not match the deduplicated training dataset");
    auto queries =
        nsk::load_dataset_file(pred_queries, model.kernel.structure_kind);
    auto engine = engine_from_model(model, pred_embeddings);

    // global subsampling masks training points out of the vote
    std::vector<char> active(train_ds.size(), 1);
    if (subsample < 1.0) {
      if (subsample <= 0.0)
        throw nsk::ConfigError("--subsample must lie in (0,1]");
      std::mt19937_64 rng(pred_seed);
      std::size_t keep = static_cast<std::size_t>(
          std::llround(subsample * static_cast<double>(train_ds.size())));
      std::vector<std::size_t> order(train_ds.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::fill(active.begin(), active.end(), 0);
      for (std::size_t i = 0; i < keep; ++i) active[order[i]] = 1;
    }

    std::ofstream out(pred_out, std::ios::binary);
    if (!out) throw nsk::DataError("cannot write " + pred_out);
    std::size_t min_cand = pred_min_cand ? pred_min_cand : 3 * pred_k;
    std::vector<std::string> lines(queries.size());
    nsk::parallel_for(
        queries.size(),
        [&](std::size_t qi) {
          const auto& q = queries.examples[qi];
          auto code = nsk::hash_structure(engine, q.structure,
                                          index.index.anchors,
                                          index.index.functions, train_ds);
          auto cands = nsk::probe(index.index, code, min_cand, pred_radius);
          std::vector<nsk::KnnEdge> scored;
          for (std::size_t c : cands) {
            if (!active[c]) continue;
            if (train_ds.examples[c].id == q.id) continue;
            scored.push_back({c, engine.structure_kernel(
                                     q.structure,
                                     train_ds.examples[c].structure)});
          }
          std::sort(scored.begin(), scored.end(),
                    [](const nsk::KnnEdge& a, const nsk::KnnEdge& b) {
                      if (a.similarity != b.similarity)
                        return a.similarity > b.similarity;
                      return a.neighbor < b.neighbor;
                    });
          if (scored.size() > pred_k) scored.resize(pred_k);
          double votes[2] = {0, 0};
          std::size_t count[2] = {0, 0};
          json neighbors = json::array();
          for (const auto& e : scored) {
            int y = train_ds.examples[e.neighbor].label;
            votes[y] += e.similarity;
            ++count[y];
            neighbors.push_back(
                {train_ds.examples[e.neighbor].id, e.similarity});
          }
          int pred;
          if (count[1] != count[0])
            pred = count[1] > count[0] ? 1 : 0;
          else
            pred = votes[1] > votes[0] ? 1 : 0;
          json j = {{"id", q.id},
                    {"pred", pred},
                    {"votes", {votes[0], votes[1]}},
                    {"neighbors", neighbors}};
          lines[qi] = j.dump();
        },
        workers);
    for (const auto& l : lines) out << l << '\n';
    std::cout << "wrote " << queries.size() << " predictions to " << pred_out
              << "\n";
    std::cout << "kernel evaluations: " << engine.eval_count() << "\n";
    return 0;
  }

  if (*eval_cmd) {
    auto gold = nsk::load_dataset_file(
        gold_file, nsk::structure_kind_from_string(gold_kind));
    std::map<std::string, int> gold_by_id;
    for (const auto& ex : gold.examples) gold_by_id[ex.id] = ex.label;

    std::vector<nsk::EvalReport> reports;
    for (const auto& pf : pred_files) {
      std::ifstream in(pf);
      if (!in) throw nsk::DataError("cannot open " + pf);
      std::vector<int> preds, golds;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        auto it = gold_by_id.find(j.at("id").get<std::string>());
        if (it == gold_by_id.end())
          throw nsk::DataError("prediction id \"" +
                               j.at("id").get<std::string>() +
                               "\" not present in gold dataset");
        preds.push_back(j.at("pred").get<int>());
        golds.push_back(it->second);
      }
      reports.push_back(nsk::evaluate(preds, golds));
    }

    std::cout << std::left << std::setw(28) << "file" << std::right
              << std::setw(8) << "P" << std::setw(8) << "R" << std::setw(8)
              << "F1" << std::setw(6) << "TP" << std::setw(6) << "FP"
              << std::setw(6) << "FN" << std::setw(6) << "TN\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      std::cout << std::left << std::setw(28) << pred_files[i] << std::right
                << std::fixed << std::setprecision(4) << std::setw(8)
                << r.precision << std::setw(8) << r.recall << std::setw(8)
                << r.f1 << std::setw(6) << r.tp << std::setw(6) << r.fp
                << std::setw(6) << r.fn << std::setw(6) << r.tn << "\n";
    }
    if (reports.size() > 1) {
      double mean = 0;
      for (const auto& r : reports) mean += r.f1;
      mean /= static_cast<double>(reports.size());
      double var = 0;
      for (const auto& r : reports) var += (r.f1 - mean) * (r.f1 - mean);
      double sd = std::sqrt(var / static_cast<double>(reports.size() - 1));
      std::cout << "F1 mean +/- std: " << mean << " +/- " << sd << "\n";
    }
    return 0;
  }

  if (*diag) {
    std::cout << std::left << std::setw(24) << "index" << std::setw(8)
              << "family" << std::right << std::setw(10) << "buckets"
              << std::setw(12) << "mean" << std::setw(12) << "std"
              << std::setw(10) << "max\n";
    std::vector<std::pair<std::string, nsk::BucketBalanceReport>> rows;
    std::vector<nsk::IndexFile> files;
    for (const auto& path : diag_indexes) {
      files.push_back(nsk::load_index(path));
      auto r = nsk::bucket_balance_report(files.back().index);
      print_balance(path, nsk::to_string(files.back().index.functions.family),
                    r);
      rows.emplace_back(path, r);
    }
    // probe-cost accounting: candidate counts equal kernel evaluations
    std::cout << "\nmean probe candidates per indexed item (budget=" << budget
              << "):\n";
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
      const auto& idx = files[fi].index;
      double total = 0;
      std::size_t n = 0;
      for (const auto& [code, items] : idx.buckets) {
        auto cands = nsk::probe(idx, code, budget);
        total += static_cast<double>(cands.size() * items.size());
        n += items.size();
      }
      std::cout << "  " << std::left << std::setw(24) << diag_indexes[fi]
                << (n ? total / static_cast<double>(n) : 0.0) << "\n";
    }
    if (rows.size() == 2 &&
        files[0].index.functions.family != files[1].index.functions.family) {
      const auto& a = rows[0];
      const auto& b = rows[1];
      std::cout << "\noccupancy-std comparison: " << a.first << " ("
                << a.second.occupancy_std << ") vs " << b.first << " ("
                << b.second.occupancy_std << ") -> "
                << (a.second.occupancy_std <= b.second.occupancy_std ? a.first
                                                                     : b.first)
                << " is more balanced\n";
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nsk::ArtifactMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nsk::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nsk::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
