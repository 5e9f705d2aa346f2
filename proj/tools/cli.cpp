// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isacl/byte_io.hpp"
#include "isacl/error.hpp"
#include "isacl/evalkit.hpp"
#include "isacl/judge.hpp"
#include "isacl/labeler.hpp"
#include "isacl/refdb.hpp"
#include "isacl/service.hpp"
#include "isacl/state_io.hpp"
#include "isacl/sweep.hpp"
#include "isacl/textsim.hpp"
#include "isacl/triplets.hpp"
#include "json.hpp"

namespace isacl::cli {
namespace {

using nlohmann::json;

const std::vector<std::string> kSubcommands = {
    "score", "label", "build-db", "query-db", "train",
    "predict", "eval", "sweep", "serve"};

struct TrainFlags {
  int epochs = 250;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::size_t hidden = 256;
  std::uint64_t seed = 0;
  float tau = 0.5f;

  TrainConfig config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.weight_decay = weight_decay;
    c.hidden_dim = hidden;
    c.seed = seed;
    c.tau = tau;
    return c;
  }
};

// Every subcommand binds into one of these. A fresh instance is used for
// each parse pass.
struct Options {
  std::string config;

  // Shared file arguments.
  std::string in, out = "-", triplets, states, refs, manifest, model, refdb,
                   data;

  // score
  bool rouge_1 = false;

  // label
  double p = 0.2;
  std::uint64_t seed = 0;
  bool with_reference = false;
  std::string score_field = "rouge_l_f";
  std::optional<double> train_fraction;
  std::uint64_t split_seed = 0;
  std::string train_out, test_out;

  // build-db / query-db
  std::string pairs, embeddings, ref_embeddings;
  std::size_t k = 0;
  std::size_t nprobe = 1;
  int max_iters = 25;
  std::string vector, id;
  std::size_t top = 1;
  std::optional<std::size_t> query_nprobe;

  // train
  std::optional<std::uint32_t> reference_dim;
  std::string log;
  TrainFlags train;

  // predict
  std::string queries;

  // eval
  std::string format = "json";
  bool latency = false;
  std::string baseline_cmd;
  bool no_timing = false;

  // sweep
  std::string axis;
  std::vector<std::string> values;
  std::string states_template;
  bool timing = false;

  // serve
  std::string bind = "127.0.0.1:7421";
  std::optional<float> tau_override;
};

void add_train_flags(CLI::App* sub, TrainFlags& t) {
  sub->add_option("--epochs", t.epochs, "Training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", t.batch_size, "Mini-batch size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--lr", t.lr, "Peak learning rate (decays linearly to 0)")
      ->capture_default_str();
  sub->add_option("--weight-decay", t.weight_decay, "AdamW weight decay")
      ->capture_default_str();
  sub->add_option("--hidden", t.hidden, "Hidden width of the gated MLP")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--train-seed", t.seed, "Seed for init and shuffling")
      ->capture_default_str();
  sub->add_option("--tau", t.tau, "Decision threshold stored in the model")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

std::unique_ptr<CLI::App> make_app(Options& o) {
  auto app = std::make_unique<CLI::App>(
      "Internal-state leakage judge: label, train, evaluate and serve a "
      "pre-decoding gate.",
      "isacl");
  app->set_version_flag("--version", "isacl 0.1.0");
  app->add_option("--config", o.config,
                  "JSON config file with option defaults (env ISACL_CONFIG)");
  app->require_subcommand(1);
  // Lets --config follow the subcommand name.
  app->fallthrough();

  auto* score = app->add_subcommand(
      "score", "Fill rouge_l_f (and optionally rouge_1_f) into triplet JSONL");
  score->add_option("--in", o.in, "Triplet JSONL ('-' for stdin)");
  score->add_option("--out", o.out, "Output JSONL ('-' for stdout)")
      ->capture_default_str();
  score->add_flag("--rouge-1", o.rouge_1, "Also fill rouge_1_f");

  auto* label = app->add_subcommand(
      "label", "Partition scored triplets into Leak / NonDisclosure rows");
  label->add_option("--triplets", o.triplets, "Scored triplet JSONL");
  label->add_option("--states", o.states, "State file keyed by triplet id");
  label->add_option("--refs", o.refs,
                    "Reference-embedding state file (with --with-reference)");
  label->add_option("--p", o.p, "Division fraction in (0, 0.5]")
      ->capture_default_str();
  label->add_option("--seed", o.seed, "Tie-breaking seed")->capture_default_str();
  label->add_flag("--with-reference", o.with_reference,
                  "Append reference embeddings to the features");
  label->add_option("--score-field", o.score_field,
                    "Score column: rouge_l_f, rouge_1_f or an aux key")
      ->capture_default_str();
  label->add_option("--out", o.out, "Labeled state file");
  label->add_option("--manifest", o.manifest,
                    "Run manifest (default: <out>.manifest.json)");
  label->add_option("--train-fraction", o.train_fraction,
                    "Also write a stratified train/test split")
      ->check(CLI::Range(0.0, 1.0));
  label->add_option("--split-seed", o.split_seed, "Split seed")
      ->capture_default_str();
  label->add_option("--train-out", o.train_out, "Training split file");
  label->add_option("--test-out", o.test_out, "Test split file");

  auto* build_db = app->add_subcommand(
      "build-db", "Build an IVF reference database from pairs and embeddings");
  build_db->add_option("--pairs", o.pairs, "Pair JSONL (id, input, reference)");
  build_db->add_option("--embeddings", o.embeddings,
                       "State file of input embeddings (search keys)");
  build_db->add_option("--ref-embeddings", o.ref_embeddings,
                       "State file of reference embeddings (default: keys)");
  build_db->add_option("--k", o.k, "Number of clusters (0 = ceil(sqrt(N)))")
      ->capture_default_str();
  build_db->add_option("--nprobe", o.nprobe, "Clusters probed per query")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  build_db->add_option("--seed", o.seed, "k-means seed")->capture_default_str();
  build_db->add_option("--max-iters", o.max_iters, "k-means iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  build_db->add_option("--out", o.out, "Output database (refdb.bin)");

  auto* query_db = app->add_subcommand(
      "query-db", "Look up the closest stored pair for a query embedding");
  query_db->add_option("--refdb", o.refdb, "Reference database");
  query_db->add_option("--vector", o.vector, "Comma-separated query vector");
  query_db->add_option("--states", o.states,
                       "State file holding the query (with --id)");
  query_db->add_option("--id", o.id, "Record id inside --states");
  query_db->add_option("--top", o.top, "Number of matches")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  query_db->add_option("--nprobe", o.query_nprobe,
                       "Override the database's nprobe");

  auto* train = app->add_subcommand("train", "Train the judge on labeled rows");
  train->add_option("--data", o.data, "Labeled state file");
  train->add_option("--manifest", o.manifest,
                    "Manifest from `label` (supplies reference layout)");
  train->add_flag("--with-reference", o.with_reference,
                  "Rows carry a trailing reference embedding");
  train->add_option("--reference-dim", o.reference_dim,
                    "Width of the trailing reference embedding");
  train->add_option("--out", o.out, "Output model file");
  train->add_option("--log", o.log, "Write per-epoch loss JSON here");
  add_train_flags(train, o.train);

  auto* predict = app->add_subcommand(
      "predict", "Score every record of a state file (JSONL output)");
  predict->add_option("--model", o.model, "Model file");
  predict->add_option("--states", o.states, "State file to score");
  predict->add_option("--refs", o.refs,
                      "Reference embeddings keyed by the same ids");
  predict->add_option("--refdb", o.refdb,
                      "Retrieve references from this database instead");
  predict->add_option("--queries", o.queries,
                      "Query embeddings for retrieval, keyed by id");
  predict->add_option("--nprobe", o.query_nprobe, "Override nprobe");
  predict->add_option("--out", o.out, "Output JSONL ('-' for stdout)")
      ->capture_default_str();

  auto* eval = app->add_subcommand(
      "eval", "Evaluate a model on a labeled test file");
  eval->add_option("--model", o.model, "Model file");
  eval->add_option("--data", o.data, "Labeled test file");
  eval->add_option("--manifest", o.manifest,
                   "Manifest from `label` (records the division p)");
  eval->add_option("--out", o.out, "Report destination ('-' for stdout)")
      ->capture_default_str();
  eval->add_option("--format", o.format, "json or text")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));
  eval->add_flag("--latency", o.latency,
                 "Add a per-datapoint latency benchmark to the report");
  eval->add_option("--baseline-cmd", o.baseline_cmd,
                   "External generate-then-compare command to time against");
  eval->add_flag("--no-timing", o.no_timing,
                 "Omit timing fields (reproducible output)");

  auto* sweep = app->add_subcommand(
      "sweep", "Run the pipeline once per value of one ablation axis");
  sweep->add_option("--axis", o.axis, "division-p, layer, pooling or rag");
  sweep->add_option("--values", o.values, "Comma-separated axis values")
      ->delimiter(',');
  sweep->add_option("--states", o.states, "State file (division-p, rag)");
  sweep->add_option("--states-template", o.states_template,
                    "Path with {} replaced by each value (layer, pooling)");
  sweep->add_option("--triplets", o.triplets, "Scored triplet JSONL");
  sweep->add_option("--refs", o.refs, "Reference-embedding state file");
  sweep->add_flag("--with-reference", o.with_reference,
                  "Use reference embeddings on non-rag axes");
  sweep->add_option("--score-field", o.score_field, "Score column")
      ->capture_default_str();
  sweep->add_option("--p", o.p, "Division fraction for non-p axes")
      ->capture_default_str();
  sweep->add_option("--seed", o.seed, "Tie-breaking seed")->capture_default_str();
  sweep->add_option("--train-fraction", o.train_fraction,
                    "Train share of labeled rows (default 0.8)")
      ->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--split-seed", o.split_seed, "Split seed")
      ->capture_default_str();
  sweep->add_option("--out", o.out, "JSON table ('-' for stdout)")
      ->capture_default_str();
  sweep->add_flag("--timing", o.timing, "Include timing columns in the JSON");
  add_train_flags(sweep, o.train);

  auto* serve = app->add_subcommand(
      "serve", "Serve the pre-decoding gate over newline-delimited JSON/TCP");
  serve->add_option("--model", o.model, "Model file (env ISACL_MODEL)");
  serve->add_option("--refdb", o.refdb, "Reference database (env ISACL_REFDB)");
  serve->add_option("--bind", o.bind, "host:port (port 0 picks a free port)")
      ->capture_default_str();
  serve->add_option("--tau-override", o.tau_override,
                    "Replace the model's decision threshold");

  return app;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw InvalidArgument(std::string(flag) + " is required (flag, ISACL_" +
                          [&] {
                            std::string s(flag + 2);
                            for (auto& c : s) {
                              c = c == '-' ? '_' : static_cast<char>(std::toupper(
                                                       static_cast<unsigned char>(c)));
                            }
                            return s;
                          }() +
                          " or config file)");
  }
}

std::string env_name(const std::string& option) {
  std::string s = "ISACL_";
  for (char c : option) {
    s.push_back(c == '-' ? '_'
                         : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return s;
}

std::string json_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) {
      if (!s.empty()) s.push_back(',');
      s += json_scalar(x);
    }
    return s;
  }
  return v.dump();
}

bool truthy(const std::string& s) {
  return s == "1" || s == "true" || s == "yes" || s == "on";
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw DataError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config file " + path + " must hold an object");
  return j;
}

const json* config_value(const json& config, const std::string& sub,
                         const std::string& option) {
  std::string underscored = option;
  std::replace(underscored.begin(), underscored.end(), '-', '_');
  for (const json* scope :
       {config.contains(sub) && config[sub].is_object() ? &config[sub] : nullptr,
        &config}) {
    if (!scope) continue;
    for (const auto& key : {option, underscored}) {
      auto it = scope->find(key);
      if (it != scope->end() && !it->is_object()) return &*it;
    }
  }
  return nullptr;
}

// Arguments to append so that unset options pick up env and config values.
std::vector<std::string> fallback_args(CLI::App* sub, const json& config) {
  std::vector<std::string> extra;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    const bool is_flag = opt->get_type_size() == 0;
    std::optional<std::string> value;
    if (const char* env = std::getenv(env_name(name).c_str()); env && *env) {
      value = env;
    } else if (const json* v = config_value(config, sub->get_name(), name)) {
      value = v->is_boolean() ? (v->get<bool>() ? "true" : "false")
                              : json_scalar(*v);
    }
    if (!value) continue;
    if (is_flag) {
      if (truthy(*value)) extra.push_back("--" + name);
    } else {
      extra.push_back("--" + name + "=" + *value);
    }
  }
  return extra;
}

void write_text(const std::string& path, const std::string& text,
                std::ostream& out) {
  if (path == "-" || path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    write_file_bytes(path, text.back() == '\n' ? text : text + "\n");
  }
}

void write_labeled(const LabeledDataset& ds, const std::string& path) {
  const StateFile f = to_state_file(ds);
  write_state_file(f.header, f.records, path);
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<float> parse_vector(const std::string& text) {
  std::vector<float> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      float x = std::stof(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw 0;
      v.push_back(x);
    } catch (...) {
      throw InvalidArgument("--vector: not a number: '" + item + "'");
    }
  }
  if (v.empty()) throw InvalidArgument("--vector is empty");
  return v;
}

std::string provenance_line(const DatasetProvenance& p) {
  std::ostringstream s;
  s << "model_id=" << p.model_id << " layer=" << p.layer_index
    << " pooling=" << pooling_name(p.pooling)
    << " with_reference=" << (p.with_reference ? "yes" : "no");
  return s.str();
}

// ---------------------------------------------------------------- commands

int cmd_score(Options& o, std::ostream& out, std::ostream& err) {
  require(o.in, "--in");
  std::vector<Triplet> triplets;
  if (o.in == "-") {
    triplets = parse_triplets(std::cin);
  } else {
    triplets = read_triplets(o.in);
  }
  score_triplets(triplets, o.rouge_1);
  if (o.out == "-") {
    write_triplets(out, triplets);
  } else {
    write_triplets(std::filesystem::path(o.out), triplets);
  }
  err << "scored " << triplets.size() << " triplets\n";
  return kExitOk;
}

int cmd_label(Options& o, std::ostream&, std::ostream& err) {
  require(o.triplets, "--triplets");
  require(o.states, "--states");
  if (o.out == "-") o.out.clear();
  require(o.out, "--out");
  if (o.with_reference) require(o.refs, "--refs");
  if (o.train_fraction) {
    require(o.train_out, "--train-out");
    require(o.test_out, "--test-out");
  }

  const auto states = read_state_file(o.states);
  const auto triplets = read_triplets(o.triplets);
  std::optional<EmbeddingMap> refs;
  if (o.with_reference) refs = to_embedding_map(read_state_file(o.refs));

  const PartitionConfig pc{o.p, o.seed};
  auto assembled =
      assemble(states, triplets, pc, o.score_field, refs ? &*refs : nullptr);
  const auto& ds = assembled.dataset;
  const auto& s = assembled.summary;
  write_labeled(ds, o.out);

  json m = {{"labeled_file", o.out},
            {"division_p", o.p},
            {"seed", o.seed},
            {"score_field", o.score_field},
            {"records", states.records.size()},
            {"leak", s.leak},
            {"non_disclosure", s.non_disclosure},
            {"discarded", s.discarded},
            {"upper_threshold", s.upper_threshold},
            {"lower_threshold", s.lower_threshold},
            {"feature_dim", ds.feature_dim},
            {"with_reference", ds.provenance.with_reference},
            {"reference_dim", ds.provenance.reference_dim},
            {"model_id", ds.provenance.model_id},
            {"layer_index", ds.provenance.layer_index},
            {"pooling", std::string(pooling_name(ds.provenance.pooling))}};
  if (o.train_fraction) {
    auto [train_set, test_set] = split(ds, *o.train_fraction, o.split_seed);
    write_labeled(train_set, o.train_out);
    write_labeled(test_set, o.test_out);
    m["train_fraction"] = *o.train_fraction;
    m["split_seed"] = o.split_seed;
    m["train_file"] = o.train_out;
    m["test_file"] = o.test_out;
    m["train_rows"] = train_set.size();
    m["test_rows"] = test_set.size();
  }
  const std::string manifest =
      o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
  write_file_bytes(manifest, m.dump(2) + "\n");
  err << "labeled " << s.leak << " leak / " << s.non_disclosure
      << " non-disclosure, discarded " << s.discarded
      << " (P1 = " << s.upper_threshold << ", P2 = " << s.lower_threshold
      << ")\n";
  return kExitOk;
}

int cmd_build_db(Options& o, std::ostream&, std::ostream& err) {
  require(o.pairs, "--pairs");
  require(o.embeddings, "--embeddings");
  if (o.out == "-") o.out.clear();
  require(o.out, "--out");
  const auto pairs = read_pairs(o.pairs);
  const auto keys = to_embedding_map(read_state_file(o.embeddings));
  std::optional<EmbeddingMap> refs;
  if (!o.ref_embeddings.empty()) {
    refs = to_embedding_map(read_state_file(o.ref_embeddings));
  }

  std::vector<RefEntry> entries;
  entries.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto ki = keys.find(pair.id);
    if (ki == keys.end()) {
      throw DataError("pair '" + pair.id + "' has no record in " + o.embeddings);
    }
    RefEntry e{pair.id, pair.input, pair.reference, ki->second, {}};
    if (refs) {
      const auto ri = refs->find(pair.id);
      if (ri == refs->end()) {
        throw DataError("pair '" + pair.id + "' has no record in " +
                        o.ref_embeddings);
      }
      e.embedding = ri->second;
    }
    entries.push_back(std::move(e));
  }
  RefDbOptions opts;
  opts.k = o.k;
  opts.nprobe = o.nprobe;
  opts.seed = o.seed;
  opts.max_iters = o.max_iters;
  const auto db = ReferenceDatabase::build(std::move(entries), opts);
  db.save(o.out);
  err << "built reference database: " << db.size() << " entries, "
      << db.num_clusters() << " clusters, nprobe " << db.default_nprobe()
      << "\n";
  return kExitOk;
}

json match_json(const QueryResult& r) {
  return {{"id", r.entry->id},
          {"input", r.entry->input},
          {"reference", r.entry->reference},
          {"similarity", r.similarity},
          {"distance_computations", r.distance_computations}};
}

int cmd_query_db(Options& o, std::ostream& out, std::ostream&) {
  require(o.refdb, "--refdb");
  std::vector<float> query;
  if (!o.vector.empty()) {
    query = parse_vector(o.vector);
  } else if (!o.states.empty() && !o.id.empty()) {
    const auto f = read_state_file(o.states);
    const auto i = f.find(o.id);
    if (!i) throw DataError("no record '" + o.id + "' in " + o.states);
    query = f.records[*i].vector;
  } else {
    throw InvalidArgument("give --vector, or --states with --id");
  }
  const auto db = ReferenceDatabase::load(o.refdb);
  if (o.top == 1) {
    out << match_json(db.search(query, o.query_nprobe)).dump(2) << "\n";
  } else {
    json arr = json::array();
    for (const auto& r : db.search_top(query, o.top, o.query_nprobe)) {
      arr.push_back(match_json(r));
    }
    out << arr.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_train(Options& o, std::ostream&, std::ostream& err) {
  require(o.data, "--data");
  if (o.out == "-") o.out.clear();
  require(o.out, "--out");
  bool with_reference = false;
  std::uint32_t reference_dim = 0;
  if (!o.manifest.empty()) {
    const json m = read_json_file(o.manifest);
    with_reference = m.value("with_reference", false);
    reference_dim = m.value("reference_dim", 0u);
  }
  if (o.with_reference) with_reference = true;
  if (o.reference_dim) reference_dim = *o.reference_dim;
  if (with_reference && reference_dim == 0) {
    throw InvalidArgument(
        "reference-augmented training needs --reference-dim or --manifest");
  }
  const auto ds =
      from_state_file(read_state_file(o.data), with_reference, reference_dim);
  TrainLog log;
  const auto model = train(ds, o.train.config(), &log);
  save_model(model, o.out);
  if (!o.log.empty()) {
    write_file_bytes(o.log, json{{"epoch_loss", log.epoch_loss},
                                 {"steps", log.steps}}
                                    .dump(2) +
                                "\n");
  }
  err << "trained on " << ds.size() << " rows (" << provenance_line(ds.provenance)
      << "), final loss "
      << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << "\n";
  return kExitOk;
}

int cmd_predict(Options& o, std::ostream& out, std::ostream&) {
  require(o.model, "--model");
  require(o.states, "--states");
  const auto model = load_model(o.model);
  const auto states = read_state_file(o.states);
  std::optional<EmbeddingMap> refs;
  if (!o.refs.empty()) refs = to_embedding_map(read_state_file(o.refs));
  std::optional<ReferenceDatabase> db;
  std::optional<StateFile> queries;
  if (!o.refdb.empty()) {
    require(o.queries, "--queries");
    db = ReferenceDatabase::load(o.refdb);
    queries = read_state_file(o.queries);
  }
  const bool need_ref = model.provenance.with_reference;
  if (need_ref && !refs && !db) {
    throw InvalidArgument(
        "model is reference-augmented: give --refs or --refdb with --queries");
  }

  std::ostringstream lines;
  for (const auto& rec : states.records) {
    std::optional<std::span<const float>> ref;
    std::optional<std::string> retrieved;
    if (need_ref) {
      if (refs) {
        auto it = refs->find(rec.id);
        if (it == refs->end()) throw DataError("no reference for id '" + rec.id + "'");
        ref = std::span<const float>(it->second);
      } else {
        const auto qi = queries->find(rec.id);
        if (!qi) throw DataError("no query embedding for id '" + rec.id + "'");
        const auto hit = db->search(queries->records[*qi].vector, o.query_nprobe);
        retrieved = hit.entry->id;
        ref = std::span<const float>(hit.entry->embedding);
      }
    }
    const auto p = predict(model, rec.vector, ref);
    json j = {{"id", rec.id},
              {"logit", p.logit},
              {"probability", p.probability},
              {"decision", p.decision}};
    if (retrieved) j["retrieved_entry_id"] = *retrieved;
    lines << j.dump() << "\n";
  }
  if (o.out == "-") {
    out << lines.str();
  } else {
    write_file_bytes(o.out, lines.str());
  }
  return kExitOk;
}

int cmd_eval(Options& o, std::ostream& out, std::ostream&) {
  require(o.model, "--model");
  require(o.data, "--data");
  const auto model = load_model(o.model);
  const auto ds = from_state_file(read_state_file(o.data),
                                  model.provenance.with_reference,
                                  model.provenance.reference_dim);
  auto report = evaluate_model(model, ds);
  if (!o.manifest.empty()) {
    const json m = read_json_file(o.manifest);
    if (m.contains("division_p")) report.division_p = m["division_p"].get<double>();
  }
  std::optional<LatencyReport> lat;
  if (o.latency || !o.baseline_cmd.empty()) {
    lat = latency_bench(model, ds,
                        o.baseline_cmd.empty()
                            ? std::nullopt
                            : std::optional<std::string>(o.baseline_cmd));
  }
  std::string text;
  if (o.format == "text") {
    text = report_to_text(report);
    if (lat) text += "latency report\n" + latency_to_json(*lat) + "\n";
  } else {
    json j = json::parse(report_to_json(report, !o.no_timing));
    if (lat && !o.no_timing) j["latency"] = json::parse(latency_to_json(*lat));
    text = j.dump(2);
  }
  write_text(o.out, text, out);
  return kExitOk;
}

int cmd_sweep(Options& o, std::ostream& out, std::ostream& err) {
  require(o.axis, "--axis");
  require(o.triplets, "--triplets");
  if (o.values.empty()) throw InvalidArgument("--values is required");
  const SweepAxis axis = parse_sweep_axis(o.axis);
  const bool per_value_states =
      axis == SweepAxis::kLayer || axis == SweepAxis::kPooling;
  if (per_value_states) {
    require(o.states_template, "--states-template");
    if (o.states_template.find("{}") == std::string::npos) {
      throw InvalidArgument("--states-template must contain {}");
    }
  } else {
    require(o.states, "--states");
  }
  const bool needs_refs = o.with_reference || axis == SweepAxis::kRagOnOff;
  if (needs_refs) require(o.refs, "--refs");

  const auto triplets = read_triplets(o.triplets);
  std::optional<EmbeddingMap> refs;
  if (needs_refs) refs = to_embedding_map(read_state_file(o.refs));
  std::optional<CorpusInputs> shared;
  if (!per_value_states) {
    shared = CorpusInputs{read_state_file(o.states), triplets, refs};
  }
  auto provider = [&](std::string_view value) -> CorpusInputs {
    if (shared) return *shared;
    std::string path = o.states_template;
    path.replace(path.find("{}"), 2, value);
    if (!std::filesystem::exists(path)) {
      throw DataError("missing state file for " + o.axis + " '" +
                      std::string(value) + "': " + path);
    }
    return CorpusInputs{read_state_file(path), triplets, refs};
  };

  PipelineConfig base;
  base.partition = {o.p, o.seed};
  base.score_field = o.score_field;
  base.train_fraction = o.train_fraction.value_or(0.8);
  base.split_seed = o.split_seed;
  base.train = o.train.config();
  base.with_reference = o.with_reference;
  const auto rows = sweep(axis, o.values, base, provider);
  err << sweep_to_text(axis, rows);
  write_text(o.out, sweep_to_json(axis, rows, o.timing), out);
  return kExitOk;
}

GateServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(Options& o, std::ostream& out, std::ostream& err) {
  require(o.model, "--model");
  auto model = load_model(o.model);
  std::optional<ReferenceDatabase> db;
  if (!o.refdb.empty()) db = ReferenceDatabase::load(o.refdb);
  GateHandler handler(std::move(model), std::move(db), o.tau_override);
  GateServer server(handler, o.bind);
  server.start();

  struct sigaction sa {};
  sa.sa_handler = handle_stop_signal;
  sigemptyset(&sa.sa_mask);
  struct sigaction old_int {}, old_term {};
  g_server = &server;
  sigaction(SIGINT, &sa, &old_int);
  sigaction(SIGTERM, &sa, &old_term);

  out << "listening on " << o.bind.substr(0, o.bind.rfind(':')) << ":"
      << server.port() << std::endl;
  err << "model: " << provenance_line(handler.model().provenance)
      << ", tau " << handler.model().tau
      << (handler.refdb() ? ", refdb loaded" : "") << std::endl;
  server.run();

  sigaction(SIGINT, &old_int, nullptr);
  sigaction(SIGTERM, &old_term, nullptr);
  g_server = nullptr;
  err << "shut down" << std::endl;
  return kExitOk;
}

int dispatch(CLI::App& app, Options& o, std::ostream& out, std::ostream& err) {
  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "score") return cmd_score(o, out, err);
  if (name == "label") return cmd_label(o, out, err);
  if (name == "build-db") return cmd_build_db(o, out, err);
  if (name == "query-db") return cmd_query_db(o, out, err);
  if (name == "train") return cmd_train(o, out, err);
  if (name == "predict") return cmd_predict(o, out, err);
  if (name == "eval") return cmd_eval(o, out, err);
  if (name == "sweep") return cmd_sweep(o, out, err);
  if (name == "serve") return cmd_serve(o, out, err);
  throw InvalidArgument("unhandled subcommand " + name);
}

// CLI11 wants the arguments in reverse order.
void parse(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  app.parse(args);
}

}  // namespace

std::string suggest(const std::string& word,
                    const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    std::vector<std::size_t> prev(c.size() + 1), cur(c.size() + 1);
    for (std::size_t j = 0; j <= c.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= word.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= c.size(); ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (word[i - 1] == c[j - 1] ? 0 : 1)});
      }
      std::swap(prev, cur);
    }
    if (prev[c.size()] < best_d) {
      best_d = prev[c.size()];
      best = c;
    }
  }
  const std::size_t limit = std::max<std::size_t>(2, word.size() / 2);
  return best_d <= limit ? best : "";
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  // Catch typos before CLI11 reports them as stray positionals.
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--config") {
      ++i;
      continue;
    }
    if (a.empty() || a[0] == '-') continue;
    if (std::find(kSubcommands.begin(), kSubcommands.end(), a) ==
        kSubcommands.end()) {
      err << "isacl: unknown subcommand '" << a << "'";
      if (auto s = suggest(a, kSubcommands); !s.empty()) {
        err << "; did you mean '" << s << "'?";
      }
      err << "\nRun 'isacl --help' for the list of subcommands.\n";
      return kExitUsage;
    }
    break;
  }

  Options first;
  auto app = make_app(first);
  Options final_opts;
  std::unique_ptr<CLI::App> final_app;
  try {
    parse(*app, args);
    CLI::App* sub = app->get_subcommands().front();
    std::string config_path = first.config;
    if (config_path.empty()) {
      if (const char* env = std::getenv("ISACL_CONFIG")) config_path = env;
    }
    const json config = load_config(config_path);
    auto full = args;
    for (auto& a : fallback_args(sub, config)) full.push_back(std::move(a));
    final_app = make_app(final_opts);
    parse(*final_app, full);
  } catch (const CLI::ParseError& e) {
    const int code = (final_app ? *final_app : *app).exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "isacl: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "isacl: error: " << e.what() << "\n";
    return kExitData;
  }

  try {
    return dispatch(*final_app, final_opts, out, err);
  } catch (const InvalidArgument& e) {
    err << "isacl: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "isacl: error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "isacl: error: " << e.what() << "\n";
    return kExitData;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace isacl::cli
