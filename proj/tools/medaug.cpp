// Copyright 2026 The medaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// medaug command-line driver. Exit codes: 0 ok, 1 usage, 2 data, 3 provider.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "medaug/analyze.hpp"
#include "medaug/augment.hpp"
#include "medaug/common.hpp"
#include "medaug/config.hpp"
#include "medaug/corpus.hpp"
#include "medaug/io.hpp"
#include "medaug/judge.hpp"
#include "medaug/llm.hpp"
#include "medaug/manifest.hpp"
#include "medaug/metrics.hpp"
#include "medaug/retrieval.hpp"

namespace fs = std::filesystem;
using namespace medaug;

namespace {

// Flags shared by every subcommand; unset values fall back to the config.
struct CommonFlags {
  std::string config_path;
  std::optional<std::string> provider;
  std::optional<std::string> mock_script;
  std::optional<std::string> model;
  std::optional<std::string> cache_dir;
  std::optional<std::string> embedder;
  std::optional<std::string> embedder_url;
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::size_t> k;
  std::optional<int> slice_cap;
  std::optional<std::size_t> min_words;
  std::optional<double> translate_fraction;
  std::optional<std::string> output_dir;
  std::string record_path;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "Run config (JSON)");
  app->add_option("--provider", f.provider, "mock | stub | http");
  app->add_option("--mock", f.mock_script, "Mock script (jsonl)");
  app->add_option("--model", f.model, "Model tag");
  app->add_option("--cache-dir", f.cache_dir, "Response cache directory");
  app->add_option("--embedder", f.embedder, "stub | http");
  app->add_option("--embedder-url", f.embedder_url, "Embedding service base URL");
  app->add_option("--dim", f.dim, "Embedding dimension");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
  app->add_option("--k", f.k, "Retrieved items per query");
  app->add_option("--slice-cap", f.slice_cap, "Max slices per volume");
  app->add_option("--min-words", f.min_words, "Minimum caption words");
  app->add_option("--translate-fraction", f.translate_fraction, "Share of samples translated");
  app->add_option("--output-dir", f.output_dir, "Pipeline output directory");
  app->add_option("--record", f.record_path, "Run-record path");
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
  if (f.provider) c.provider = *f.provider;
  if (f.mock_script) c.mock_script = *f.mock_script;
  if (f.model) c.model = *f.model;
  if (f.cache_dir) c.cache_dir = *f.cache_dir;
  if (f.embedder) c.embedder = *f.embedder;
  if (f.embedder_url) c.embedder_url = *f.embedder_url;
  if (f.dim) c.embedding_dim = *f.dim;
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (f.k) c.k = *f.k;
  if (f.slice_cap) c.slice_cap = *f.slice_cap;
  if (f.min_words) c.min_words = *f.min_words;
  if (f.translate_fraction) c.translate_fraction = *f.translate_fraction;
  if (f.output_dir) c.output_dir = *f.output_dir;
  if (auto problems = validate(c); !problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw_usage(msg);
  }
  return c;
}

void require_inputs(const std::vector<std::string>& paths) {
  std::vector<std::string> missing;
  for (const auto& p : paths) {
    if (!p.empty() && !fs::exists(p)) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::string msg = "missing input file(s):";
    for (const auto& m : missing) msg += "\n  " + m;
    throw_usage(msg);
  }
}

class Run {
 public:
  Run(std::string command, RunConfig config, std::string record_path)
      : command_(std::move(command)), config_(std::move(config)),
        record_path_(std::move(record_path)) {}

  const RunConfig& config() const { return config_; }
  RunConfig& config() { return config_; }

  void input(const std::string& path) {
    if (!path.empty()) inputs_.push_back(path);
  }
  void default_record(const std::string& path) {
    if (record_path_.empty()) record_path_ = path;
  }
  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  void write_text(const std::string& path, const std::string& text) {
    medaug::write_text(path, text);
    outputs_.push_back(path);
    if (record_path_.empty()) record_path_ = path + ".run.json";
  }
  /// Records a file written by something other than write_text.
  void output(const std::string& path) {
    outputs_.push_back(path);
    if (record_path_.empty()) record_path_ = path + ".run.json";
  }
  void write_rows(const std::string& path, const std::vector<json>& rows) {
    write_text(path, to_jsonl(rows));
  }

  void attach_audit(const llm::Client& client, const std::string& primary_output) {
    std::vector<json> rows;
    for (const auto& e : client.audit()) rows.push_back(to_json(e));
    std::sort(rows.begin(), rows.end(),
              [](const json& a, const json& b) { return a.dump() < b.dump(); });
    write_rows(primary_output + ".audit.jsonl", rows);
  }

  void finish() {
    if (record_path_.empty()) return;
    json in = json::array();
    for (const auto& p : inputs_) {
      in.push_back({{"path", p}, {"sha256", sha256_hex(read_file_bytes(p))}});
    }
    json out = json::array();
    for (const auto& p : outputs_) {
      out.push_back({{"path", p}, {"sha256", sha256_hex(read_file_bytes(p))}});
    }
    const json record = {{"tool", "medaug"},
                         {"version", std::string(kVersion)},
                         {"command", command_},
                         {"params", params_},
                         {"config", to_json(config_)},
                         {"config_hash", config_hash(config_)},
                         {"inputs", in},
                         {"outputs", out}};
    medaug::write_text(record_path_, record.dump(2) + "\n");
  }

 private:
  std::string command_;
  RunConfig config_;
  std::string record_path_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json params_ = json::object();
};

struct ProviderSetup {
  std::shared_ptr<llm::Provider> provider;
  bool ordered = false;
};

ProviderSetup make_provider(Run& run) {
  const auto& c = run.config();
  if (c.provider == "mock") {
    if (c.mock_script.empty()) throw_usage("--provider mock requires --mock <script.jsonl>");
    require_inputs({c.mock_script});
    run.input(c.mock_script);
    auto mock = llm::MockProvider::from_file(c.mock_script);
    return {mock, mock->is_ordered()};
  }
  if (c.provider == "stub") return {llm::make_stub_provider(), false};
  return {llm::make_http_provider(llm::http_config_from_env()), false};
}

std::unique_ptr<llm::Client> make_client(Run& run) {
  auto setup = make_provider(run);
  auto& c = run.config();
  if (setup.ordered && c.workers != 1) {
    // FIFO scripts are only reproducible with one worker.
    c.workers = 1;
  }
  llm::ClientOptions o;
  o.max_attempts = c.max_attempts;
  o.requests_per_second = c.requests_per_second;
  if (!c.cache_dir.empty()) o.cache_dir = c.cache_dir;
  return std::make_unique<llm::Client>(setup.provider, o);
}

std::unique_ptr<retrieval::Embedder> make_embedder(const RunConfig& c) {
  if (c.embedder == "http") return std::make_unique<retrieval::HttpEmbedder>(c.embedder_url);
  return std::make_unique<retrieval::StubEmbedder>(c.embedding_dim);
}

augment::Options generation_options(const RunConfig& c) {
  augment::Options o;
  o.model = c.model;
  o.context_token_budget = c.context_token_budget;
  o.qa_min = c.qa_min;
  o.qa_max = c.qa_max;
  o.qa_words_per_extra = c.qa_words_per_extra;
  return o;
}

std::vector<augment::InstructionSample> load_samples(const std::string& path) {
  std::vector<augment::InstructionSample> out;
  for (const auto& j : read_jsonl(path)) out.push_back(augment::sample_from_json(j));
  return out;
}

std::vector<CaseRecord> load_cases(const std::string& path, RecordFormat format) {
  auto result = ingest(path, format);
  if (!result.rejects.empty()) {
    const auto& r = result.rejects.front();
    throw_data(fmt::format("{}:{}: {} ({} rejected row(s); run `medaug ingest` first)", path,
                           r.line, r.reason, result.rejects.size()));
  }
  return std::move(result.records);
}

std::set<std::string> load_id_list(const std::string& path) {
  std::set<std::string> ids;
  for (const auto& line : read_nonblank_lines(path)) {
    const std::string t = trim(line.text);
    if (t.front() == '{') {
      try {
        const auto j = json::parse(t);
        ids.insert(j.at(j.contains("source_case") ? "source_case" : "id").get<std::string>());
      } catch (const json::exception& e) {
        throw_data(fmt::format("{}:{}: {}", path, line.line, e.what()));
      }
    } else {
      ids.insert(t);
    }
  }
  return ids;
}

std::string id_of(const json& j) {
  for (const char* key : {"id", "item_id", "sample_id"}) {
    if (j.contains(key)) return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
  }
  throw_data("row has no id: " + j.dump());
}

std::string text_of(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  }
  throw_data("row has none of the expected text fields: " + j.dump());
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, format = "cases", out, rejects;
  bool filter = false, segment = false;
};

void cmd_ingest(const IngestArgs& a, Run& run) {
  require_inputs({a.input});
  run.input(a.input);
  auto result = ingest(a.input, parse_record_format(a.format));
  std::vector<CaseRecord> records = std::move(result.records);
  std::size_t dropped = 0;
  if (a.filter) {
    auto f = filter_short_captions(records, static_cast<int>(run.config().min_words));
    dropped = f.dropped.size();
    records = std::move(f.kept);
  }
  if (a.segment) {
    auto client = make_client(run);
    parallel_for(records.size(), run.config().effective_workers(), [&](std::size_t i) {
      if (records[i].human_annotated) {
        records[i] = segment_long_annotation(records[i], *client, run.config().model);
      }
    });
    run.attach_audit(*client, a.out);
  }
  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  run.write_rows(a.out, rows);
  if (!a.rejects.empty()) {
    std::vector<json> rej;
    for (const auto& r : result.rejects) rej.push_back(to_json(r));
    run.write_rows(a.rejects, rej);
  }
  run.param("format", a.format);
  run.param("filter", a.filter);
  run.param("segment", a.segment);
  std::cout << json{{"kept", records.size()},
                    {"rejected", result.rejects.size()},
                    {"dropped_short", dropped}}
                   .dump()
            << "\n";
}

struct SliceArgs {
  std::string input, out;
};

void cmd_sample_slices(const SliceArgs& a, Run& run) {
  require_inputs({a.input});
  run.input(a.input);
  auto records = load_cases(a.input, RecordFormat::kCases);
  std::size_t before = 0;
  std::size_t after = 0;
  std::vector<json> rows;
  for (auto& r : records) {
    before += r.images.size();
    r.images = select_images(r.images, run.config().slice_cap);
    after += r.images.size();
    rows.push_back(to_json(r));
  }
  run.write_rows(a.out, rows);
  std::cout << json{{"images_in", before}, {"images_out", after}}.dump() << "\n";
}

struct IndexArgs {
  std::string cases, guidelines, out, rejects;
};

void cmd_index(const IndexArgs& a, Run& run) {
  require_inputs({a.cases, a.guidelines});
  std::vector<retrieval::RetrievalDoc> docs;
  if (!a.guidelines.empty()) {
    run.input(a.guidelines);
    for (const auto& j : read_jsonl(a.guidelines)) docs.push_back(retrieval::doc_from_json(j));
  }
  if (!a.cases.empty()) {
    run.input(a.cases);
    for (auto& d : retrieval::case_docs(load_cases(a.cases, RecordFormat::kCases))) {
      docs.push_back(std::move(d));
    }
  }
  auto embedder = make_embedder(run.config());
  auto built = retrieval::build_index(docs, *embedder);
  built.index.save(a.out);
  run.output(a.out);
  run.write_text(a.out + ".docs.jsonl", [&] {
    std::vector<json> rows;
    for (const auto& d : built.index.docs()) {
      rows.push_back({{"doc_id", d.doc_id}, {"kind", retrieval::to_string(d.kind)}});
    }
    return to_jsonl(rows);
  }());
  if (!a.rejects.empty()) {
    std::vector<json> rej;
    for (const auto& r : built.rejects) rej.push_back({{"doc_id", r.doc_id}, {"reason", r.reason}});
    run.write_rows(a.rejects, rej);
  }
  run.param("embedder", embedder->tag());
  std::cout << json{{"indexed", built.index.size()},
                    {"rejected", built.rejects.size()},
                    {"dim", built.index.dim()}}
                   .dump()
            << "\n";
}

struct RetrieveArgs {
  std::string index, text, image, case_id, out;
  bool no_constraint = false;
};

void cmd_retrieve(const RetrieveArgs& a, Run& run) {
  require_inputs({a.index, a.image});
  if (a.text.empty() && a.image.empty()) throw_usage("retrieve needs --text and/or --image");
  run.input(a.index);
  run.input(a.image);
  const auto index = retrieval::Index::load(a.index);
  auto embedder = make_embedder(run.config());
  retrieval::Query q;
  if (!a.text.empty()) q.text = a.text;
  if (!a.image.empty()) q.image_uri = a.image;
  if (!a.case_id.empty()) q.case_id = a.case_id;
  retrieval::embed_query(q, *embedder);
  const auto hits = retrieval::retrieve_context(index, q, {run.config().k, !a.no_constraint});
  std::vector<json> rows;
  for (const auto& h : hits) rows.push_back(retrieval::to_json(h));
  run.param("text", a.text);
  run.param("require_guideline", !a.no_constraint);
  if (a.out.empty()) {
    std::cout << to_jsonl(rows);
  } else {
    run.write_rows(a.out, rows);
  }
}

struct AugmentArgs {
  std::string cases, index, out;
};

std::vector<augment::InstructionSample> run_augment(const std::vector<CaseRecord>& records,
                                                    const retrieval::Index& index,
                                                    llm::Client& client, Run& run) {
  const auto& c = run.config();
  if (index.dim() != c.embedding_dim && c.embedder == "stub") {
    throw_usage(fmt::format("index dimension {} differs from configured {}", index.dim(),
                            c.embedding_dim));
  }
  auto embedder = make_embedder(c);
  augment::PipelineOptions po;
  po.generation = generation_options(c);
  po.k = c.k;
  po.require_guideline = c.require_guideline;
  po.slice_cap = c.slice_cap;
  po.workers = c.effective_workers();
  auto samples = augment::augment_corpus(records, index, *embedder, client, po);
  if (c.translate_fraction > 0.0) {
    samples = augment::translate_subset(samples, c.translate_fraction, c.seed, client,
                                        po.generation);
  }
  return samples;
}

void cmd_augment(const AugmentArgs& a, Run& run) {
  require_inputs({a.cases, a.index});
  run.input(a.cases);
  run.input(a.index);
  const auto records = load_cases(a.cases, RecordFormat::kCases);
  const auto index = retrieval::Index::load(a.index);
  auto client = make_client(run);
  const auto samples = run_augment(records, index, *client, run);
  std::vector<json> rows;
  for (const auto& s : samples) rows.push_back(augment::to_json(s));
  run.write_rows(a.out, rows);
  run.attach_audit(*client, a.out);
  std::cout << json{{"cases", records.size()}, {"samples", samples.size()}}.dump() << "\n";
}

struct ClassifyArgs {
  std::string what, input, out;
};

void cmd_classify(const ClassifyArgs& a, Run& run) {
  require_inputs({a.input});
  run.input(a.input);
  auto client = make_client(run);
  const int workers = run.config().effective_workers();
  std::vector<json> rows;
  json summary;
  if (a.what == "modality") {
    const auto records = load_cases(a.input, RecordFormat::kCases);
    struct Item {
      std::string id;
      std::optional<std::string> uri, caption;
    };
    std::vector<Item> items;
    for (const auto& r : records) {
      for (const auto& im : r.images) {
        items.push_back({r.id + "/" + im.image_id, im.uri, im.caption});
      }
      if (r.images.empty()) items.push_back({r.id, std::nullopt, r.image_findings});
    }
    std::vector<analyze::ModalityClassification> out(items.size());
    parallel_for(items.size(), workers, [&](std::size_t i) {
      out[i] = analyze::classify_modality(items[i].uri, items[i].caption, *client,
                                          run.config().model);
    });
    std::vector<ModalityLabel> labels;
    for (std::size_t i = 0; i < items.size(); ++i) {
      json row = {{"item_id", items[i].id},
                  {"label", to_string(out[i].label)},
                  {"request_key", out[i].request_key}};
      if (out[i].audit_note) row["audit_note"] = *out[i].audit_note;
      rows.push_back(row);
      labels.push_back(out[i].label);
    }
    if (!labels.empty()) summary = analyze::to_json(analyze::distribution_report(labels));
  } else if (a.what == "questions") {
    const auto input = read_jsonl(a.input);
    std::vector<analyze::QuestionClassification> out(input.size());
    parallel_for(input.size(), workers, [&](std::size_t i) {
      out[i] = analyze::classify_question(text_of(input[i], {"question"}),
                                          text_of(input[i], {"answer", "gold"}), *client,
                                          run.config().model);
    });
    std::vector<analyze::QuestionClass> classes;
    for (std::size_t i = 0; i < input.size(); ++i) {
      rows.push_back({{"id", id_of(input[i])},
                      {"class", analyze::to_string(out[i].value)},
                      {"request_keys", out[i].request_keys}});
      classes.push_back(out[i].value);
    }
    if (!classes.empty()) {
      summary = {{"N", classes.size()},
                 {"knowledge_share",
                  fmt::format("{:.1f}", round_half_up(analyze::knowledge_share(classes), 1))}};
    }
  } else {
    throw_usage("classify target must be modality or questions");
  }
  run.param("target", a.what);
  run.write_rows(a.out, rows);
  run.attach_audit(*client, a.out);
  std::cout << summary.dump() << "\n";
}

struct StatsArgs {
  std::string labels, out;
};

void cmd_stats(const StatsArgs& a, Run& run) {
  require_inputs({a.labels});
  run.input(a.labels);
  std::vector<ModalityLabel> labels;
  for (const auto& j : read_jsonl(a.labels)) {
    std::string label;
    if (j.contains("label")) {
      label = j["label"].get<std::string>();
    } else if (j.contains("modality_label") && !j["modality_label"].is_null()) {
      label = j["modality_label"].get<std::string>();
    } else {
      throw_data("row has no label: " + j.dump());
    }
    labels.push_back(parse_modality(label));
  }
  const auto report = analyze::distribution_report(labels, run.config().seed);
  std::cout << analyze::format_table(report);
  if (!a.out.empty()) run.write_text(a.out, analyze::to_json(report).dump(2) + "\n");
}

struct AuditArgs {
  std::string labels, sheet, out;
  std::size_t n = 100;
};

void cmd_audit(const AuditArgs& a, Run& run) {
  if (!a.sheet.empty()) {
    require_inputs({a.sheet});
    run.input(a.sheet);
    std::vector<analyze::ReviewRow> rows;
    for (const auto& j : read_jsonl(a.sheet)) rows.push_back(analyze::review_row_from_json(j));
    const double acc = analyze::audit_accuracy(rows);
    std::cout << json{{"N", rows.size()}, {"accuracy", acc}}.dump() << "\n";
    return;
  }
  require_inputs({a.labels});
  if (a.labels.empty() || a.out.empty()) throw_usage("audit needs --labels and --out, or --sheet");
  run.input(a.labels);
  std::vector<analyze::LabeledItem> items;
  for (const auto& j : read_jsonl(a.labels)) {
    items.push_back({id_of(j), parse_modality(j.at("label").get<std::string>())});
  }
  std::vector<json> rows;
  for (const auto& r : analyze::audit_sample(items, a.n, run.config().seed)) {
    rows.push_back(analyze::to_json(r));
  }
  run.param("n", a.n);
  run.write_rows(a.out, rows);
}

struct ManifestArgs {
  std::string samples, pairs, stage, exclude, out;
  std::optional<std::size_t> max;
};

void cmd_manifest(const ManifestArgs& a, Run& run) {
  require_inputs({a.samples, a.pairs, a.exclude});
  std::vector<augment::InstructionSample> store;
  if (!a.samples.empty()) {
    run.input(a.samples);
    store = load_samples(a.samples);
  }
  if (!a.pairs.empty()) {
    run.input(a.pairs);
    for (auto& s : manifest::caption_pair_samples(load_cases(a.pairs, RecordFormat::kCaptionPairs))) {
      store.push_back(std::move(s));
    }
  }
  if (store.empty()) throw_usage("manifest needs --samples and/or --pairs");
  manifest::ManifestLimits limits;
  limits.max_samples = a.max;
  limits.min_caption_words = run.config().min_words;
  auto m = manifest::build_manifest(store, manifest::parse_stage(a.stage), run.config().seed,
                                    limits);
  if (!a.exclude.empty()) {
    run.input(a.exclude);
    m = manifest::exclude_benchmark_leakage(m, load_id_list(a.exclude));
  }
  run.param("stage", a.stage);
  if (a.max) run.param("max", *a.max);
  run.write_text(a.out, manifest::to_text(m));
  std::cout << manifest::header_json(m).dump() << "\n";
}

struct EvaluateArgs {
  std::string preds, gold, lexicon, out;
  int options = 5;
};

void cmd_evaluate(const EvaluateArgs& a, Run& run) {
  require_inputs({a.preds, a.gold, a.lexicon});
  run.input(a.preds);
  run.input(a.gold);
  const auto preds = read_jsonl(a.preds);
  const auto golds = read_jsonl(a.gold);
  std::map<std::string, json> gold_by_id;
  for (const auto& g : golds) {
    if (!gold_by_id.emplace(id_of(g), g).second) throw_data("duplicate gold id: " + id_of(g));
  }
  if (preds.size() != golds.size()) {
    throw_data(fmt::format("{} predictions vs {} gold rows", preds.size(), golds.size()));
  }
  std::vector<std::string> outputs, references;
  for (const auto& p : preds) {
    auto it = gold_by_id.find(id_of(p));
    if (it == gold_by_id.end()) throw_data("prediction without gold: " + id_of(p));
    outputs.push_back(text_of(p, {"output", "prediction", "pred", "answer"}));
    references.push_back(text_of(it->second, {"gold", "answer", "reference"}));
  }
  json report;
  if (a.lexicon.empty()) {
    report = metrics::to_json(metrics::accuracy(outputs, references, a.options));
  } else {
    run.input(a.lexicon);
    const auto lexicon = metrics::ConceptLexicon::from_jsonl(a.lexicon);
    report = metrics::to_json(metrics::umls_report(references, outputs, lexicon));
    report["lexicon_version"] = lexicon.version();
  }
  if (!a.out.empty()) run.write_text(a.out, report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
}

struct JudgeArgs {
  std::string input, out;
};

void cmd_judge(const JudgeArgs& a, Run& run) {
  require_inputs({a.input});
  run.input(a.input);
  std::vector<judge::JudgeItem> items;
  for (const auto& j : read_jsonl(a.input)) items.push_back(judge::judge_item_from_json(j));
  auto client = make_client(run);
  judge::JudgeOptions o;
  o.model = run.config().judge_model;
  o.temperature = run.config().judge_temperature;
  o.workers = run.config().effective_workers();
  const auto report = judge::judge_run(items, *client, o);
  std::vector<json> rows;
  for (const auto& r : report.items) rows.push_back(judge::to_json(r));
  rows.push_back(judge::aggregate_json(report));
  run.write_rows(a.out, rows);
  run.attach_audit(*client, a.out);
  std::cout << judge::aggregate_json(report).dump() << "\n";
}

struct PipelineArgs {
  std::string exclude;
};

// ingest -> index -> augment -> manifests, all under output_dir.
void cmd_pipeline(const PipelineArgs& a, Run& run) {
  const RunConfig& c = run.config();
  if (c.cases_path.empty() || c.guidelines_path.empty()) {
    throw_usage("pipeline needs cases_path and guidelines_path in the config");
  }
  require_inputs({c.cases_path, c.guidelines_path, a.exclude});
  run.input(c.cases_path);
  run.input(c.guidelines_path);
  const fs::path dir = c.output_dir;
  run.default_record((dir / "run.json").string());

  auto ingested = ingest(c.cases_path, RecordFormat::kCases);
  auto filtered = filter_short_captions(ingested.records, static_cast<int>(c.min_words));
  std::vector<json> rows;
  for (const auto& r : filtered.kept) rows.push_back(to_json(r));
  run.write_rows((dir / "cases.jsonl").string(), rows);
  rows.clear();
  for (const auto& r : ingested.rejects) rows.push_back(to_json(r));
  run.write_rows((dir / "rejects.jsonl").string(), rows);

  std::vector<retrieval::RetrievalDoc> docs;
  for (const auto& j : read_jsonl(c.guidelines_path)) docs.push_back(retrieval::doc_from_json(j));
  for (auto& d : retrieval::case_docs(filtered.kept)) docs.push_back(std::move(d));
  auto embedder = make_embedder(c);
  auto built = retrieval::build_index(docs, *embedder);
  const std::string index_path = (dir / "index.bin").string();
  built.index.save(index_path);
  run.output(index_path);
  run.write_text(index_path + ".docs.jsonl", [&] {
    std::vector<json> r;
    for (const auto& d : built.index.docs()) {
      r.push_back({{"doc_id", d.doc_id}, {"kind", retrieval::to_string(d.kind)}});
    }
    return to_jsonl(r);
  }());

  auto client = make_client(run);
  const auto samples = run_augment(filtered.kept, built.index, *client, run);
  rows.clear();
  for (const auto& s : samples) rows.push_back(augment::to_json(s));
  const std::string samples_path = (dir / "samples.jsonl").string();
  run.write_rows(samples_path, rows);
  run.attach_audit(*client, samples_path);

  const auto excluded = a.exclude.empty() ? std::set<std::string>{} : load_id_list(a.exclude);
  if (!a.exclude.empty()) run.input(a.exclude);
  json summary = {{"cases", filtered.kept.size()},
                  {"indexed", built.index.size()},
                  {"samples", samples.size()}};
  for (auto stage : {manifest::Stage::kPretrain, manifest::Stage::kInstruction,
                     manifest::Stage::kAnnealing}) {
    manifest::ManifestLimits limits;
    limits.min_caption_words = c.min_words;
    try {
      auto m = manifest::build_manifest(samples, stage, c.seed, limits);
      if (!excluded.empty()) m = manifest::exclude_benchmark_leakage(m, excluded);
      run.write_text((dir / fmt::format("manifest_{}.jsonl", manifest::to_string(stage))).string(),
                     manifest::to_text(m));
      summary[std::string(manifest::to_string(stage))] = m.entries.size();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kData) throw;
      summary[std::string(manifest::to_string(stage))] = 0;
    }
  }
  std::cout << summary.dump() << "\n";
}

struct MockScriptArgs {
  std::string out;
};

// Replays a response cache as a keyed mock script.
void cmd_mock_script(const MockScriptArgs& a, Run& run) {
  const auto& dir = run.config().cache_dir;
  if (dir.empty()) throw_usage("mock-script needs --cache-dir");
  require_inputs({dir});
  const auto rows = llm::script_from_cache_dir(dir);
  run.write_rows(a.out, rows);
  std::cout << json{{"entries", rows.size()}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medaug: retrieval-augmented medical instruction data and evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  CommonFlags flags;
  std::function<void(Run&)> action;
  std::string command;

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    add_common(s, flags);
    return s;
  };

  IngestArgs ingest_args;
  {
    auto* s = sub("ingest", "Validate records, optionally filter and segment them");
    s->add_option("--input", ingest_args.input)->required();
    s->add_option("--format", ingest_args.format, "cases | caption_pairs");
    s->add_option("--out", ingest_args.out)->required();
    s->add_option("--rejects", ingest_args.rejects, "Where to write rejected rows");
    s->add_flag("--filter", ingest_args.filter, "Drop records with only short captions");
    s->add_flag("--segment", ingest_args.segment, "Segment long human annotations");
    s->callback([&] { action = [&](Run& r) { cmd_ingest(ingest_args, r); }; });
  }
  SliceArgs slice_args;
  {
    auto* s = sub("sample-slices", "Cap every volume at --slice-cap slices");
    s->add_option("--input", slice_args.input)->required();
    s->add_option("--out", slice_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_sample_slices(slice_args, r); }; });
  }
  IndexArgs index_args;
  {
    auto* s = sub("index", "Embed guidelines and annotated cases into an index");
    s->add_option("--cases", index_args.cases);
    s->add_option("--guidelines", index_args.guidelines);
    s->add_option("--out", index_args.out)->required();
    s->add_option("--rejects", index_args.rejects);
    s->callback([&] { action = [&](Run& r) { cmd_index(index_args, r); }; });
  }
  RetrieveArgs retrieve_args;
  {
    auto* s = sub("retrieve", "Constrained top-k retrieval for one query");
    s->add_option("--index", retrieve_args.index)->required();
    s->add_option("--text", retrieve_args.text);
    s->add_option("--image", retrieve_args.image);
    s->add_option("--case-id", retrieve_args.case_id, "Exclude docs from this case");
    s->add_option("--out", retrieve_args.out);
    s->add_flag("--no-guideline-constraint", retrieve_args.no_constraint);
    s->callback([&] { action = [&](Run& r) { cmd_retrieve(retrieve_args, r); }; });
  }
  AugmentArgs augment_args;
  {
    auto* s = sub("augment", "Generate instruction samples");
    s->add_option("--cases", augment_args.cases)->required();
    s->add_option("--index", augment_args.index)->required();
    s->add_option("--out", augment_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_augment(augment_args, r); }; });
  }
  ClassifyArgs classify_args;
  {
    auto* s = sub("classify", "Classify image modality or question type");
    s->add_option("target", classify_args.what, "modality | questions")->required();
    s->add_option("--input", classify_args.input)->required();
    s->add_option("--out", classify_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_classify(classify_args, r); }; });
  }
  StatsArgs stats_args;
  {
    auto* s = sub("stats", "Modality distribution table");
    s->add_option("--labels", stats_args.labels)->required();
    s->add_option("--out", stats_args.out);
    s->callback([&] { action = [&](Run& r) { cmd_stats(stats_args, r); }; });
  }
  AuditArgs audit_args;
  {
    auto* s = sub("audit", "Draw a review sheet or score a filled one");
    s->add_option("--labels", audit_args.labels);
    s->add_option("--n", audit_args.n);
    s->add_option("--out", audit_args.out);
    s->add_option("--sheet", audit_args.sheet, "Filled review sheet to score");
    s->callback([&] { action = [&](Run& r) { cmd_audit(audit_args, r); }; });
  }
  ManifestArgs manifest_args;
  {
    auto* s = sub("manifest", "Build a training-stage manifest");
    s->add_option("--samples", manifest_args.samples);
    s->add_option("--pairs", manifest_args.pairs, "Caption pairs (pretrain)");
    s->add_option("--stage", manifest_args.stage, "pretrain | instruction | annealing")
        ->required();
    s->add_option("--max", manifest_args.max);
    s->add_option("--exclude", manifest_args.exclude, "Benchmark case ids");
    s->add_option("--out", manifest_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_manifest(manifest_args, r); }; });
  }
  EvaluateArgs evaluate_args;
  {
    auto* s = sub("evaluate", "Closed-QA accuracy, or UMLS P/R/F1 with --lexicon");
    s->add_option("--preds", evaluate_args.preds)->required();
    s->add_option("--gold", evaluate_args.gold)->required();
    s->add_option("--lexicon", evaluate_args.lexicon);
    s->add_option("--options", evaluate_args.options, "Number of answer options");
    s->add_option("--out", evaluate_args.out);
    s->callback([&] { action = [&](Run& r) { cmd_evaluate(evaluate_args, r); }; });
  }
  JudgeArgs judge_args;
  {
    auto* s = sub("judge", "Three-aspect judge scoring");
    s->add_option("--input", judge_args.input)->required();
    s->add_option("--out", judge_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_judge(judge_args, r); }; });
  }
  PipelineArgs pipeline_args;
  {
    auto* s = sub("pipeline", "ingest, index, augment and manifest in one run");
    s->add_option("--exclude", pipeline_args.exclude, "Benchmark case ids");
    s->callback([&] { action = [&](Run& r) { cmd_pipeline(pipeline_args, r); }; });
  }

  MockScriptArgs mock_args;
  {
    auto* s = sub("mock-script", "Convert a response cache into a keyed mock script");
    s->add_option("--out", mock_args.out)->required();
    s->callback([&] { action = [&](Run& r) { cmd_mock_script(mock_args, r); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }
  command = app.get_subcommands().front()->get_name();

  try {
    Run run(command, resolve_config(flags), flags.record_path);
    action(run);
    run.finish();
    return 0;
  } catch (const Error& e) {
    std::cerr << "medaug " << command << ": " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "medaug " << command << ": malformed data: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  } catch (const std::exception& e) {
    std::cerr << "medaug " << command << ": " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
}
