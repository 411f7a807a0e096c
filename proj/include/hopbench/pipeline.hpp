#pragma once

// End-to-end wiring: sources -> facts -> instances -> paraphrase -> dataset,
// and the audit that re-checks a finished dataset.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hopbench/assembler.hpp"
#include "hopbench/paraphrase.hpp"
#include "hopbench/synthetic.hpp"

namespace hopbench {

enum class PipelineErrc { Config, Generation, AuditFailure };

inline const char* to_string(PipelineErrc c) {
  switch (c) {
    case PipelineErrc::Config: return "ConfigError";
    case PipelineErrc::Generation: return "GenerationError";
    case PipelineErrc::AuditFailure: return "AuditFailure";
  }
  return "PipelineError";
}

using PipelineError = CodedError<PipelineErrc>;

struct ClientConfig {
  std::string kind;  // "stub:<name>", "mock:<name>" or "http"
  std::string url;
  std::string model;
  std::string token_env;  // name of the variable holding the bearer token
  std::string token;      // "${VAR}" reference; literal secrets are refused

  bool operator==(const ClientConfig&) const = default;
};

struct RunConfig {
  // Either all three paths or synthetic options.
  std::string table_path;
  std::string schema_path;
  std::string text_dir;
  std::optional<SyntheticOptions> synthetic;

  std::string output = "out";
  std::uint64_t seed = 1;
  LevelCounts counts{10, 10, 10};
  BalanceOptions balance;
  SeparationConstraints separation;
  double png_dpi = 0;  // 0 writes SVG only
  bool strict_facts = false;
  double jitter = 0;
  std::size_t sampler_attempts = 1000;
  std::size_t max_attempts = 60;  // per instance
  CumulativeMode cumulative = CumulativeMode::RunningPrefix;
  std::size_t max_valid = 24;
  bool paraphrase = true;
  double review_rate = 0.1;
  std::size_t concurrency = 1;
  ClientConfig fact_client{"stub:extractive", "", "", "", ""};
  ClientConfig paraphrase_client{"stub:rules", "", "", "", ""};
  ClientConfig filter_client{"stub:polarity-guard", "", "", "", ""};
};

inline json to_json(const ClientConfig& c) {
  return {{"kind", c.kind}, {"url", c.url}, {"model", c.model}, {"token_env", c.token_env}, {"token", c.token}};
}

inline ClientConfig client_config_from_json(const json& j, const ClientConfig& fallback) {
  ClientConfig c = fallback;
  c.kind = j.value("kind", c.kind);
  c.url = j.value("url", c.url);
  c.model = j.value("model", c.model);
  c.token_env = j.value("token_env", c.token_env);
  c.token = j.value("token", c.token);
  return c;
}

inline json to_json(const SyntheticOptions& s) {
  return {{"seed", s.seed},   {"entities", s.entities},         {"columns", s.columns},
          {"first_year", s.first_year}, {"years", s.years}, {"missing_rate", s.missing_rate},
          {"min_paragraphs", s.min_paragraphs}, {"max_paragraphs", s.max_paragraphs}};
}

inline SyntheticOptions synthetic_from_json(const json& j) {
  SyntheticOptions s;
  s.seed = j.value("seed", s.seed);
  s.entities = j.value("entities", s.entities);
  s.columns = j.value("columns", s.columns);
  s.first_year = j.value("first_year", s.first_year);
  s.years = j.value("years", s.years);
  s.missing_rate = j.value("missing_rate", s.missing_rate);
  s.min_paragraphs = j.value("min_paragraphs", s.min_paragraphs);
  s.max_paragraphs = j.value("max_paragraphs", s.max_paragraphs);
  return s;
}

inline json to_json(const RunConfig& c) {
  json sources = c.synthetic ? json{{"synthetic", to_json(*c.synthetic)}}
                             : json{{"table", c.table_path}, {"schema", c.schema_path}, {"text", c.text_dir}};
  return {{"sources", sources},
          {"output", c.output},
          {"seed", c.seed},
          {"counts", {{"easy", c.counts.easy}, {"medium", c.counts.medium}, {"hard", c.counts.hard}}},
          {"balance", {{"frequency_weighted_charts", c.balance.frequency_weighted_charts}}},
          {"chart", {{"delta_rank", c.separation.delta_rank}, {"delta_trend", c.separation.delta_trend},
                     {"png_dpi", c.png_dpi}}},
          {"facts", {{"strict", c.strict_facts}}},
          {"sampler", {{"jitter", c.jitter}, {"attempt_budget", c.sampler_attempts}}},
          {"generation", {{"max_attempts", c.max_attempts}, {"cumulative", to_string(c.cumulative)},
                          {"max_valid", c.max_valid}}},
          {"paraphrase", {{"enabled", c.paraphrase}}},
          {"review", {{"rate", c.review_rate}}},
          {"concurrency", c.concurrency},
          {"clients", {{"facts", to_json(c.fact_client)}, {"paraphraser", to_json(c.paraphrase_client)},
                       {"filter", to_json(c.filter_client)}}}};
}

// Accepts a run config or a manifest (whose "config" member is used).
// Missing members keep their defaults.
inline RunConfig run_config_from_json(const json& in) {
  const json& j = in.contains("config") && in.value("schema", "") == kManifestSchema ? in.at("config") : in;
  RunConfig c;
  try {
    if (j.contains("sources")) {
      const auto& s = j.at("sources");
      if (s.contains("synthetic")) {
        c.synthetic = synthetic_from_json(s.at("synthetic"));
      } else {
        c.table_path = s.value("table", "");
        c.schema_path = s.value("schema", "");
        c.text_dir = s.value("text", "");
      }
    }
    c.output = j.value("output", c.output);
    c.seed = j.value("seed", c.seed);
    if (j.contains("counts")) {
      const auto& n = j.at("counts");
      c.counts = {n.value("easy", c.counts.easy), n.value("medium", c.counts.medium), n.value("hard", c.counts.hard)};
    }
    if (j.contains("balance")) {
      c.balance.frequency_weighted_charts = j.at("balance").value("frequency_weighted_charts", false);
    }
    if (j.contains("chart")) {
      c.separation.delta_rank = j.at("chart").value("delta_rank", c.separation.delta_rank);
      c.separation.delta_trend = j.at("chart").value("delta_trend", c.separation.delta_trend);
      c.png_dpi = j.at("chart").value("png_dpi", c.png_dpi);
    }
    if (j.contains("facts")) c.strict_facts = j.at("facts").value("strict", c.strict_facts);
    if (j.contains("sampler")) {
      c.jitter = j.at("sampler").value("jitter", c.jitter);
      c.sampler_attempts = j.at("sampler").value("attempt_budget", c.sampler_attempts);
    }
    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      c.max_attempts = g.value("max_attempts", c.max_attempts);
      c.cumulative = parse_enum<CumulativeMode>(g.value("cumulative", std::string(to_string(c.cumulative))));
      c.max_valid = g.value("max_valid", c.max_valid);
    }
    if (j.contains("paraphrase")) c.paraphrase = j.at("paraphrase").value("enabled", c.paraphrase);
    if (j.contains("review")) c.review_rate = j.at("review").value("rate", c.review_rate);
    c.concurrency = j.value("concurrency", c.concurrency);
    if (j.contains("clients")) {
      const auto& cl = j.at("clients");
      if (cl.contains("facts")) c.fact_client = client_config_from_json(cl.at("facts"), c.fact_client);
      if (cl.contains("paraphraser")) {
        c.paraphrase_client = client_config_from_json(cl.at("paraphraser"), c.paraphrase_client);
      }
      if (cl.contains("filter")) c.filter_client = client_config_from_json(cl.at("filter"), c.filter_client);
    }
  } catch (const json::exception& e) {
    throw PipelineError(PipelineErrc::Config, e.what());
  } catch (const SpecError& e) {
    throw PipelineError(PipelineErrc::Config, e.what());
  }
  if (!c.synthetic && (c.table_path.empty() || c.schema_path.empty() || c.text_dir.empty())) {
    throw PipelineError(PipelineErrc::Config, "sources need table, schema and text, or synthetic options");
  }
  if (c.review_rate < 0 || c.review_rate > 1) throw PipelineError(PipelineErrc::Config, "review rate outside [0,1]");
  if (c.max_attempts == 0) throw PipelineError(PipelineErrc::Config, "max_attempts must be positive");
  return c;
}

// ---------------------------------------------------------------------------
// Sources

struct LoadedSources {
  TabularSource tabular;
  std::map<std::string, std::vector<TextChunk>> chunks;
};

inline LoadedSources load_sources(const RunConfig& c) {
  LoadedSources out;
  if (c.synthetic) {
    const auto src = synthesize(*c.synthetic);
    out.tabular = parse_tabular(src.rows, src.schema);
    out.chunks = chunk_documents(src.documents);
    return out;
  }
  std::ifstream table(c.table_path, std::ios::binary), schema(c.schema_path, std::ios::binary);
  if (!table) throw AssemblerError(AssemblerErrc::IOFailure, "cannot read " + c.table_path);
  if (!schema) throw AssemblerError(AssemblerErrc::IOFailure, "cannot read " + c.schema_path);
  const auto rows = read_table_rows(table);
  const auto cols = read_schema(schema);
  out.tabular = parse_tabular(rows, cols);
  if (!std::filesystem::is_directory(c.text_dir)) {
    throw AssemblerError(AssemblerErrc::IOFailure, "missing text directory " + c.text_dir);
  }
  out.chunks = chunk_documents(read_text_dir(c.text_dir));
  return out;
}

struct IngestResult {
  SourceBundle bundle;
  std::vector<DroppedEntity> dropped_entities;
  std::vector<DroppedSentence> dropped_sentences;
};

inline std::map<std::string, std::string> column_units(const TabularSource& t) {
  std::map<std::string, std::string> out;
  for (const auto& c : t.columns) out[c.name] = c.unit;
  return out;
}

inline IngestResult ingest(const LoadedSources& src, TextModelClient& fact_client, const RunConfig& c) {
  auto aligned = align(src.tabular, src.chunks);
  IngestResult r;
  r.bundle = std::move(aligned.bundle);
  r.dropped_entities = std::move(aligned.dropped);
  std::map<std::string, std::string> names;
  for (const auto& e : r.bundle.tabular.entities) names[e.entity_id] = e.display_name;
  std::vector<TextChunk> all;
  for (const auto& [id, chunks] : r.bundle.text) all.insert(all.end(), chunks.begin(), chunks.end());
  FactExtractionOptions fo;
  fo.strict = c.strict_facts;
  const auto facts = extract_facts(all, names, fact_client, fo, &r.dropped_sentences, c.concurrency);
  for (const auto& f : facts) r.bundle.facts[f.owner_entity].push_back(f);
  return r;
}

// ---------------------------------------------------------------------------
// Generation

struct GenerationStats {
  std::size_t attempts = 0;
  std::map<std::string, std::size_t> failures;  // error class -> count
};

inline json to_json(const GenerationStats& s) { return {{"attempts", s.attempts}, {"failures", s.failures}}; }

inline std::string instance_id_for(Difficulty d, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", to_string(d)[0], index + 1);
  return buf;
}

inline std::vector<int> rank_years_of(const StatementSpec& spec, const InstanceSkeleton& s) {
  std::vector<int> out;
  if (!spec.rk) return out;
  if (spec.rk->year) {
    out.push_back(*spec.rk->year);
  } else if (is_conditional(spec.kind)) {
    for (auto y : condition_years(spec, s)) out.push_back(s.years[y]);
  }
  return out;
}

// One instance for a plan cell. Throws on failure; the caller retries with
// the next attempt seed.
inline Instance generate_instance(const SourceBundle& bundle, const std::map<std::string, std::string>& units, const PlanCell& cell,
                                  std::uint64_t seed, const RunConfig& c, const std::set<std::string>& taken) {
  SamplerOptions so;
  so.attempt_budget = c.sampler_attempts;
  so.separation = c.separation;
  so.jitter = c.jitter;
  const auto s = sample_skeleton(bundle, derive_seed(seed, "skeleton"), so);

  Rng rng(derive_seed(seed, "compose"));
  FactTable facts;
  std::vector<TextChunk> chunks;
  std::vector<std::vector<std::string>> usable(s.entities.size());
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    const auto& id = s.entities[e];
    const auto fit = bundle.facts.find(id);
    std::vector<const TextChunk*> options;
    for (const auto& ch : bundle.text.at(id)) {
      if (fit == bundle.facts.end()) break;
      for (const auto& f : fit->second) {
        if (f.source_chunk == ch.chunk_id && f.specificity == Specificity::EntitySpecific) {
          options.push_back(&ch);
          break;
        }
      }
    }
    if (options.empty()) throw ComposerError(ComposerErrc::NoFactsExtracted, "no usable chunk for " + id);
    const auto* ch = options[rng.uniform(options.size())];
    chunks.push_back(*ch);
    for (const auto& f : fit->second) {
      if (f.source_chunk != ch->chunk_id) continue;
      facts.emplace(f.fact_id, f);
      if (f.specificity == Specificity::EntitySpecific) usable[e].push_back(f.fact_id);
    }
  }

  GenContext g{s, facts, usable, c.separation, c.cumulative, cell.chart_type == ChartType::Pie, c.max_valid};
  std::array<std::size_t, 3> subjects = {0, 1, 2};
  rng.shuffle(std::span<std::size_t>(subjects));
  std::array<SlotCandidates, 3> slots;
  for (std::size_t k = 0; k < 3; ++k) {
    SurfaceStatement truth;
    try {
      truth = instantiate(cell.kinds[k], g, rng, s.entities[subjects[k]]);
    } catch (const ComposerError& e) {
      if (e.code() != ComposerErrc::NoValidBinding) throw;
      truth = instantiate(cell.kinds[k], g, rng);
    }
    try {
      slots[k].distractor = make_distractor(truth, g, rng);
    } catch (const ComposerError& e) {
      if (e.code() != ComposerErrc::NoFalsifyingSwap) throw;
    }
    slots[k].truth = std::move(truth);
  }
  auto inst = assemble(s, facts, chunks, cell.difficulty, slots, cell.answer_set, cell.modality_order,
                       derive_seed(seed, "assemble"), "");
  std::vector<StatementSpec> specs;
  std::vector<int> rank_years;
  std::vector<std::pair<int, int>> trends;
  for (const auto& st : inst.statements) {
    if (taken.count(st.text)) throw AssemblerError(AssemblerErrc::UnsatisfiableTarget, "duplicate statement text");
    specs.push_back(st.spec);
    for (int y : rank_years_of(st.spec, s)) rank_years.push_back(y);
    if (st.spec.tr) trends.emplace_back(st.spec.tr->from, st.spec.tr->to);
  }
  if (inst.statements[0].text == inst.statements[1].text || inst.statements[1].text == inst.statements[2].text ||
      inst.statements[0].text == inst.statements[2].text) {
    throw AssemblerError(AssemblerErrc::UnsatisfiableTarget, "duplicate statement text");
  }
  const auto uit = units.find(s.chart_column);
  inst.unit = uit == units.end() ? "" : uit->second;
  inst.chart = build_spec(s, cell.chart_type, derive_seed(seed, "style"), specs, inst.unit);
  inst.chart.style.tag = cell.style;
  if (!check_separation(inst.chart, c.separation, rank_years, trends)) {
    throw ChartError(ChartErrc::InadmissibleChartType, "chart fails separation");
  }
  return inst;
}

template <typename E>
std::string error_class(const CodedError<E>& e) {
  return to_string(e.code());
}

struct GenerationResult {
  std::vector<Instance> instances;
  GenerationStats stats;
};

// Instances in plan order (Easy, Medium, Hard). Instance i of a level draws
// every random choice from derive_seed(seed, "instance/<level>", attempt << 32 | i).
inline GenerationResult generate_instances(const SourceBundle& bundle, const std::map<std::string, std::string>& units, const RunConfig& c,
                                           const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  const auto plan = balance_plan(c.counts, c.seed, c.balance);
  GenerationResult r;
  std::set<std::string> taken;
  std::size_t done = 0;
  for (const auto& cell : plan) {
    const std::string stream = "instance/" + std::string(to_string(cell.difficulty));
    bool ok = false;
    std::string last;
    for (std::size_t attempt = 0; attempt < c.max_attempts && !ok; ++attempt) {
      ++r.stats.attempts;
      const auto seed = derive_seed(c.seed, stream, (static_cast<std::uint64_t>(attempt) << 32) | cell.index);
      try {
        auto inst = generate_instance(bundle, units, cell, seed, c, taken);
        inst.instance_id = instance_id_for(cell.difficulty, cell.index);
        inst.chart_path = std::string(kChartDir) + "/" + inst.instance_id + ".svg";
        for (const auto& st : inst.statements) taken.insert(st.text);
        r.instances.push_back(std::move(inst));
        ok = true;
      } catch (const ComposerError& e) {
        last = error_class(e);
      } catch (const AssemblerError& e) {
        last = error_class(e);
      } catch (const ChartError& e) {
        last = error_class(e);
      } catch (const SamplerError& e) {
        last = error_class(e);
      } catch (const OracleError& e) {
        last = error_class(e);
      }
      if (!ok) ++r.stats.failures[last];
    }
    if (!ok) {
      throw PipelineError(PipelineErrc::Generation, instance_id_for(cell.difficulty, cell.index) + ": no instance in " +
                                                        std::to_string(c.max_attempts) + " attempts (last: " + last + ")");
    }
    if (progress) progress(++done, plan.size());
  }
  return r;
}

struct RunClients {
  TextModelClient& facts;
  TextModelClient& paraphraser;
  TextModelClient& filter;
};

struct RunSummary {
  std::size_t instances = 0;
  GenerationStats stats;
  CorpusDeviation deviation;
  std::size_t review_items = 0;
  std::size_t dropped_entities = 0;
};

// Every stored label must match a fresh oracle evaluation.
inline void check_labels(const std::vector<Instance>& instances) {
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < 3; ++i) {
      const bool label = (inst.answer_set >> i) & 1u;
      if (eval(inst.statements[i].spec, inst.skeleton, inst.facts) != label) {
        throw ComposerError(ComposerErrc::LabelMismatch, statement_id(inst.instance_id, i));
      }
    }
  }
}

// Generates, paraphrases and writes a dataset directory: dataset.jsonl,
// manifest.json, charts/, paraphrase.jsonl and review.tsv.
inline RunSummary run_generation(const RunConfig& c, RunClients clients,
                                 const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  const auto src = load_sources(c);
  const auto in = ingest(src, clients.facts, c);
  auto gen = generate_instances(in.bundle, column_units(in.bundle.tabular), c, progress);
  RunSummary sum;
  sum.instances = gen.instances.size();
  sum.stats = gen.stats;
  sum.dropped_entities = in.dropped_entities.size();
  std::vector<ParaphraseRecord> records;
  if (c.paraphrase) {
    ParaphraseOptions po;
    po.concurrency = c.concurrency;
    records = paraphrase_dataset(gen.instances, clients.paraphraser, clients.filter, po);
    sum.deviation = corpus_deviation(records);
  }
  check_labels(gen.instances);
  const std::filesystem::path dir = c.output;
  const auto selection = review_selection(gen.instances, c.review_rate, derive_seed(c.seed, "review"), records);
  const auto items = review_items(gen.instances, selection);
  sum.review_items = items.size();
  write_file(dir / "review.tsv", export_review(items));
  std::string para;
  for (const auto& r : records) para += to_json(r).dump() + "\n";
  write_file(dir / "paraphrase.jsonl", para);

  json dropped = json::array();
  for (const auto& d : in.dropped_entities) dropped.push_back({{"entity_id", d.entity_id}, {"reason", to_string(d.reason)}});
  json manifest = {{"config", to_json(c)},
                   {"seeds", {{"master", c.seed}}},
                   {"sources", {{"entities", in.bundle.tabular.entities.size()},
                                {"columns", in.bundle.tabular.columns.size()},
                                {"dropped_entities", dropped},
                                {"dropped_sentences", in.dropped_sentences.size()}}},
                   {"clients", {{"facts", clients.facts.endpoint_id()},
                                {"paraphraser", c.paraphrase ? clients.paraphraser.endpoint_id() : ""},
                                {"filter", c.paraphrase ? clients.filter.endpoint_id() : ""}}},
                   {"generation", to_json(gen.stats)},
                   {"paraphrase", to_json(sum.deviation)},
                   {"review", {{"exported", items.size()}, {"file", "review.tsv"}}}};
  serialize_dataset(dir, gen.instances, std::move(manifest));
  return sum;
}

// ---------------------------------------------------------------------------
// Audit

struct Violation {
  std::string instance_id;
  std::optional<std::size_t> statement;  // 1-based
  std::string check;
  std::string message;
};

inline json to_json(const Violation& v) {
  return {{"instance_id", v.instance_id}, {"statement", v.statement ? json(*v.statement) : json(nullptr)},
          {"check", v.check}, {"message", v.message}};
}

struct AuditReport {
  std::vector<Violation> violations;
  std::size_t instances = 0;
  std::size_t statements = 0;
  CorpusDeviation deviation;
  BalanceReport balance;

  bool ok() const { return violations.empty(); }
};

inline json to_json(const AuditReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back(to_json(x));
  return {{"instances", r.instances}, {"statements", r.statements}, {"violations", v},
          {"paraphrase", to_json(r.deviation)}, {"balance", to_json(r.balance)}};
}

// Re-runs the oracle on every statement, checks stored fields against the
// generation data, recounts balance against the manifest, re-decodes every
// chart asset and recomputes paraphrase deviation.
inline AuditReport audit_dataset(const std::filesystem::path& dir) {
  AuditReport rep;
  const auto manifest = read_manifest(dir);
  const auto lines = read_file(dir / kDatasetFile);
  auto add = [&](const std::string& id, std::optional<std::size_t> st, const std::string& check, const std::string& msg) {
    rep.violations.push_back({id, st, check, msg});
  };
  if (manifest.value("dataset_fnv1a64", std::uint64_t{0}) != fnv1a64(lines)) {
    add("", std::nullopt, "manifest-hash", "dataset.jsonl does not match the manifest hash");
  }
  std::vector<Instance> instances;
  std::istringstream in(lines);
  std::string line;
  std::size_t n = 0;
  std::set<std::string> texts;
  std::vector<ParaphraseRecord> para;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    Instance inst;
    try {
      j = json::parse(line);
      inst = instance_from_json(j);
    } catch (const std::exception& e) {
      add("line " + std::to_string(n), std::nullopt, "record", e.what());
      continue;
    }
    const auto& id = inst.instance_id;
    if (j.at("table") != table_json(inst.table_view())) add(id, std::nullopt, "table", "table view differs from data");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& st = inst.statements[i];
      ++rep.statements;
      const bool label = (inst.answer_set >> i) & 1u;
      std::string problem;
      try {
        const bool truth = eval(st.spec, inst.skeleton, inst.facts);
        if (truth != label) problem = "oracle says " + std::string(truth ? "true" : "false") + ", answer set says " +
                                      (label ? "true" : "false");
        else if (st.spec.truth != truth) problem = "stored truth disagrees with the oracle";
        if (problem.empty() && difficulty_of(st.spec.kind) != inst.difficulty) problem = "kind outside level";
      } catch (const std::exception& e) {
        problem = std::string("oracle error: ") + e.what();
      }
      if (!problem.empty()) add(id, i + 1, "label", problem);
      if (!texts.insert(st.text).second) add(id, i + 1, "unique-text", "statement text repeats");
      try {
        const auto raw = raw_text_of(inst, i);
        if (st.text != raw) {
          if (auto v = invariant_violation(raw, st.text, protected_terms(inst.skeleton))) {
            add(id, i + 1, "paraphrase-invariant", *v);
          }
        }
        if (st.paraphrase_stage != ParaphraseStage::Raw) {
          ParaphraseRecord r;
          r.statement_id = statement_id(id, i);
          r.raw_text = raw;
          r.syntactic_text = st.text;
          const auto d = compute_wpd_ld(raw, st.text);
          r.wpd = d.wpd;
          r.ld = d.ld;
          r.edit_distance = d.edit_distance;
          para.push_back(r);
        }
      } catch (const std::exception& e) {
        add(id, i + 1, "text", e.what());
      }
    }
    const auto type = inst.chart.type();
    if (type == ChartType::Pie) {
      bool rk = false;
      for (const auto& st : inst.statements) rk = rk || st.spec.kind == Kind::RK;
      if (inst.difficulty != Difficulty::Easy || !rk) add(id, std::nullopt, "pie", "pie chart outside Easy ranking");
    }
    try {
      const auto data = decode_chart_data(read_file(dir / inst.chart_path));
      if (data != inst.chart.data) add(id, std::nullopt, "chart-roundtrip", "chart metadata differs from the record");
      for (const auto& series : data.series) {
        const auto e = inst.skeleton.entity_index(series.entity_id);
        if (!e) {
          add(id, std::nullopt, "chart-roundtrip", "unknown series " + series.entity_id);
          continue;
        }
        for (std::size_t k = 0; k < series.years.size(); ++k) {
          const auto y = inst.skeleton.year_index(series.years[k]);
          const auto& cell = y ? inst.skeleton.cell(inst.skeleton.chart_column, *e, *y) : Cell{};
          if (!cell || !cell->same_repr(series.values[k])) {
            add(id, std::nullopt, "chart-roundtrip", "chart value differs from source at " + series.entity_id);
            break;
          }
        }
      }
    } catch (const std::exception& e) {
      add(id, std::nullopt, "chart-roundtrip", e.what());
    }
    instances.push_back(std::move(inst));
  }
  rep.instances = instances.size();
  rep.balance = recount(instances);
  try {
    if (balance_report_from_json(manifest.at("balance")) != rep.balance) {
      add("", std::nullopt, "balance", "balance recount differs from the manifest");
    }
  } catch (const std::exception& e) {
    add("", std::nullopt, "balance", std::string("manifest balance unreadable: ") + e.what());
  }
  for (auto& r : para) r.filter_verdict = FilterVerdict::Accepted;
  rep.deviation = corpus_deviation(para);
  rep.deviation.records = rep.statements;
  return rep;
}

}  // namespace hopbench
