#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hopbench/chart.hpp"
#include "hopbench/composer.hpp"
#include "hopbench/oracle.hpp"

namespace hopbench {

enum class AssemblerErrc { UnsatisfiableTarget, IOFailure, BadRecord };

inline const char* to_string(AssemblerErrc c) {
  switch (c) {
    case AssemblerErrc::UnsatisfiableTarget: return "UnsatisfiableTarget";
    case AssemblerErrc::IOFailure: return "IOFailure";
    case AssemblerErrc::BadRecord: return "BadRecord";
  }
  return "AssemblerError";
}

using AssemblerError = CodedError<AssemblerErrc>;

inline constexpr const char* kInstanceSchema = "hopbench-instance/1";
inline constexpr const char* kManifestSchema = "hopbench-manifest/1";

// Bit i set means statement i + 1 is true.
using AnswerSet = std::uint8_t;

inline std::string answer_label(AnswerSet a) {
  if (a == 0) return "none";
  std::string out;
  for (int i = 0; i < 3; ++i) {
    if (a & (1u << i)) out += (out.empty() ? "" : ",") + std::to_string(i + 1);
  }
  return out;
}

inline AnswerSet parse_answer_label(std::string_view s) {
  if (s == "none") return 0;
  AnswerSet a = 0;
  for (char c : s) {
    if (c >= '1' && c <= '3') a |= static_cast<AnswerSet>(1u << (c - '1'));
    else if (c != ',') throw AssemblerError(AssemblerErrc::BadRecord, "answer set " + std::string(s));
  }
  return a;
}

// Adjacent entries are complements, so any prefix of even length holds as
// many true statements as false ones.
inline constexpr std::array<AnswerSet, 8> kAnswerCycle = {0b000, 0b111, 0b001, 0b110, 0b010, 0b101, 0b100, 0b011};

using ModalityOrder = std::array<Modality, 3>;

inline const std::vector<ModalityOrder>& modality_orders() {
  static const std::vector<ModalityOrder> orders = [] {
    std::vector<ModalityOrder> out;
    ModalityOrder o = {Modality::Text, Modality::Table, Modality::Chart};
    std::sort(o.begin(), o.end());
    do out.push_back(o);
    while (std::next_permutation(o.begin(), o.end()));
    return out;
  }();
  return orders;
}

inline std::string order_label(const ModalityOrder& o) {
  return std::string(to_string(o[0])) + "-" + std::string(to_string(o[1])) + "-" + std::string(to_string(o[2]));
}

inline ModalityOrder parse_order_label(const std::string& s) {
  for (const auto& o : modality_orders()) {
    if (order_label(o) == s) return o;
  }
  throw AssemblerError(AssemblerErrc::BadRecord, "modality order " + s);
}

// ---------------------------------------------------------------------------
// Balance schedule

struct PlanCell {
  Difficulty difficulty = Difficulty::Easy;
  std::size_t index = 0;  // within its level
  AnswerSet answer_set = 0;
  ModalityOrder modality_order{};
  StyleTag style = StyleTag::A;
  ChartType chart_type = ChartType::Line;
  std::array<Kind, 3> kinds{};  // statement slots before position shuffling
};

struct BalanceOptions {
  bool frequency_weighted_charts = false;
};

// Real-world frequencies of infographic types in annual reports.
inline double chart_type_weight(ChartType t) {
  switch (t) {
    case ChartType::Bar: return 0.550;
    case ChartType::Pie: return 0.306;
    case ChartType::Line: return 0.127;
    case ChartType::Scatter: return 0.017;
  }
  return 0;
}

// Counts per category by largest remainder.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - static_cast<double>(out[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

template <typename T>
std::vector<T> dealt(std::size_t n, const std::vector<T>& cycle, Rng& rng) {
  std::vector<T> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(cycle[i % cycle.size()]);
  rng.shuffle(out);
  return out;
}

template <typename T>
std::vector<T> expanded(const std::vector<T>& values, const std::vector<std::size_t>& counts, Rng& rng) {
  std::vector<T> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.insert(out.end(), counts[i], values[i]);
  rng.shuffle(out);
  return out;
}

inline std::vector<PlanCell> balance_level(Difficulty level, std::size_t n, std::uint64_t seed,
                                           const BalanceOptions& options = {}) {
  Rng rng(derive_seed(seed, "balance/" + std::string(to_string(level))));
  std::vector<PlanCell> cells(n);
  // Complementary pairs are shuffled as units so any remainder stays paired.
  std::vector<std::size_t> pairs{0, 1, 2, 3};
  rng.shuffle(pairs);
  std::vector<AnswerSet> answer_cycle;
  for (auto p : pairs) {
    const bool flip = rng.coin();
    answer_cycle.push_back(kAnswerCycle[2 * p + (flip ? 1 : 0)]);
    answer_cycle.push_back(kAnswerCycle[2 * p + (flip ? 0 : 1)]);
  }
  std::vector<AnswerSet> answers;
  for (std::size_t i = 0; i < n; ++i) answers.push_back(answer_cycle[i % 8]);
  rng.shuffle(answers);
  const auto orders = dealt(n, modality_orders(), rng);
  const auto styles = dealt(n, std::vector<StyleTag>{StyleTag::A, StyleTag::B, StyleTag::C}, rng);

  std::vector<ChartType> types{ChartType::Line, ChartType::Bar, ChartType::Scatter};
  if (level == Difficulty::Easy) types.push_back(ChartType::Pie);
  std::vector<double> weights;
  for (auto t : types) weights.push_back(options.frequency_weighted_charts ? chart_type_weight(t) : 1.0);
  const auto charts = expanded(types, apportion(n, weights), rng);

  for (std::size_t i = 0; i < n; ++i) {
    auto& c = cells[i];
    c.difficulty = level;
    c.index = i;
    c.answer_set = answers[i];
    c.modality_order = orders[i];
    c.style = styles[i];
    c.chart_type = charts[i];
  }

  if (level == Difficulty::Easy) {
    std::size_t pies = 0;
    for (const auto& c : cells) pies += c.chart_type == ChartType::Pie;
    // Ranking takes every pie instance; the rest fill up to half the level.
    const std::size_t rk_target = std::max(pies, n / 2);
    std::vector<Kind> chart_kinds;
    for (std::size_t i = 0; i < n - pies; ++i) chart_kinds.push_back(i < rk_target - pies ? Kind::RK : Kind::TR);
    rng.shuffle(chart_kinds);
    const auto table_kinds = dealt(n, std::vector<Kind>{Kind::CT, Kind::AR}, rng);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Kind chart = cells[i].chart_type == ChartType::Pie ? Kind::RK : chart_kinds[k++];
      cells[i].kinds = {Kind::FC, table_kinds[i], chart};
    }
  } else {
    std::vector<Kind> cycle = kinds_of(level);
    rng.shuffle(cycle);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < 3; ++k) cells[order[r]].kinds[k] = cycle[(3 * r + k) % cycle.size()];
    }
  }
  return cells;
}

struct LevelCounts {
  std::size_t easy = 0;
  std::size_t medium = 0;
  std::size_t hard = 0;

  std::size_t of(Difficulty d) const { return d == Difficulty::Easy ? easy : d == Difficulty::Medium ? medium : hard; }
  std::size_t total() const { return easy + medium + hard; }
};

inline std::vector<PlanCell> balance_plan(const LevelCounts& counts, std::uint64_t seed,
                                          const BalanceOptions& options = {}) {
  std::vector<PlanCell> out;
  for (auto level : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
    auto cells = balance_level(level, counts.of(level), seed, options);
    out.insert(out.end(), cells.begin(), cells.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances

struct Instance {
  std::string instance_id;
  Difficulty difficulty = Difficulty::Easy;
  std::vector<TextChunk> text_bundle;  // one chunk per entity, skeleton order
  InstanceSkeleton skeleton;           // generation data; the table view is derived from it
  FactTable facts;                     // facts of the bundled chunks
  std::string unit;
  ChartSpec chart;
  std::string chart_path;  // relative to the dataset directory
  std::array<SurfaceStatement, 3> statements;
  AnswerSet answer_set = 0;
  ModalityOrder modality_order{};
  std::uint64_t seed = 0;

  TableView table_view() const { return split_views(skeleton).first; }
  bool operator==(const Instance&) const = default;
};

// "<instance_id>#<1-based position>"
inline std::string statement_id(const std::string& instance_id, std::size_t index) {
  return instance_id + "#" + std::to_string(index + 1);
}

struct SlotCandidates {
  std::optional<SurfaceStatement> truth;
  std::optional<SurfaceStatement> distractor;
};

inline bool is_chart_kind(Kind k) { return footprint_of(k).count(Modality::Chart) > 0; }

// Slot k of `slots` is assigned to a seeded-shuffled position; position i is
// true iff bit i of `target` is set.
inline Instance assemble(const InstanceSkeleton& s, const FactTable& facts, const std::vector<TextChunk>& bundle,
                         Difficulty level, const std::array<SlotCandidates, 3>& slots, AnswerSet target,
                         const ModalityOrder& order, std::uint64_t seed, std::string instance_id) {
  Rng rng(seed);
  std::array<std::size_t, 3> perm = {0, 1, 2};
  rng.shuffle(std::span<std::size_t>(perm));
  Instance inst;
  inst.instance_id = std::move(instance_id);
  inst.difficulty = level;
  inst.text_bundle = bundle;
  inst.skeleton = s;
  inst.facts = facts;
  inst.modality_order = order;
  inst.seed = seed;
  if (level == Difficulty::Easy) {
    std::set<Modality> seen;
    for (const auto& slot : slots) {
      const auto& any = slot.truth ? slot.truth : slot.distractor;
      if (any) seen.insert(*footprint_of(any->spec.kind).begin());
    }
    if (seen.size() != 3) throw AssemblerError(AssemblerErrc::UnsatisfiableTarget, "Easy needs one slot per modality");
  }
  for (std::size_t pos = 0; pos < 3; ++pos) {
    const auto& slot = slots[perm[pos]];
    const bool want = (target >> pos) & 1u;
    const auto& pick = want ? slot.truth : slot.distractor;
    if (!pick) {
      throw AssemblerError(AssemblerErrc::UnsatisfiableTarget, "slot " + std::to_string(perm[pos]) + " has no " +
                                                                   (want ? "true statement" : "distractor"));
    }
    if (difficulty_of(pick->spec.kind) != level) {
      throw AssemblerError(AssemblerErrc::UnsatisfiableTarget,
                           std::string(to_string(pick->spec.kind)) + " is not " + std::string(to_string(level)));
    }
    if (eval(pick->spec, s, facts) != want) {
      throw AssemblerError(AssemblerErrc::UnsatisfiableTarget, "candidate label disagrees with the oracle");
    }
    inst.statements[pos] = *pick;
    if (want) inst.answer_set |= static_cast<AnswerSet>(1u << pos);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Serialization

inline json cell_json(const Cell& c) { return c ? json(c->str()) : json(nullptr); }
inline Cell cell_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Decimal::parse(j.get<std::string>());
}

// entity display name -> year -> column -> value
inline json table_json(const TableView& tv) {
  json out = json::object();
  for (std::size_t e = 0; e < tv.entities.size(); ++e) {
    json years = json::object();
    for (std::size_t y = 0; y < tv.years.size(); ++y) {
      json row = json::object();
      for (const auto& c : tv.columns) row[c] = cell_json(tv.values.at(c)[e][y]);
      years[std::to_string(tv.years[y])] = row;
    }
    out[tv.display_names[e]] = years;
  }
  return out;
}

inline json to_json(const InstanceSkeleton& s) {
  json values = json::object();
  for (const auto& c : s.columns) {
    json grid = json::array();
    for (const auto& row : s.values.at(c)) {
      json r = json::array();
      for (const auto& cell : row) r.push_back(cell_json(cell));
      grid.push_back(r);
    }
    values[c] = grid;
  }
  return {{"entities", s.entities}, {"display_names", s.display_names}, {"years", s.years}, {"columns", s.columns},
          {"chart_column", s.chart_column}, {"rng_seed", s.rng_seed}, {"values", values}};
}

inline InstanceSkeleton skeleton_from_json(const json& j) {
  InstanceSkeleton s;
  s.entities = j.at("entities").get<std::vector<std::string>>();
  s.display_names = j.at("display_names").get<std::vector<std::string>>();
  s.years = j.at("years").get<std::vector<int>>();
  s.columns = j.at("columns").get<std::vector<std::string>>();
  s.chart_column = j.at("chart_column").get<std::string>();
  s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& c : s.columns) {
    auto& grid = s.values[c];
    for (const auto& row : j.at("values").at(c)) {
      std::vector<Cell> r;
      for (const auto& cell : row) r.push_back(cell_from_json(cell));
      grid.push_back(std::move(r));
    }
  }
  return s;
}

inline json to_json(const TextChunk& c) {
  return {{"chunk_id", c.chunk_id}, {"entity_id", c.entity_id}, {"source_item", c.source_item},
          {"paragraphs", c.paragraphs}};
}

inline TextChunk chunk_from_json(const json& j) {
  return {j.at("chunk_id").get<std::string>(), j.at("entity_id").get<std::string>(),
          j.at("source_item").get<std::string>(), j.at("paragraphs").get<std::vector<std::string>>()};
}

inline json to_json(const VerifiedFact& f) {
  return {{"fact_id", f.fact_id}, {"owner_entity", f.owner_entity}, {"text", f.text}, {"source_chunk", f.source_chunk},
          {"specificity", f.specificity == Specificity::Generic ? "generic" : "entity-specific"}};
}

inline VerifiedFact fact_from_json(const json& j) {
  return {j.at("fact_id").get<std::string>(), j.at("owner_entity").get<std::string>(), j.at("text").get<std::string>(),
          j.at("source_chunk").get<std::string>(),
          j.at("specificity").get<std::string>() == "generic" ? Specificity::Generic : Specificity::EntitySpecific};
}

inline json to_json(const SurfaceStatement& s) {
  return {{"text", s.text}, {"template_id", s.template_id}, {"paraphrase_stage", to_string(s.paraphrase_stage)},
          {"spec", to_json(s.spec)}};
}

inline SurfaceStatement surface_from_json(const json& j) {
  SurfaceStatement s;
  s.text = j.at("text").get<std::string>();
  s.template_id = j.at("template_id").get<std::string>();
  const auto stage = j.at("paraphrase_stage").get<std::string>();
  s.paraphrase_stage = stage == "lexical" ? ParaphraseStage::Lexical
                       : stage == "syntactic" ? ParaphraseStage::Syntactic
                                              : ParaphraseStage::Raw;
  s.spec = spec_from_json(j.at("spec"));
  return s;
}

inline json to_json(const Instance& inst) {
  json statements = json::array();
  json kinds = json::array();
  for (const auto& s : inst.statements) {
    statements.push_back(to_json(s));
    kinds.push_back(to_string(s.spec.kind));
  }
  json text = json::array();
  for (const auto& c : inst.text_bundle) text.push_back(to_json(c));
  json facts = json::array();
  for (const auto& [id, f] : inst.facts) facts.push_back(to_json(f));
  json answers = json::array();
  for (int i = 0; i < 3; ++i) {
    if (inst.answer_set & (1u << i)) answers.push_back(i + 1);
  }
  json order = json::array();
  for (auto m : inst.modality_order) order.push_back(to_string(m));
  return {{"schema", kInstanceSchema},
          {"instance_id", inst.instance_id},
          {"difficulty", to_string(inst.difficulty)},
          {"text", text},
          {"table", table_json(inst.table_view())},
          {"chart", {{"spec", to_json(inst.chart)}, {"svg", inst.chart_path}}},
          {"statements", statements},
          {"answer_set", answers},
          {"modality_order", order},
          {"meta",
           {{"chart_type", to_string(inst.chart.type())},
            {"renderer_style_tag", to_string(inst.chart.style.tag)},
            {"statement_kinds", kinds},
            {"unit", inst.unit},
            {"seed", inst.seed}}},
          {"generation", {{"skeleton", to_json(inst.skeleton)}, {"facts", facts}}}};
}

inline Instance instance_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kInstanceSchema) {
      throw AssemblerError(AssemblerErrc::BadRecord, "schema " + j.at("schema").get<std::string>());
    }
    Instance inst;
    inst.instance_id = j.at("instance_id").get<std::string>();
    inst.difficulty = parse_enum<Difficulty>(j.at("difficulty").get<std::string>());
    for (const auto& c : j.at("text")) inst.text_bundle.push_back(chunk_from_json(c));
    inst.chart = chart_spec_from_json(j.at("chart").at("spec"));
    inst.chart_path = j.at("chart").at("svg").get<std::string>();
    const auto& st = j.at("statements");
    if (st.size() != 3) throw AssemblerError(AssemblerErrc::BadRecord, "expected 3 statements");
    for (std::size_t i = 0; i < 3; ++i) inst.statements[i] = surface_from_json(st[i]);
    for (const auto& a : j.at("answer_set")) {
      const int i = a.get<int>();
      if (i < 1 || i > 3) throw AssemblerError(AssemblerErrc::BadRecord, "answer index");
      inst.answer_set |= static_cast<AnswerSet>(1u << (i - 1));
    }
    const auto& order = j.at("modality_order");
    for (std::size_t i = 0; i < 3; ++i) inst.modality_order[i] = parse_enum<Modality>(order.at(i).get<std::string>());
    inst.unit = j.at("meta").at("unit").get<std::string>();
    inst.seed = j.at("meta").at("seed").get<std::uint64_t>();
    inst.skeleton = skeleton_from_json(j.at("generation").at("skeleton"));
    for (const auto& f : j.at("generation").at("facts")) {
      auto fact = fact_from_json(f);
      inst.facts.emplace(fact.fact_id, fact);
    }
    return inst;
  } catch (const json::exception& e) {
    throw AssemblerError(AssemblerErrc::BadRecord, e.what());
  } catch (const SpecError& e) {
    throw AssemblerError(AssemblerErrc::BadRecord, e.what());
  } catch (const std::invalid_argument& e) {
    throw AssemblerError(AssemblerErrc::BadRecord, e.what());
  }
}

// ---------------------------------------------------------------------------
// Balance report

struct BalanceReport {
  // level -> category -> count
  std::map<std::string, std::map<std::string, std::size_t>> answer_sets, modality_orders, styles, chart_types, kinds;
  std::map<std::string, std::size_t> true_statements, false_statements, instances;

  bool operator==(const BalanceReport&) const = default;
};

inline BalanceReport recount(const std::vector<Instance>& instances) {
  BalanceReport r;
  for (const auto& inst : instances) {
    const std::string level(to_string(inst.difficulty));
    ++r.instances[level];
    ++r.answer_sets[level][answer_label(inst.answer_set)];
    ++r.modality_orders[level][order_label(inst.modality_order)];
    ++r.styles[level][std::string(to_string(inst.chart.style.tag))];
    ++r.chart_types[level][std::string(to_string(inst.chart.type()))];
    for (const auto& s : inst.statements) {
      ++r.kinds[level][std::string(to_string(s.spec.kind))];
      ++(s.spec.truth ? r.true_statements : r.false_statements)[level];
    }
  }
  return r;
}

inline json to_json(const BalanceReport& r) {
  return {{"instances", r.instances},           {"answer_sets", r.answer_sets},
          {"modality_orders", r.modality_orders}, {"renderer_styles", r.styles},
          {"chart_types", r.chart_types},       {"statement_kinds", r.kinds},
          {"true_statements", r.true_statements}, {"false_statements", r.false_statements}};
}

inline BalanceReport balance_report_from_json(const json& j) {
  using Nested = std::map<std::string, std::map<std::string, std::size_t>>;
  using Flat = std::map<std::string, std::size_t>;
  BalanceReport r;
  r.instances = j.at("instances").get<Flat>();
  r.answer_sets = j.at("answer_sets").get<Nested>();
  r.modality_orders = j.at("modality_orders").get<Nested>();
  r.styles = j.at("renderer_styles").get<Nested>();
  r.chart_types = j.at("chart_types").get<Nested>();
  r.kinds = j.at("statement_kinds").get<Nested>();
  r.true_statements = j.at("true_statements").get<Flat>();
  r.false_statements = j.at("false_statements").get<Flat>();
  return r;
}

// ---------------------------------------------------------------------------
// Dataset files

inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kChartDir = "charts";

inline std::string dataset_lines(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) out += to_json(inst).dump() + "\n";
  return out;
}

inline void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw AssemblerError(AssemblerErrc::IOFailure, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw AssemblerError(AssemblerErrc::IOFailure, "short write " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw AssemblerError(AssemblerErrc::IOFailure, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes dataset.jsonl, charts/*.svg and manifest.json; `manifest` receives
// the balance report and content hash.
inline void serialize_dataset(const std::filesystem::path& dir, const std::vector<Instance>& instances,
                              json manifest) {
  for (const auto& inst : instances) write_file(dir / inst.chart_path, render_svg(inst.chart));
  const auto lines = dataset_lines(instances);
  write_file(dir / kDatasetFile, lines);
  manifest["schema"] = kManifestSchema;
  manifest["instance_schema"] = kInstanceSchema;
  manifest["instances"] = instances.size();
  manifest["dataset_fnv1a64"] = fnv1a64(lines);
  manifest["balance"] = to_json(recount(instances));
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

inline std::vector<Instance> read_dataset(const std::filesystem::path& dir) {
  std::vector<Instance> out;
  std::istringstream in(read_file(dir / kDatasetFile));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw AssemblerError(AssemblerErrc::BadRecord, "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline json read_manifest(const std::filesystem::path& dir) {
  try {
    return json::parse(read_file(dir / kManifestFile));
  } catch (const json::exception& e) {
    throw AssemblerError(AssemblerErrc::BadRecord, std::string("manifest: ") + e.what());
  }
}

}  // namespace hopbench
