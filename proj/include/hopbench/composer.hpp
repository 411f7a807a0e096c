#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hopbench/clients.hpp"
#include "hopbench/error.hpp"
#include "hopbench/fact.hpp"
#include "hopbench/ingest.hpp"
#include "hopbench/oracle.hpp"
#include "hopbench/rng.hpp"
#include "hopbench/sampler.hpp"
#include "hopbench/statement.hpp"

namespace hopbench {

enum class ComposerErrc {
  NoValidBinding,
  NoFalsifyingSwap,
  IncompatibleModalities,
  TruthDegenerate,
  NoFactsExtracted,
  LabelMismatch,
};

inline const char* to_string(ComposerErrc c) {
  switch (c) {
    case ComposerErrc::NoValidBinding: return "NoValidBinding";
    case ComposerErrc::NoFalsifyingSwap: return "NoFalsifyingSwap";
    case ComposerErrc::IncompatibleModalities: return "IncompatibleModalities";
    case ComposerErrc::TruthDegenerate: return "TruthDegenerate";
    case ComposerErrc::NoFactsExtracted: return "NoFactsExtracted";
    case ComposerErrc::LabelMismatch: return "LabelMismatch";
  }
  return "ComposerError";
}

using ComposerError = CodedError<ComposerErrc>;

enum class ParaphraseStage { Raw, Lexical, Syntactic };

inline std::string_view to_string(ParaphraseStage s) {
  return s == ParaphraseStage::Raw ? "raw" : s == ParaphraseStage::Lexical ? "lexical" : "syntactic";
}

struct SurfaceStatement {
  StatementSpec spec;
  std::string text;
  std::string template_id;
  ParaphraseStage paraphrase_stage = ParaphraseStage::Raw;

  bool operator==(const SurfaceStatement&) const = default;
};

// ---------------------------------------------------------------------------
// Text helpers

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Occurrences of `name` not embedded in a longer alphanumeric run.
inline std::vector<std::size_t> find_mentions(std::string_view text, std::string_view name) {
  std::vector<std::size_t> out;
  if (name.empty()) return out;
  for (std::size_t pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]) || !is_word_char(name.front());
    const std::size_t end = pos + name.size();
    const bool right = end >= text.size() || !is_word_char(text[end]) || !is_word_char(name.back());
    if (left && right) out.push_back(pos);
  }
  return out;
}

inline std::size_t count_mentions(std::string_view text, std::string_view name) {
  return find_mentions(text, name).size();
}

inline std::string replace_mention(std::string_view text, std::string_view name, std::string_view with) {
  auto at = find_mentions(text, name);
  if (at.size() != 1) throw ComposerError(ComposerErrc::NoFalsifyingSwap, "expected one mention of " + std::string(name));
  std::string out(text.substr(0, at[0]));
  out += with;
  out += text.substr(at[0] + name.size());
  return out;
}

inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = cur.find_first_not_of(" \t\r\n");
    std::size_t e = cur.find_last_not_of(" \t\r\n");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur.push_back(c);
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) {
      // "U.S. " style abbreviations stay joined when the next word is lowercase
      std::size_t j = i + 1;
      while (j < text.size() && text[j] == ' ') ++j;
      if (j < text.size() && std::islower(static_cast<unsigned char>(text[j]))) continue;
      flush();
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Fact extraction

inline constexpr const char* kFactInstruction =
    "List each sentence of the following report excerpt that states a concrete, verifiable fact about {name}. "
    "Write one declarative sentence per line and mention {name} by name exactly once in each.";

// Returns every sentence of the content, one per line.
class ExtractiveFactStub : public TextModelClient {
 public:
  std::string endpoint_id() const override { return "stub-extractive"; }
  std::string complete(const TextRequest& request) override {
    std::string out;
    for (const auto& s : split_sentences(request.content)) out += s + "\n";
    return out;
  }
};

struct FactExtractionOptions {
  bool strict = false;  // require a verbatim witness in the chunk
  std::vector<std::string> generic_markers = {"comply with", "complies with", "subject to", "regulations",
                                              "may ", "could ", "in the ordinary course", "various"};
};

struct DroppedSentence {
  std::string chunk_id;
  std::string sentence;
  std::string reason;
};

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Validates raw candidate sentences for one chunk. `names` maps every
// known entity id to its display name.
inline std::vector<VerifiedFact> validate_facts(const TextChunk& chunk, const std::vector<std::string>& sentences,
                                                const std::map<std::string, std::string>& names,
                                                const FactExtractionOptions& options,
                                                std::vector<DroppedSentence>* dropped = nullptr) {
  std::vector<VerifiedFact> out;
  const auto owner = names.find(chunk.entity_id);
  if (owner == names.end()) return out;
  const std::string source = chunk.joined();
  auto drop = [&](const std::string& s, const char* why) {
    if (dropped) dropped->push_back({chunk.chunk_id, s, why});
  };
  std::set<std::string> seen;
  for (const auto& raw : sentences) {
    std::string s = raw;
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == ' ')) s.erase(s.begin());
    if (s.empty()) continue;
    if (count_mentions(s, owner->second) != 1) {
      drop(s, "owner not mentioned exactly once");
      continue;
    }
    bool other = false;
    for (const auto& [id, name] : names) {
      if (id != chunk.entity_id && count_mentions(s, name) > 0 && owner->second.find(name) == std::string::npos) {
        other = true;
      }
    }
    if (other) {
      drop(s, "mentions another entity");
      continue;
    }
    if (options.strict && source.find(s) == std::string::npos) {
      drop(s, "no verbatim witness");
      continue;
    }
    if (!seen.insert(s).second) continue;
    VerifiedFact f;
    f.fact_id = chunk.chunk_id + "#" + std::to_string(out.size());
    f.owner_entity = chunk.entity_id;
    f.text = s;
    f.source_chunk = chunk.chunk_id;
    const auto low = lowercase(s);
    for (const auto& m : options.generic_markers) {
      if (low.find(m) != std::string::npos) f.specificity = Specificity::Generic;
    }
    out.push_back(std::move(f));
  }
  return out;
}

// Facts whose text, with the owner's name masked, recurs for a different
// owner are generic: a swap would stay true.
inline void mark_generic_duplicates(std::vector<VerifiedFact>& facts, const std::map<std::string, std::string>& names) {
  std::map<std::string, std::set<std::string>> owners;
  auto masked = [&](const VerifiedFact& f) {
    return lowercase(replace_mention(f.text, names.at(f.owner_entity), "\x01"));
  };
  for (const auto& f : facts) owners[masked(f)].insert(f.owner_entity);
  for (auto& f : facts) {
    if (owners[masked(f)].size() > 1) f.specificity = Specificity::Generic;
  }
}

inline std::vector<VerifiedFact> extract_facts(const std::vector<TextChunk>& chunks,
                                               const std::map<std::string, std::string>& names,
                                               TextModelClient& client, const FactExtractionOptions& options = {},
                                               std::vector<DroppedSentence>* dropped = nullptr,
                                               std::size_t concurrency = 1, const RetryPolicy& retry = {}) {
  auto responses = parallel_map<std::string>(chunks.size(), concurrency, [&](std::size_t i) {
    const auto& c = chunks[i];
    std::string instruction = kFactInstruction;
    const auto& name = names.count(c.entity_id) ? names.at(c.entity_id) : c.entity_id;
    for (std::size_t p; (p = instruction.find("{name}")) != std::string::npos;) instruction.replace(p, 6, name);
    return with_retries([&] { return client.complete({c.chunk_id, instruction, c.joined()}); }, retry);
  });
  std::vector<VerifiedFact> facts;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    std::vector<std::string> lines;
    std::string line;
    for (char ch : responses[i] + "\n") {
      if (ch == '\n') {
        if (!line.empty()) lines.push_back(line);
        line.clear();
      } else if (ch != '\r') {
        line.push_back(ch);
      }
    }
    auto v = validate_facts(chunks[i], lines, names, options, dropped);
    facts.insert(facts.end(), v.begin(), v.end());
  }
  if (facts.empty()) throw ComposerError(ComposerErrc::NoFactsExtracted, std::to_string(chunks.size()) + " chunks");
  mark_generic_duplicates(facts, names);
  return facts;
}

// ---------------------------------------------------------------------------
// Surface templates

inline std::string_view cmp_phrase(Cmp c) { return c == Cmp::Greater ? "greater than" : "less than"; }
inline std::string_view pos_phrase(Position p) { return p == Position::Highest ? "highest" : "lowest"; }
inline std::string_view op_phrase(ArOp o) { return o == ArOp::Plus ? "plus" : "minus"; }
inline std::string_view trend_ing(Direction d) { return d == Direction::Increase ? "increasing" : "decreasing"; }
inline std::string_view trend_ed(Direction d) { return d == Direction::Increase ? "increased" : "decreased"; }

inline constexpr std::array<std::string_view, 4> kHeads = {"company", "firm", "organization", "business"};

inline std::string ct_clause(const CtPart& p) {
  std::string out = "with " + p.column + " values " + std::string(cmp_phrase(p.cmp)) + " " + p.threshold.trimmed();
  if (p.scope == Scope::Year) return out + " in " + std::to_string(*p.year);
  return out + " in every year";
}

inline std::string ar_two_year_clause(const ArPart& p) {
  return "where the " + std::to_string(*p.year1) + " " + p.column + " value " + std::string(op_phrase(p.op)) +
         " the " + std::to_string(*p.year2) + " " + p.column + " value equals " + p.result.str();
}

inline std::string cumulative_phrase(const ArPart& p) {
  return p.cumulative == CumulativeMode::RunningPrefix ? "the cumulative sum of " + p.column + " values"
                                                       : "the total sum of " + p.column + " values";
}

inline std::string tr_clause(const TrPart& p) {
  return "that showed a continuously " + std::string(trend_ing(p.direction)) + " trend in " + p.column +
         " values from " + std::to_string(p.from) + " to " + std::to_string(p.to);
}

inline std::string rk_clause(const RkPart& p) {
  std::string out = "with the " + std::string(pos_phrase(p.position)) + " " + p.column + " value";
  return p.year ? out + " in " + std::to_string(*p.year) : out;
}

inline std::string condition_clause(const StatementSpec& spec, const InstanceSkeleton& s) {
  const auto& who = s.name_of(*spec.condition_entity);
  if (spec.ct) {
    return "the " + spec.ct->column + " value for " + who + " is " + std::string(cmp_phrase(spec.ct->cmp)) + " " +
           spec.ct->threshold.trimmed();
  }
  const auto& a = *spec.ar;
  return a.column + " value " + std::string(op_phrase(a.op)) + " " + a.column2 + " value for " + who + " is " +
         std::string(cmp_phrase(a.cmp)) + " " + a.threshold.trimmed();
}

// Noun-phrase clause identifying the claimed entity of an FC composite.
inline std::string description_clause(const StatementSpec& spec, const InstanceSkeleton& s) {
  switch (spec.kind) {
    case Kind::FC_CT: return ct_clause(*spec.ct);
    case Kind::FC_AR: return ar_two_year_clause(*spec.ar);
    case Kind::FC_TR: return tr_clause(*spec.tr);
    case Kind::FC_RK: return rk_clause(*spec.rk);
    case Kind::FC_CT_TR:
      return "with the " + spec.ct->column + " value " + std::string(cmp_phrase(spec.ct->cmp)) + " " +
             spec.ct->threshold.trimmed() + " for all years and the " + spec.tr->column +
             " value that continuously " + std::string(trend_ed(spec.tr->direction));
    case Kind::FC_AR_TR:
      return "with " + cumulative_phrase(*spec.ar) + " " + std::string(cmp_phrase(spec.ar->cmp)) + " " +
             spec.ar->threshold.trimmed() + " and continuously " + std::string(trend_ing(spec.tr->direction)) + " " +
             spec.tr->column + " values for every year";
    case Kind::FC_CT_RK:
      return rk_clause(*spec.rk) + " during the years when " + condition_clause(spec, s);
    case Kind::FC_AR_RK:
      return rk_clause(*spec.rk) + " in the years when the " + condition_clause(spec, s);
    default:
      throw OracleError(OracleErrc::IllFormed, "no description clause for " + std::string(to_string(spec.kind)));
  }
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string render_statement(const StatementSpec& spec, const InstanceSkeleton& s, const FactTable& facts,
                                    const std::string& template_id) {
  auto N = [&](const std::string& id) { return s.name_of(id); };
  const std::string subject = s.entity_index(spec.subject) ? N(spec.subject) : spec.subject;
  const auto all_years = [&](const TrPart&) { return std::string("For all years, "); };
  switch (spec.kind) {
    case Kind::FC: {
      const auto& f = fact_or_throw(facts, *spec.fact_ref);
      return f.owner_entity == spec.subject ? f.text : replace_mention(f.text, N(f.owner_entity), subject);
    }
    case Kind::CT:
      return "The company " + ct_clause(*spec.ct) + " is " + subject + ".";
    case Kind::AR:
      return "The company " + ar_two_year_clause(*spec.ar) + " is " + subject + ".";
    case Kind::TR:
      return "The company " + tr_clause(*spec.tr) + " is " + subject + ".";
    case Kind::RK:
      return "The company " + rk_clause(*spec.rk) + " is " + subject + ".";
    case Kind::CT_TR:
      return all_years(*spec.tr) + "the company with the " + spec.ct->column + " value " +
             std::string(cmp_phrase(spec.ct->cmp)) + " " + spec.ct->threshold.trimmed() + " and the " +
             spec.tr->column + " value continuously " + std::string(trend_ed(spec.tr->direction)) + " is " + subject +
             ".";
    case Kind::AR_TR:
      return all_years(*spec.tr) + "the company with " + cumulative_phrase(*spec.ar) + " " +
             std::string(cmp_phrase(spec.ar->cmp)) + " " + spec.ar->threshold.trimmed() + " and the " +
             spec.tr->column + " values continuously " + std::string(trend_ed(spec.tr->direction)) + " is " +
             subject + ".";
    case Kind::CT_RK:
    case Kind::AR_RK:
      return "During the years when " + condition_clause(spec, s) + ", the company " + rk_clause(*spec.rk) + " is " +
             subject + ".";
    default: {
      const auto& f = fact_or_throw(facts, *spec.fact_ref);
      const auto slash = template_id.find('/');
      std::string head = slash == std::string::npos ? "company" : template_id.substr(slash + 1);
      bool comma = false;
      if (head.size() > 6 && head.ends_with("-comma")) {
        comma = true;
        head.resize(head.size() - 6);
      }
      const auto at = find_mentions(f.text, N(f.owner_entity));
      if (at.size() != 1) throw ComposerError(ComposerErrc::NoValidBinding, "fact mention count");
      const std::size_t end = at[0] + N(f.owner_entity).size();
      const bool followed_by_punct = end < f.text.size() && (f.text[end] == ',' || f.text[end] == '.');
      std::string phrase = "the " + head + (comma ? ", " : " ") + description_clause(spec, s) +
                           (comma && !followed_by_punct ? "," : "");
      if (at[0] == 0) phrase = capitalize(phrase);
      return f.text.substr(0, at[0]) + phrase + f.text.substr(end);
    }
  }
}

// ---------------------------------------------------------------------------
// Candidate enumeration

struct GenContext {
  const InstanceSkeleton& skeleton;
  const FactTable& facts;
  // Entity-specific facts usable for each entity index (from its selected chunk).
  std::vector<std::vector<std::string>> usable_facts;
  SeparationConstraints separation;
  CumulativeMode cumulative = CumulativeMode::RunningPrefix;
  bool pie = false;
  std::size_t max_valid = 24;
};

inline std::vector<Decimal> midpoints(std::vector<Decimal> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<Decimal> out;
  for (std::size_t i = 1; i < v.size(); ++i) out.push_back(midpoint(v[i - 1], v[i]));
  return out;
}

inline bool column_complete(const InstanceSkeleton& s, const std::string& col) {
  for (const auto& row : s.values.find(col)->second) {
    for (const auto& c : row) {
      if (!c) return false;
    }
  }
  return true;
}

inline std::vector<std::string> complete_table_columns(const InstanceSkeleton& s) {
  std::vector<std::string> out;
  for (const auto& c : s.table_columns()) {
    if (column_complete(s, c)) out.push_back(c);
  }
  return out;
}

inline std::vector<Decimal> year_values(const InstanceSkeleton& s, const std::string& col, std::size_t y) {
  std::vector<Decimal> out;
  for (std::size_t e = 0; e < s.entities.size(); ++e) out.push_back(*s.cell(col, e, y));
  return out;
}

inline bool rank_year_ok(const GenContext& g, std::size_t y) {
  const auto vals = year_values(g.skeleton, g.skeleton.chart_column, y);
  if (g.pie) {
    for (const auto& v : vals) {
      if (!(v > Decimal())) return false;
    }
  }
  return rank_separated(vals, g.separation.delta_rank);
}

inline bool trend_range_ok(const GenContext& g, int from, int to) {
  const auto& s = g.skeleton;
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    if (!trend_separated(s.chart_series(e), *s.year_index(from), *s.year_index(to), g.separation.delta_trend)) {
      return false;
    }
  }
  return true;
}

inline std::vector<CtPart> ct_candidates(const GenContext& g, Scope scope, std::optional<std::size_t> cond) {
  const auto& s = g.skeleton;
  std::vector<CtPart> out;
  for (const auto& col : complete_table_columns(s)) {
    auto add = [&](std::optional<int> year, const std::vector<Decimal>& vals) {
      for (const auto& t : midpoints(vals)) {
        for (auto cmp : {Cmp::Greater, Cmp::Less}) out.push_back({col, scope, year, cmp, t});
      }
    };
    if (scope == Scope::Year) {
      for (std::size_t y = 0; y < s.years.size(); ++y) add(s.years[y], year_values(s, col, y));
    } else if (scope == Scope::AllYears) {
      std::vector<Decimal> vals;
      for (std::size_t y = 0; y < s.years.size(); ++y) {
        for (const auto& v : year_values(s, col, y)) vals.push_back(v);
      }
      add(std::nullopt, vals);
    } else {
      std::vector<Decimal> vals;
      for (std::size_t y = 0; y < s.years.size(); ++y) vals.push_back(*s.cell(col, *cond, y));
      add(std::nullopt, vals);
    }
  }
  return out;
}

inline std::vector<ArPart> ar_two_year_candidates(const GenContext& g) {
  const auto& s = g.skeleton;
  std::vector<ArPart> out;
  for (const auto& col : complete_table_columns(s)) {
    for (std::size_t e = 0; e < s.entities.size(); ++e) {
      for (std::size_t a = 0; a < s.years.size(); ++a) {
        for (std::size_t b = 0; b < s.years.size(); ++b) {
          if (a == b) continue;
          for (auto op : {ArOp::Minus, ArOp::Plus}) {
            ArPart p;
            p.form = ArForm::TwoYearEquality;
            p.column = col;
            p.year1 = s.years[a];
            p.year2 = s.years[b];
            p.op = op;
            p.result = apply(op, *s.cell(col, e, a), *s.cell(col, e, b));
            out.push_back(p);
          }
        }
      }
    }
  }
  return out;
}

inline std::vector<ArPart> ar_cumulative_candidates(const GenContext& g) {
  const auto& s = g.skeleton;
  std::vector<ArPart> out;
  for (const auto& col : complete_table_columns(s)) {
    std::vector<Decimal> sums;
    for (std::size_t e = 0; e < s.entities.size(); ++e) {
      Decimal acc;
      for (std::size_t y = 0; y < s.years.size(); ++y) {
        acc = acc + *s.cell(col, e, y);
        if (g.cumulative == CumulativeMode::RunningPrefix || y + 1 == s.years.size()) sums.push_back(acc);
      }
    }
    for (const auto& t : midpoints(sums)) {
      for (auto cmp : {Cmp::Greater, Cmp::Less}) {
        ArPart p;
        p.form = ArForm::CumulativeThreshold;
        p.column = col;
        p.cmp = cmp;
        p.threshold = t;
        p.cumulative = g.cumulative;
        out.push_back(p);
      }
    }
  }
  return out;
}

inline std::vector<ArPart> ar_cross_candidates(const GenContext& g, std::size_t cond) {
  const auto& s = g.skeleton;
  std::vector<ArPart> out;
  const auto cols = complete_table_columns(s);
  for (const auto& c1 : cols) {
    for (const auto& c2 : cols) {
      if (c1 == c2) continue;
      for (auto op : {ArOp::Minus, ArOp::Plus}) {
        std::vector<Decimal> q;
        for (std::size_t y = 0; y < s.years.size(); ++y) q.push_back(apply(op, *s.cell(c1, cond, y), *s.cell(c2, cond, y)));
        for (const auto& t : midpoints(q)) {
          for (auto cmp : {Cmp::Greater, Cmp::Less}) {
            ArPart p;
            p.form = ArForm::CrossColumnThreshold;
            p.column = c1;
            p.column2 = c2;
            p.op = op;
            p.scope = Scope::EachYear;
            p.cmp = cmp;
            p.threshold = t;
            out.push_back(p);
          }
        }
      }
    }
  }
  return out;
}

inline std::vector<TrPart> tr_candidates(const GenContext& g, bool full_range) {
  const auto& s = g.skeleton;
  std::vector<TrPart> out;
  const int first = s.years.front(), last = s.years.back();
  for (int a = first; a <= last; ++a) {
    for (int b = a + 2; b <= last; ++b) {
      if (full_range && (a != first || b != last)) continue;
      if (!trend_range_ok(g, a, b)) continue;
      for (auto d : {Direction::Increase, Direction::Decrease}) out.push_back({s.chart_column, a, b, d});
    }
  }
  return out;
}

inline std::vector<RkPart> rk_candidates(const GenContext& g, bool conditional) {
  const auto& s = g.skeleton;
  std::vector<RkPart> out;
  if (conditional) {
    for (auto p : {Position::Highest, Position::Lowest}) out.push_back({s.chart_column, std::nullopt, p});
    return out;
  }
  for (std::size_t y = 0; y < s.years.size(); ++y) {
    if (!rank_year_ok(g, y)) continue;
    for (auto p : {Position::Highest, Position::Lowest}) out.push_back({s.chart_column, s.years[y], p});
  }
  return out;
}

// Entities for which the non-text reading of `spec` holds with that entity
// as the claimed one. nullopt when the binding touches a missing value.
inline std::optional<std::vector<std::size_t>> satisfiers(const StatementSpec& spec, const InstanceSkeleton& s) {
  std::vector<std::size_t> out;
  try {
    for (std::size_t e = 0; e < s.entities.size(); ++e) {
      const bool ok = is_conditional(spec.kind) ? conditional_holds(spec, s, e) : describes(spec, s, e);
      if (ok) out.push_back(e);
    }
  } catch (const OracleError&) {
    return std::nullopt;
  }
  return out;
}

// Table part holds for e while the trend part fails.
inline bool table_only_satisfier(const StatementSpec& spec, const InstanceSkeleton& s, std::size_t e) {
  if (!spec.tr) return false;
  const bool table = spec.ct ? eval_CT(s, e, *spec.ct) : eval_AR(s, e, *spec.ar);
  return table && !eval_TR(s, e, *spec.tr);
}

inline bool has_trend_foil(const StatementSpec& spec, const InstanceSkeleton& s, std::size_t subject) {
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    if (e != subject && table_only_satisfier(spec, s, e)) return true;
  }
  return false;
}

inline std::vector<std::size_t> condition_years(const StatementSpec& spec, const InstanceSkeleton& s) {
  const auto c = *s.entity_index(*spec.condition_entity);
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < s.years.size(); ++y) {
    if (spec.ct ? ct_at(s, c, *spec.ct, y) : ar_cross_at(s, c, *spec.ar, y)) out.push_back(y);
  }
  return out;
}

inline std::vector<StatementSpec> binding_candidates(Kind kind, const GenContext& g) {
  const auto& s = g.skeleton;
  const auto parts = parts_of(kind);
  const bool conditional = is_conditional(kind);
  const bool joint_trend = parts.tr && (parts.ct || parts.ar);
  std::vector<StatementSpec> out;
  auto base = [&] {
    StatementSpec sp;
    sp.kind = kind;
    return sp;
  };
  if (kind == Kind::FC) {
    for (std::size_t e = 0; e < s.entities.size(); ++e) {
      auto sp = base();
      sp.subject = s.entities[e];
      out.push_back(sp);
    }
    return out;
  }
  if (conditional) {
    for (std::size_t c = 0; c < s.entities.size(); ++c) {
      for (const auto& rk : rk_candidates(g, true)) {
        if (parts.ct) {
          for (const auto& ct : ct_candidates(g, Scope::EachYear, c)) {
            auto sp = base();
            sp.condition_entity = s.entities[c];
            sp.ct = ct;
            sp.rk = rk;
            out.push_back(sp);
          }
        } else {
          for (const auto& ar : ar_cross_candidates(g, c)) {
            auto sp = base();
            sp.condition_entity = s.entities[c];
            sp.ar = ar;
            sp.rk = rk;
            out.push_back(sp);
          }
        }
      }
    }
    return out;
  }
  std::vector<std::optional<CtPart>> cts{std::nullopt};
  std::vector<std::optional<ArPart>> ars{std::nullopt};
  std::vector<std::optional<TrPart>> trs{std::nullopt};
  std::vector<std::optional<RkPart>> rks{std::nullopt};
  if (parts.ct) {
    cts.clear();
    if (joint_trend) {
      for (auto& c : ct_candidates(g, Scope::AllYears, std::nullopt)) cts.emplace_back(c);
    } else {
      for (auto& c : ct_candidates(g, Scope::Year, std::nullopt)) cts.emplace_back(c);
      if (kind == Kind::CT) {
        for (auto& c : ct_candidates(g, Scope::AllYears, std::nullopt)) cts.emplace_back(c);
      }
    }
  }
  if (parts.ar) {
    ars.clear();
    for (auto& a : joint_trend ? ar_cumulative_candidates(g) : ar_two_year_candidates(g)) ars.emplace_back(a);
  }
  if (parts.tr) {
    trs.clear();
    for (auto& t : tr_candidates(g, joint_trend)) trs.emplace_back(t);
  }
  if (parts.rk) {
    rks.clear();
    for (auto& r : rk_candidates(g, false)) rks.emplace_back(r);
  }
  for (const auto& ct : cts) {
    for (const auto& ar : ars) {
      for (const auto& tr : trs) {
        for (const auto& rk : rks) {
          auto sp = base();
          sp.ct = ct;
          sp.ar = ar;
          sp.tr = tr;
          sp.rk = rk;
          out.push_back(sp);
        }
      }
    }
  }
  return out;
}

inline std::string pick_template(Kind kind, Rng& rng) {
  if (kind == Kind::FC) return "FC/verbatim";
  if (!parts_of(kind).fc) return std::string(to_string(kind)) + "/base";
  std::string id = std::string(to_string(kind)) + "/" + std::string(kHeads[rng.uniform(kHeads.size())]);
  if (rng.coin()) id += "-comma";
  return id;
}

// A true statement of the given kind. `forced_subject` restricts the claimed
// entity. Throws NoValidBinding when no binding is true for exactly one entity.
inline SurfaceStatement instantiate(Kind kind, const GenContext& g, Rng& rng,
                                    std::optional<std::string> forced_subject = std::nullopt) {
  const auto& s = g.skeleton;
  auto candidates = binding_candidates(kind, g);
  rng.shuffle(candidates);
  const bool fc = parts_of(kind).fc;
  const bool want_same_entity = is_conditional(kind) && rng.coin();
  std::vector<StatementSpec> valid, preferred;
  for (auto& sp : candidates) {
    std::size_t subject;
    if (kind == Kind::FC) {
      subject = *s.entity_index(sp.subject);
    } else {
      auto sat = satisfiers(sp, s);
      if (!sat || sat->size() != 1) continue;
      subject = sat->front();
    }
    if (forced_subject && s.entities[subject] != *forced_subject) continue;
    if (fc && g.usable_facts.at(subject).empty()) continue;
    if (is_conditional(kind)) {
      bool ok = true;
      for (auto y : condition_years(sp, s)) ok = ok && rank_year_ok(g, y);
      if (!ok) continue;
    }
    sp.subject = s.entities[subject];
    bool good = true;
    if (sp.tr && (sp.ct || sp.ar)) good = has_trend_foil(sp, s, subject);
    if (is_conditional(kind)) good = (*sp.condition_entity == sp.subject) == want_same_entity;
    (good ? preferred : valid).push_back(sp);
    if (preferred.size() >= g.max_valid) break;
    if (valid.size() + preferred.size() >= 4 * g.max_valid) break;
  }
  const auto& pool = preferred.empty() ? valid : preferred;
  if (pool.empty()) {
    throw ComposerError(ComposerErrc::NoValidBinding, std::string(to_string(kind)) + " has no uniquely true binding");
  }
  StatementSpec spec = pool[rng.uniform(pool.size())];
  if (fc) {
    const auto& usable = g.usable_facts.at(*s.entity_index(spec.subject));
    spec.fact_ref = usable[rng.uniform(usable.size())];
  }
  spec.truth = true;
  if (!eval(spec, s, g.facts)) {
    throw ComposerError(ComposerErrc::LabelMismatch, "instantiated " + std::string(to_string(kind)) + " is false");
  }
  SurfaceStatement out;
  out.spec = spec;
  out.template_id = pick_template(kind, rng);
  out.text = render_statement(spec, s, g.facts, out.template_id);
  return out;
}

inline SurfaceStatement instantiate_onehop(Kind kind, const GenContext& g, Rng& rng,
                                           std::optional<std::string> forced_subject = std::nullopt) {
  if (hop_count_of(kind) != 1) {
    throw ComposerError(ComposerErrc::IncompatibleModalities, std::string(to_string(kind)) + " is not one-hop");
  }
  return instantiate(kind, g, rng, std::move(forced_subject));
}

// Entity-swap distractor. The result is verified false by the oracle.
inline SurfaceStatement make_distractor(const SurfaceStatement& truth, const GenContext& g, Rng& rng) {
  const auto& s = g.skeleton;
  const auto& spec = truth.spec;
  if (!spec.truth) throw ComposerError(ComposerErrc::NoFalsifyingSwap, "input statement is not true");
  const bool fc = parts_of(spec.kind).fc;
  if (fc) {
    const auto& f = fact_or_throw(g.facts, *spec.fact_ref);
    if (f.specificity == Specificity::Generic) {
      throw ComposerError(ComposerErrc::NoFalsifyingSwap, "generic fact " + f.fact_id);
    }
  }
  const auto subject = *s.entity_index(spec.subject);
  std::vector<std::size_t> foils;
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    if (e != subject) foils.push_back(e);
  }
  rng.shuffle(foils);
  if (spec.tr && (spec.ct || spec.ar)) {
    std::stable_partition(foils.begin(), foils.end(), [&](std::size_t e) { return table_only_satisfier(spec, s, e); });
  }
  for (auto e : foils) {
    SurfaceStatement out = truth;
    out.spec.subject = s.entities[e];
    out.spec.truth = false;
    if (spec.kind == Kind::FC) {
      const auto& f = g.facts.at(*spec.fact_ref);
      if (count_mentions(f.text, s.display_names[e]) > 0) continue;
    } else if (fc) {
      const auto& usable = g.usable_facts.at(e);
      if (usable.empty()) continue;
      out.spec.fact_ref = usable[rng.uniform(usable.size())];
    }
    if (eval(out.spec, s, g.facts)) continue;
    out.text = render_statement(out.spec, s, g.facts, out.template_id);
    return out;
  }
  throw ComposerError(ComposerErrc::NoFalsifyingSwap, "every swap of " + std::string(to_string(spec.kind)) + " stays true");
}

// ---------------------------------------------------------------------------
// Composition

// One-hop constituents of a composed spec. The table part of a conditional is
// bound to the condition entity.
inline std::vector<StatementSpec> decompose(const StatementSpec& spec) {
  std::vector<StatementSpec> out;
  auto one = [&](Kind k, const std::string& subject) {
    StatementSpec p;
    p.kind = k;
    p.subject = subject;
    p.truth = spec.truth;
    return p;
  };
  if (spec.fact_ref) {
    auto p = one(Kind::FC, spec.subject);
    p.fact_ref = spec.fact_ref;
    out.push_back(p);
  }
  const std::string table_subject = spec.condition_entity ? *spec.condition_entity : spec.subject;
  if (spec.ct) {
    auto p = one(Kind::CT, table_subject);
    p.ct = spec.ct;
    out.push_back(p);
  }
  if (spec.ar) {
    auto p = one(Kind::AR, table_subject);
    p.ar = spec.ar;
    out.push_back(p);
  }
  if (spec.tr) {
    auto p = one(Kind::TR, spec.subject);
    p.tr = spec.tr;
    out.push_back(p);
  }
  if (spec.rk) {
    auto p = one(Kind::RK, spec.subject);
    p.rk = spec.rk;
    out.push_back(p);
  }
  return out;
}

inline StatementSpec compose(const std::vector<StatementSpec>& constituents, Kind kind, const InstanceSkeleton& s,
                             const FactTable& facts) {
  std::set<Modality> seen;
  KindParts got;
  for (const auto& c : constituents) {
    if (hop_count_of(c.kind) != 1) {
      throw ComposerError(ComposerErrc::IncompatibleModalities, "constituent " + std::string(to_string(c.kind)));
    }
    const auto m = *footprint_of(c.kind).begin();
    if (!seen.insert(m).second) {
      throw ComposerError(ComposerErrc::IncompatibleModalities, "two constituents read the " +
                                                                    std::string(to_string(m)) + " modality");
    }
    const auto p = parts_of(c.kind);
    got.fc |= p.fc;
    got.ct |= p.ct;
    got.ar |= p.ar;
    got.tr |= p.tr;
    got.rk |= p.rk;
  }
  const auto want = parts_of(kind);
  if (got.fc != want.fc || got.ct != want.ct || got.ar != want.ar || got.tr != want.tr || got.rk != want.rk) {
    throw ComposerError(ComposerErrc::IncompatibleModalities,
                        "constituents do not match " + std::string(to_string(kind)));
  }
  StatementSpec out;
  out.kind = kind;
  std::string table_subject, text_subject, chart_subject;
  for (const auto& c : constituents) {
    if (c.fact_ref) out.fact_ref = c.fact_ref;
    if (c.ct) out.ct = c.ct;
    if (c.ar) out.ar = c.ar;
    if (c.tr) out.tr = c.tr;
    if (c.rk) out.rk = c.rk;
    if (c.kind == Kind::CT || c.kind == Kind::AR) table_subject = c.subject;
    else if (c.kind == Kind::FC) text_subject = c.subject;
    else chart_subject = c.subject;
  }
  out.subject = !chart_subject.empty() ? chart_subject : !text_subject.empty() ? text_subject : table_subject;
  if (is_conditional(kind)) out.condition_entity = table_subject;
  if (is_definite_description(kind)) {
    auto sat = satisfiers(out, s);
    if (sat && sat->size() > 1) {
      throw ComposerError(ComposerErrc::TruthDegenerate,
                          std::to_string(sat->size()) + " entities satisfy the description");
    }
  }
  out.truth = eval(out, s, facts);
  return out;
}

}  // namespace hopbench
