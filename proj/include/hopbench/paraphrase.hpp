#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hopbench/assembler.hpp"
#include "hopbench/clients.hpp"

namespace hopbench {

enum class ParaphraseErrc { EmptyText, MalformedReviewFile };

inline const char* to_string(ParaphraseErrc c) {
  return c == ParaphraseErrc::EmptyText ? "EmptyText" : "MalformedReviewFile";
}

using ParaphraseError = CodedError<ParaphraseErrc>;

enum class FilterVerdict { Accepted, Rejected, NeedsReview };

inline std::string_view to_string(FilterVerdict v) {
  return v == FilterVerdict::Accepted ? "accepted" : v == FilterVerdict::Rejected ? "rejected" : "needs_review";
}

inline FilterVerdict parse_verdict(std::string_view s) {
  if (s == "accepted") return FilterVerdict::Accepted;
  if (s == "rejected") return FilterVerdict::Rejected;
  if (s == "needs_review") return FilterVerdict::NeedsReview;
  throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, "verdict " + std::string(s));
}

// ---------------------------------------------------------------------------
// Metrics

// Lowercased runs of letters and digits; a '.' between digits stays inside
// the token so decimals survive.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    const bool decimal_point = c == '.' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back())) &&
                               i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (std::isalnum(c) || decimal_point) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Deviation {
  double wpd = 0;
  double ld = 0;
  std::size_t edit_distance = 0;  // token-level Levenshtein
};

inline std::size_t token_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Each token of `a`, left to right, aligns with the earliest unused equal
// token of `b`.
inline Deviation compute_wpd_ld(std::string_view source, std::string_view paraphrase) {
  const auto a = tokenize(source), b = tokenize(paraphrase);
  if (a.empty() || b.empty()) throw ParaphraseError(ParaphraseErrc::EmptyText, "no tokens to compare");
  std::map<std::string, std::vector<std::size_t>> slots;
  for (std::size_t j = b.size(); j-- > 0;) slots[b[j]].push_back(j);
  auto pos = [](std::size_t i, std::size_t n) { return n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1); };
  std::size_t aligned = 0;
  double shift = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = slots.find(a[i]);
    if (it == slots.end() || it->second.empty()) continue;
    const std::size_t j = it->second.back();
    it->second.pop_back();
    ++aligned;
    shift += std::fabs(pos(i, a.size()) - pos(j, b.size()));
  }
  Deviation d;
  d.ld = 1.0 - 2.0 * static_cast<double>(aligned) / static_cast<double>(a.size() + b.size());
  d.wpd = aligned == 0 ? 1.0 : shift / static_cast<double>(aligned);
  d.edit_distance = token_edit_distance(a, b);
  return d;
}

// ---------------------------------------------------------------------------
// Invariants

inline std::vector<std::string> numerals(std::string_view text) {
  static const std::regex re(R"(-?\d[\d,]*(\.\d+)?)");
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    std::string n = it->str();
    while (!n.empty() && n.back() == ',') n.pop_back();
    out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::optional<std::string> mention_violation(std::string_view raw, std::string_view candidate,
                                                    const std::vector<std::string>& protected_terms) {
  for (const auto& t : protected_terms) {
    if (t.empty()) continue;
    if (count_mentions(raw, t) != count_mentions(candidate, t)) return "mention of '" + t + "' changed";
  }
  return std::nullopt;
}

// Empty when `candidate` keeps every numeral and every protected term of
// `raw` with the same multiplicity; otherwise the first violation.
inline std::optional<std::string> invariant_violation(std::string_view raw, std::string_view candidate,
                                                      const std::vector<std::string>& protected_terms) {
  if (numerals(raw) != numerals(candidate)) return "numerals changed";
  return mention_violation(raw, candidate, protected_terms);
}

// Entity names and column names of an instance.
inline std::vector<std::string> protected_terms(const InstanceSkeleton& s) {
  std::vector<std::string> out = s.display_names;
  out.insert(out.end(), s.columns.begin(), s.columns.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Two-stage paraphrase and filter

inline constexpr const char* kLexicalInstruction =
    "Rewrite the statement with different word choices while keeping its meaning. Keep every company name, column "
    "name and number exactly as written. Return only the rewritten statement.";
inline constexpr const char* kSyntacticInstruction =
    "Restructure the sentence (reorder clauses, change voice) while keeping its meaning. Keep every company name, "
    "column name and number exactly as written. Return only the rewritten statement.";
inline constexpr const char* kFilterInstruction =
    "Does the paraphrase preserve the exact meaning of the original statement, including every comparison, "
    "direction and number? Reply ACCEPT or REJECT followed by a short reason.";

struct ParaphraseRecord {
  std::string statement_id;
  std::string raw_text;
  std::string lexical_text;
  std::string syntactic_text;
  FilterVerdict filter_verdict = FilterVerdict::Accepted;
  double wpd = 0;
  double ld = 0;
  std::size_t edit_distance = 0;
  std::string diagnostic;

  bool operator==(const ParaphraseRecord&) const = default;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline ParaphraseRecord paraphrase_two_stage(const std::string& id, const std::string& raw, TextModelClient& client_a,
                                             const std::vector<std::string>& protect, const RetryPolicy& retry = {}) {
  ParaphraseRecord r;
  r.statement_id = id;
  r.raw_text = raw;
  r.lexical_text =
      trim(with_retries([&] { return client_a.complete({id + "/lexical", kLexicalInstruction, raw}); }, retry));
  r.syntactic_text = trim(
      with_retries([&] { return client_a.complete({id + "/syntactic", kSyntacticInstruction, r.lexical_text}); }, retry));
  if (r.lexical_text.empty() || r.syntactic_text.empty()) {
    r.filter_verdict = FilterVerdict::NeedsReview;
    r.diagnostic = "empty paraphrase";
    return r;
  }
  for (const auto* stage : {&r.lexical_text, &r.syntactic_text}) {
    if (auto v = invariant_violation(raw, *stage, protect)) {
      r.filter_verdict = FilterVerdict::NeedsReview;
      r.diagnostic = (stage == &r.lexical_text ? "lexical: " : "syntactic: ") + *v;
      break;
    }
  }
  const auto d = compute_wpd_ld(r.raw_text, r.syntactic_text);
  r.wpd = d.wpd;
  r.ld = d.ld;
  r.edit_distance = d.edit_distance;
  return r;
}

inline void require_distinct_clients(const TextModelClient& a, const TextModelClient& b) {
  if (a.endpoint_id() == b.endpoint_id()) {
    throw ClientError(ClientErrc::SameClientConfigured, "paraphraser and filter share endpoint " + a.endpoint_id());
  }
}

inline std::string filter_content(const ParaphraseRecord& r) {
  return "Original: " + r.raw_text + "\nParaphrase: " + r.syntactic_text;
}

inline FilterVerdict semantic_filter(ParaphraseRecord& r, TextModelClient& client_b, const TextModelClient& client_a,
                                     const RetryPolicy& retry = {}) {
  require_distinct_clients(client_a, client_b);
  if (r.filter_verdict != FilterVerdict::Accepted) return r.filter_verdict;
  const auto reply =
      trim(with_retries([&] { return client_b.complete({r.statement_id + "/filter", kFilterInstruction, filter_content(r)}); },
                        retry));
  std::string head;
  for (char c : reply.substr(0, 6)) head += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (head == "ACCEPT") {
    r.filter_verdict = FilterVerdict::Accepted;
  } else if (head == "REJECT") {
    r.filter_verdict = FilterVerdict::Rejected;
    r.diagnostic = reply;
  } else {
    r.filter_verdict = FilterVerdict::NeedsReview;
    r.diagnostic = "unparseable filter reply";
  }
  return r.filter_verdict;
}

inline json to_json(const ParaphraseRecord& r) {
  return {{"statement_id", r.statement_id},     {"raw_text", r.raw_text},
          {"lexical_text", r.lexical_text},     {"syntactic_text", r.syntactic_text},
          {"filter_verdict", to_string(r.filter_verdict)}, {"wpd", r.wpd},
          {"ld", r.ld},                         {"edit_distance", r.edit_distance},
          {"diagnostic", r.diagnostic}};
}

inline ParaphraseRecord paraphrase_record_from_json(const json& j) {
  ParaphraseRecord r;
  r.statement_id = j.at("statement_id").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.lexical_text = j.at("lexical_text").get<std::string>();
  r.syntactic_text = j.at("syntactic_text").get<std::string>();
  r.filter_verdict = parse_verdict(j.at("filter_verdict").get<std::string>());
  r.wpd = j.at("wpd").get<double>();
  r.ld = j.at("ld").get<double>();
  r.edit_distance = j.at("edit_distance").get<std::size_t>();
  r.diagnostic = j.at("diagnostic").get<std::string>();
  return r;
}

struct CorpusDeviation {
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t needs_review = 0;
  double mean_wpd = 0;
  double mean_ld = 0;
  double mean_edit_distance = 0;
};

// Means are over accepted records.
inline CorpusDeviation corpus_deviation(const std::vector<ParaphraseRecord>& records) {
  CorpusDeviation c;
  c.records = records.size();
  for (const auto& r : records) {
    if (r.filter_verdict == FilterVerdict::Rejected) ++c.rejected;
    if (r.filter_verdict == FilterVerdict::NeedsReview) ++c.needs_review;
    if (r.filter_verdict != FilterVerdict::Accepted) continue;
    ++c.accepted;
    c.mean_wpd += r.wpd;
    c.mean_ld += r.ld;
    c.mean_edit_distance += static_cast<double>(r.edit_distance);
  }
  if (c.accepted) {
    const auto n = static_cast<double>(c.accepted);
    c.mean_wpd /= n;
    c.mean_ld /= n;
    c.mean_edit_distance /= n;
  }
  return c;
}

inline json to_json(const CorpusDeviation& c) {
  return {{"records", c.records},   {"accepted", c.accepted},         {"rejected", c.rejected},
          {"needs_review", c.needs_review}, {"mean_wpd", c.mean_wpd}, {"mean_ld", c.mean_ld},
          {"mean_token_edit_distance", c.mean_edit_distance}, {"calibration_target", {{"wpd", 0.2}, {"ld", 0.45}}}};
}

// Raw template text of a statement, recovered from its spec.
inline std::string raw_text_of(const Instance& inst, std::size_t i) {
  const auto& st = inst.statements[i];
  return render_statement(st.spec, inst.skeleton, inst.facts, st.template_id);
}

struct ParaphraseOptions {
  std::size_t concurrency = 1;
  RetryPolicy retry{};
};

// Paraphrases every statement. Accepted paraphrases replace the text unless
// the result would duplicate a text already in the dataset; everything else
// keeps the raw template text.
inline std::vector<ParaphraseRecord> paraphrase_dataset(std::vector<Instance>& instances, TextModelClient& client_a,
                                                        TextModelClient& client_b, const ParaphraseOptions& opt = {}) {
  require_distinct_clients(client_a, client_b);
  const std::size_t n = instances.size() * 3;
  auto records = parallel_map<ParaphraseRecord>(n, opt.concurrency, [&](std::size_t k) {
    const auto& inst = instances[k / 3];
    auto r = paraphrase_two_stage(statement_id(inst.instance_id, k % 3), raw_text_of(inst, k % 3), client_a,
                                  protected_terms(inst.skeleton), opt.retry);
    semantic_filter(r, client_b, client_a, opt.retry);
    return r;
  });
  std::set<std::string> texts;
  for (std::size_t k = 0; k < n; ++k) texts.insert(records[k].raw_text);
  for (std::size_t k = 0; k < n; ++k) {
    auto& st = instances[k / 3].statements[k % 3];
    auto& r = records[k];
    st.text = r.raw_text;
    st.paraphrase_stage = ParaphraseStage::Raw;
    if (r.filter_verdict != FilterVerdict::Accepted) continue;
    if (r.syntactic_text != r.raw_text && texts.count(r.syntactic_text)) {
      r.filter_verdict = FilterVerdict::NeedsReview;
      r.diagnostic = "duplicate of another statement text";
      continue;
    }
    texts.insert(r.syntactic_text);
    st.text = r.syntactic_text;
    st.paraphrase_stage = r.syntactic_text == r.lexical_text ? ParaphraseStage::Lexical : ParaphraseStage::Syntactic;
    if (r.syntactic_text == r.raw_text) st.paraphrase_stage = ParaphraseStage::Raw;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Stub clients

class IdentityParaphraser : public TextModelClient {
 public:
  explicit IdentityParaphraser(std::string id = "stub:identity") : id_(std::move(id)) {}
  std::string endpoint_id() const override { return id_; }
  std::string complete(const TextRequest& r) override { return r.content; }

 private:
  std::string id_;
};

inline bool is_term_char(char c) { return is_word_char(c) || c == '_'; }

// Replaces whole-word occurrences of `from`.
inline std::string replace_words(std::string_view text, std::string_view from, std::string_view to) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto at = text.find(from, i);
    if (at == std::string_view::npos) break;
    const bool left = at == 0 || !is_term_char(text[at - 1]);
    const std::size_t end = at + from.size();
    const bool right = end >= text.size() || !is_term_char(text[end]);
    out += text.substr(i, at - i);
    out += left && right ? to : from;
    i = end;
  }
  out += text.substr(i);
  return out;
}

inline const std::vector<std::pair<std::string, std::string>>& synonym_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"greater than", "more than"},   {"less than", "lower than"},       {"highest", "largest"},
      {"lowest", "smallest"},          {"continuously", "steadily"},      {"values", "figures"},
      {"value", "figure"},             {"equals", "is equal to"},         {"every year", "each year"},
      {"all years", "every year"},     {"showed", "displayed"},           {"During", "Throughout"},
      {"the company", "the corporation"}, {"The company", "The corporation"}, {"cumulative sum", "running total"},
      {"total sum", "overall total"}};
  return table;
}

// Lexical stage swaps words from a fixed table; the syntactic stage moves the
// subject or a trailing year phrase to the front.
class RuleParaphraser : public TextModelClient {
 public:
  explicit RuleParaphraser(std::string id = "stub:rules") : id_(std::move(id)) {}
  std::string endpoint_id() const override { return id_; }

  std::string complete(const TextRequest& r) override {
    if (r.instruction == kLexicalInstruction) return lexical(r.content);
    if (r.instruction == kSyntacticInstruction) return syntactic(r.content);
    return r.content;
  }

  static std::string lexical(std::string text) {
    for (const auto& [from, to] : synonym_table()) text = replace_words(text, from, to);
    return text;
  }

  static std::string syntactic(const std::string& text) {
    if (text.empty() || text.back() != '.') return text;
    const std::string body = text.substr(0, text.size() - 1);
    static const std::regex copula(R"(^(The (?:company|corporation) .+) is ([^,]+)$)");
    static const std::regex during(R"(^((?:During|Throughout) the years when [^,]+), (the (?:company|corporation) .+ is [^,]+)$)");
    static const std::regex for_all(R"(^For (every year|all years|each year), (the (?:company|corporation) .+ is [^,]+)$)");
    static const std::regex trailing_year(R"(^(.+) in (\d{4})$)");
    std::smatch m;
    if (std::regex_match(body, m, during)) {
      return capitalize(m[2].str()) + " " + lower_first(m[1].str()) + ".";
    }
    if (std::regex_match(body, m, for_all)) return capitalize(m[2].str()) + " for " + m[1].str() + ".";
    if (std::regex_match(body, m, copula)) return m[2].str() + " is " + lower_first(m[1].str()) + ".";
    if (std::regex_match(body, m, trailing_year)) return "In " + m[2].str() + ", " + lower_first(m[1].str()) + ".";
    return text;
  }

 private:
  static std::string lower_first(std::string s) {
    if (s.rfind("The ", 0) == 0 || s.rfind("During ", 0) == 0 || s.rfind("Throughout ", 0) == 0) {
      s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    }
    return s;
  }
  std::string id_;
};

// Swaps comparative and trend polarity words. Used to exercise the filter.
class PolarityFlipParaphraser : public TextModelClient {
 public:
  std::string endpoint_id() const override { return "stub:polarity-flip"; }
  std::string complete(const TextRequest& r) override {
    if (r.instruction != kLexicalInstruction) return r.content;
    std::string t = replace_words(r.content, "greater", "\x01");
    t = replace_words(t, "less", "greater");
    t = replace_words(t, "\x01", "less");
    t = replace_words(t, "increasing", "\x01");
    t = replace_words(t, "decreasing", "increasing");
    return replace_words(t, "\x01", "decreasing");
  }
};

class AlwaysAcceptFilter : public TextModelClient {
 public:
  std::string endpoint_id() const override { return "stub:always-accept"; }
  std::string complete(const TextRequest&) override { return "ACCEPT"; }
};

// Rejects a paraphrase when any comparison, ranking or trend polarity class is
// counted differently in the two texts.
class PolarityGuardFilter : public TextModelClient {
 public:
  explicit PolarityGuardFilter(std::string id = "stub:polarity-guard") : id_(std::move(id)) {}
  std::string endpoint_id() const override { return id_; }

  std::string complete(const TextRequest& r) override {
    const auto cut = r.content.find("\nParaphrase: ");
    if (r.content.rfind("Original: ", 0) != 0 || cut == std::string::npos) return "UNSURE: malformed request";
    const auto original = r.content.substr(10, cut - 10);
    const auto paraphrase = r.content.substr(cut + 13);
    for (const auto& [label, words] : classes()) {
      if (count(original, words) != count(paraphrase, words)) return "REJECT: " + label + " polarity changed";
    }
    return "ACCEPT";
  }

 private:
  using Classes = std::vector<std::pair<std::string, std::vector<std::string>>>;
  static const Classes& classes() {
    static const Classes c = {
        {"greater", {"greater", "more", "higher", "larger", "exceeding", "above"}},
        {"less", {"less", "lower", "fewer", "smaller", "below"}},
        {"highest", {"highest", "largest", "greatest", "top", "biggest"}},
        {"lowest", {"lowest", "smallest", "least", "bottom"}},
        {"increase", {"increasing", "increased", "rising", "rose", "growing", "grew"}},
        {"decrease", {"decreasing", "decreased", "falling", "fell", "declining", "declined"}},
        {"plus", {"plus", "added"}},
        {"minus", {"minus", "subtracted"}},
    };
    return c;
  }
  static std::size_t count(const std::string& text, const std::vector<std::string>& words) {
    std::size_t n = 0;
    for (const auto& t : tokenize(text)) n += std::find(words.begin(), words.end(), t) != words.end();
    return n;
  }
  std::string id_;
};

// ---------------------------------------------------------------------------
// Human review

struct ReviewItem {
  std::string instance_id;
  std::size_t statement = 0;  // 0-based
  Difficulty difficulty = Difficulty::Easy;
  Kind kind = Kind::FC;
  bool truth = false;
  std::string original_text;
  std::string edited_text;
  std::string first_signoff;
  std::string second_signoff;
  std::string reason;

  bool operator==(const ReviewItem&) const = default;
};

// Hard instances are reviewed in full; other levels are sampled at `rate`
// (ceil) with a seeded draw. Instances holding a needs_review record are
// always added.
inline std::vector<std::size_t> review_selection(const std::vector<Instance>& instances, double rate,
                                                 std::uint64_t seed,
                                                 const std::vector<ParaphraseRecord>& records = {}) {
  std::set<std::size_t> picked;
  for (auto level : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (instances[i].difficulty == level) idx.push_back(i);
    }
    if (level == Difficulty::Hard) {
      picked.insert(idx.begin(), idx.end());
      continue;
    }
    const auto k = std::min(idx.size(), static_cast<std::size_t>(std::ceil(rate * static_cast<double>(idx.size()) - 1e-9)));
    Rng rng(derive_seed(seed, "review/" + std::string(to_string(level))));
    for (auto j : rng.sample_indices(idx.size(), k)) picked.insert(idx[j]);
  }
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < instances.size(); ++i) by_id[instances[i].instance_id] = i;
  for (const auto& r : records) {
    if (r.filter_verdict != FilterVerdict::NeedsReview) continue;
    const auto id = r.statement_id.substr(0, r.statement_id.rfind('#'));
    if (auto it = by_id.find(id); it != by_id.end()) picked.insert(it->second);
  }
  return {picked.begin(), picked.end()};
}

inline std::vector<ReviewItem> review_items(const std::vector<Instance>& instances,
                                            const std::vector<std::size_t>& selection) {
  std::vector<ReviewItem> out;
  for (auto i : selection) {
    const auto& inst = instances.at(i);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& st = inst.statements[k];
      out.push_back({inst.instance_id, k, inst.difficulty, st.spec.kind, st.spec.truth, st.text, st.text, "", "", ""});
    }
  }
  return out;
}

inline constexpr const char* kReviewHeader =
    "instance_id\tstatement\tdifficulty\tkind\tlabel\toriginal_text\tedited_text\tfirst_signoff\tsecond_signoff\treason";

inline std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\t') out += "\\t";
    else if (c == '\n') out += "\\n";
    else if (c == '\r') out += "\\r";
    else out += c;
  }
  return out;
}

inline std::string tsv_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i >= s.size()) throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, "dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, std::string("bad escape \\") + s[i]);
    }
  }
  return out;
}

inline std::string export_review(const std::vector<ReviewItem>& items) {
  std::string out = std::string(kReviewHeader) + "\n";
  for (const auto& it : items) {
    out += tsv_escape(it.instance_id) + "\t" + std::to_string(it.statement + 1) + "\t" +
           std::string(to_string(it.difficulty)) + "\t" + std::string(to_string(it.kind)) + "\t" +
           (it.truth ? "true" : "false") + "\t" + tsv_escape(it.original_text) + "\t" + tsv_escape(it.edited_text) +
           "\t" + tsv_escape(it.first_signoff) + "\t" + tsv_escape(it.second_signoff) + "\t" + tsv_escape(it.reason) +
           "\n";
  }
  return out;
}

inline std::vector<ReviewItem> parse_review(std::string_view file) {
  std::vector<ReviewItem> out;
  std::istringstream in{std::string(file)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kReviewHeader) {
    throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, "missing review header");
  }
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const auto where = "line " + std::to_string(n) + ": ";
    if (f.size() != 10) {
      throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, where + std::to_string(f.size()) + " fields");
    }
    ReviewItem it;
    try {
      it.instance_id = tsv_unescape(f[0]);
      const int k = std::stoi(f[1]);
      if (k < 1 || k > 3) throw std::out_of_range("statement");
      it.statement = static_cast<std::size_t>(k - 1);
      it.difficulty = parse_enum<Difficulty>(f[2]);
      it.kind = parse_enum<Kind>(f[3]);
      if (f[4] != "true" && f[4] != "false") throw std::invalid_argument("label");
      it.truth = f[4] == "true";
    } catch (const std::exception& e) {
      throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, where + e.what());
    }
    it.original_text = tsv_unescape(f[5]);
    it.edited_text = tsv_unescape(f[6]);
    it.first_signoff = tsv_unescape(f[7]);
    it.second_signoff = tsv_unescape(f[8]);
    it.reason = tsv_unescape(f[9]);
    if (trim(it.edited_text).empty()) throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, where + "empty edit");
    out.push_back(std::move(it));
  }
  return out;
}

enum class ReviewStatus { Unchanged, Accepted, Rejected };

inline std::string_view to_string(ReviewStatus s) {
  return s == ReviewStatus::Unchanged ? "unchanged" : s == ReviewStatus::Accepted ? "accepted" : "rejected";
}

struct ReviewOutcome {
  std::string instance_id;
  std::size_t statement = 0;
  ReviewStatus status = ReviewStatus::Unchanged;
  std::string diagnostic;
  bool signed_off = false;  // both passes recorded
};

// Numerals in an edit may only differ from the stored text where the edit
// rewrites the statement's threshold or result; that change is applied to a
// copy of the statement spec and the oracle must still reproduce the stored label.
inline std::optional<StatementSpec> edited_spec(const StatementSpec& spec, const std::string& before,
                                                const std::string& after, std::string& why) {
  const auto a = numerals(before), b = numerals(after);
  if (a == b) return spec;
  std::vector<std::string> gone, added;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(gone));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(added));
  if (gone.size() != 1 || added.size() != 1) {
    why = "edit changes numerals that are not a single parameter";
    return std::nullopt;
  }
  const auto value = Decimal::try_parse(added[0]);
  if (!value) {
    why = "unparseable numeral " + added[0];
    return std::nullopt;
  }
  auto out = spec;
  auto matches = [&](const Decimal& d) { return d.trimmed() == gone[0] || d.str() == gone[0]; };
  if (out.ct && matches(out.ct->threshold)) {
    out.ct->threshold = *value;
  } else if (out.ar && out.ar->form == ArForm::TwoYearEquality && matches(out.ar->result)) {
    out.ar->result = *value;
  } else if (out.ar && out.ar->form != ArForm::TwoYearEquality && matches(out.ar->threshold)) {
    out.ar->threshold = *value;
  } else {
    why = "numeral " + gone[0] + " is not an editable parameter";
    return std::nullopt;
  }
  return out;
}

inline std::vector<ReviewOutcome> import_review(std::vector<Instance>& instances, const std::vector<ReviewItem>& items) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < instances.size(); ++i) by_id[instances[i].instance_id] = i;
  std::vector<ReviewOutcome> out;
  for (const auto& it : items) {
    auto found = by_id.find(it.instance_id);
    if (found == by_id.end()) {
      throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, "unknown instance " + it.instance_id);
    }
    auto& inst = instances[found->second];
    auto& st = inst.statements[it.statement];
    if (st.spec.kind != it.kind || st.spec.truth != it.truth) {
      throw ParaphraseError(ParaphraseErrc::MalformedReviewFile, "row does not match " + statement_id(it.instance_id, it.statement));
    }
    ReviewOutcome o{it.instance_id, it.statement, ReviewStatus::Unchanged, "",
                    !trim(it.first_signoff).empty() && !trim(it.second_signoff).empty()};
    if (it.edited_text != st.text) {
      std::string why;
      auto spec = edited_spec(st.spec, st.text, it.edited_text, why);
      if (!spec) {
        o.status = ReviewStatus::Rejected;
        o.diagnostic = why;
      } else if (eval(*spec, inst.skeleton, inst.facts) != st.spec.truth) {
        o.status = ReviewStatus::Rejected;
        o.diagnostic = "oracle re-check flips the label to " + std::string(st.spec.truth ? "false" : "true");
      } else if (auto v = mention_violation(st.text, it.edited_text, protected_terms(inst.skeleton))) {
        o.status = ReviewStatus::Rejected;
        o.diagnostic = *v;
      } else {
        o.status = ReviewStatus::Accepted;
        st.spec = *spec;
        st.text = it.edited_text;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

inline json review_summary(const std::vector<ReviewOutcome>& outcomes, std::size_t exported) {
  std::size_t accepted = 0, rejected = 0, signed_off = 0;
  json diagnostics = json::array();
  for (const auto& o : outcomes) {
    accepted += o.status == ReviewStatus::Accepted;
    rejected += o.status == ReviewStatus::Rejected;
    signed_off += o.signed_off;
    if (o.status == ReviewStatus::Rejected) {
      diagnostics.push_back({{"statement_id", statement_id(o.instance_id, o.statement)}, {"diagnostic", o.diagnostic}});
    }
  }
  return {{"exported_rows", exported}, {"imported_rows", outcomes.size()}, {"accepted_edits", accepted},
          {"rejected_edits", rejected}, {"two_pass_signoffs", signed_off}, {"rejections", diagnostics}};
}

}  // namespace hopbench
