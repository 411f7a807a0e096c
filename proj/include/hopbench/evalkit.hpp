#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "hopbench/assembler.hpp"
#include "hopbench/clients.hpp"
#include "hopbench/perturb.hpp"

namespace hopbench {

enum class EvalMode { Multimodal, Deplot, ChartWithheld, ModalityIntegration, FourStage, SelfRefine };

inline const auto& names_of(EvalMode) {
  static const std::vector<std::pair<EvalMode, std::string_view>> n = {
      {EvalMode::Multimodal, "multimodal"},
      {EvalMode::Deplot, "deplot"},
      {EvalMode::ChartWithheld, "chart-withheld"},
      {EvalMode::ModalityIntegration, "modality-integration"},
      {EvalMode::FourStage, "four-stage"},
      {EvalMode::SelfRefine, "self-refine"}};
  return n;
}
inline std::string_view to_string(EvalMode m) { return names_of(m)[static_cast<std::size_t>(m)].second; }

inline bool sends_image(EvalMode m) { return m != EvalMode::Deplot && m != EvalMode::ChartWithheld; }

// ---------------------------------------------------------------------------
// Prompts

struct ChartImage {
  std::string bytes;
  std::string media_type;
};

using ImageSource = std::function<ChartImage(const Instance&)>;

inline ImageSource svg_images() {
  return [](const Instance& inst) { return ChartImage{render_svg(inst.chart), "image/svg+xml"}; };
}

inline constexpr const char* kAnswerGrammar =
    "Finish with one final line of the form \"Answer: <statement numbers separated by commas, or none>\", for example "
    "\"Answer: 1, 3\" or \"Answer: none\".";

inline std::string mode_instruction(EvalMode m) {
  switch (m) {
    case EvalMode::ModalityIntegration:
      return "First rewrite the information in the chart as text, then combine it with the passages and the table "
             "into one description before judging each statement.";
    case EvalMode::FourStage:
      return "Reason in four stages: (1) identifying the required values for each statement, (2) modality "
             "identification: decide whether each value comes from the text, the table or the chart, (3) information "
             "retrieval: read those values, (4) information reasoning: combine them and decide each statement.";
    case EvalMode::SelfRefine:
      return "Give an initial answer, then critique your reasoning for errors and give a refined final answer.";
    default:
      return "Let's think step by step.";
  }
}

inline std::string text_section(const Instance& inst) {
  std::string out = "Text:\n";
  for (const auto& c : inst.text_bundle) out += c.joined() + "\n\n";
  return out;
}

// Table cells as JSON numbers; missing cells are null.
inline std::string table_section(const Instance& inst) {
  json t = table_json(inst.table_view());
  for (auto& [entity, years] : t.items()) {
    for (auto& [year, row] : years.items()) {
      for (auto& [col, v] : row.items()) {
        if (v.is_string()) v = json::parse(v.get<std::string>());
      }
    }
  }
  return "Table (JSON):\n" + t.dump(1) + "\n\n";
}

inline std::string deplot_rows(const ChartData& d) {
  std::string out = "Chart data (" + d.column + (d.unit.empty() ? "" : ", " + d.unit) + "):\n";
  out += "entity | year | value\n";
  for (const auto& s : d.series) {
    for (std::size_t y = 0; y < s.years.size(); ++y) {
      out += s.label + " | " + std::to_string(s.years[y]) + " | " + s.values[y].str() + "\n";
    }
  }
  return out;
}

inline Prompt build_prompt(const Instance& inst, EvalMode mode, const ImageSource& images = svg_images()) {
  Prompt p;
  p.instance_id = inst.instance_id;
  p.mode = std::string(to_string(mode));
  auto text = [&](std::string t) {
    if (!p.parts.empty() && p.parts.back().type == PromptPart::Type::Text) {
      p.parts.back().text += t;
    } else {
      p.parts.push_back(PromptPart::make_text(std::move(t)));
    }
  };
  text("You are given information about several companies as text, a table and a chart. Exactly zero, one, two or "
       "three of the numbered statements below are true. Identify every true statement.\n\n");
  for (auto m : inst.modality_order) {
    switch (m) {
      case Modality::Text: text(text_section(inst)); break;
      case Modality::Table: text(table_section(inst)); break;
      case Modality::Chart:
        if (mode == EvalMode::ChartWithheld) break;
        if (mode == EvalMode::Deplot) {
          text(deplot_rows(inst.chart.data) + "\n");
          break;
        }
        text("Chart:\n");
        {
          auto img = images(inst);
          p.parts.push_back(PromptPart::make_image(std::move(img.bytes), std::move(img.media_type)));
        }
        text("\n\n");
        break;
    }
  }
  std::string st = "Statements:\n";
  for (std::size_t i = 0; i < 3; ++i) st += std::to_string(i + 1) + ". " + inst.statements[i].text + "\n";
  text(st + "\n" + mode_instruction(mode) + " " + kAnswerGrammar + "\n");
  return p;
}

inline Prompt refine_prompt(const Prompt& first, const std::string& response) {
  Prompt p = first;
  p.parts.push_back(PromptPart::make_text("\nYour previous response:\n" + response +
                                          "\n\nReview that response for mistakes in reading or reasoning and give a "
                                          "refined answer. " + kAnswerGrammar + "\n"));
  return p;
}

// ---------------------------------------------------------------------------
// Answer parsing

// The last line matching "Answer: <indices or none>" decides. Any index
// outside 1..3 makes the response Invalid (nullopt). With `lenient`, a
// response without such a line falls back to its last set-like token group.
inline std::optional<AnswerSet> parse_answer(std::string_view raw, bool lenient = false) {
  static const std::regex line_re(R"(^\s*answer\s*:\s*(.*?)\s*$)", std::regex::icase);
  static const std::regex set_re(R"(^(none|\d+(\s*(,|and|&)\s*\d+)*)[\s.!]*$)", std::regex::icase);
  std::optional<std::string> last;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    std::string clean;
    for (char c : line) {
      if (c != '*' && c != '`' && c != '\r') clean += c;
    }
    std::smatch m;
    if (!std::regex_match(clean, m, line_re)) continue;
    std::smatch s;
    const std::string body = m[1].str();
    if (std::regex_match(body, s, set_re)) last = s[1].str();
    else last = "?";
  }
  if (!last && lenient) {
    static const std::regex group_re(R"(\bnone\b|\b\d+(\s*(,|and|&)\s*\d+)*\b)", std::regex::icase);
    const std::string s(raw);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), group_re); it != std::sregex_iterator(); ++it) {
      last = it->str();
    }
  }
  if (!last || *last == "?") return std::nullopt;
  std::string lower;
  for (char c : *last) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "none") return AnswerSet{0};
  AnswerSet out = 0;
  static const std::regex num_re(R"(\d+)");
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), num_re); it != std::sregex_iterator(); ++it) {
    const auto v = std::stol(it->str());
    if (v < 1 || v > 3) return std::nullopt;
    out |= static_cast<AnswerSet>(1u << (v - 1));
  }
  return out;
}

inline std::string answer_line(AnswerSet a) {
  return "Answer: " + (a == 0 ? std::string("none") : [&] {
    std::string s;
    for (int i = 0; i < 3; ++i) {
      if (a & (1u << i)) s += (s.empty() ? "" : ", ") + std::to_string(i + 1);
    }
    return s;
  }());
}

// ---------------------------------------------------------------------------
// Mock clients

class LabelledMock : public MultimodalModelClient {
 public:
  explicit LabelledMock(const std::vector<Instance>& instances) {
    for (const auto& i : instances) by_id_.emplace(i.instance_id, &i);
  }

 protected:
  const Instance& find(const Prompt& p) const {
    auto it = by_id_.find(p.instance_id);
    if (it == by_id_.end()) throw ClientError(ClientErrc::BadResponse, "unknown instance " + p.instance_id);
    return *it->second;
  }

 private:
  std::map<std::string, const Instance*> by_id_;
};

class OracleMock : public LabelledMock {
 public:
  using LabelledMock::LabelledMock;
  std::string endpoint_id() const override { return "mock:oracle"; }
  std::string complete(const Prompt& p) override { return "Reading the labels.\n" + answer_line(find(p).answer_set); }
};

// One of the 8 answer sets uniformly, seeded by instance id.
class RandomMock : public MultimodalModelClient {
 public:
  explicit RandomMock(std::uint64_t seed = 0) : seed_(seed) {}
  std::string endpoint_id() const override { return "mock:random"; }
  std::string complete(const Prompt& p) override {
    Rng rng(derive_seed(seed_, p.instance_id));
    return answer_line(static_cast<AnswerSet>(rng.uniform(8)));
  }

 private:
  std::uint64_t seed_;
};

class AlwaysNoneMock : public MultimodalModelClient {
 public:
  std::string endpoint_id() const override { return "mock:always-none"; }
  std::string complete(const Prompt&) override { return "Answer: none"; }
};

// Reasons perfectly from the text and the table but never sees the chart: a
// statement whose truth some chart completion flips gets a seeded coin flip.
class ChartWithheldReasoner : public LabelledMock {
 public:
  ChartWithheldReasoner(const std::vector<Instance>& instances, std::uint64_t seed = 0)
      : LabelledMock(instances), seed_(seed) {}
  std::string endpoint_id() const override { return "mock:chart-withheld-reasoner"; }
  bool accepts_images() const override { return false; }

  std::string complete(const Prompt& p) override {
    if (p.image_count() != 0) throw ClientError(ClientErrc::UnsupportedMode, "reasoner takes no images");
    const auto& inst = find(p);
    AnswerSet out = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& spec = inst.statements[i].spec;
      bool guess;
      if (chart_undetermined(inst, i)) {
        Rng rng(derive_seed(seed_, statement_id(inst.instance_id, i)));
        guess = rng.coin();
      } else {
        guess = eval(spec, inst.skeleton, inst.facts);
      }
      if (guess) out |= static_cast<AnswerSet>(1u << i);
    }
    return answer_line(out);
  }

  static bool chart_undetermined(const Instance& inst, std::size_t i) {
    return find_flipping_completion(inst.statements[i].spec, inst.skeleton, inst.facts, Modality::Chart,
                                    derive_seed(inst.seed, "withheld", i))
        .has_value();
  }

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRecord {
  std::string model_id;
  std::string instance_id;
  std::string mode;
  std::string prompt_text;
  std::size_t prompt_images = 0;
  std::uint64_t image_fnv1a64 = 0;
  std::string raw_response;
  std::optional<AnswerSet> parsed_answer;  // nullopt = Invalid
  double latency_ms = 0;
  int attempts = 0;
  std::string error;

  // Membership of each statement in the parsed answer; unknown when Invalid.
  std::optional<std::array<bool, 3>> per_statement_pred() const {
    if (!parsed_answer) return std::nullopt;
    return std::array<bool, 3>{(*parsed_answer & 1u) != 0, (*parsed_answer & 2u) != 0, (*parsed_answer & 4u) != 0};
  }
};

inline json to_json(const EvalRecord& r) {
  json preds = nullptr;
  if (auto p = r.per_statement_pred()) preds = json::array({(*p)[0], (*p)[1], (*p)[2]});
  return {{"model_id", r.model_id},
          {"instance_id", r.instance_id},
          {"mode", r.mode},
          {"prompt", {{"text", r.prompt_text}, {"images", r.prompt_images}, {"image_fnv1a64", r.image_fnv1a64}}},
          {"raw_response", r.raw_response},
          {"parsed_answer", r.parsed_answer ? json(answer_label(*r.parsed_answer)) : json("invalid")},
          {"per_statement_pred", preds},
          {"latency_ms", r.latency_ms},
          {"attempts", r.attempts},
          {"error", r.error}};
}

inline EvalRecord eval_record_from_json(const json& j) {
  EvalRecord r;
  r.model_id = j.at("model_id").get<std::string>();
  r.instance_id = j.at("instance_id").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.prompt_text = j.at("prompt").at("text").get<std::string>();
  r.prompt_images = j.at("prompt").at("images").get<std::size_t>();
  r.image_fnv1a64 = j.at("prompt").at("image_fnv1a64").get<std::uint64_t>();
  r.raw_response = j.at("raw_response").get<std::string>();
  const auto parsed = j.at("parsed_answer").get<std::string>();
  if (parsed != "invalid") r.parsed_answer = parse_answer_label(parsed);
  r.latency_ms = j.at("latency_ms").get<double>();
  r.attempts = j.at("attempts").get<int>();
  r.error = j.at("error").get<std::string>();
  return r;
}

struct EvalOptions {
  std::size_t concurrency = 1;
  RetryPolicy retry{};
  bool lenient = false;
  bool record_latency = true;
  std::string model_id;  // defaults to the client endpoint id
  ImageSource images = svg_images();
  std::chrono::milliseconds rate_interval{0};
};

inline EvalRecord evaluate_one(const Instance& inst, MultimodalModelClient& client, EvalMode mode,
                               const EvalOptions& opt) {
  if (sends_image(mode) && !client.accepts_images()) {
    throw ClientError(ClientErrc::UnsupportedMode, client.endpoint_id() + " cannot take mode " + std::string(to_string(mode)));
  }
  EvalRecord r;
  r.model_id = opt.model_id.empty() ? client.endpoint_id() : opt.model_id;
  r.instance_id = inst.instance_id;
  r.mode = std::string(to_string(mode));
  const auto prompt = build_prompt(inst, mode, opt.images);
  r.prompt_text = prompt.text();
  r.prompt_images = prompt.image_count();
  for (const auto& part : prompt.parts) {
    if (part.type == PromptPart::Type::Image) r.image_fnv1a64 = fnv1a64(part.bytes);
  }
  auto& limiter = RateLimiterRegistry::global().get(client.endpoint_id(), opt.rate_interval);
  const auto t0 = std::chrono::steady_clock::now();
  auto call = [&](const Prompt& p) {
    int used = 0;
    auto out = with_retries(
        [&] {
          limiter.acquire();
          return client.complete(p);
        },
        opt.retry, &used);
    r.attempts += used;
    return out;
  };
  try {
    r.raw_response = call(prompt);
    if (mode == EvalMode::SelfRefine) r.raw_response = call(refine_prompt(prompt, r.raw_response));
    r.parsed_answer = parse_answer(r.raw_response, opt.lenient);
  } catch (const ClientError& e) {
    if (e.code() == ClientErrc::UnsupportedMode) throw;
    r.error = e.what();
    if (r.attempts == 0) r.attempts = opt.retry.attempts;
  }
  if (opt.record_latency) {
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return r;
}

// One record per instance, in dataset order.
inline std::vector<EvalRecord> evaluate(const std::vector<Instance>& instances, MultimodalModelClient& client,
                                        EvalMode mode, const EvalOptions& opt = {}) {
  return parallel_map<EvalRecord>(instances.size(), opt.concurrency,
                                  [&](std::size_t i) { return evaluate_one(instances[i], client, mode, opt); });
}

inline std::string records_jsonl(const std::vector<EvalRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::vector<EvalRecord> records_from_jsonl(std::string_view text) {
  std::vector<EvalRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(eval_record_from_json(json::parse(line)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0, unknown = 0;

  std::size_t known() const { return tp + fp + fn + tn; }
  double precision() const { return tp + fp ? 100.0 * double(tp) / double(tp + fp) : 0; }
  double recall() const { return tp + fn ? 100.0 * double(tp) / double(tp + fn) : 0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0;
  }
  double accuracy() const { return known() ? 100.0 * double(tp + tn) / double(known()) : 0; }
  bool operator==(const Confusion&) const = default;
};

struct Tally {
  std::size_t correct = 0, total = 0;
  double pct() const { return total ? 100.0 * double(correct) / double(total) : 0; }
  bool operator==(const Tally&) const = default;
};

struct MetricsReport {
  std::string model_id;
  std::string mode;
  std::map<std::string, Tally> by_difficulty;  // instance exact match
  Tally overall;
  double average = 0;  // mean of the per-level accuracies
  Confusion confusion;
  std::map<std::string, Confusion> confusion_by_difficulty;
  std::map<std::string, Tally> by_chart_type;
  std::map<std::string, Tally> by_kind;  // statement level
  std::size_t invalid = 0;
  double invalid_rate = 0;
  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport compute_metrics(const std::vector<Instance>& instances, const std::vector<EvalRecord>& records) {
  std::map<std::string, const Instance*> by_id;
  for (const auto& i : instances) by_id.emplace(i.instance_id, &i);
  MetricsReport m;
  if (!records.empty()) {
    m.model_id = records.front().model_id;
    m.mode = records.front().mode;
  }
  for (const auto& r : records) {
    auto it = by_id.find(r.instance_id);
    if (it == by_id.end()) throw AssemblerError(AssemblerErrc::BadRecord, "record for unknown instance " + r.instance_id);
    const auto& inst = *it->second;
    const std::string level(to_string(inst.difficulty));
    const bool correct = r.parsed_answer && *r.parsed_answer == inst.answer_set;
    for (auto* t : {&m.by_difficulty[level], &m.overall, &m.by_chart_type[std::string(to_string(inst.chart.type()))]}) {
      ++t->total;
      t->correct += correct;
    }
    m.invalid += !r.parsed_answer;
    const auto pred = r.per_statement_pred();
    for (std::size_t i = 0; i < 3; ++i) {
      const bool truth = (inst.answer_set >> i) & 1u;
      auto& k = m.by_kind[std::string(to_string(inst.statements[i].spec.kind))];
      ++k.total;
      for (auto* c : {&m.confusion, &m.confusion_by_difficulty[level]}) {
        if (!pred) {
          ++c->unknown;
          continue;
        }
        const bool p = (*pred)[i];
        (p ? (truth ? c->tp : c->fp) : (truth ? c->fn : c->tn))++;
      }
      k.correct += pred && (*pred)[i] == truth;
    }
  }
  if (!m.by_difficulty.empty()) {
    for (const auto& [level, t] : m.by_difficulty) m.average += t.pct();
    m.average /= double(m.by_difficulty.size());
  }
  m.invalid_rate = records.empty() ? 0 : 100.0 * double(m.invalid) / double(records.size());
  return m;
}

inline json to_json(const Confusion& c) {
  return {{"TP", c.tp}, {"FP", c.fp}, {"FN", c.fn}, {"TN", c.tn}, {"unknown", c.unknown},
          {"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()}, {"accuracy", c.accuracy()}};
}

inline json to_json(const Tally& t) { return {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.pct()}}; }

template <typename T>
json map_json(const std::map<std::string, T>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = to_json(v);
  return out;
}

inline json to_json(const MetricsReport& m) {
  return {{"model_id", m.model_id},
          {"mode", m.mode},
          {"accuracy_by_difficulty", map_json(m.by_difficulty)},
          {"overall", to_json(m.overall)},
          {"average", m.average},
          {"statement_confusion", to_json(m.confusion)},
          {"statement_confusion_by_difficulty", map_json(m.confusion_by_difficulty)},
          {"accuracy_by_chart_type", map_json(m.by_chart_type)},
          {"statement_accuracy_by_kind", map_json(m.by_kind)},
          {"invalid", m.invalid},
          {"invalid_rate", m.invalid_rate}};
}

inline std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

// Text tables: accuracy by level, statement confusion, accuracy by chart type.
inline std::string text_report(const std::vector<MetricsReport>& rows) {
  std::string out = "Accuracy (%)\n";
  out += pad("model", 34) + pad("mode", 22) + pad("Easy", 9) + pad("Medium", 9) + pad("Hard", 9) + pad("Avg", 9) +
         "Invalid\n";
  auto level = [](const MetricsReport& m, const char* l) {
    auto it = m.by_difficulty.find(l);
    return it == m.by_difficulty.end() ? std::string("-") : fixed(it->second.pct());
  };
  for (const auto& m : rows) {
    out += pad(m.model_id, 34) + pad(m.mode, 22) + pad(level(m, "Easy"), 9) + pad(level(m, "Medium"), 9) +
           pad(level(m, "Hard"), 9) + pad(fixed(m.average), 9) + fixed(m.invalid_rate) + "\n";
  }
  for (const auto& m : rows) {
    out += "\nStatement confusion: " + m.model_id + " (" + m.mode + ")\n";
    out += pad("", 14) + pad("pred true", 12) + "pred false\n";
    out += pad("true", 14) + pad(std::to_string(m.confusion.tp), 12) + std::to_string(m.confusion.fn) + "\n";
    out += pad("false", 14) + pad(std::to_string(m.confusion.fp), 12) + std::to_string(m.confusion.tn) + "\n";
    out += "precision " + fixed(m.confusion.precision()) + "  recall " + fixed(m.confusion.recall()) + "  F1 " +
           fixed(m.confusion.f1()) + "  accuracy " + fixed(m.confusion.accuracy()) + "  unknown " +
           std::to_string(m.confusion.unknown) + "\n";
    out += "\nAccuracy by chart type: " + m.model_id + " (" + m.mode + ")\n";
    for (const auto& [type, t] : m.by_chart_type) {
      out += pad(type, 10) + pad(fixed(t.pct()), 9) + "(" + std::to_string(t.correct) + "/" + std::to_string(t.total) +
             ")\n";
    }
  }
  return out;
}

}  // namespace hopbench
