#include <gtest/gtest.h>

#include "hopbench/evalkit.hpp"
#include "support/f1_context.hpp"

using namespace hopbench;
using fixtures::F1Context;

namespace {

std::vector<Instance> f1_dataset(const F1Context& f, std::size_t n) {
  std::vector<Instance> v;
  const std::array<std::array<Kind, 3>, 3> kinds = {{{Kind::FC, Kind::CT, Kind::RK},
                                                     {Kind::FC_CT, Kind::FC_AR, Kind::FC_RK},
                                                     {Kind::FC_CT_TR, Kind::FC_AR_RK, Kind::FC_CT_RK}}};
  const Difficulty levels[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back(f.instance(levels[i % 3], kinds[i % 3], kAnswerCycle[(i / 3) % 8], 50 + i, "i-" + std::to_string(i),
                           kAllChartTypes[i % 3]));
  }
  return v;
}

class ScriptedClient : public MultimodalModelClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string endpoint_id() const override { return "scripted"; }
  std::string complete(const Prompt& p) override {
    prompts.push_back(p);
    return replies_.at(std::min(prompts.size() - 1, replies_.size() - 1));
  }
  std::vector<Prompt> prompts;

 private:
  std::vector<std::string> replies_;
};

class DownClient : public MultimodalModelClient {
 public:
  std::string endpoint_id() const override { return "down"; }
  std::string complete(const Prompt&) override {
    ++calls;
    throw ClientError(ClientErrc::Transport, "unreachable");
  }
  int calls = 0;
};

class TextOnlyClient : public AlwaysNoneMock {
 public:
  bool accepts_images() const override { return false; }
};

}  // namespace

TEST(ParseAnswer, Grammar) {
  EXPECT_EQ(parse_answer("Step 1 ... therefore\nAnswer: 1, 2"), AnswerSet{0b011});
  EXPECT_EQ(parse_answer("Answer: none"), AnswerSet{0});
  EXPECT_EQ(parse_answer("answer:NONE."), AnswerSet{0});
  EXPECT_EQ(parse_answer("Answer: 4"), std::nullopt);
  EXPECT_EQ(parse_answer("Answer: 0"), std::nullopt);
  EXPECT_EQ(parse_answer("Answer: 1\nthinking again\nAnswer: 2 and 3"), AnswerSet{0b110});
  EXPECT_EQ(parse_answer("**Answer:** 3"), AnswerSet{0b100});
  EXPECT_EQ(parse_answer("Answer: 2\nAnswer: maybe"), std::nullopt);
  EXPECT_EQ(parse_answer("I think statements 1 and 3 are true."), std::nullopt);
  EXPECT_EQ(parse_answer("I think statements 1 and 3 are true.", true), AnswerSet{0b101});
  EXPECT_EQ(parse_answer("no digits here", true), std::nullopt);
  EXPECT_EQ(parse_answer("Answer: 1, 1"), AnswerSet{0b001});
  for (AnswerSet a = 0; a < 8; ++a) EXPECT_EQ(parse_answer(answer_line(a)), a);
}

TEST(Prompt, SectionsFollowModalityOrder) {
  F1Context f;
  for (const auto& inst : f1_dataset(f, 6)) {
    const auto p = build_prompt(inst, EvalMode::Multimodal);
    EXPECT_EQ(p.image_count(), 1u);
    std::vector<std::pair<std::size_t, Modality>> at;
    const auto text = p.text();
    at.push_back({text.find("Text:\n"), Modality::Text});
    at.push_back({text.find("Table (JSON):\n"), Modality::Table});
    at.push_back({text.find("Chart:\n"), Modality::Chart});
    std::sort(at.begin(), at.end());
    for (std::size_t k = 0; k < 3; ++k) {
      ASSERT_NE(at[k].first, std::string::npos);
      EXPECT_EQ(at[k].second, inst.modality_order[k]);
    }
    for (const auto& st : inst.statements) EXPECT_NE(text.find(st.text), std::string::npos);
    EXPECT_NE(text.find("Answer: <statement numbers"), std::string::npos);
  }
}

TEST(Prompt, TableIsJsonWithNumbers) {
  F1Context f;
  auto inst = f1_dataset(f, 1)[0];
  inst.skeleton.cell("c3", 0, 0).reset();
  const auto text = build_prompt(inst, EvalMode::Multimodal).text();
  const auto start = text.find("Table (JSON):\n") + 14;
  const auto end = text.find("\n\n", start);
  const auto table = json::parse(text.substr(start, end - start));
  EXPECT_EQ(table.at("A").at("2019").at("c2"), 10);
  EXPECT_TRUE(table.at("A").at("2019").at("c3").is_null());
  EXPECT_FALSE(table.at("A").at("2019").contains("c1"));
}

TEST(Prompt, ModeVariants) {
  F1Context f;
  const auto inst = f1_dataset(f, 1)[0];
  const auto full = build_prompt(inst, EvalMode::Multimodal).text();
  const auto deplot = build_prompt(inst, EvalMode::Deplot);
  EXPECT_EQ(deplot.image_count(), 0u);
  for (const auto& s : inst.chart.data.series) {
    for (std::size_t y = 0; y < s.years.size(); ++y) {
      EXPECT_NE(deplot.text().find(s.label + " | " + std::to_string(s.years[y]) + " | " + s.values[y].str()),
                std::string::npos);
    }
  }
  const auto withheld = build_prompt(inst, EvalMode::ChartWithheld);
  EXPECT_EQ(withheld.image_count(), 0u);
  EXPECT_EQ(withheld.text().find("Chart"), std::string::npos);
  auto without_chart = full;
  without_chart.erase(without_chart.find("Chart:\n"), std::string("Chart:\n\n\n").size());
  EXPECT_EQ(withheld.text(), without_chart);
  const auto four = build_prompt(inst, EvalMode::FourStage).text();
  for (const char* stage : {"identifying the required values", "modality identification", "information retrieval",
                            "information reasoning"}) {
    EXPECT_NE(four.find(stage), std::string::npos) << stage;
  }
  EXPECT_EQ(build_prompt(inst, EvalMode::ModalityIntegration).image_count(), 1u);
  EXPECT_EQ(build_prompt(inst, EvalMode::SelfRefine).image_count(), 1u);
}

TEST(Evaluate, OracleMockIsPerfect) {
  F1Context f;
  const auto v = f1_dataset(f, 24);
  OracleMock oracle(v);
  const auto records = evaluate(v, oracle, EvalMode::Multimodal, {.concurrency = 4});
  ASSERT_EQ(records.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(records[i].instance_id, v[i].instance_id);
  const auto m = compute_metrics(v, records);
  EXPECT_EQ(m.overall.pct(), 100);
  EXPECT_EQ(m.confusion.precision(), 100);
  EXPECT_EQ(m.confusion.recall(), 100);
  EXPECT_EQ(m.confusion.tp + m.confusion.tn, 72u);
  EXPECT_EQ(m.invalid, 0u);
}

TEST(Evaluate, AlwaysNoneMatchesEmptySetFrequency) {
  F1Context f;
  const auto v = f1_dataset(f, 24);
  AlwaysNoneMock none;
  const auto m = compute_metrics(v, evaluate(v, none, EvalMode::Multimodal));
  std::size_t empty = 0, falses = 0;
  for (const auto& i : v) {
    empty += i.answer_set == 0;
    for (const auto& st : i.statements) falses += !st.spec.truth;
  }
  EXPECT_EQ(m.overall.correct, empty);
  EXPECT_EQ(m.confusion.recall(), 0);
  EXPECT_EQ(m.confusion.tn, falses);
  EXPECT_EQ(m.confusion.tp, 0u);
}

TEST(Evaluate, InstanceCorrectImpliesAllStatementsCorrect) {
  F1Context f;
  const auto v = f1_dataset(f, 24);
  RandomMock rnd(5);
  const auto records = evaluate(v, rnd, EvalMode::Multimodal);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (records[i].parsed_answer != v[i].answer_set) continue;
    const auto p = *records[i].per_statement_pred();
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p[k], v[i].statements[k].spec.truth);
  }
  EXPECT_EQ(evaluate(v, rnd, EvalMode::Multimodal)[3].raw_response, records[3].raw_response);
}

TEST(Evaluate, RandomMockConvergesToOneEighth) {
  // 20,000 draws: sd of the mean is sqrt(p(1-p)/n) = 0.234 points.
  RandomMock rnd(11);
  std::size_t hits = 0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    Prompt p;
    p.instance_id = "r-" + std::to_string(i);
    const auto a = parse_answer(rnd.complete(p));
    ASSERT_TRUE(a);
    hits += *a == static_cast<AnswerSet>(i % 8);
  }
  const double pct = 100.0 * double(hits) / double(n);
  EXPECT_NEAR(pct, 12.5, 3 * 0.234);
}

TEST(Evaluate, ClientErrorsBecomeInvalidAfterRetries) {
  F1Context f;
  const auto v = f1_dataset(f, 3);
  DownClient down;
  EvalOptions opt;
  opt.retry = {3, std::chrono::milliseconds(1)};
  const auto records = evaluate(v, down, EvalMode::Multimodal, opt);
  EXPECT_EQ(down.calls, 9);
  for (const auto& r : records) {
    EXPECT_FALSE(r.parsed_answer);
    EXPECT_EQ(r.attempts, 3);
    EXPECT_FALSE(r.error.empty());
  }
  const auto m = compute_metrics(v, records);
  EXPECT_EQ(m.invalid, 3u);
  EXPECT_EQ(m.confusion.unknown, 9u);
  EXPECT_EQ(m.overall.correct, 0u);
  EXPECT_EQ(m.overall.total, 3u);
}

TEST(Evaluate, UnsupportedModeForTextOnlyClient) {
  F1Context f;
  const auto v = f1_dataset(f, 1);
  TextOnlyClient text;
  try {
    evaluate(v, text, EvalMode::Multimodal);
    FAIL();
  } catch (const ClientError& e) {
    EXPECT_EQ(e.code(), ClientErrc::UnsupportedMode);
  }
  EXPECT_NO_THROW(evaluate(v, text, EvalMode::Deplot));
}

TEST(Evaluate, SelfRefineMakesASecondCall) {
  F1Context f;
  const auto v = f1_dataset(f, 1);
  ScriptedClient c({"Answer: 1", "On reflection\nAnswer: 2, 3"});
  const auto r = evaluate(v, c, EvalMode::SelfRefine);
  ASSERT_EQ(c.prompts.size(), 2u);
  EXPECT_NE(c.prompts[1].text().find("Your previous response:\nAnswer: 1"), std::string::npos);
  EXPECT_EQ(r[0].parsed_answer, AnswerSet{0b110});
  EXPECT_EQ(r[0].attempts, 2);
}

TEST(Evaluate, MetricsAreReproducibleFromTheLog) {
  F1Context f;
  const auto v = f1_dataset(f, 12);
  RandomMock rnd(2);
  const auto records = evaluate(v, rnd, EvalMode::Deplot);
  const auto back = records_from_jsonl(records_jsonl(records));
  ASSERT_EQ(back.size(), records.size());
  EXPECT_EQ(compute_metrics(v, back), compute_metrics(v, records));
  EXPECT_EQ(to_json(compute_metrics(v, back)).dump(), to_json(compute_metrics(v, records)).dump());
  const auto report = text_report({compute_metrics(v, records)});
  EXPECT_NE(report.find("Accuracy by chart type"), std::string::npos);
  EXPECT_NE(report.find("mock:random"), std::string::npos);
}

TEST(Evaluate, ChartWithheldReasonerGuessesOnlyWhenChartMatters) {
  F1Context f;
  const auto v = f1_dataset(f, 6);
  ChartWithheldReasoner r(v, 3);
  const auto records = evaluate(v, r, EvalMode::ChartWithheld);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto pred = *records[i].per_statement_pred();
    for (std::size_t k = 0; k < 3; ++k) {
      if (!ChartWithheldReasoner::chart_undetermined(v[i], k)) EXPECT_EQ(pred[k], v[i].statements[k].spec.truth);
    }
  }
  EXPECT_THROW(evaluate(v, r, EvalMode::Multimodal), ClientError);
}
