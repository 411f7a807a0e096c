#include <gtest/gtest.h>

#include "hopbench/paraphrase.hpp"
#include "support/f1_context.hpp"

using namespace hopbench;
using fixtures::F1Context;

namespace {

// Multiset overlap and an O(n^2) scan for the earliest unused equal token.
Deviation brute_deviation(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<bool> used(b.size(), false);
  double shift = 0;
  std::size_t aligned = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || b[j] != a[i]) continue;
      used[j] = true;
      ++aligned;
      const double pi = a.size() == 1 ? 0 : double(i) / double(a.size() - 1);
      const double pj = b.size() == 1 ? 0 : double(j) / double(b.size() - 1);
      shift += std::fabs(pi - pj);
      break;
    }
  }
  Deviation d;
  d.ld = 1.0 - 2.0 * double(aligned) / double(a.size() + b.size());
  d.wpd = aligned ? shift / double(aligned) : 1.0;
  return d;
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> words = {"the", "company", "with", "highest", "value", "in", "2021", "is",
                                                 "ACME", "3.5", "greater", "than", "firm", "trend"};
  std::string out;
  const auto n = 1 + rng.uniform(12);
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + rng.pick(words);
  return out;
}

class DroppingNumeralParaphraser : public TextModelClient {
 public:
  std::string endpoint_id() const override { return "stub:drop-numeral"; }
  std::string complete(const TextRequest& r) override {
    std::string t = r.content;
    for (auto& c : t) {
      if (std::isdigit(static_cast<unsigned char>(c))) {
        c = 'N';
        break;
      }
    }
    return t;
  }
};

class NamedIdentity : public IdentityParaphraser {
 public:
  NamedIdentity() : IdentityParaphraser("stub:polarity-guard") {}
};

std::vector<Instance> f1_dataset(const F1Context& f) {
  std::vector<Instance> v;
  const std::array<std::array<Kind, 3>, 3> kinds = {{{Kind::FC, Kind::CT, Kind::RK},
                                                     {Kind::FC_CT, Kind::FC_AR, Kind::FC_RK},
                                                     {Kind::FC_CT_TR, Kind::FC_AR_RK, Kind::FC_CT_RK}}};
  const Difficulty levels[] = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};
  for (std::size_t i = 0; i < 9; ++i) {
    v.push_back(f.instance(levels[i % 3], kinds[i % 3], kAnswerCycle[i % 8], 30 + i, "i-" + std::to_string(i)));
  }
  return v;
}

}  // namespace

TEST(Metrics, TokenizerKeepsDecimals) {
  EXPECT_EQ(tokenize("The B-value is 3.5, in 2021."),
            (std::vector<std::string>{"the", "b", "value", "is", "3.5", "in", "2021"}));
  EXPECT_EQ(tokenize("End."), std::vector<std::string>{"end"});
}

TEST(Metrics, WorkedExamples) {
  auto d = compute_wpd_ld("a b c", "a b c");
  EXPECT_EQ(d.wpd, 0);
  EXPECT_EQ(d.ld, 0);
  EXPECT_EQ(d.edit_distance, 0u);
  d = compute_wpd_ld("a b c", "x y");
  EXPECT_EQ(d.ld, 1);
  EXPECT_EQ(d.wpd, 1);
  d = compute_wpd_ld("a b c", "c b a");
  EXPECT_DOUBLE_EQ(d.wpd, 2.0 / 3.0);
  EXPECT_EQ(d.ld, 0);
  EXPECT_EQ(d.edit_distance, 2u);
  // 2 shared of 3 + 4 tokens
  d = compute_wpd_ld("a b c", "a b x y");
  EXPECT_DOUBLE_EQ(d.ld, 1.0 - 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(d.wpd, (0.0 + std::fabs(0.5 - 1.0 / 3.0)) / 2.0);
  d = compute_wpd_ld("word", "word");
  EXPECT_EQ(d.wpd, 0);
  EXPECT_THROW(compute_wpd_ld("", "a"), ParaphraseError);
  EXPECT_THROW(compute_wpd_ld("a", "..."), ParaphraseError);
}

TEST(Metrics, PropertiesOnTenThousandPairs) {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_text(rng), b = random_text(rng);
    const auto ab = compute_wpd_ld(a, b), ba = compute_wpd_ld(b, a);
    ASSERT_GE(ab.wpd, 0);
    ASSERT_LE(ab.wpd, 1);
    ASSERT_GE(ab.ld, 0);
    ASSERT_LE(ab.ld, 1);
    ASSERT_DOUBLE_EQ(ab.ld, ba.ld);
    ASSERT_EQ(ab.edit_distance, ba.edit_distance);
    const auto brute = brute_deviation(tokenize(a), tokenize(b));
    ASSERT_DOUBLE_EQ(ab.ld, brute.ld);
    ASSERT_NEAR(ab.wpd, brute.wpd, 1e-12);
    ASSERT_EQ(compute_wpd_ld(a, a).wpd, 0);
    ASSERT_EQ(compute_wpd_ld(a, a).ld, 0);
  }
}

TEST(Invariants, NumeralsAndMentions) {
  EXPECT_EQ(numerals("c1 is 1,250.5 in 2021, not -3."), (std::vector<std::string>{"-3", "1", "1,250.5", "2021"}));
  const std::vector<std::string> names{"ACME", "c1"};
  EXPECT_FALSE(invariant_violation("ACME c1 3", "c1 of ACME: 3", names));
  EXPECT_TRUE(invariant_violation("ACME c1 3", "ACME c1 4", names));
  EXPECT_TRUE(invariant_violation("ACME c1 3", "Acme c1 3", names));
}

TEST(TwoStage, IdentityStubKeepsText) {
  IdentityParaphraser id;
  const auto r = paraphrase_two_stage("x#1", "The company with the highest c1 value in 2019 is B.", id, {"B", "c1"});
  EXPECT_EQ(r.lexical_text, r.raw_text);
  EXPECT_EQ(r.syntactic_text, r.raw_text);
  EXPECT_EQ(r.filter_verdict, FilterVerdict::Accepted);
  EXPECT_EQ(r.wpd, 0);
  EXPECT_EQ(r.ld, 0);
}

TEST(TwoStage, DroppedNumeralNeedsReview) {
  DroppingNumeralParaphraser drop;
  AlwaysAcceptFilter accept;
  auto r = paraphrase_two_stage("x#1", "The company with the highest c1 value in 2019 is B.", drop, {"B", "c1"});
  EXPECT_EQ(r.filter_verdict, FilterVerdict::NeedsReview);
  EXPECT_EQ(semantic_filter(r, accept, drop), FilterVerdict::NeedsReview);
}

TEST(TwoStage, RuleStubChangesWordsAndOrder) {
  RuleParaphraser rules;
  const std::string raw = "The company with the highest c1 value in 2019 is B.";
  const auto r = paraphrase_two_stage("x#1", raw, rules, {"B", "c1"});
  EXPECT_EQ(r.lexical_text, "The corporation with the largest c1 figure in 2019 is B.");
  EXPECT_EQ(r.syntactic_text, "B is the corporation with the largest c1 figure in 2019.");
  EXPECT_EQ(r.filter_verdict, FilterVerdict::Accepted);
  EXPECT_GT(r.ld, 0);
  EXPECT_GT(r.wpd, 0);
  EXPECT_EQ(RuleParaphraser::syntactic("During the years when the c2 value for A is less than 3, the company with "
                                       "the lowest c1 value is C."),
            "The company with the lowest c1 value is C during the years when the c2 value for A is less than 3.");
  EXPECT_EQ(RuleParaphraser::syntactic("A opened a plant in 2021."), "In 2021, A opened a plant.");
  EXPECT_EQ(RuleParaphraser::syntactic("No rule applies here"), "No rule applies here");
}

TEST(Filter, AcceptRejectAndSameEndpoint) {
  RuleParaphraser rules;
  PolarityFlipParaphraser flip;
  PolarityGuardFilter guard;
  AlwaysAcceptFilter accept;
  const std::string raw = "The company with c1 values greater than 2.5 in 2019 is A.";
  auto ok = paraphrase_two_stage("x#1", raw, rules, {"A", "c1"});
  EXPECT_EQ(semantic_filter(ok, guard, rules), FilterVerdict::Accepted);
  auto flipped = paraphrase_two_stage("x#2", raw, flip, {"A", "c1"});
  EXPECT_NE(flipped.syntactic_text.find("less than"), std::string::npos);
  EXPECT_EQ(semantic_filter(flipped, guard, flip), FilterVerdict::Rejected);
  EXPECT_NE(flipped.diagnostic.find("greater"), std::string::npos);
  auto any = paraphrase_two_stage("x#3", raw, flip, {"A", "c1"});
  EXPECT_EQ(semantic_filter(any, accept, flip), FilterVerdict::Accepted);
  NamedIdentity same_id;
  try {
    semantic_filter(ok, guard, same_id);
    FAIL();
  } catch (const ClientError& e) {
    EXPECT_EQ(e.code(), ClientErrc::SameClientConfigured);
  }
}

TEST(Dataset, RuleStubPreservesLabelsAndInvariants) {
  F1Context f;
  auto v = f1_dataset(f);
  const auto before = v;
  RuleParaphraser rules;
  PolarityGuardFilter guard;
  const auto records = paraphrase_dataset(v, rules, guard, {3, {}});
  ASSERT_EQ(records.size(), 27u);
  std::set<std::string> texts;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& st = v[i].statements[k];
      EXPECT_EQ(st.spec, before[i].statements[k].spec);
      EXPECT_EQ(eval(st.spec, v[i].skeleton, v[i].facts), st.spec.truth);
      EXPECT_FALSE(invariant_violation(raw_text_of(v[i], k), st.text, protected_terms(v[i].skeleton)));
      EXPECT_TRUE(texts.insert(st.text).second) << st.text;
      changed += st.text != before[i].statements[k].text;
      EXPECT_EQ(records[3 * i + k].statement_id, statement_id(v[i].instance_id, k));
    }
  }
  EXPECT_GT(changed, 0u);
  const auto c = corpus_deviation(records);
  EXPECT_EQ(c.records, 27u);
  EXPECT_GT(c.mean_ld, 0);
  auto again = before;
  EXPECT_EQ(paraphrase_dataset(again, rules, guard), records);
  EXPECT_EQ(again, v);
}

TEST(Dataset, IdentityStubCorpusIsZero) {
  F1Context f;
  auto v = f1_dataset(f);
  IdentityParaphraser id;
  AlwaysAcceptFilter accept;
  const auto c = corpus_deviation(paraphrase_dataset(v, id, accept));
  EXPECT_EQ(c.accepted, 27u);
  EXPECT_EQ(c.mean_wpd, 0);
  EXPECT_EQ(c.mean_ld, 0);
  for (const auto& inst : v) {
    for (const auto& st : inst.statements) EXPECT_EQ(st.paraphrase_stage, ParaphraseStage::Raw);
  }
}

TEST(Review, SelectionSizes) {
  std::vector<Instance> v;
  for (std::size_t i = 0; i < 95; ++i) {
    Instance inst;
    inst.instance_id = "e" + std::to_string(i);
    inst.difficulty = i < 41 ? Difficulty::Easy : i < 80 ? Difficulty::Medium : Difficulty::Hard;
    v.push_back(inst);
  }
  const auto sel = review_selection(v, 0.1, 3);
  std::map<Difficulty, std::size_t> n;
  for (auto i : sel) ++n[v[i].difficulty];
  EXPECT_EQ(n[Difficulty::Easy], 5u);     // ceil(4.1)
  EXPECT_EQ(n[Difficulty::Medium], 4u);   // ceil(3.9)
  EXPECT_EQ(n[Difficulty::Hard], 15u);
  EXPECT_EQ(review_selection(v, 0.1, 3), sel);
  ParaphraseRecord flagged;
  flagged.statement_id = "e7#2";
  flagged.filter_verdict = FilterVerdict::NeedsReview;
  const auto with = review_selection(v, 0.1, 3, {flagged});
  EXPECT_TRUE(std::count(with.begin(), with.end(), 7u));
}

TEST(Review, ExportImportRoundTrip) {
  F1Context f;
  auto v = f1_dataset(f);
  const auto sel = review_selection(v, 0.1, 1);
  auto items = review_items(v, sel);
  items[0].original_text += "\twith\\tab";
  items[0].reason = "line1\nline2";
  const auto parsed = parse_review(export_review(items));
  EXPECT_EQ(parsed, items);
}

TEST(Review, SurfaceEditAcceptedThresholdFlipRejected) {
  F1Context f;
  std::vector<Instance> v{f.instance(Difficulty::Easy, {Kind::FC, Kind::CT, Kind::RK}, 0b111, 5, "e-1")};
  std::size_t k = 0;
  while (v[0].statements[k].spec.kind != Kind::CT) ++k;
  const std::size_t other = (k + 1) % 3;
  auto& st = v[0].statements[k];
  ASSERT_EQ(st.spec.kind, Kind::CT);
  ASSERT_TRUE(st.spec.truth);
  auto items = review_items(v, {0});
  items[k].edited_text = "Looking at the table, " + st.text;
  items[k].first_signoff = "r1";
  items[k].second_signoff = "r2";
  auto out = import_review(v, parse_review(export_review(items)));
  EXPECT_EQ(out[k].status, ReviewStatus::Accepted);
  EXPECT_TRUE(out[k].signed_off);
  EXPECT_EQ(out[other].status, ReviewStatus::Unchanged);
  EXPECT_EQ(v[0].statements[k].text, items[k].edited_text);

  // Push the threshold past every in-scope value in the claimed direction.
  const auto& ct = *st.spec.ct;
  const std::string t = ct.threshold.trimmed();
  const std::string flipped = ct.cmp == Cmp::Greater ? "999" : "-999";
  std::string edit = st.text;
  edit.replace(edit.find(" " + t + " ") + 1, t.size(), flipped);
  items = review_items(v, {0});
  items[k].edited_text = edit;
  out = import_review(v, items);
  EXPECT_EQ(out[k].status, ReviewStatus::Rejected);
  EXPECT_NE(out[k].diagnostic.find("flips"), std::string::npos);
  EXPECT_NE(v[0].statements[k].text, edit);

  items[k].edited_text = st.text + " 7";
  out = import_review(v, items);
  EXPECT_EQ(out[k].status, ReviewStatus::Rejected);

  const auto summary = review_summary(out, items.size());
  EXPECT_EQ(summary.at("rejected_edits"), 1);
}

TEST(Review, MalformedFilesAreRejected) {
  F1Context f;
  auto v = f1_dataset(f);
  const auto good = export_review(review_items(v, {0}));
  EXPECT_THROW(parse_review("bad header\n"), ParaphraseError);
  EXPECT_THROW(parse_review(std::string(kReviewHeader) + "\na\tb\n"), ParaphraseError);
  auto bad_index = good;
  bad_index.replace(bad_index.find("\t1\t"), 3, "\t9\t");
  EXPECT_THROW(parse_review(bad_index), ParaphraseError);
  auto bad_escape = good;
  bad_escape.insert(bad_escape.rfind('\n'), "\\q");
  EXPECT_THROW(parse_review(bad_escape), ParaphraseError);
  auto items = parse_review(good);
  items[0].instance_id = "missing";
  EXPECT_THROW(import_review(v, items), ParaphraseError);
}
