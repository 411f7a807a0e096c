#include <gtest/gtest.h>

#include <filesystem>

#include "hopbench/assembler.hpp"
#include "support/f1_context.hpp"

using namespace hopbench;

namespace {

using fixtures::F1Context;

std::size_t ones(AnswerSet a) { return static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a))); }

}  // namespace

TEST(AnswerSet, LabelsRoundTrip) {
  for (AnswerSet a = 0; a < 8; ++a) EXPECT_EQ(parse_answer_label(answer_label(a)), a);
  EXPECT_EQ(answer_label(0), "none");
  EXPECT_EQ(answer_label(0b101), "1,3");
  EXPECT_THROW(parse_answer_label("1,4"), AssemblerError);
}

TEST(AnswerSet, CycleIsComplementPaired) {
  std::set<AnswerSet> seen(kAnswerCycle.begin(), kAnswerCycle.end());
  EXPECT_EQ(seen.size(), 8u);
  for (std::size_t i = 0; i < 8; i += 2) EXPECT_EQ(kAnswerCycle[i] ^ kAnswerCycle[i + 1], 0b111);
}

TEST(ModalityOrders, SixDistinctPermutations) {
  const auto& o = modality_orders();
  EXPECT_EQ(o.size(), 6u);
  EXPECT_EQ(std::set<ModalityOrder>(o.begin(), o.end()).size(), 6u);
  for (const auto& m : o) EXPECT_EQ(parse_order_label(order_label(m)), m);
}

TEST(Balance, EightHundredGivesHundredPerAnswerSet) {
  const auto plan = balance_level(Difficulty::Medium, 800, 7);
  std::map<AnswerSet, std::size_t> counts;
  for (const auto& c : plan) ++counts[c.answer_set];
  ASSERT_EQ(counts.size(), 8u);
  for (const auto& [a, n] : counts) EXPECT_EQ(n, 100u) << answer_label(a);
}

TEST(Balance, EightHundredThreeStaysWithinOne) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::map<AnswerSet, std::size_t> counts;
    for (const auto& c : balance_level(Difficulty::Hard, 803, seed)) ++counts[c.answer_set];
    for (const auto& [a, n] : counts) {
      EXPECT_GE(n, 100u);
      EXPECT_LE(n, 101u);
    }
  }
}

TEST(Balance, ModalityOrdersAndStylesAreUniform) {
  const auto plan = balance_level(Difficulty::Easy, 720, 11);
  std::map<ModalityOrder, std::size_t> orders;
  std::map<StyleTag, std::size_t> styles;
  for (const auto& c : plan) {
    ++orders[c.modality_order];
    ++styles[c.style];
  }
  ASSERT_EQ(orders.size(), 6u);
  for (const auto& [o, n] : orders) EXPECT_EQ(n, 120u);
  for (const auto& [t, n] : styles) EXPECT_EQ(n, 240u);
}

TEST(Balance, HardTrueFalseSplitIsEven) {
  const auto plan = balance_level(Difficulty::Hard, 714, 5);
  std::size_t t = 0;
  for (const auto& c : plan) t += ones(c.answer_set);
  EXPECT_EQ(t, 1071u);
  EXPECT_EQ(3 * plan.size() - t, 1071u);
}

TEST(Balance, KindsFollowTheLevelTaxonomy) {
  for (auto level : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
    const auto plan = balance_level(level, 240, 3);
    std::map<Kind, std::size_t> kinds;
    for (const auto& c : plan) {
      std::set<Kind> distinct(c.kinds.begin(), c.kinds.end());
      EXPECT_EQ(distinct.size(), 3u);
      for (auto k : c.kinds) {
        EXPECT_EQ(difficulty_of(k), level);
        ++kinds[k];
      }
    }
    if (level == Difficulty::Medium) {
      for (const auto& [k, n] : kinds) EXPECT_EQ(n, 90u) << to_string(k);
    }
    if (level == Difficulty::Hard) {
      for (const auto& [k, n] : kinds) EXPECT_EQ(n, 180u) << to_string(k);
    }
  }
}

TEST(Balance, EasyOneSlotPerModalityAndPieTakesRanking) {
  const auto plan = balance_level(Difficulty::Easy, 400, 9);
  std::map<ChartType, std::size_t> types;
  for (const auto& c : plan) {
    ++types[c.chart_type];
    std::set<Modality> m;
    for (auto k : c.kinds) m.insert(*footprint_of(k).begin());
    EXPECT_EQ(m.size(), 3u);
    if (c.chart_type == ChartType::Pie) EXPECT_EQ(c.kinds[2], Kind::RK);
  }
  ASSERT_EQ(types.size(), 4u);
  for (const auto& [t, n] : types) EXPECT_EQ(n, 100u);
  for (auto level : {Difficulty::Medium, Difficulty::Hard}) {
    for (const auto& c : balance_level(level, 90, 9)) EXPECT_NE(c.chart_type, ChartType::Pie);
  }
}

TEST(Balance, FrequencyWeightedChartTypes) {
  const auto plan = balance_level(Difficulty::Easy, 1000, 2, {true});
  std::map<ChartType, std::size_t> types;
  for (const auto& c : plan) ++types[c.chart_type];
  EXPECT_EQ(types[ChartType::Bar], 550u);
  EXPECT_EQ(types[ChartType::Pie], 306u);
  EXPECT_EQ(types[ChartType::Line], 127u);
  EXPECT_EQ(types[ChartType::Scatter], 17u);
}

TEST(Balance, Apportion) {
  EXPECT_EQ(apportion(10, {1, 1, 1}), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(apportion(0, {1, 2}), (std::vector<std::size_t>{0, 0}));
  const auto v = apportion(7, {0.5, 0.25, 0.25});
  EXPECT_EQ(v[0] + v[1] + v[2], 7u);
}

TEST(Assemble, TargetSetsAreHonoured) {
  F1Context f;
  const auto slots = f.slots({Kind::FC_CT, Kind::FC_AR, Kind::FC_RK}, 4);
  for (AnswerSet target = 0; target < 8; ++target) {
    const auto inst = assemble(f.s, f.facts, f.bundle(), Difficulty::Medium, slots, target, modality_orders()[0],
                               100 + target, "m-" + std::to_string(target));
    EXPECT_EQ(inst.answer_set, target);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(eval(inst.statements[i].spec, f.s, f.facts), ((target >> i) & 1u) != 0);
      EXPECT_EQ(inst.statements[i].spec.truth, ((target >> i) & 1u) != 0);
    }
  }
}

TEST(Assemble, MissingCandidateIsUnsatisfiable) {
  F1Context f;
  auto slots = f.slots({Kind::FC_CT, Kind::FC_AR, Kind::FC_RK}, 4);
  slots[1].distractor.reset();
  try {
    assemble(f.s, f.facts, f.bundle(), Difficulty::Medium, slots, 0, modality_orders()[0], 1, "x");
    FAIL();
  } catch (const AssemblerError& e) {
    EXPECT_EQ(e.code(), AssemblerErrc::UnsatisfiableTarget);
  }
  EXPECT_NO_THROW(assemble(f.s, f.facts, f.bundle(), Difficulty::Medium, slots, 0b111, modality_orders()[0], 1, "x"));
}

TEST(Assemble, EasyWithoutChartCandidateIsUnsatisfiable) {
  F1Context f;
  const auto slots = f.slots({Kind::FC, Kind::CT, Kind::AR}, 6);
  try {
    assemble(f.s, f.facts, f.bundle(), Difficulty::Easy, slots, 0b010, modality_orders()[0], 1, "x");
    FAIL();
  } catch (const AssemblerError& e) {
    EXPECT_EQ(e.code(), AssemblerErrc::UnsatisfiableTarget);
  }
}

TEST(Assemble, WrongLevelIsRejected) {
  F1Context f;
  const auto slots = f.slots({Kind::FC, Kind::CT, Kind::RK}, 6);
  EXPECT_THROW(assemble(f.s, f.facts, f.bundle(), Difficulty::Medium, slots, 1, modality_orders()[0], 1, "x"),
               AssemblerError);
}

TEST(Serialization, InstanceRoundTrip) {
  F1Context f;
  const auto slots = f.slots({Kind::FC, Kind::AR, Kind::TR}, 8);
  auto inst = assemble(f.s, f.facts, f.bundle(), Difficulty::Easy, slots, 0b101, modality_orders()[3], 42, "e-0001");
  inst.unit = "USD million";
  std::vector<StatementSpec> specs;
  for (const auto& st : inst.statements) specs.push_back(st.spec);
  inst.chart = build_spec(f.s, ChartType::Line, 42, specs, inst.unit);
  inst.chart_path = "charts/e-0001.svg";
  inst.skeleton.cell("c3", 1, 2).reset();
  const auto j = to_json(inst);
  EXPECT_EQ(j.at("schema"), kInstanceSchema);
  EXPECT_EQ(j.at("answer_set"), json::array({1, 3}));
  EXPECT_TRUE(j.at("table").at("B").at("2021").at("c3").is_null());
  EXPECT_EQ(j.at("table").at("A").at("2019").at("c2"), "10");
  EXPECT_FALSE(j.at("table").at("A").at("2019").contains("c1"));
  EXPECT_EQ(j.at("meta").at("chart_type"), "line");
  EXPECT_EQ(instance_from_json(json::parse(j.dump())), inst);
  auto bad = j;
  bad["schema"] = "other/1";
  EXPECT_THROW(instance_from_json(bad), AssemblerError);
  bad = j;
  bad["statements"].erase(0);
  EXPECT_THROW(instance_from_json(bad), AssemblerError);
}

TEST(Serialization, DatasetDirectoryRoundTrip) {
  F1Context f;
  std::vector<Instance> v;
  for (int i = 0; i < 4; ++i) {
    const auto slots = f.slots({Kind::FC_CT, Kind::FC_TR, Kind::FC_RK}, 20 + i);
    auto inst = assemble(f.s, f.facts, f.bundle(), Difficulty::Medium, slots, kAnswerCycle[i],
                         modality_orders()[i], 7 + i, "m-" + std::to_string(i));
    inst.chart = build_spec(f.s, kAllChartTypes[i % 3], 7 + i, {});
    inst.chart_path = std::string(kChartDir) + "/" + inst.instance_id + ".svg";
    v.push_back(inst);
  }
  const auto dir = std::filesystem::temp_directory_path() / "hopbench_assembler_rt";
  std::filesystem::remove_all(dir);
  serialize_dataset(dir, v, {{"seed", 3}});
  EXPECT_EQ(read_dataset(dir), v);
  const auto manifest = read_manifest(dir);
  EXPECT_EQ(manifest.at("instances"), 4);
  EXPECT_EQ(balance_report_from_json(manifest.at("balance")), recount(v));
  EXPECT_EQ(manifest.at("dataset_fnv1a64").get<std::uint64_t>(), fnv1a64(read_file(dir / kDatasetFile)));
  EXPECT_EQ(decode_chart_data(read_file(dir / v[2].chart_path)), v[2].chart.data);
  const auto r = recount(v);
  EXPECT_EQ(r.true_statements.at("Medium") + r.false_statements.at("Medium"), 12u);
  EXPECT_EQ(r.true_statements.at("Medium"), 6u);
  std::filesystem::remove_all(dir);
}
