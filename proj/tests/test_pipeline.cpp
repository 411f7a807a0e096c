#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "hopbench/pipeline.hpp"

using namespace hopbench;
namespace fs = std::filesystem;

namespace {

SyntheticOptions small_sources() {
  SyntheticOptions o;
  o.entities = 24;
  o.columns = 30;
  return o;
}

RunConfig small_config(const fs::path& out, std::uint64_t seed = 7) {
  RunConfig c;
  c.synthetic = small_sources();
  c.output = out.string();
  c.seed = seed;
  c.counts = {10, 10, 10};
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hopbench_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

RunSummary run(const RunConfig& c) {
  ExtractiveFactStub facts;
  RuleParaphraser para;
  PolarityGuardFilter filter;
  return run_generation(c, {facts, para, filter});
}

}  // namespace

TEST(Synthetic, NamesUniqueAndNonNesting) {
  const auto src = synthesize(small_sources());
  std::set<std::string> names;
  for (const auto& r : src.rows) names.insert(r.display_name);
  ASSERT_EQ(names.size(), 24u);
  for (const auto& a : names) {
    for (const auto& b : names) {
      if (a != b) EXPECT_EQ(count_mentions(b, a), 0u) << a << " in " << b;
    }
  }
}

TEST(Synthetic, Deterministic) {
  const auto a = synthesize(small_sources());
  const auto b = synthesize(small_sources());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].fields, b.rows[i].fields);
  auto other = small_sources();
  other.seed = 2;
  EXPECT_NE(synthesize(other).rows[0].display_name + synthesize(other).rows[0].fields[0].second,
            a.rows[0].display_name + a.rows[0].fields[0].second);
}

TEST(Synthetic, AlignsAndYieldsEntityFacts) {
  RunConfig c;
  c.synthetic = small_sources();
  const auto src = load_sources(c);
  ExtractiveFactStub stub;
  const auto in = ingest(src, stub, c);
  EXPECT_TRUE(in.dropped_entities.empty());
  EXPECT_EQ(in.bundle.tabular.entities.size(), 24u);
  std::map<std::string, std::string> names;
  for (const auto& e : in.bundle.tabular.entities) names[e.entity_id] = e.display_name;
  for (const auto& [id, list] : in.bundle.facts) {
    std::size_t specific = 0;
    for (const auto& f : list) {
      EXPECT_EQ(f.owner_entity, id);
      if (f.specificity == Specificity::EntitySpecific) {
        ++specific;
        EXPECT_EQ(count_mentions(f.text, names[id]), 1u) << f.text;
      }
    }
    EXPECT_GT(specific, 0u) << id;
  }
}

TEST(Synthetic, FilesRoundTripThroughIngest) {
  const auto dir = scratch("files");
  const auto src = synthesize(small_sources());
  write_sources(dir, src);
  RunConfig from_files;
  from_files.table_path = (dir / "table.csv").string();
  from_files.schema_path = (dir / "schema.csv").string();
  from_files.text_dir = (dir / "text").string();
  RunConfig in_memory;
  in_memory.synthetic = small_sources();
  const auto a = load_sources(from_files);
  const auto b = load_sources(in_memory);
  EXPECT_EQ(a.tabular.columns, b.tabular.columns);
  EXPECT_EQ(a.tabular.years, b.tabular.years);
  ASSERT_EQ(a.tabular.entities.size(), b.tabular.entities.size());
  for (std::size_t i = 0; i < a.tabular.entities.size(); ++i) {
    EXPECT_EQ(a.tabular.entities[i].values, b.tabular.entities[i].values);
  }
  EXPECT_EQ(a.chunks, b.chunks);
  fs::remove_all(dir);
}

TEST(Config, RoundTripAndManifestReplay) {
  auto c = small_config("x", 11);
  c.cumulative = CumulativeMode::GrandTotal;
  c.balance.frequency_weighted_charts = true;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
  const json manifest = {{"schema", kManifestSchema}, {"config", j}};
  EXPECT_EQ(to_json(run_config_from_json(manifest)), j);
}

TEST(Config, Rejections) {
  EXPECT_THROW(run_config_from_json(json{{"seed", 1}}), PipelineError);
  auto j = to_json(small_config("x"));
  j["generation"]["cumulative"] = "sideways";
  EXPECT_THROW(run_config_from_json(j), PipelineError);
  j = to_json(small_config("x"));
  j["review"]["rate"] = 2;
  EXPECT_THROW(run_config_from_json(j), PipelineError);
}

TEST(Pipeline, GeneratesOracleConsistentDataset) {
  const auto dir = scratch("gen");
  const auto sum = run(small_config(dir));
  EXPECT_EQ(sum.instances, 30u);
  const auto instances = read_dataset(dir);
  ASSERT_EQ(instances.size(), 30u);
  std::set<std::string> texts;
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& st = inst.statements[i];
      EXPECT_EQ(eval(st.spec, inst.skeleton, inst.facts), bool((inst.answer_set >> i) & 1u)) << inst.instance_id;
      EXPECT_EQ(difficulty_of(st.spec.kind), inst.difficulty);
      EXPECT_TRUE(texts.insert(st.text).second) << st.text;
    }
    EXPECT_TRUE(fs::exists(dir / inst.chart_path));
    if (inst.chart.type() == ChartType::Pie) EXPECT_EQ(inst.difficulty, Difficulty::Easy);
  }
  EXPECT_EQ(instances.front().instance_id, "E00001");
  EXPECT_EQ(instances.back().instance_id, "H00010");
  EXPECT_TRUE(fs::exists(dir / "review.tsv"));
  const auto items = parse_review(read_file(dir / "review.tsv"));
  EXPECT_GE(items.size(), 30u);  // every Hard instance, three statements each

  const auto rep = audit_dataset(dir);
  for (const auto& v : rep.violations) ADD_FAILURE() << v.instance_id << " " << v.check << " " << v.message;
  EXPECT_EQ(rep.instances, 30u);
  EXPECT_EQ(rep.statements, 90u);
  fs::remove_all(dir);
}

TEST(Pipeline, ByteIdenticalReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  run(small_config(a));
  run(small_config(b));
  run(small_config(c, 8));
  // The recorded config holds the output path, which differs between the two runs.
  auto manifest_without_output = [](const fs::path& d) {
    auto m = read_manifest(d);
    m["config"].erase("output");
    return m.dump();
  };
  EXPECT_EQ(read_file(a / kDatasetFile), read_file(b / kDatasetFile));
  EXPECT_EQ(manifest_without_output(a), manifest_without_output(b));
  EXPECT_EQ(read_file(a / "review.tsv"), read_file(b / "review.tsv"));
  EXPECT_NE(read_file(a / kDatasetFile), read_file(c / kDatasetFile));
  for (const auto& e : fs::directory_iterator(a / kChartDir)) {
    EXPECT_EQ(read_file(e.path()), read_file(b / kChartDir / e.path().filename()));
  }
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Audit, FlagsCorruptedLabelAtItsStatement) {
  const auto dir = scratch("audit_label");
  run(small_config(dir));
  auto lines = read_file(dir / kDatasetFile);
  std::istringstream in(lines);
  std::string out, line;
  std::size_t n = 0;
  std::string target_id;
  std::size_t flipped = 0;
  while (std::getline(in, line)) {
    if (n++ == 4) {
      auto j = json::parse(line);
      target_id = j["instance_id"];
      auto set = j["answer_set"].get<std::vector<int>>();
      // Toggle statement 2.
      auto it = std::find(set.begin(), set.end(), 2);
      if (it == set.end()) {
        set.push_back(2);
        std::sort(set.begin(), set.end());
      } else {
        set.erase(it);
      }
      j["answer_set"] = set;
      flipped = 2;
      line = j.dump();
    }
    out += line + "\n";
  }
  write_file(dir / kDatasetFile, out);
  const auto rep = audit_dataset(dir);
  std::vector<Violation> labels;
  for (const auto& v : rep.violations) {
    if (v.check == "label") labels.push_back(v);
  }
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].instance_id, target_id);
  EXPECT_EQ(labels[0].statement, flipped);
  fs::remove_all(dir);
}

TEST(Audit, FlagsTamperedChart) {
  const auto dir = scratch("audit_chart");
  run(small_config(dir));
  const auto instances = read_dataset(dir);
  const auto& victim = instances[12];
  auto spec = victim.chart;
  auto& v = spec.data.series[0].values[0];
  v = v + Decimal::from_int(1);
  write_file(dir / victim.chart_path, render_svg(spec));
  const auto rep = audit_dataset(dir);
  ASSERT_FALSE(rep.ok());
  for (const auto& x : rep.violations) {
    EXPECT_EQ(x.instance_id, victim.instance_id);
    EXPECT_EQ(x.check, "chart-roundtrip");
  }
  fs::remove_all(dir);
}

TEST(Audit, FlagsTamperedTableAndHash) {
  const auto dir = scratch("audit_table");
  run(small_config(dir));
  auto lines = read_file(dir / kDatasetFile);
  auto first = lines.substr(0, lines.find('\n'));
  auto j = json::parse(first);
  auto& row = j["table"].begin().value();
  auto& year = row.begin().value();
  year.begin().value() = "123456789";
  lines.replace(0, first.size(), j.dump());
  write_file(dir / kDatasetFile, lines);
  const auto rep = audit_dataset(dir);
  std::set<std::string> checks;
  for (const auto& x : rep.violations) checks.insert(x.check);
  EXPECT_TRUE(checks.count("table"));
  EXPECT_TRUE(checks.count("manifest-hash"));
  fs::remove_all(dir);
}
