#pragma once

#include <array>
#include <string>
#include <vector>

#include "hopbench/assembler.hpp"
#include "support/fixtures.hpp"

namespace fixtures {

// F1 with a non-constant c1 series for C; a flat line admits no trend range.
inline InstanceSkeleton f1_varied() {
  auto s = f1_skeleton();
  const int c1[] = {2, 4, 3, 5, 1};
  for (std::size_t y = 0; y < 5; ++y) s.cell("c1", 2, y) = Decimal::from_int(c1[y]);
  return s;
}

struct F1Context {
  InstanceSkeleton s = f1_varied();
  FactTable facts = f1_facts();
  GenContext g{s, facts, usable_facts(s, facts), {}, CumulativeMode::RunningPrefix, false, 24};

  std::vector<TextChunk> bundle() const {
    std::vector<TextChunk> out;
    for (const auto& e : s.entities) {
      std::vector<std::string> paragraphs;
      for (const auto& [id, f] : facts) {
        if (f.owner_entity == e) paragraphs.push_back(f.text);
      }
      paragraphs.push_back("Results were reported in the annual filing.");
      out.push_back({e + "/item1/0", e, "item1", paragraphs});
    }
    return out;
  }

  std::array<SlotCandidates, 3> slots(const std::array<Kind, 3>& kinds, std::uint64_t seed) const {
    std::array<SlotCandidates, 3> out;
    Rng rng(seed);
    for (std::size_t k = 0; k < 3; ++k) {
      auto t = instantiate(kinds[k], g, rng);
      out[k].distractor = make_distractor(t, g, rng);
      out[k].truth = t;
    }
    return out;
  }

  Instance instance(Difficulty level, const std::array<Kind, 3>& kinds, AnswerSet target, std::uint64_t seed,
                    const std::string& id, ChartType type = ChartType::Line) const {
    auto inst = assemble(s, facts, bundle(), level, slots(kinds, seed), target,
                         modality_orders()[seed % 6], seed, id);
    std::vector<StatementSpec> specs;
    for (const auto& st : inst.statements) specs.push_back(st.spec);
    inst.unit = "USD million";
    inst.chart = build_spec(s, type, seed, specs, inst.unit);
    inst.chart_path = std::string(kChartDir) + "/" + id + ".svg";
    return inst;
  }
};

}  // namespace fixtures
