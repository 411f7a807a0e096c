#pragma once

#include <string>
#include <vector>

#include "hopbench/composer.hpp"
#include "hopbench/ingest.hpp"
#include "hopbench/rng.hpp"
#include "hopbench/sampler.hpp"

namespace fixtures {

using namespace hopbench;

inline std::vector<int> primes(std::size_t n) {
  std::vector<int> out;
  for (int k = 2; out.size() < n; ++k) {
    bool prime = true;
    for (int d = 2; d * d <= k; ++d) prime = prime && k % d != 0;
    if (prime) out.push_back(k);
  }
  return out;
}

// F1: entities A, B, C; years 2019-2023; 9 columns. c1 and c2 carry the
// documented series, c3..c9 distinct primes.
inline std::vector<std::vector<int>> f1_series(const std::string& column) {
  if (column == "c1") return {{1, 2, 3, 4, 5}, {5, 3, 1, 2, 4}, {2, 2, 2, 2, 2}};
  if (column == "c2") return {{10, 20, 30, 40, 50}, {50, 40, 30, 20, 10}, {10, 10, 10, 10, 10}};
  static const auto p = primes(7 * 15);
  const int k = std::stoi(column.substr(1)) - 3;
  std::vector<std::vector<int>> out(3, std::vector<int>(5));
  for (int e = 0; e < 3; ++e) {
    for (int y = 0; y < 5; ++y) out[e][y] = p[k * 15 + e * 5 + y];
  }
  return out;
}

inline const std::vector<std::string>& f1_columns() {
  static const std::vector<std::string> cols{"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"};
  return cols;
}

inline std::vector<RawRow> f1_rows() {
  std::vector<RawRow> rows;
  const char* ids[] = {"A", "B", "C"};
  for (int e = 0; e < 3; ++e) {
    for (int y = 0; y < 5; ++y) {
      RawRow r{ids[e], ids[e], 2019 + y, {}};
      for (const auto& c : f1_columns()) r.fields.emplace_back(c, std::to_string(f1_series(c)[e][y]));
      rows.push_back(r);
    }
  }
  return rows;
}

inline std::vector<ColumnMeta> f1_schema() {
  std::vector<ColumnMeta> out;
  for (const auto& c : f1_columns()) out.push_back({c, "million", "fixture column " + c});
  return out;
}

inline TabularSource f1_table() { return parse_tabular(f1_rows(), f1_schema()); }

// Skeleton of F1 with the first seven columns, chart column c1.
inline InstanceSkeleton f1_skeleton() {
  InstanceSkeleton s;
  s.entities = {"A", "B", "C"};
  s.display_names = {"A", "B", "C"};
  s.years = {2019, 2020, 2021, 2022, 2023};
  s.columns = {"c1", "c2", "c3", "c4", "c5", "c6", "c7"};
  s.chart_column = "c1";
  for (const auto& c : s.columns) {
    auto& grid = s.values[c];
    for (const auto& row : f1_series(c)) {
      std::vector<Cell> cells;
      for (int v : row) cells.emplace_back(Decimal::from_int(v));
      grid.push_back(cells);
    }
  }
  return s;
}

inline VerifiedFact fact(const std::string& id, const std::string& owner, const std::string& name,
                         const std::string& body) {
  return {id, owner, name + " " + body, owner + "/item1/0", Specificity::EntitySpecific};
}

// Two entity-specific facts per F1 entity.
inline FactTable f1_facts() {
  FactTable t;
  const char* ids[] = {"A", "B", "C"};
  const char* bodies[] = {"opened a distribution center in Ohio.", "acquired a shipping terminal at Fort Mifflin.",
                          "refinanced its revolving credit facility.", "sold its packaging division for cash.",
                          "launched a loyalty program in 2021.", "relocated its headquarters to Denver."};
  for (int e = 0; e < 3; ++e) {
    for (int k = 0; k < 2; ++k) {
      const std::string id = std::string(ids[e]) + "#" + std::to_string(k);
      t.emplace(id, fact(id, ids[e], ids[e], bodies[e * 2 + k]));
    }
  }
  return t;
}

inline std::vector<std::vector<std::string>> usable_facts(const InstanceSkeleton& s, const FactTable& facts) {
  std::vector<std::vector<std::string>> out(s.entities.size());
  for (const auto& [id, f] : facts) {
    if (auto e = s.entity_index(f.owner_entity); e && f.specificity == Specificity::EntitySpecific) {
      out[*e].push_back(id);
    }
  }
  return out;
}

// Random skeleton: 3 entities, 5 years, 7 columns with small integer or
// one-decimal values; the chart column is complete, table cells are missing
// with probability `missing`.
inline InstanceSkeleton random_skeleton(Rng& rng, double missing = 0.0) {
  InstanceSkeleton s;
  s.entities = {"E0", "E1", "E2"};
  s.display_names = {"ALPHA CORP", "BETA INC", "GAMMA LTD"};
  s.years = {2019, 2020, 2021, 2022, 2023};
  s.columns = {"k0", "k1", "k2", "k3", "k4", "k5", "k6"};
  s.chart_column = s.columns[rng.uniform(7)];
  for (const auto& c : s.columns) {
    const int scale = static_cast<int>(rng.uniform(2));
    const std::int64_t span = rng.coin() ? 10 : 1000;
    auto& grid = s.values[c];
    for (int e = 0; e < 3; ++e) {
      std::vector<Cell> row;
      for (int y = 0; y < 5; ++y) {
        if (c != s.chart_column && rng.unit() < missing) {
          row.emplace_back(std::nullopt);
        } else {
          row.emplace_back(Decimal(rng.range(-span / 4, span), scale));
        }
      }
      grid.push_back(row);
    }
  }
  return s;
}

}  // namespace fixtures
