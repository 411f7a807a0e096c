#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hopbench/decimal.hpp"
#include "hopbench/error.hpp"
#include "hopbench/ingest.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

enum class SamplerErrc { ExhaustedSampling, TooFewEntities, TooFewColumns, BadView };

inline const char* to_string(SamplerErrc c) {
  switch (c) {
    case SamplerErrc::ExhaustedSampling: return "ExhaustedSampling";
    case SamplerErrc::TooFewEntities: return "TooFewEntities";
    case SamplerErrc::TooFewColumns: return "TooFewColumns";
    case SamplerErrc::BadView: return "BadView";
  }
  return "SamplerError";
}

using SamplerError = CodedError<SamplerErrc>;

inline constexpr std::size_t kEntitiesPerInstance = 3;
inline constexpr std::size_t kColumnsPerInstance = 7;

struct SeparationConstraints {
  double delta_rank = 0.05;
  double delta_trend = 0.03;
};

// Every pairwise gap among `values` is nonzero and at least
// delta * max|value|.
inline bool rank_separated(const std::vector<Decimal>& values, double delta) {
  double top = 0;
  for (const auto& v : values) top = std::max(top, std::fabs(v.to_double()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (values[i] == values[j]) return false;
      const double gap = std::fabs((values[i] - values[j]).to_double());
      if (gap < delta * top) return false;
    }
  }
  return true;
}

// Every consecutive delta in series[from..to] is nonzero and at least
// delta * (max - min) of the whole series.
inline bool trend_separated(const std::vector<Decimal>& series, std::size_t from, std::size_t to, double delta) {
  if (series.empty() || to >= series.size() || from >= to) return false;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double span = (*hi - *lo).to_double();
  for (std::size_t i = from; i < to; ++i) {
    if (series[i] == series[i + 1]) return false;
    if (std::fabs((series[i + 1] - series[i]).to_double()) < delta * span) return false;
  }
  return true;
}

// Per-instance sub-table: three entities, seven numeric columns, one of which
// is rendered as the chart.
struct InstanceSkeleton {
  std::vector<std::string> entities;
  std::vector<std::string> display_names;
  std::vector<int> years;
  std::vector<std::string> columns;
  std::string chart_column;
  std::uint64_t rng_seed = 0;
  // column -> [entity][year]
  std::map<std::string, std::vector<std::vector<Cell>>, std::less<>> values;

  std::optional<std::size_t> entity_index(std::string_view id) const {
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (entities[i] == id) return i;
    }
    return std::nullopt;
  }
  std::optional<std::size_t> year_index(int year) const {
    if (years.empty() || year < years.front() || year > years.back()) return std::nullopt;
    return static_cast<std::size_t>(year - years.front());
  }
  const Cell& cell(std::string_view column, std::size_t e, std::size_t y) const {
    return values.find(column)->second.at(e).at(y);
  }
  Cell& cell(std::string_view column, std::size_t e, std::size_t y) { return values.find(column)->second.at(e).at(y); }
  bool has_column(std::string_view column) const { return values.find(column) != values.end(); }
  bool is_table_column(std::string_view column) const { return has_column(column) && column != chart_column; }
  std::vector<std::string> table_columns() const {
    std::vector<std::string> out;
    for (const auto& c : columns) {
      if (c != chart_column) out.push_back(c);
    }
    return out;
  }
  // Complete chart series for entity e.
  std::vector<Decimal> chart_series(std::size_t e) const {
    std::vector<Decimal> out;
    for (const auto& c : values.find(chart_column)->second.at(e)) out.push_back(c.value());
    return out;
  }
  const std::string& name_of(std::string_view id) const { return display_names.at(entity_index(id).value()); }

  bool operator==(const InstanceSkeleton&) const = default;
};

inline constexpr const char* kIdentityColumns[3] = {"display_name", "entity_id", "year"};

struct TableView {
  std::vector<std::string> entities;
  std::vector<std::string> display_names;
  std::vector<int> years;
  std::vector<std::string> columns;  // numeric, chart column excluded
  std::map<std::string, std::vector<std::vector<Cell>>, std::less<>> values;

  bool operator==(const TableView&) const = default;
};

struct ChartValues {
  std::string column;
  std::vector<std::string> entities;
  std::vector<std::string> display_names;
  std::vector<int> years;
  std::vector<std::vector<Decimal>> values;  // [entity][year]

  bool operator==(const ChartValues&) const = default;
};

inline std::pair<TableView, ChartValues> split_views(const InstanceSkeleton& s) {
  TableView tv{s.entities, s.display_names, s.years, s.table_columns(), {}};
  for (const auto& c : tv.columns) tv.values.emplace(c, s.values.find(c)->second);
  ChartValues cv{s.chart_column, s.entities, s.display_names, s.years, {}};
  for (std::size_t e = 0; e < s.entities.size(); ++e) cv.values.push_back(s.chart_series(e));
  return {std::move(tv), std::move(cv)};
}

// Rebuilds a skeleton from its two views; the chart column is placed at
// `chart_position` within the numeric column order.
inline InstanceSkeleton merge_views(const TableView& tv, const ChartValues& cv, std::size_t chart_position,
                                    std::uint64_t seed = 0) {
  if (tv.entities != cv.entities || tv.years != cv.years) {
    throw SamplerError(SamplerErrc::BadView, "table and chart views disagree on entities or years");
  }
  InstanceSkeleton s;
  s.entities = tv.entities;
  s.display_names = tv.display_names;
  s.years = tv.years;
  s.columns = tv.columns;
  s.columns.insert(s.columns.begin() + static_cast<std::ptrdiff_t>(std::min(chart_position, s.columns.size())),
                   cv.column);
  s.chart_column = cv.column;
  s.rng_seed = seed;
  s.values = tv.values;
  auto& chart = s.values[cv.column];
  for (const auto& row : cv.values) chart.emplace_back(row.begin(), row.end());
  return s;
}

struct SamplerOptions {
  std::size_t attempt_budget = 1000;
  SeparationConstraints separation;
  // Relative amplitude of optional synthetic jitter; 0 disables it.
  double jitter = 0.0;
};

inline bool column_complete_for(const TabularSource& t, const std::string& column,
                                const std::vector<std::size_t>& entity_idx) {
  for (auto e : entity_idx) {
    const auto& cells = t.entities[e].values.find(column)->second;
    for (const auto& c : cells) {
      if (!c) return false;
    }
  }
  return true;
}

// At least one year in which the three chart values are rank-separated.
inline bool chart_column_admissible(const InstanceSkeleton& s, const SeparationConstraints& sep) {
  for (std::size_t y = 0; y < s.years.size(); ++y) {
    std::vector<Decimal> vals;
    for (std::size_t e = 0; e < s.entities.size(); ++e) vals.push_back(*s.cell(s.chart_column, e, y));
    if (rank_separated(vals, sep.delta_rank)) return true;
  }
  return false;
}

inline Decimal jittered(const Decimal& v, double amplitude, Rng& rng) {
  const double factor = 1.0 + amplitude * (2.0 * rng.unit() - 1.0);
  const double scaled = std::round(static_cast<double>(v.units()) * factor);
  return Decimal(static_cast<std::int64_t>(scaled), v.scale());
}

inline InstanceSkeleton sample_skeleton(const SourceBundle& bundle, std::uint64_t seed,
                                        const SamplerOptions& options = {}) {
  const auto& t = bundle.tabular;
  if (t.entities.size() < kEntitiesPerInstance) {
    throw SamplerError(SamplerErrc::TooFewEntities, std::to_string(t.entities.size()) + " entities");
  }
  if (t.columns.size() < kColumnsPerInstance) {
    throw SamplerError(SamplerErrc::TooFewColumns, std::to_string(t.columns.size()) + " columns");
  }
  Rng rng(seed);
  for (std::size_t attempt = 0; attempt < options.attempt_budget; ++attempt) {
    auto picked = rng.sample_indices(t.entities.size(), kEntitiesPerInstance);
    std::sort(picked.begin(), picked.end());
    std::vector<std::size_t> complete;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (column_complete_for(t, t.columns[c].name, picked)) complete.push_back(c);
    }
    if (complete.empty()) continue;
    const std::size_t chart = complete[rng.uniform(complete.size())];
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c != chart) others.push_back(c);
    }
    auto rest = rng.sample_indices(others.size(), kColumnsPerInstance - 1);
    std::vector<std::size_t> cols{chart};
    for (auto r : rest) cols.push_back(others[r]);
    std::sort(cols.begin(), cols.end());

    InstanceSkeleton s;
    s.rng_seed = seed;
    s.years = t.years;
    for (auto e : picked) {
      s.entities.push_back(t.entities[e].entity_id);
      s.display_names.push_back(t.entities[e].display_name);
    }
    for (auto c : cols) {
      const auto& name = t.columns[c].name;
      s.columns.push_back(name);
      auto& grid = s.values[name];
      for (auto e : picked) grid.push_back(t.entities[e].values.find(name)->second);
    }
    s.chart_column = t.columns[chart].name;
    if (options.jitter > 0) {
      Rng jr(derive_seed(seed, "jitter", attempt));
      for (auto& [name, grid] : s.values) {
        for (auto& row : grid) {
          for (auto& cell : row) {
            if (cell) cell = jittered(*cell, options.jitter, jr);
          }
        }
      }
    }
    if (chart_column_admissible(s, options.separation)) return s;
  }
  throw SamplerError(SamplerErrc::ExhaustedSampling,
                     "no admissible skeleton in " + std::to_string(options.attempt_budget) + " attempts");
}

}  // namespace hopbench
