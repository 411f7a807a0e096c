#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopbench/oracle.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

// A replacement for one modality's content under which a statement's truth
// differs from its truth on the original instance.
struct Completion {
  Modality hidden = Modality::Text;
  InstanceSkeleton skeleton;
  FactTable facts;
  bool truth = false;
  std::string how;
};

namespace detail {

inline Decimal magnitude_bound(const StatementSpec& spec, const InstanceSkeleton& s) {
  double m = 1;
  for (const auto& [col, grid] : s.values) {
    for (const auto& row : grid) {
      for (const auto& c : row) {
        if (c) m = std::max(m, std::fabs(c->to_double()));
      }
    }
  }
  if (spec.ct) m = std::max(m, std::fabs(spec.ct->threshold.to_double()));
  if (spec.ar) {
    m = std::max(m, std::fabs(spec.ar->threshold.to_double()));
    m = std::max(m, std::fabs(spec.ar->result.to_double()));
  }
  return Decimal::from_int(static_cast<std::int64_t>(std::ceil(m)) * 10 + 10);
}

using Edit = std::function<void(InstanceSkeleton&)>;

struct Profile {
  std::string label;
  Edit apply;
};

inline void set_row(InstanceSkeleton& s, const std::string& col, std::size_t e, const std::vector<Decimal>& row) {
  for (std::size_t y = 0; y < row.size(); ++y) s.cell(col, e, y) = row[y];
}

// Puts q(y) = target[y] for the table quantity the statement's table part reads.
inline void set_quantity(InstanceSkeleton& s, const StatementSpec& spec, std::size_t e, std::size_t y,
                         const Decimal& target) {
  if (spec.ct) {
    s.cell(spec.ct->column, e, y) = target;
    return;
  }
  const auto& p = *spec.ar;
  if (p.form == ArForm::CrossColumnThreshold) {
    Decimal other = s.cell(p.column2, e, y).value_or(Decimal());
    s.cell(p.column2, e, y) = other;
    s.cell(p.column, e, y) = p.op == ArOp::Plus ? target - other : target + other;
  } else {
    s.cell(p.column, e, y) = target;
  }
}

inline std::vector<Profile> table_profiles(const StatementSpec& spec, const InstanceSkeleton& s, std::size_t e,
                                           const Decimal& big) {
  std::vector<Profile> out{{"orig", [](InstanceSkeleton&) {}}};
  const std::size_t n = s.years.size();
  if (spec.ar && spec.ar->form == ArForm::TwoYearEquality) {
    const auto p = *spec.ar;
    out.push_back({"equal", [p, e](InstanceSkeleton& k) {
                     const auto y1 = *k.year_index(*p.year1);
                     const auto y2 = *k.year_index(*p.year2);
                     Decimal b = k.cell(p.column, e, y2).value_or(Decimal());
                     k.cell(p.column, e, y2) = b;
                     k.cell(p.column, e, y1) = p.op == ArOp::Plus ? p.result - b : p.result + b;
                   }});
    out.push_back({"unequal", [p, e](InstanceSkeleton& k) {
                     const auto y1 = *k.year_index(*p.year1);
                     const auto y2 = *k.year_index(*p.year2);
                     Decimal b = k.cell(p.column, e, y2).value_or(Decimal());
                     k.cell(p.column, e, y2) = b;
                     const Decimal exact = p.op == ArOp::Plus ? p.result - b : p.result + b;
                     k.cell(p.column, e, y1) = exact + exact.ulp();
                   }});
    return out;
  }
  const Decimal hi = big;
  const Decimal lo = -big;
  auto levels = [&spec, e, n](std::vector<Decimal> targets) {
    return [&spec, e, n, targets](InstanceSkeleton& k) {
      for (std::size_t y = 0; y < n; ++y) set_quantity(k, spec, e, y, targets[y]);
    };
  };
  out.push_back({"high", levels(std::vector<Decimal>(n, hi))});
  out.push_back({"low", levels(std::vector<Decimal>(n, lo))});
  const bool per_year = is_conditional(spec.kind) || (spec.ct && spec.ct->scope == Scope::AllYears) ||
                        (spec.ar && spec.ar->form == ArForm::CrossColumnThreshold);
  if (per_year) {
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<Decimal> only_hi(n, lo), only_lo(n, hi);
      only_hi[k] = hi;
      only_lo[k] = lo;
      out.push_back({"high@" + std::to_string(k), levels(only_hi)});
      out.push_back({"low@" + std::to_string(k), levels(only_lo)});
    }
  }
  return out;
}

inline std::vector<Profile> chart_profiles(const InstanceSkeleton& s, std::size_t e, const Decimal& big) {
  const std::size_t n = s.years.size();
  const std::string col = s.chart_column;
  auto series = [n](const Decimal& base, int shape) {
    std::vector<Decimal> row;
    for (std::size_t k = 0; k < n; ++k) {
      std::int64_t step = shape == 0 ? static_cast<std::int64_t>(k)
                          : shape == 1 ? static_cast<std::int64_t>(n - k)
                                       : static_cast<std::int64_t>(k % 2);
      row.push_back(base + Decimal::from_int(step));
    }
    return row;
  };
  std::vector<Profile> out{{"orig", [](InstanceSkeleton&) {}}};
  const char* shapes[] = {"up", "down", "zig"};
  for (int level = 0; level < 2; ++level) {
    const Decimal base = level == 0 ? big : -big;
    for (int shape = 0; shape < 3; ++shape) {
      auto row = series(base, shape);
      out.push_back({std::string(shapes[shape]) + (level == 0 ? "-hi" : "-lo"),
                     [col, e, row](InstanceSkeleton& k) { set_row(k, col, e, row); }});
    }
  }
  return out;
}

inline bool flips(const StatementSpec& spec, const InstanceSkeleton& s, const FactTable& facts, bool base) {
  try {
    return eval(spec, s, facts) != base;
  } catch (const OracleError&) {
    return false;
  }
}

inline std::vector<std::size_t> table_entities(const StatementSpec& spec, const InstanceSkeleton& s,
                                               const FactTable& facts) {
  std::vector<std::size_t> out;
  if (is_conditional(spec.kind)) {
    out.push_back(*s.entity_index(*spec.condition_entity));
  } else if (is_definite_description(spec.kind)) {
    for (std::size_t e = 0; e < s.entities.size(); ++e) out.push_back(e);
  } else {
    std::string who = spec.subject;
    if (spec.fact_ref && spec.kind != Kind::FC) who = facts.at(*spec.fact_ref).owner_entity;
    if (auto e = s.entity_index(who)) out.push_back(*e);
  }
  return out;
}

}  // namespace detail

inline std::optional<Completion> find_flipping_completion(const StatementSpec& spec, const InstanceSkeleton& s,
                                                          const FactTable& facts, Modality hidden,
                                                          std::uint64_t seed, std::size_t budget = 4000) {
  const bool base = eval(spec, s, facts);
  const auto parts = parts_of(spec.kind);
  Completion c{hidden, s, facts, !base, ""};

  if (hidden == Modality::Text) {
    if (!parts.fc) return std::nullopt;
    const auto& fact = facts.at(*spec.fact_ref);
    for (const auto& other : s.entities) {
      if (other == fact.owner_entity) continue;
      c.facts = facts;
      c.facts.at(*spec.fact_ref).owner_entity = other;
      if (detail::flips(spec, s, c.facts, base)) {
        c.how = "fact owner -> " + other;
        return c;
      }
    }
    return std::nullopt;
  }

  const bool table = hidden == Modality::Table;
  if (table && !(parts.ct || parts.ar)) return std::nullopt;
  if (!table && !(parts.tr || parts.rk)) return std::nullopt;

  const Decimal big = detail::magnitude_bound(spec, s);
  std::vector<std::size_t> targets;
  if (table) {
    targets = detail::table_entities(spec, s, facts);
  } else {
    for (std::size_t e = 0; e < s.entities.size(); ++e) targets.push_back(e);
  }
  std::vector<std::vector<detail::Profile>> options;
  for (auto e : targets) {
    options.push_back(table ? detail::table_profiles(spec, s, e, big) : detail::chart_profiles(s, e, big));
  }

  std::size_t spent = 0;
  std::vector<std::size_t> pick(options.size(), 0);
  while (spent < budget) {
    InstanceSkeleton k = s;
    std::string how;
    for (std::size_t i = 0; i < options.size(); ++i) {
      options[i][pick[i]].apply(k);
      how += (i ? "," : "") + s.entities[targets[i]] + ":" + options[i][pick[i]].label;
    }
    ++spent;
    if (detail::flips(spec, k, facts, base)) {
      c.skeleton = std::move(k);
      c.how = how;
      return c;
    }
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }

  // Random resampling of every cell the hidden modality owns.
  std::vector<std::string> cols;
  if (table) {
    if (spec.ct) cols.push_back(spec.ct->column);
    if (spec.ar) {
      cols.push_back(spec.ar->column);
      if (!spec.ar->column2.empty()) cols.push_back(spec.ar->column2);
    }
  } else {
    cols.push_back(s.chart_column);
  }
  Rng rng(derive_seed(seed, "perturb"));
  const std::int64_t span = big.units();
  while (spent < budget) {
    InstanceSkeleton k = s;
    for (const auto& col : cols) {
      for (std::size_t e = 0; e < k.entities.size(); ++e) {
        for (std::size_t y = 0; y < k.years.size(); ++y) {
          if (rng.coin()) k.cell(col, e, y) = Decimal::from_int(rng.range(-span, span));
        }
      }
    }
    ++spent;
    if (detail::flips(spec, k, facts, base)) {
      c.skeleton = std::move(k);
      c.how = "random";
      return c;
    }
  }
  return std::nullopt;
}

// Modalities whose hiding leaves the statement's truth undetermined.
inline std::vector<Modality> flipping_modalities(const StatementSpec& spec, const InstanceSkeleton& s,
                                                 const FactTable& facts, std::uint64_t seed,
                                                 std::size_t budget = 4000) {
  std::vector<Modality> out;
  for (auto m : kAllModalities) {
    if (find_flipping_completion(spec, s, facts, m, derive_seed(seed, to_string(m)), budget)) out.push_back(m);
  }
  return out;
}

}  // namespace hopbench
