#pragma once

// Second evaluator for statement truth, written against the statement
// semantics only. It shares data types with the library but none of its
// evaluation code: values are flattened to plain integers at scale 6 and
// every kind is decided by enumerating entities and years directly.

#include <array>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hopbench/fact.hpp"
#include "hopbench/sampler.hpp"
#include "hopbench/statement.hpp"

namespace brute {

using hopbench::ArForm;
using hopbench::ArOp;
using hopbench::Cmp;
using hopbench::Direction;
using hopbench::Kind;
using hopbench::Position;
using hopbench::Scope;

constexpr int kScale = 6;

inline long long scaled(const hopbench::Decimal& d) {
  long long u = d.units();
  for (int s = d.scale(); s < kScale; ++s) u *= 10;
  return u;
}

struct Verdict {
  bool missing = false;
  bool truth = false;
};

struct Flat {
  int first_year = 0;
  int n_years = 0;
  std::vector<std::string> ids;
  // (column, entity, year) -> value
  std::map<std::tuple<std::string, int, int>, std::optional<long long>> cells;
};

inline Flat flatten(const hopbench::InstanceSkeleton& s) {
  Flat f;
  f.first_year = s.years.front();
  f.n_years = static_cast<int>(s.years.size());
  f.ids = s.entities;
  for (const auto& [col, grid] : s.values) {
    for (int e = 0; e < static_cast<int>(grid.size()); ++e) {
      for (int y = 0; y < f.n_years; ++y) {
        const auto& c = grid[e][y];
        f.cells[{col, e, y}] = c ? std::optional<long long>(scaled(*c)) : std::nullopt;
      }
    }
  }
  return f;
}

class Evaluator {
 public:
  Evaluator(const hopbench::StatementSpec& spec, const hopbench::InstanceSkeleton& s, const hopbench::FactTable& facts)
      : spec_(spec), flat_(flatten(s)), facts_(facts) {}

  Verdict run() {
    const std::string name(hopbench::to_string(spec_.kind));
    const bool has_fc = name.find("FC") != std::string::npos;
    if (spec_.kind == Kind::FC) return {false, facts_.at(*spec_.fact_ref).owner_entity == spec_.subject};
    int claimed = -1;
    const std::string who = has_fc ? facts_.at(*spec_.fact_ref).owner_entity : spec_.subject;
    for (int e = 0; e < 3; ++e) {
      if (flat_.ids[e] == who) claimed = e;
    }
    if (claimed < 0) return {false, false};

    const bool conditional = spec_.condition_entity.has_value();
    const bool unique_required =
        name == "CT+TR" || name == "AR+TR" || name == "FC+CT" || name == "FC+AR" || name == "FC+TR" ||
        name == "FC+CT+TR" || name == "FC+AR+TR";

    if (conditional) {
      int c = -1;
      for (int e = 0; e < 3; ++e) {
        if (flat_.ids[e] == *spec_.condition_entity) c = e;
      }
      std::vector<int> qualifying;
      for (int y = 0; y < flat_.n_years; ++y) {
        auto q = condition_value(c, y);
        if (!q) return {true, false};
        const long long t = scaled(spec_.ct ? spec_.ct->threshold : spec_.ar->threshold);
        const Cmp cmp = spec_.ct ? spec_.ct->cmp : spec_.ar->cmp;
        if (cmp == Cmp::Greater ? *q > t : *q < t) qualifying.push_back(y);
      }
      if (qualifying.empty()) return {false, false};
      for (int y : qualifying) {
        if (!strict_extreme(claimed, y)) return {false, false};
      }
      return {false, true};
    }

    if (unique_required) {
      int count = 0;
      bool claimed_holds = false;
      for (int e = 0; e < 3; ++e) {
        auto h = holds(e);
        if (!h) return {true, false};
        if (*h) {
          ++count;
          if (e == claimed) claimed_holds = true;
        }
      }
      return {false, count == 1 && claimed_holds};
    }
    auto h = holds(claimed);
    if (!h) return {true, false};
    return {false, *h};
  }

 private:
  std::optional<long long> at(const std::string& col, int e, int y) const { return flat_.cells.at({col, e, y}); }

  std::optional<long long> condition_value(int c, int y) const {
    if (spec_.ct) return at(spec_.ct->column, c, y);
    auto a = at(spec_.ar->column, c, y);
    auto b = at(spec_.ar->column2, c, y);
    if (!a || !b) return std::nullopt;
    return spec_.ar->op == ArOp::Plus ? *a + *b : *a - *b;
  }

  bool strict_extreme(int e, int y) const {
    const auto& col = spec_.rk->column;
    for (int o = 0; o < 3; ++o) {
      if (o == e) continue;
      if (spec_.rk->position == Position::Highest && !(*at(col, e, y) > *at(col, o, y))) return false;
      if (spec_.rk->position == Position::Lowest && !(*at(col, e, y) < *at(col, o, y))) return false;
    }
    return true;
  }

  // nullopt when a cell the statement reads for e is missing
  std::optional<bool> holds(int e) const {
    bool all = true;
    bool missing = false;
    if (spec_.ct) {
      const auto& p = *spec_.ct;
      std::vector<int> ys;
      if (p.scope == Scope::Year) ys.push_back(*p.year - flat_.first_year);
      else for (int y = 0; y < flat_.n_years; ++y) ys.push_back(y);
      for (int y : ys) {
        auto v = at(p.column, e, y);
        if (!v) { missing = true; continue; }
        const long long t = scaled(p.threshold);
        if (!(p.cmp == Cmp::Greater ? *v > t : *v < t)) all = false;
      }
    }
    if (spec_.ar) {
      const auto& p = *spec_.ar;
      if (p.form == ArForm::TwoYearEquality) {
        auto a = at(p.column, e, *p.year1 - flat_.first_year);
        auto b = at(p.column, e, *p.year2 - flat_.first_year);
        if (!a || !b) missing = true;
        else if ((p.op == ArOp::Plus ? *a + *b : *a - *b) != scaled(p.result)) all = false;
      } else if (p.form == ArForm::CrossColumnThreshold) {
        std::vector<int> ys;
        if (p.scope == Scope::Year) ys.push_back(*p.year - flat_.first_year);
        else for (int y = 0; y < flat_.n_years; ++y) ys.push_back(y);
        for (int y : ys) {
          auto a = at(p.column, e, y);
          auto b = at(p.column2, e, y);
          if (!a || !b) { missing = true; continue; }
          const long long q = p.op == ArOp::Plus ? *a + *b : *a - *b;
          if (!(p.cmp == Cmp::Greater ? q > scaled(p.threshold) : q < scaled(p.threshold))) all = false;
        }
      } else {
        long long total = 0;
        std::vector<long long> prefix;
        for (int y = 0; y < flat_.n_years; ++y) {
          auto v = at(p.column, e, y);
          if (!v) { missing = true; continue; }
          total += *v;
          prefix.push_back(total);
        }
        const long long t = scaled(p.threshold);
        auto ok = [&](long long x) { return p.cmp == Cmp::Greater ? x > t : x < t; };
        if (p.cumulative == hopbench::CumulativeMode::GrandTotal) {
          if (!ok(total)) all = false;
        } else {
          for (long long x : prefix) {
            if (!ok(x)) all = false;
          }
        }
      }
    }
    if (missing) return std::nullopt;
    if (spec_.tr) {
      const auto& p = *spec_.tr;
      for (int y = p.from; y < p.to; ++y) {
        const long long a = *at(p.column, e, y - flat_.first_year);
        const long long b = *at(p.column, e, y + 1 - flat_.first_year);
        if (p.direction == Direction::Increase ? b <= a : b >= a) all = false;
      }
    }
    if (spec_.rk) {
      if (!strict_extreme(e, *spec_.rk->year - flat_.first_year)) all = false;
    }
    return all;
  }

  const hopbench::StatementSpec& spec_;
  Flat flat_;
  const hopbench::FactTable& facts_;
};

inline Verdict evaluate(const hopbench::StatementSpec& spec, const hopbench::InstanceSkeleton& s,
                        const hopbench::FactTable& facts) {
  return Evaluator(spec, s, facts).run();
}

}  // namespace brute
