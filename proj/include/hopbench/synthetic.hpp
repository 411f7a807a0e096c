#pragma once

// Seeded synthetic source bundles shaped like annual-report extracts.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hopbench/ingest.hpp"
#include "hopbench/rng.hpp"

namespace hopbench {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t entities = 101;
  std::size_t columns = 70;
  int first_year = 2019;
  int years = 5;
  double missing_rate = 0.02;
  std::size_t min_paragraphs = 6;
  std::size_t max_paragraphs = 8;
};

namespace synth {

inline const std::vector<std::string>& syllables() {
  static const std::vector<std::string> s = {"AR", "BEL", "COR", "DA", "EL", "FEN", "GAL", "HOR", "IV", "JAS",
                                             "KEL", "LOR", "MAR", "NOR", "OL", "PEL", "QUA", "RIV", "SAL", "TOR",
                                             "UL", "VAN", "WEL", "XEN", "YOR", "ZEN", "BRI", "CAS", "DOR", "TEK"};
  return s;
}

inline const std::vector<std::string>& suffixes() {
  static const std::vector<std::string> s = {"CORP", "INC", "HOLDINGS", "GROUP", "LTD", "INDUSTRIES", "SYSTEMS"};
  return s;
}

// Distinct two- or three-syllable roots; no name contains another as a word.
inline std::vector<std::string> company_names(std::size_t n, Rng& rng) {
  std::set<std::string> roots;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string root;
    const std::size_t k = 2 + rng.uniform(2);
    for (std::size_t i = 0; i < k; ++i) root += rng.pick(syllables());
    if (!roots.insert(root).second) continue;
    out.push_back(root + " " + rng.pick(suffixes()));
  }
  return out;
}

inline const std::vector<std::string>& column_stems() {
  static const std::vector<std::string> s = {"rev", "cogs", "opex", "ebit", "ebitda", "capex", "fcf", "cash",
                                             "debt", "inv", "recv", "pay", "rnd", "sga", "div", "tax",
                                             "intexp", "dep", "amort", "ni", "ocf", "equity", "assets", "liab"};
  return s;
}

inline const std::vector<std::string>& column_qualifiers() {
  static const std::vector<std::string> q = {"", "_adj", "_core", "_intl", "_dom", "_seg"};
  return q;
}

// Stems whose values may fall below zero.
inline bool signed_stem(const std::string& stem) {
  return stem == "fcf" || stem == "ni" || stem == "ebit" || stem == "ocf" || stem == "tax";
}

struct Sentences {
  std::vector<std::string> verbs = {"opened", "acquired", "sold", "expanded", "closed", "leased", "built",
                                    "modernized", "relocated", "launched", "licensed", "divested"};
  std::vector<std::string> objects = {"a distribution center", "a research campus", "a packaging plant",
                                      "its logistics unit", "a data center", "a retail chain", "a seed business",
                                      "a coating facility", "its rail terminal", "a battery line", "a software studio",
                                      "a cold-storage depot", "a fabrication shop", "a pharmacy network"};
  std::vector<std::string> places = {"Ohio", "Texas", "Ontario", "Bavaria", "Gujarat", "Jalisco", "Queensland",
                                     "Norway", "Kyushu", "Sao Paulo", "Lyon", "the Netherlands", "Kenya", "Utah"};
  std::vector<std::string> generic = {
      "{n} is subject to various environmental regulations in the regions where it operates.",
      "{n} may face competition from larger rivals in the ordinary course of business.",
      "{n} complies with applicable export control laws."};
  std::vector<std::string> filler = {
      "Management reviewed the results with the audit committee.", "Seasonal demand shaped the quarterly pattern.",
      "The board approved the annual budget in February.", "Freight costs stayed elevated during the period."};
};

inline std::string fill(std::string t, const std::string& name) {
  for (std::size_t p; (p = t.find("{n}")) != std::string::npos;) t.replace(p, 3, name);
  return t;
}

}  // namespace synth

struct SyntheticSources {
  std::vector<RawRow> rows;
  std::vector<ColumnMeta> schema;
  std::map<std::string, std::vector<Document>> documents;  // entity id -> documents
};

inline SyntheticSources synthesize(const SyntheticOptions& opt) {
  Rng rng(derive_seed(opt.seed, "synthetic"));
  SyntheticSources out;
  std::vector<std::string> cols;
  for (const auto& q : synth::column_qualifiers()) {
    for (const auto& s : synth::column_stems()) {
      if (cols.size() < opt.columns) cols.push_back(s + q);
    }
  }
  for (const auto& c : cols) out.schema.push_back({c, "million", "synthetic line item " + c});

  const auto names = synth::company_names(opt.entities, rng);
  struct Profile {
    double base;
    double drift;
    double noise;
    int scale;
  };
  const synth::Sentences words;
  for (std::size_t e = 0; e < opt.entities; ++e) {
    char id[16];
    std::snprintf(id, sizeof id, "E%03zu", e + 1);
    std::vector<Profile> prof;
    for (const auto& c : cols) {
      const std::string stem = c.substr(0, c.find('_'));
      const double magnitude = std::pow(10.0, 1.0 + 3.0 * rng.unit());
      const double drift = (static_cast<double>(rng.uniform(3)) - 1.0) * (0.04 + 0.10 * rng.unit());
      double base = magnitude;
      if (synth::signed_stem(stem) && rng.unit() < 0.3) base = -magnitude * 0.2;
      prof.push_back({base, drift, 0.01 + 0.05 * rng.unit(), static_cast<int>(rng.uniform(2))});
    }
    for (int y = 0; y < opt.years; ++y) {
      RawRow r{id, names[e], opt.first_year + y, {}};
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (rng.unit() < opt.missing_rate) {
          r.fields.emplace_back(cols[c], "");
          continue;
        }
        const auto& p = prof[c];
        const double v = p.base * (1.0 + p.drift * y) + std::fabs(p.base) * p.noise * (2.0 * rng.unit() - 1.0);
        const double k = std::pow(10.0, p.scale);
        const auto units = static_cast<std::int64_t>(std::llround(v * k));
        r.fields.emplace_back(cols[c], Decimal(units, p.scale).str());
      }
      out.rows.push_back(std::move(r));
    }

    const std::size_t n_par = opt.min_paragraphs + rng.uniform(opt.max_paragraphs - opt.min_paragraphs + 1);
    std::vector<std::string> paragraphs;
    for (std::size_t p = 0; p < n_par; ++p) {
      std::string par;
      const std::size_t n_sent = 2 + rng.uniform(2);
      for (std::size_t s = 0; s < n_sent; ++s) {
        std::string sent;
        const double roll = rng.unit();
        if (roll < 0.12) {
          sent = synth::fill(rng.pick(words.generic), names[e]);
        } else if (roll < 0.25) {
          sent = rng.pick(words.filler);
        } else {
          const int year = opt.first_year + static_cast<int>(rng.uniform(static_cast<std::size_t>(opt.years)));
          sent = (rng.coin() ? "In " + std::to_string(year) + ", " + names[e] + " " : names[e] + " ") +
                 rng.pick(words.verbs) + " " + rng.pick(words.objects) + " in " + rng.pick(words.places) + ".";
        }
        par += (par.empty() ? "" : " ") + sent;
      }
      paragraphs.push_back(par);
    }
    out.documents[id].push_back({"item1", paragraphs});
  }
  return out;
}

// Writes table.csv, schema.csv and text/<entity>/<item>.txt under `dir`.
inline void write_sources(const std::filesystem::path& dir, const SyntheticSources& src) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "text");
  {
    std::ofstream out(dir / "schema.csv", std::ios::binary);
    write_schema(out, src.schema);
  }
  {
    std::ofstream out(dir / "table.csv", std::ios::binary);
    write_table(out, parse_tabular(src.rows, src.schema));
  }
  for (const auto& [entity, docs] : src.documents) {
    fs::create_directories(dir / "text" / entity);
    for (const auto& d : docs) {
      std::ofstream out(dir / "text" / entity / (d.source_item + ".txt"), std::ios::binary);
      for (std::size_t i = 0; i < d.paragraphs.size(); ++i) out << (i ? "\n\n" : "") << d.paragraphs[i];
      out << "\n";
    }
  }
}

}  // namespace hopbench
