#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hopbench/error.hpp"
#include "hopbench/rng.hpp"
#include "hopbench/sampler.hpp"
#include "hopbench/statement.hpp"

namespace hopbench {

enum class ChartErrc { InadmissibleChartType, UnsupportedResolution, BadSvg };

inline const char* to_string(ChartErrc c) {
  switch (c) {
    case ChartErrc::InadmissibleChartType: return "InadmissibleChartType";
    case ChartErrc::UnsupportedResolution: return "UnsupportedResolution";
    case ChartErrc::BadSvg: return "BadSvg";
  }
  return "ChartError";
}

using ChartError = CodedError<ChartErrc>;

enum class ChartType { Line, Bar, Scatter, Pie };
enum class StyleTag { A, B, C };

inline const auto& names_of(ChartType) {
  static const std::vector<std::pair<ChartType, std::string_view>> t = {
      {ChartType::Line, "line"}, {ChartType::Bar, "bar"}, {ChartType::Scatter, "scatter"}, {ChartType::Pie, "pie"}};
  return t;
}
inline const auto& names_of(StyleTag) {
  static const std::vector<std::pair<StyleTag, std::string_view>> t = {
      {StyleTag::A, "style-A"}, {StyleTag::B, "style-B"}, {StyleTag::C, "style-C"}};
  return t;
}
inline std::string_view to_string(ChartType v) { return names_of(v)[static_cast<std::size_t>(v)].second; }
inline std::string_view to_string(StyleTag v) { return names_of(v)[static_cast<std::size_t>(v)].second; }

inline constexpr std::array<ChartType, 4> kAllChartTypes = {ChartType::Line, ChartType::Bar, ChartType::Scatter,
                                                            ChartType::Pie};

inline const std::vector<std::string>& chart_fonts() {
  static const std::vector<std::string> f = {
      "Arial",          "Verdana",  "Times New Roman", "Courier New", "Georgia",  "Comic Sans MS",
      "Tahoma",         "Cambria",  "Microsoft YaHei", "Nirmala UI",  "Calibri",  "Consolas",
      "Segoe UI",       "Garamond", "Century Schoolbook", "Book Antiqua"};
  return f;
}

inline const std::vector<std::string>& chart_palette() {
  static const std::vector<std::string> p = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2"};
  return p;
}

struct SizeRange {
  int min = 0;
  int max = 0;
};

struct StyleRanges {
  SizeRange title{14, 22};
  SizeRange label{10, 16};
  SizeRange legend{9, 14};
  SizeRange tick{8, 12};
};

struct ChartStyle {
  std::string font_family;
  int title_size = 16;
  int label_size = 12;
  int legend_size = 10;
  int tick_size = 10;
  std::vector<std::string> palette;  // one color per series
  double stroke_width = 2.0;
  double bar_fill = 0.7;  // fraction of a year slot covered by its bar group
  StyleTag tag = StyleTag::A;

  bool operator==(const ChartStyle&) const = default;
};

struct ChartSeries {
  std::string entity_id;
  std::string label;
  std::vector<int> years;
  std::vector<Decimal> values;

  bool operator==(const ChartSeries&) const = default;
};

// Data block embedded in the SVG; excludes styling.
struct ChartData {
  ChartType type = ChartType::Line;
  std::string column;
  std::string unit;
  std::vector<ChartSeries> series;

  bool operator==(const ChartData&) const = default;
};

struct ChartSpec {
  ChartData data;
  ChartStyle style;
  std::string title;
  std::string x_label;
  std::string y_label;

  ChartType type() const { return data.type; }
  bool operator==(const ChartSpec&) const = default;
};

// Pie charts carry one year and only accompany Easy instances whose chart
// statement is a ranking; the pie year is that statement's year.
inline std::optional<int> pie_year_for(std::span<const StatementSpec> statements) {
  std::optional<int> year;
  for (const auto& s : statements) {
    if (difficulty_of(s.kind) != Difficulty::Easy) return std::nullopt;
    if (s.kind == Kind::TR) return std::nullopt;
    if (s.kind == Kind::RK) {
      if (!s.rk || !s.rk->year || (year && *year != *s.rk->year)) return std::nullopt;
      year = s.rk->year;
    }
  }
  return year;
}

inline std::string unit_label(const std::string& unit) { return unit.empty() ? "" : " (" + unit + ")"; }

inline ChartStyle sample_style(Rng& rng, std::size_t n_series, const StyleRanges& ranges = {}) {
  ChartStyle st;
  st.font_family = rng.pick(chart_fonts());
  st.title_size = static_cast<int>(rng.range(ranges.title.min, ranges.title.max));
  st.label_size = static_cast<int>(rng.range(ranges.label.min, ranges.label.max));
  st.legend_size = static_cast<int>(rng.range(ranges.legend.min, ranges.legend.max));
  st.tick_size = static_cast<int>(rng.range(ranges.tick.min, ranges.tick.max));
  for (auto i : rng.sample_indices(chart_palette().size(), n_series)) st.palette.push_back(chart_palette()[i]);
  static const double strokes[] = {1.5, 2.0, 2.5, 3.0};
  static const double fills[] = {0.6, 0.7, 0.8};
  st.stroke_width = strokes[rng.uniform(4)];
  st.bar_fill = fills[rng.uniform(3)];
  st.tag = static_cast<StyleTag>(rng.uniform(3));
  return st;
}

// `statements` are the instance's statements; pass an empty span to skip the
// admissibility check for a non-pie chart.
inline ChartSpec build_spec(const InstanceSkeleton& s, ChartType type, std::uint64_t style_seed,
                            std::span<const StatementSpec> statements, const std::string& unit = "",
                            const StyleRanges& ranges = {}) {
  std::optional<int> pie_year;
  if (type == ChartType::Pie) {
    pie_year = pie_year_for(statements);
    if (!pie_year) throw ChartError(ChartErrc::InadmissibleChartType, "pie needs an Easy instance ranked in one year");
    const auto y = s.year_index(*pie_year);
    if (!y) throw ChartError(ChartErrc::InadmissibleChartType, "pie year outside the instance");
    for (std::size_t e = 0; e < s.entities.size(); ++e) {
      if (!(s.chart_series(e)[*y] > Decimal())) {
        throw ChartError(ChartErrc::InadmissibleChartType, "pie wedges need positive values");
      }
    }
  }
  Rng rng(style_seed);
  ChartSpec spec;
  spec.data.type = type;
  spec.data.column = s.chart_column;
  spec.data.unit = unit;
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    ChartSeries cs{s.entities[e], s.display_names[e], {}, {}};
    const auto values = s.chart_series(e);
    for (std::size_t y = 0; y < s.years.size(); ++y) {
      if (pie_year && s.years[y] != *pie_year) continue;
      cs.years.push_back(s.years[y]);
      cs.values.push_back(values[y]);
    }
    spec.data.series.push_back(std::move(cs));
  }
  spec.style = sample_style(rng, s.entities.size(), ranges);
  if (pie_year) {
    spec.title = s.chart_column + " in " + std::to_string(*pie_year);
  } else {
    spec.title = s.chart_column + " by year";
    spec.x_label = "Year";
    spec.y_label = s.chart_column + unit_label(unit);
  }
  return spec;
}

// Rank years need pairwise gaps of at least delta_rank * max|value|; trend
// ranges need every step to move by at least delta_trend of the series range.
inline bool check_separation(const ChartSpec& spec, const SeparationConstraints& c, std::span<const int> rank_years,
                             std::span<const std::pair<int, int>> trend_ranges) {
  const auto& series = spec.data.series;
  if (series.empty()) return false;
  const auto& years = series.front().years;
  auto index = [&](int y) -> std::optional<std::size_t> {
    auto it = std::find(years.begin(), years.end(), y);
    if (it == years.end()) return std::nullopt;
    return static_cast<std::size_t>(it - years.begin());
  };
  for (int y : rank_years) {
    auto i = index(y);
    if (!i) return false;
    std::vector<Decimal> vals;
    for (const auto& cs : series) vals.push_back(cs.values[*i]);
    if (!rank_separated(vals, c.delta_rank)) return false;
  }
  for (const auto& [from, to] : trend_ranges) {
    auto a = index(from), b = index(to);
    if (!a || !b) return false;
    for (const auto& cs : series) {
      if (!trend_separated(cs.values, *a, *b, c.delta_trend)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const ChartData& d) {
  json series = json::array();
  for (const auto& cs : d.series) {
    json vals = json::array();
    for (const auto& v : cs.values) vals.push_back(v.str());
    series.push_back({{"entity_id", cs.entity_id}, {"label", cs.label}, {"years", cs.years}, {"values", vals}});
  }
  return {{"schema", "hopbench-chart/1"}, {"type", to_string(d.type)}, {"column", d.column}, {"unit", d.unit},
          {"series", series}};
}

inline ChartData chart_data_from_json(const json& j) {
  ChartData d;
  d.type = parse_enum<ChartType>(j.at("type").get<std::string>());
  d.column = j.at("column").get<std::string>();
  d.unit = j.at("unit").get<std::string>();
  for (const auto& s : j.at("series")) {
    ChartSeries cs;
    cs.entity_id = s.at("entity_id").get<std::string>();
    cs.label = s.at("label").get<std::string>();
    cs.years = s.at("years").get<std::vector<int>>();
    for (const auto& v : s.at("values")) cs.values.push_back(Decimal::parse(v.get<std::string>()));
    d.series.push_back(std::move(cs));
  }
  return d;
}

inline json to_json(const ChartStyle& st) {
  return {{"font_family", st.font_family}, {"title_size", st.title_size}, {"label_size", st.label_size},
          {"legend_size", st.legend_size}, {"tick_size", st.tick_size}, {"palette", st.palette},
          {"stroke_width", st.stroke_width}, {"bar_fill", st.bar_fill}, {"renderer_style_tag", to_string(st.tag)}};
}

inline ChartStyle chart_style_from_json(const json& j) {
  ChartStyle st;
  st.font_family = j.at("font_family").get<std::string>();
  st.title_size = j.at("title_size").get<int>();
  st.label_size = j.at("label_size").get<int>();
  st.legend_size = j.at("legend_size").get<int>();
  st.tick_size = j.at("tick_size").get<int>();
  st.palette = j.at("palette").get<std::vector<std::string>>();
  st.stroke_width = j.at("stroke_width").get<double>();
  st.bar_fill = j.at("bar_fill").get<double>();
  st.tag = parse_enum<StyleTag>(j.at("renderer_style_tag").get<std::string>());
  return st;
}

inline json to_json(const ChartSpec& s) {
  return {{"data", to_json(s.data)}, {"style", to_json(s.style)}, {"title", s.title}, {"x_label", s.x_label},
          {"y_label", s.y_label}};
}

inline ChartSpec chart_spec_from_json(const json& j) {
  return {chart_data_from_json(j.at("data")), chart_style_from_json(j.at("style")), j.at("title").get<std::string>(),
          j.at("x_label").get<std::string>(), j.at("y_label").get<std::string>()};
}

// ---------------------------------------------------------------------------
// SVG rendering

inline constexpr int kCanvasWidth = 640;
inline constexpr int kCanvasHeight = 480;
inline constexpr double kPlotLeft = 90, kPlotRight = 490, kPlotTop = 60, kPlotBottom = 410;
inline constexpr const char* kMetadataId = "hopbench-chart-data";

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      static const std::pair<std::string_view, char> ents[] = {
          {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
      bool hit = false;
      for (const auto& [e, c] : ents) {
        if (s.substr(i, e.size()) == e) {
          out += c;
          i += e.size() - 1;
          hit = true;
          break;
        }
      }
      if (!hit) out += s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}

inline double px(int points) { return points * 4.0 / 3.0; }

struct Writer {
  std::string out;

  void raw(std::string_view s) { out += s; }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none",
            double sw = 0) {
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(sw) + "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double sw) {
    out += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(sw) + "\"/>\n";
  }
  static std::string points(const std::vector<std::pair<double, double>>& pts) {
    std::string p;
    for (const auto& [x, y] : pts) p += (p.empty() ? "" : " ") + num(x) + "," + num(y);
    return p;
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double sw) {
    out += "<polyline points=\"" + points(pts) + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(sw) + "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill, const std::string& stroke,
               double sw) {
    out += "<polygon points=\"" + points(pts) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(sw) + "\"/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& fill, const std::string& stroke = "none",
              double sw = 0) {
    out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(sw) + "\"/>\n";
  }
  void text(double x, double y, std::string_view s, double size, const std::string& font, const std::string& anchor,
            const std::string& fill = "#000000", double rotate = 0, bool bold = false) {
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"" + escape(font) + "\" font-size=\"" +
           num(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\"";
    if (bold) out += " font-weight=\"bold\"";
    if (rotate != 0) out += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    out += ">" + escape(s) + "</text>\n";
  }
};

struct Axis {
  double lo = 0, hi = 1, step = 1;
  int decimals = 0;
  std::vector<double> ticks;
};

inline Axis value_axis(const ChartData& d) {
  double lo = 0, hi = 0;
  bool first = true;
  for (const auto& cs : d.series) {
    for (const auto& v : cs.values) {
      const double x = v.to_double();
      lo = first ? x : std::min(lo, x);
      hi = first ? x : std::max(hi, x);
      first = false;
    }
  }
  if (d.type == ChartType::Bar) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  double span = hi - lo;
  if (span <= 0) span = std::max(1.0, std::abs(hi));
  const double pad = span * 0.08;
  if (d.type == ChartType::Bar) {
    if (hi > 0) hi += pad;
    if (lo < 0) lo -= pad;
  } else {
    lo -= pad;
    hi += pad;
  }
  Axis a;
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      a.step = m * mag;
      break;
    }
  }
  a.lo = std::floor(lo / a.step) * a.step;
  a.hi = std::ceil(hi / a.step) * a.step;
  a.decimals = std::max(0, -static_cast<int>(std::floor(std::log10(a.step) + 1e-9)));
  for (long k = std::lround(a.lo / a.step); k <= std::lround(a.hi / a.step); ++k) a.ticks.push_back(k * a.step);
  return a;
}

inline std::string tick_label(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Theme {
  std::string background, plot_background, grid, frame;
  bool grid_x, frame_box;
};

inline Theme theme(StyleTag t) {
  switch (t) {
    case StyleTag::A: return {"#ffffff", "#ffffff", "#dddddd", "#000000", false, true};
    case StyleTag::B: return {"#ffffff", "#eaeaf2", "#ffffff", "#eaeaf2", true, false};
    case StyleTag::C: return {"#ffffff", "#e5ecf6", "#ffffff", "#e5ecf6", false, false};
  }
  return {};
}

}  // namespace svg

inline std::string render_svg(const ChartSpec& spec) {
  using svg::num;
  const auto& st = spec.style;
  const auto& d = spec.data;
  const auto th = svg::theme(st.tag);
  svg::Writer w;
  w.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
  w.raw("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(kCanvasWidth) +
        "\" height=\"" + std::to_string(kCanvasHeight) + "\" viewBox=\"0 0 " + std::to_string(kCanvasWidth) + " " +
        std::to_string(kCanvasHeight) + "\" data-style=\"" + std::string(to_string(st.tag)) + "\">\n");
  w.raw("<metadata id=\"" + std::string(kMetadataId) + "\">" + svg::escape(to_json(d).dump()) + "</metadata>\n");
  w.rect(0, 0, kCanvasWidth, kCanvasHeight, th.background);
  const std::string& font = st.font_family;
  w.text(kCanvasWidth / 2.0, 34, spec.title, svg::px(st.title_size), font, "middle", "#000000", 0,
         st.tag != StyleTag::C);

  const double legend_x = kPlotRight + 20;
  const double legend_row = svg::px(st.legend_size) + 8;
  auto legend = [&](bool line_key) {
    double y = kPlotTop + 10;
    if (st.tag == StyleTag::A) {
      w.rect(legend_x - 6, y - 6, kCanvasWidth - legend_x - 4, legend_row * d.series.size() + 8, "#ffffff",
             "#cccccc", 1);
    }
    for (std::size_t i = 0; i < d.series.size(); ++i) {
      const double cy = y + legend_row * i + legend_row / 2;
      if (line_key) w.line(legend_x, cy, legend_x + 18, cy, st.palette[i], st.stroke_width);
      else w.rect(legend_x, cy - 6, 14, 12, st.palette[i]);
      w.text(legend_x + 24, cy + svg::px(st.legend_size) / 3, d.series[i].label, svg::px(st.legend_size), font,
             "start");
    }
  };

  if (d.type == ChartType::Pie) {
    const double cx = (kPlotLeft + kPlotRight) / 2, cy = (kPlotTop + kPlotBottom) / 2 + 10, r = 150;
    double total = 0;
    for (const auto& cs : d.series) total += cs.values.front().to_double();
    double start = -90;
    for (std::size_t i = 0; i < d.series.size(); ++i) {
      const double share = d.series[i].values.front().to_double() / total;
      const double sweep = share * 360;
      std::vector<std::pair<double, double>> pts{{cx, cy}};
      const int steps = std::max(2, static_cast<int>(std::ceil(sweep / 2)));
      for (int k = 0; k <= steps; ++k) {
        const double a = (start + sweep * k / steps) * M_PI / 180;
        pts.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
      }
      w.polygon(pts, st.palette[i], "#ffffff", st.tag == StyleTag::C ? 2 : 1);
      const double mid = (start + sweep / 2) * M_PI / 180;
      char pct[16];
      std::snprintf(pct, sizeof pct, "%.1f%%", share * 100);
      w.text(cx + 0.65 * r * std::cos(mid), cy + 0.65 * r * std::sin(mid) + svg::px(st.tick_size) / 3, pct,
             svg::px(st.tick_size), font, "middle", "#ffffff");
      start += sweep;
    }
    legend(false);
    w.raw("</svg>\n");
    return w.out;
  }

  const auto axis = svg::value_axis(d);
  auto ymap = [&](double v) { return kPlotBottom - (v - axis.lo) / (axis.hi - axis.lo) * (kPlotBottom - kPlotTop); };
  const auto& years = d.series.front().years;
  const double slot = (kPlotRight - kPlotLeft) / static_cast<double>(years.size());
  auto xmap = [&](std::size_t i) { return kPlotLeft + slot * (static_cast<double>(i) + 0.5); };

  w.rect(kPlotLeft, kPlotTop, kPlotRight - kPlotLeft, kPlotBottom - kPlotTop, th.plot_background, th.frame,
         th.frame_box ? 1 : 0);
  const double tick_px = svg::px(st.tick_size);
  for (double t : axis.ticks) {
    const double y = ymap(t);
    if (st.tag != StyleTag::A) w.line(kPlotLeft, y, kPlotRight, y, th.grid, 1);
    else w.line(kPlotLeft - 5, y, kPlotLeft, y, "#000000", 1);
    w.text(kPlotLeft - 8, y + tick_px / 3, svg::tick_label(t, axis.decimals), tick_px, font, "end");
  }
  for (std::size_t i = 0; i < years.size(); ++i) {
    if (th.grid_x) w.line(xmap(i), kPlotTop, xmap(i), kPlotBottom, th.grid, 1);
    if (st.tag == StyleTag::A) w.line(xmap(i), kPlotBottom, xmap(i), kPlotBottom + 5, "#000000", 1);
    w.text(xmap(i), kPlotBottom + 8 + tick_px, std::to_string(years[i]), tick_px, font, "middle");
  }
  const double label_px = svg::px(st.label_size);
  w.text((kPlotLeft + kPlotRight) / 2, kPlotBottom + 16 + tick_px + label_px, spec.x_label, label_px, font, "middle");
  w.text(24, (kPlotTop + kPlotBottom) / 2, spec.y_label, label_px, font, "middle", "#000000", -90);

  const std::size_t n = d.series.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& cs = d.series[k];
    const auto& color = st.palette[k];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < cs.values.size(); ++i) pts.emplace_back(xmap(i), ymap(cs.values[i].to_double()));
    switch (d.type) {
      case ChartType::Line:
        w.polyline(pts, color, st.stroke_width);
        for (const auto& [x, y] : pts) w.circle(x, y, st.stroke_width + 1.5, color);
        break;
      case ChartType::Scatter:
        for (const auto& [x, y] : pts) {
          const double r = 3 + st.stroke_width;
          if (k % 3 == 0) w.circle(x, y, r, color, "#ffffff", 0.8);
          else if (k % 3 == 1) w.rect(x - r, y - r, 2 * r, 2 * r, color, "#ffffff", 0.8);
          else w.polygon({{x, y - r * 1.2}, {x + r * 1.1, y + r * 0.8}, {x - r * 1.1, y + r * 0.8}}, color, "#ffffff", 0.8);
        }
        break;
      case ChartType::Bar: {
        const double group = slot * st.bar_fill;
        const double bw = group / static_cast<double>(n);
        const double base = ymap(std::clamp(0.0, axis.lo, axis.hi));
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double x = xmap(i) - group / 2 + bw * static_cast<double>(k);
          const double top = std::min(base, pts[i].second), h = std::abs(base - pts[i].second);
          w.rect(x, top, bw, h, color, st.tag == StyleTag::A ? "none" : "#ffffff", st.tag == StyleTag::A ? 0 : 0.8);
        }
        break;
      }
      case ChartType::Pie: break;
    }
  }
  if (d.type == ChartType::Bar || (axis.lo < 0 && axis.hi > 0)) {
    const double zero = ymap(std::clamp(0.0, axis.lo, axis.hi));
    w.line(kPlotLeft, zero, kPlotRight, zero, "#444444", 1.2);
  }
  legend(d.type == ChartType::Line);
  w.raw("</svg>\n");
  return w.out;
}

inline ChartData decode_chart_data(std::string_view svg_text) {
  const std::string open = std::string("<metadata id=\"") + kMetadataId + "\">";
  const auto a = svg_text.find(open);
  if (a == std::string_view::npos) throw ChartError(ChartErrc::BadSvg, "no chart metadata block");
  const auto b = svg_text.find("</metadata>", a);
  if (b == std::string_view::npos) throw ChartError(ChartErrc::BadSvg, "unterminated metadata block");
  const auto body = svg::unescape(svg_text.substr(a + open.size(), b - a - open.size()));
  try {
    return chart_data_from_json(json::parse(body));
  } catch (const json::exception& e) {
    throw ChartError(ChartErrc::BadSvg, e.what());
  }
}

// Chart values of the skeleton in the layout used by ChartData, for
// comparing a decoded chart against its source.
inline ChartData chart_data_of(const InstanceSkeleton& s, ChartType type, const std::string& unit = "") {
  ChartData d;
  d.type = type;
  d.column = s.chart_column;
  d.unit = unit;
  for (std::size_t e = 0; e < s.entities.size(); ++e) d.series.push_back({s.entities[e], s.display_names[e], s.years,
                                                                           s.chart_series(e)});
  return d;
}

}  // namespace hopbench
