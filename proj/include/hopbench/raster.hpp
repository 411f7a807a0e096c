#pragma once

// PNG rasterization of the SVG subset written by render_svg.

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hopbench/chart.hpp"

namespace hopbench {

inline constexpr double kMaxDpi = 1200;

struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> png;
};

namespace raster {

struct Element {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;

  double num(const std::string& key, double fallback = 0) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
  }
  std::string str(const std::string& key, const std::string& fallback = "") const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : it->second;
  }
};

inline std::vector<Element> parse(std::string_view s) {
  std::vector<Element> out;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string_view::npos) {
    if (s.substr(i, 2) == "<?" || s.substr(i, 2) == "</") {
      i = s.find('>', i);
      if (i == std::string_view::npos) break;
      continue;
    }
    Element el;
    std::size_t j = i + 1;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '>' && s[j] != '/') ++j;
    el.name = std::string(s.substr(i + 1, j - i - 1));
    bool self_closing = false;
    while (j < s.size() && s[j] != '>') {
      if (s[j] == '/') {
        self_closing = true;
        ++j;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(s[j]))) {
        ++j;
        continue;
      }
      const auto eq = s.find('=', j);
      if (eq == std::string_view::npos) throw ChartError(ChartErrc::BadSvg, "attribute without value");
      const auto key = std::string(s.substr(j, eq - j));
      const char quote = s[eq + 1];
      const auto end = s.find(quote, eq + 2);
      if (end == std::string_view::npos) throw ChartError(ChartErrc::BadSvg, "unterminated attribute");
      el.attrs[key] = svg::unescape(s.substr(eq + 2, end - eq - 2));
      j = end + 1;
    }
    if (j >= s.size()) throw ChartError(ChartErrc::BadSvg, "unterminated tag");
    i = j + 1;
    if (!self_closing && (el.name == "text" || el.name == "metadata")) {
      const auto close = s.find("</" + el.name, i);
      if (close == std::string_view::npos) throw ChartError(ChartErrc::BadSvg, "unterminated " + el.name);
      el.text = svg::unescape(s.substr(i, close - i));
      i = close;
    }
    out.push_back(std::move(el));
  }
  return out;
}

inline bool color(const std::string& c, cv::Scalar& out) {
  if (c.size() != 7 || c[0] != '#') return false;
  const long v = std::strtol(c.c_str() + 1, nullptr, 16);
  out = cv::Scalar(v & 0xff, (v >> 8) & 0xff, (v >> 16) & 0xff);
  return true;
}

inline std::vector<cv::Point> points(const std::string& attr, double k) {
  std::vector<cv::Point> out;
  const char* p = attr.c_str();
  char* end = nullptr;
  while (*p) {
    const double x = std::strtod(p, &end);
    if (end == p) break;
    p = end;
    if (*p == ',') ++p;
    const double y = std::strtod(p, &end);
    if (end == p) break;
    p = end;
    out.emplace_back(static_cast<int>(std::lround(x * k)), static_cast<int>(std::lround(y * k)));
  }
  return out;
}

inline int hershey_face(const std::string& family) {
  static const std::map<std::string, int> faces = {
      {"Times New Roman", cv::FONT_HERSHEY_COMPLEX},      {"Georgia", cv::FONT_HERSHEY_COMPLEX},
      {"Cambria", cv::FONT_HERSHEY_COMPLEX},              {"Garamond", cv::FONT_HERSHEY_TRIPLEX},
      {"Century Schoolbook", cv::FONT_HERSHEY_TRIPLEX},   {"Book Antiqua", cv::FONT_HERSHEY_TRIPLEX},
      {"Courier New", cv::FONT_HERSHEY_PLAIN},            {"Consolas", cv::FONT_HERSHEY_PLAIN},
      {"Comic Sans MS", cv::FONT_HERSHEY_SIMPLEX | cv::FONT_ITALIC}};
  auto it = faces.find(family);
  return it == faces.end() ? cv::FONT_HERSHEY_SIMPLEX : it->second;
}

inline void draw_text(cv::Mat& img, const Element& el, double k) {
  cv::Scalar fill;
  if (!color(el.str("fill", "#000000"), fill)) fill = cv::Scalar(0, 0, 0);
  const int face = hershey_face(el.str("font-family"));
  const double px = el.num("font-size", 12) * k;
  const int height = std::max(1, static_cast<int>(std::lround(px * 0.72)));
  const double scale = cv::getFontScaleFromHeight(face, height, 1);
  const int thickness = el.str("font-weight") == "bold" ? 2 : 1;
  int baseline = 0;
  const auto size = cv::getTextSize(el.text, face, scale, thickness, &baseline);
  const std::string anchor = el.str("text-anchor", "start");
  const double shift = anchor == "middle" ? size.width / 2.0 : anchor == "end" ? size.width : 0;
  const double x = el.num("x") * k, y = el.num("y") * k;
  if (el.str("transform").rfind("rotate(-90", 0) == 0) {
    cv::Mat patch(size.height + baseline + 2, size.width + 2, img.type(), cv::Scalar(0, 0, 0));
    cv::Mat mask(patch.size(), CV_8UC1, cv::Scalar(0));
    cv::putText(patch, el.text, {1, size.height + 1}, face, scale, fill, thickness, cv::LINE_AA);
    cv::putText(mask, el.text, {1, size.height + 1}, face, scale, cv::Scalar(255), thickness, cv::LINE_AA);
    cv::rotate(patch, patch, cv::ROTATE_90_COUNTERCLOCKWISE);
    cv::rotate(mask, mask, cv::ROTATE_90_COUNTERCLOCKWISE);
    const int left = static_cast<int>(std::lround(x - patch.cols + baseline));
    const int top = static_cast<int>(std::lround(y - patch.rows / 2.0));
    const cv::Rect target = cv::Rect(left, top, patch.cols, patch.rows) & cv::Rect(0, 0, img.cols, img.rows);
    if (target.area() > 0) {
      const cv::Rect src(target.x - left, target.y - top, target.width, target.height);
      patch(src).copyTo(img(target), mask(src));
    }
    return;
  }
  cv::putText(img, el.text, {static_cast<int>(std::lround(x - shift)), static_cast<int>(std::lround(y))}, face, scale,
              fill, thickness, cv::LINE_AA);
}

}  // namespace raster

inline int raster_size(int svg_pixels, double dpi) { return static_cast<int>(std::lround(svg_pixels * dpi / 96.0)); }

inline Bitmap rasterize(std::string_view svg_text, double dpi) {
  if (!(dpi > 0) || dpi > kMaxDpi || !std::isfinite(dpi)) {
    throw ChartError(ChartErrc::UnsupportedResolution, "dpi " + std::to_string(dpi));
  }
  const auto elements = raster::parse(svg_text);
  if (elements.empty() || elements.front().name != "svg") throw ChartError(ChartErrc::BadSvg, "missing svg root");
  const double k = dpi / 96.0;
  const int w = raster_size(static_cast<int>(elements.front().num("width", kCanvasWidth)), dpi);
  const int h = raster_size(static_cast<int>(elements.front().num("height", kCanvasHeight)), dpi);
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  auto P = [&](double x, double y) { return cv::Point(static_cast<int>(std::lround(x * k)), static_cast<int>(std::lround(y * k))); };
  auto stroke_px = [&](const raster::Element& el) {
    return std::max(1, static_cast<int>(std::lround(el.num("stroke-width", 1) * k)));
  };
  for (const auto& el : elements) {
    cv::Scalar fill, stroke;
    const bool has_fill = raster::color(el.str("fill"), fill);
    const bool has_stroke = raster::color(el.str("stroke"), stroke) && el.num("stroke-width", 1) > 0;
    if (el.name == "rect") {
      const auto a = P(el.num("x"), el.num("y"));
      const auto b = P(el.num("x") + el.num("width"), el.num("y") + el.num("height"));
      if (has_fill) cv::rectangle(img, a, b - cv::Point(1, 1), fill, cv::FILLED, cv::LINE_8);
      if (has_stroke) cv::rectangle(img, a, b - cv::Point(1, 1), stroke, stroke_px(el), cv::LINE_8);
    } else if (el.name == "line") {
      if (has_stroke) {
        cv::line(img, P(el.num("x1"), el.num("y1")), P(el.num("x2"), el.num("y2")), stroke, stroke_px(el),
                 cv::LINE_AA);
      }
    } else if (el.name == "polyline" || el.name == "polygon") {
      const auto pts = raster::points(el.str("points"), k);
      if (el.name == "polygon" && has_fill) cv::fillPoly(img, std::vector<std::vector<cv::Point>>{pts}, fill, cv::LINE_AA);
      if (has_stroke) cv::polylines(img, pts, el.name == "polygon", stroke, stroke_px(el), cv::LINE_AA);
    } else if (el.name == "circle") {
      const auto c = P(el.num("cx"), el.num("cy"));
      const int r = std::max(1, static_cast<int>(std::lround(el.num("r") * k)));
      if (has_fill) cv::circle(img, c, r, fill, cv::FILLED, cv::LINE_AA);
      if (has_stroke) cv::circle(img, c, r, stroke, stroke_px(el), cv::LINE_AA);
    } else if (el.name == "text") {
      raster::draw_text(img, el, k);
    }
  }
  Bitmap out{w, h, {}};
  cv::imencode(".png", img, out.png, {cv::IMWRITE_PNG_COMPRESSION, 6});
  return out;
}

}  // namespace hopbench
