#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hopbench {

// Fixed-point decimal: value = units * 10^-scale. The scale is preserved from
// the textual input so "359.0" prints back as "359.0". Comparison and
// equality are by value, so 359.0 == 359.
class Decimal {
 public:
  static constexpr int kMaxScale = 12;

  constexpr Decimal() = default;
  Decimal(std::int64_t units, int scale) : units_(units), scale_(scale) {
    if (scale < 0 || scale > kMaxScale) {
      throw std::invalid_argument("Decimal scale out of range: " + std::to_string(scale));
    }
  }

  static Decimal from_int(std::int64_t v) { return Decimal(v, 0); }

  static std::optional<Decimal> try_parse(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
      text.remove_suffix(1);
    }
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
      negative = text[0] == '-';
      i = 1;
    }
    __int128 acc = 0;
    int scale = 0;
    bool seen_dot = false;
    bool seen_digit = false;
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '.') {
        if (seen_dot) return std::nullopt;
        seen_dot = true;
        continue;
      }
      if (c == ',' && !seen_dot) continue;  // thousands separator
      if (c < '0' || c > '9') return std::nullopt;
      seen_digit = true;
      acc = acc * 10 + (c - '0');
      if (seen_dot) ++scale;
      if (acc > std::numeric_limits<std::int64_t>::max() || scale > kMaxScale) return std::nullopt;
    }
    if (!seen_digit) return std::nullopt;
    return Decimal(static_cast<std::int64_t>(negative ? -acc : acc), scale);
  }

  static Decimal parse(std::string_view text) {
    auto d = try_parse(text);
    if (!d) throw std::invalid_argument("not a decimal: '" + std::string(text) + "'");
    return *d;
  }

  std::int64_t units() const noexcept { return units_; }
  int scale() const noexcept { return scale_; }

  // Same value with a larger scale. Throws on overflow or on shrinking.
  Decimal rescaled(int new_scale) const {
    if (new_scale < scale_) throw std::invalid_argument("Decimal::rescaled cannot drop digits");
    return Decimal(checked(static_cast<__int128>(units_) * pow10(new_scale - scale_)), new_scale);
  }

  // Smallest scale that represents the same value exactly.
  Decimal normalized() const {
    std::int64_t u = units_;
    int s = scale_;
    while (s > 0 && u % 10 == 0) {
      u /= 10;
      --s;
    }
    return Decimal(u, s);
  }

  // Text with the stored scale, e.g. "-12.50".
  std::string str() const {
    const bool negative = units_ < 0;
    const unsigned __int128 mag = negative ? -static_cast<__int128>(units_) : units_;
    std::string digits = to_digits(mag);
    if (scale_ > 0) {
      if (static_cast<int>(digits.size()) <= scale_) {
        digits.insert(0, static_cast<std::size_t>(scale_ - digits.size() + 1), '0');
      }
      digits.insert(digits.size() - static_cast<std::size_t>(scale_), 1, '.');
    }
    return negative ? "-" + digits : digits;
  }

  // Text with trailing fractional zeros removed, e.g. "730.5", "52173".
  std::string trimmed() const { return normalized().str(); }

  double to_double() const noexcept {
    return static_cast<double>(units_) / static_cast<double>(pow10(scale_));
  }

  Decimal operator-() const { return Decimal(checked(-static_cast<__int128>(units_)), scale_); }

  friend Decimal operator+(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    return Decimal(checked(a.widened(s) + b.widened(s)), s);
  }
  friend Decimal operator-(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    return Decimal(checked(a.widened(s) - b.widened(s)), s);
  }
  friend Decimal operator*(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ + b.scale_;
    if (s > kMaxScale) throw std::overflow_error("Decimal product scale too large");
    return Decimal(checked(static_cast<__int128>(a.units_) * b.units_), s);
  }

  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    const __int128 x = a.widened(s);
    const __int128 y = b.widened(s);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const Decimal& a, const Decimal& b) { return (a <=> b) == 0; }

  // Exact midpoint, carried at one more fractional digit than the inputs.
  friend Decimal midpoint(const Decimal& a, const Decimal& b) {
    const int s = (a.scale_ > b.scale_ ? a.scale_ : b.scale_) + 1;
    if (s > kMaxScale) throw std::overflow_error("Decimal midpoint scale too large");
    const __int128 sum = a.widened(s) + b.widened(s);
    return Decimal(checked(sum / 2), s);  // sum is a multiple of 10, so even
  }

  // Identical value and identical scale (textual identity).
  bool same_repr(const Decimal& o) const noexcept { return units_ == o.units_ && scale_ == o.scale_; }

  // One unit in the last place at the stored scale.
  Decimal ulp() const { return Decimal(1, scale_); }

 private:
  static std::int64_t pow10(int n) noexcept {
    std::int64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
  }
  __int128 widened(int s) const noexcept { return static_cast<__int128>(units_) * pow10(s - scale_); }
  static std::int64_t checked(__int128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
      throw std::overflow_error("Decimal overflow");
    }
    return static_cast<std::int64_t>(v);
  }
  static std::string to_digits(unsigned __int128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return out;
  }

  std::int64_t units_ = 0;
  int scale_ = 0;
};

}  // namespace hopbench
