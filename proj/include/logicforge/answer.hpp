#pragma once

// Canonical answers: normalization of raw program/LLM output and tolerant
// comparison against gold answers.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>

#include "logicforge/text.hpp"

namespace logicforge {

enum class AnswerKind { number, boolean, choice_label, string };

inline std::string_view to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::number: return "number";
    case AnswerKind::boolean: return "boolean";
    case AnswerKind::choice_label: return "choice-label";
    case AnswerKind::string: return "string";
  }
  return "string";
}

inline std::optional<AnswerKind> answer_kind_from(std::string_view s) {
  if (s == "number") return AnswerKind::number;
  if (s == "boolean") return AnswerKind::boolean;
  if (s == "choice-label") return AnswerKind::choice_label;
  if (s == "string") return AnswerKind::string;
  return std::nullopt;
}

// Python-repr style float rendering: shortest round-trip digits, fixed
// notation for 1e-4 <= |x| < 1e16, scientific otherwise, ".0" on integers.
inline std::string render_float(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return std::signbit(x) ? "-0.0" : "0.0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  auto epos = sci.find('e');
  std::string mant = sci.substr(0, epos);
  int exp = std::stoi(sci.substr(epos + 1));
  bool neg = mant.front() == '-';
  if (neg) mant.erase(0, 1);
  std::string digits;
  for (char c : mant)
    if (c != '.') digits += c;
  std::string out;
  if (exp >= -4 && exp < 16) {
    if (exp < 0) {
      out = "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
    } else if (static_cast<std::size_t>(exp) + 1 >= digits.size()) {
      out = digits + std::string(static_cast<std::size_t>(exp) + 1 - digits.size(), '0') + ".0";
    } else {
      out = digits.substr(0, exp + 1) + "." + digits.substr(exp + 1);
    }
  } else {
    out = digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    char ebuf[16];
    std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
    out += ebuf;
  }
  return neg ? "-" + out : out;
}

// Shortest rendering used for canonical numbers: integral values print
// without a fractional part.
inline std::string render_number(double x) {
  if (std::isfinite(x) && std::trunc(x) == x && std::fabs(x) < 1e15) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(x));
    return std::string(buf, res.ptr);
  }
  return render_float(x);
}

struct CanonicalAnswer {
  AnswerKind kind = AnswerKind::string;
  std::variant<double, bool, std::string> value;

  double number() const { return std::get<double>(value); }
  bool boolean() const { return std::get<bool>(value); }
  const std::string& label() const { return std::get<std::string>(value); }

  std::string render() const {
    switch (kind) {
      case AnswerKind::number: return render_number(number());
      case AnswerKind::boolean: return boolean() ? "true" : "false";
      case AnswerKind::choice_label:
      case AnswerKind::string: return label();
    }
    return {};
  }

  bool operator==(const CanonicalAnswer&) const = default;
};

class Unparseable : public std::runtime_error {
 public:
  explicit Unparseable(AnswerKind kind, std::string_view raw)
      : std::runtime_error("cannot read '" + std::string(raw) + "' as " +
                           std::string(to_string(kind))),
        kind_(kind) {}
  AnswerKind kind() const { return kind_; }

 private:
  AnswerKind kind_;
};

namespace detail {

inline std::string_view strip_trailing_dots(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return text::trim(s);
}

inline std::optional<double> read_number(std::string_view s) {
  std::string t(text::trim(s));
  if (!t.empty() && t.front() == '$') t.erase(0, 1);
  bool percent = !t.empty() && t.back() == '%';
  if (percent) t.pop_back();
  // thousands separators: digits on both sides
  std::string clean;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == ',' && i > 0 && i + 1 < t.size() &&
        std::isdigit(static_cast<unsigned char>(t[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(t[i + 1])))
      continue;
    clean += t[i];
  }
  if (clean.empty()) return std::nullopt;
  const char* first = clean.data();
  if (*first == '+') ++first;
  double v = 0;
  auto [ptr, ec] = std::from_chars(first, clean.data() + clean.size(), v);
  if (ec != std::errc{} || ptr != clean.data() + clean.size() || !std::isfinite(v))
    return std::nullopt;
  if (v == 0.0) v = 0.0;  // fold -0
  return v;
}

inline std::optional<bool> read_boolean(std::string_view s) {
  std::string lower = text::to_lower(strip_trailing_dots(s));
  if (lower == "yes" || lower == "true") return true;
  if (lower == "no" || lower == "false") return false;
  return std::nullopt;
}

// "(B)", "B)", "B"; a bare lowercase letter counts only when `lenient`.
inline std::optional<std::string> read_choice(std::string_view s, bool lenient) {
  std::string_view t = strip_trailing_dots(s);
  bool parens = false;
  if (!t.empty() && t.front() == '(') {
    t.remove_prefix(1);
    parens = true;
  }
  if (!t.empty() && t.back() == ')') {
    t.remove_suffix(1);
    parens = true;
  }
  t = text::trim(t);
  if (t.size() != 1 || !std::isalpha(static_cast<unsigned char>(t[0])))
    return std::nullopt;
  if (!parens && !lenient && !std::isupper(static_cast<unsigned char>(t[0])))
    return std::nullopt;
  return text::to_upper(t);
}

inline std::string fold_string(std::string_view s) {
  std::string out;
  for (const auto& w : text::split_whitespace(strip_trailing_dots(s))) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return text::to_lower(out);
}

}  // namespace detail

// Idempotent: normalize(normalize(x, k).render(), k) == normalize(x, k).
inline CanonicalAnswer normalize_answer(std::string_view raw,
                                        std::optional<AnswerKind> expected = std::nullopt) {
  if (expected) {
    switch (*expected) {
      case AnswerKind::number:
        if (auto v = detail::read_number(detail::strip_trailing_dots(raw)))
          return {AnswerKind::number, *v};
        break;
      case AnswerKind::boolean:
        if (auto b = detail::read_boolean(raw)) return {AnswerKind::boolean, *b};
        if (auto v = detail::read_number(raw); v && (*v == 0.0 || *v == 1.0))
          return {AnswerKind::boolean, *v == 1.0};
        break;
      case AnswerKind::choice_label:
        if (auto c = detail::read_choice(raw, true)) return {AnswerKind::choice_label, *c};
        break;
      case AnswerKind::string:
        return {AnswerKind::string, detail::fold_string(raw)};
    }
    throw Unparseable(*expected, raw);
  }
  if (auto b = detail::read_boolean(raw)) return {AnswerKind::boolean, *b};
  if (auto v = detail::read_number(detail::strip_trailing_dots(raw)))
    return {AnswerKind::number, *v};
  if (auto c = detail::read_choice(raw, false)) return {AnswerKind::choice_label, *c};
  return {AnswerKind::string, detail::fold_string(raw)};
}

inline constexpr double kDefaultRelativeTolerance = 1e-6;
inline constexpr double kAbsoluteFloor = 1e-9;

// Symmetric and reflexive; kind mismatch never matches.
inline bool answers_match(const CanonicalAnswer& a, const CanonicalAnswer& b,
                          double rel_tol = kDefaultRelativeTolerance) {
  if (a.kind != b.kind) return false;
  if (a.kind == AnswerKind::number) {
    double x = a.number(), y = b.number();
    double scale = std::max(std::fabs(x), std::fabs(y));
    return std::fabs(x - y) <= std::max(rel_tol * scale, kAbsoluteFloor);
  }
  return a.value == b.value;
}

}  // namespace logicforge
