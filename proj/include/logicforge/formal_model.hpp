#pragma once

// Five-part formal model (overview, type, variables, constraints, objectives)
// exchanged between the formalization and logic-generation stages, with a
// line-oriented tagged document format and a JSON mirror.
//
// Canonical document:
//
//   ## OVERVIEW
//   <one or more lines>
//
//   ## TYPE
//   CSP
//
//   ## VARIABLES
//   - x: integer 0..9 -- optional note
//
//   ## CONSTRAINTS
//   - x + y == 10
//
//   ## OBJECTIVES
//   - compute: calculate `x`

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logicforge/text.hpp"

namespace logicforge {

enum class ModelKind {
  probabilistic,
  sat,
  csp,
  arithmetic,
  logical_inference,
  temporal,
  spatial,
  other,
};

// Open enumeration: unknown labels become other(label).
struct ModelType {
  ModelKind kind = ModelKind::arithmetic;
  std::string label;  // only meaningful for ModelKind::other

  static ModelType parse(std::string_view s) {
    static const std::array<std::pair<std::string_view, ModelKind>, 7> known{{
        {"probabilistic", ModelKind::probabilistic},
        {"sat", ModelKind::sat},
        {"csp", ModelKind::csp},
        {"arithmetic", ModelKind::arithmetic},
        {"logical-inference", ModelKind::logical_inference},
        {"temporal", ModelKind::temporal},
        {"spatial", ModelKind::spatial},
    }};
    std::string_view t = text::trim(s);
    std::string lower = text::to_lower(t);
    if (text::starts_with(lower, "other(") && lower.back() == ')') {
      return {ModelKind::other, std::string(t.substr(6, t.size() - 7))};
    }
    for (const auto& [name, kind] : known) {
      if (lower == name) return {kind, {}};
    }
    return {ModelKind::other, std::string(t)};
  }

  std::string to_string() const {
    switch (kind) {
      case ModelKind::probabilistic: return "probabilistic";
      case ModelKind::sat: return "SAT";
      case ModelKind::csp: return "CSP";
      case ModelKind::arithmetic: return "arithmetic";
      case ModelKind::logical_inference: return "logical-inference";
      case ModelKind::temporal: return "temporal";
      case ModelKind::spatial: return "spatial";
      case ModelKind::other: return "other(" + label + ")";
    }
    return "other(" + label + ")";
  }

  bool operator==(const ModelType& o) const {
    return kind == o.kind && (kind != ModelKind::other || label == o.label);
  }
};

struct VariableDecl {
  std::string name;
  std::string domain;
  std::string note;  // empty when absent

  bool operator==(const VariableDecl&) const = default;
};

struct ConstraintExpr {
  std::size_t id = 0;  // 1-based ordinal
  std::string text;
  std::set<std::string> referenced_vars;

  bool operator==(const ConstraintExpr&) const = default;
};

enum class ObjectiveKind { compute, decide, optimize };

inline std::string_view to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::compute: return "compute";
    case ObjectiveKind::decide: return "decide";
    case ObjectiveKind::optimize: return "optimize";
  }
  return "compute";
}

inline std::optional<ObjectiveKind> objective_kind_from(std::string_view s) {
  if (s == "compute") return ObjectiveKind::compute;
  if (s == "decide") return ObjectiveKind::decide;
  if (s == "optimize") return ObjectiveKind::optimize;
  return std::nullopt;
}

struct Objective {
  ObjectiveKind kind = ObjectiveKind::compute;
  std::string text;

  bool operator==(const Objective&) const = default;
};

struct FormalModel {
  std::string overview;
  ModelType model_type;
  std::vector<VariableDecl> variables;
  std::vector<ConstraintExpr> constraints;
  std::vector<Objective> objectives;

  bool operator==(const FormalModel&) const = default;

  bool declares(std::string_view name) const {
    for (const auto& v : variables)
      if (v.name == name) return true;
    return false;
  }
};

enum class ViolationCode {
  MissingSection,
  DuplicateVariable,
  UnknownVariableRef,
  EmptyObjective,
  MalformedDocument,
};

inline std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::MissingSection: return "MissingSection";
    case ViolationCode::DuplicateVariable: return "DuplicateVariable";
    case ViolationCode::UnknownVariableRef: return "UnknownVariableRef";
    case ViolationCode::EmptyObjective: return "EmptyObjective";
    case ViolationCode::MalformedDocument: return "MalformedDocument";
  }
  return "MalformedDocument";
}

// `line` is the 1-based document line when produced by parse_model and the
// 1-based item index within `section` when produced by validate. `subject`
// carries the offending identifier for DuplicateVariable/UnknownVariableRef.
struct SchemaViolation {
  ViolationCode code;
  std::string section;
  std::size_t line = 0;
  std::string subject;
  std::string message;

  std::string describe() const {
    std::string out(to_string(code));
    if (!subject.empty()) out += " " + subject;
    out += " at " + section;
    if (line > 0) out += ":" + std::to_string(line);
    if (!message.empty()) out += " (" + message + ")";
    return out;
  }
};

// Names that may appear in constraint text without being declared.
struct IdentifierPolicy {
  std::set<std::string, std::less<>> functions{"abs", "min", "max", "sum"};
  std::set<std::string, std::less<>> keywords{
      "and", "or", "not", "implies", "iff", "xor", "True", "False", "true",
      "false", "in", "if", "else"};

  bool is_builtin(std::string_view id) const {
    return functions.contains(id) || keywords.contains(id);
  }
};

inline const IdentifierPolicy& default_identifier_policy() {
  static const IdentifierPolicy policy;
  return policy;
}

// Identifier tokens of a symbolic expression, minus builtins. String literals
// and attribute names (after '.') are skipped.
inline std::set<std::string> extract_identifiers(
    std::string_view expr,
    const IdentifierPolicy& policy = default_identifier_policy()) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < expr.size()) {
    char c = expr[i];
    if (c == '"' || c == '\'') {
      std::size_t j = expr.find(c, i + 1);
      i = (j == std::string_view::npos) ? expr.size() : j + 1;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < expr.size() && (text::is_ident_char(expr[i]) || expr[i] == '.'))
        ++i;
      continue;
    }
    if (text::is_ident_start(c) || c == '_') {
      std::size_t j = i;
      while (j < expr.size() && text::is_ident_char(expr[j])) ++j;
      bool attribute = i > 0 && expr[i - 1] == '.';
      std::string_view token = expr.substr(i, j - i);
      if (!attribute && !policy.is_builtin(token)) out.emplace(token);
      i = j;
      continue;
    }
    ++i;
  }
  return out;
}

// Identifiers quoted in backticks inside objective prose.
inline std::set<std::string> objective_references(std::string_view prose) {
  std::set<std::string> out;
  std::size_t i = 0;
  while ((i = prose.find('`', i)) != std::string_view::npos) {
    std::size_t j = prose.find('`', i + 1);
    if (j == std::string_view::npos) break;
    std::string_view inner = text::trim(prose.substr(i + 1, j - i - 1));
    if (text::is_identifier(inner)) out.emplace(inner);
    i = j + 1;
  }
  return out;
}

inline ConstraintExpr make_constraint(
    std::size_t id, std::string text_value,
    const IdentifierPolicy& policy = default_identifier_policy()) {
  ConstraintExpr c;
  c.id = id;
  c.referenced_vars = extract_identifiers(text_value, policy);
  c.text = std::move(text_value);
  return c;
}

inline ObjectiveKind infer_objective_kind(std::string_view prose) {
  std::string lower = text::to_lower(prose);
  for (std::string_view w : {"maximiz", "minimiz", "optimi"})
    if (lower.find(w) != std::string::npos) return ObjectiveKind::optimize;
  for (std::string_view w : {"determine if", "determine whether", "decide",
                             "check", "is it", "whether"})
    if (text::starts_with(lower, w)) return ObjectiveKind::decide;
  return ObjectiveKind::compute;
}

inline constexpr std::array<std::string_view, 5> kSectionOrder{
    "OVERVIEW", "TYPE", "VARIABLES", "CONSTRAINTS", "OBJECTIVES"};

namespace detail {

inline bool is_canonical_line(std::string_view s) {
  return s.find('\n') == std::string_view::npos &&
         s.find('\r') == std::string_view::npos && text::trim(s) == s;
}

// Maps item index (0-based) within a section to its document line.
using LineMap = std::map<std::string, std::vector<std::size_t>, std::less<>>;

inline std::size_t locate(const LineMap* lines, std::string_view section,
                          std::size_t index) {
  if (lines != nullptr) {
    auto it = lines->find(section);
    if (it != lines->end() && index < it->second.size())
      return it->second[index];
  }
  return index + 1;
}

inline void validate_into(const FormalModel& m, const LineMap* lines,
                          const IdentifierPolicy& policy,
                          std::vector<SchemaViolation>& out) {
  for (auto line : text::split_lines(m.overview)) {
    if (line.empty() || !is_canonical_line(line) || text::starts_with(line, "##")) {
      out.push_back({ViolationCode::MalformedDocument, "OVERVIEW",
                     locate(lines, "OVERVIEW", 0), {},
                     "overview lines must be nonblank, trimmed and not start with ##"});
      break;
    }
  }
  if (m.model_type.kind == ModelKind::other &&
      (m.model_type.label.empty() || !is_canonical_line(m.model_type.label))) {
    out.push_back({ViolationCode::MalformedDocument, "TYPE",
                   locate(lines, "TYPE", 0), {}, "empty or multi-line model type"});
  }

  std::set<std::string, std::less<>> declared;
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    std::size_t at = locate(lines, "VARIABLES", i);
    if (!text::is_identifier(v.name)) {
      out.push_back({ViolationCode::MalformedDocument, "VARIABLES", at, v.name,
                     "variable name is not an identifier"});
    }
    if (!is_canonical_line(v.domain) || !is_canonical_line(v.note) ||
        v.domain.find(" -- ") != std::string::npos) {
      out.push_back({ViolationCode::MalformedDocument, "VARIABLES", at, v.name,
                     "domain/note must be single trimmed lines; domain may not contain ' -- '"});
    }
    if (!declared.insert(v.name).second) {
      out.push_back({ViolationCode::DuplicateVariable, "VARIABLES", at, v.name,
                     "variable declared more than once"});
    }
  }

  for (std::size_t i = 0; i < m.constraints.size(); ++i) {
    const auto& c = m.constraints[i];
    std::size_t at = locate(lines, "CONSTRAINTS", i);
    if (c.text.empty() || !is_canonical_line(c.text) || c.id != i + 1 ||
        c.referenced_vars != extract_identifiers(c.text, policy)) {
      out.push_back({ViolationCode::MalformedDocument, "CONSTRAINTS", at, {},
                     "constraint must be a nonempty trimmed line with ordinal id and derived references"});
    }
    for (const auto& ref : c.referenced_vars) {
      if (!declared.contains(ref)) {
        out.push_back({ViolationCode::UnknownVariableRef, "CONSTRAINTS", at, ref,
                       "constraint references an undeclared variable"});
      }
    }
  }

  if (m.objectives.empty()) {
    out.push_back({ViolationCode::EmptyObjective, "OBJECTIVES",
                   locate(lines, "OBJECTIVES", 0), {}, "no objective given"});
  }
  for (std::size_t i = 0; i < m.objectives.size(); ++i) {
    const auto& o = m.objectives[i];
    std::size_t at = locate(lines, "OBJECTIVES", i);
    if (o.text.empty()) {
      out.push_back({ViolationCode::EmptyObjective, "OBJECTIVES", at, {},
                     "objective text is empty"});
      continue;
    }
    if (!is_canonical_line(o.text)) {
      out.push_back({ViolationCode::MalformedDocument, "OBJECTIVES", at, {},
                     "objective must be a single trimmed line"});
    }
    for (const auto& ref : objective_references(o.text)) {
      if (!declared.contains(ref)) {
        out.push_back({ViolationCode::UnknownVariableRef, "OBJECTIVES", at, ref,
                       "objective references an undeclared variable"});
      }
    }
  }
}

inline std::string_view strip_bullet(std::string_view line) {
  if (text::starts_with(line, "- ")) return text::trim(line.substr(2));
  if (line == "-") return {};
  return line;
}

}  // namespace detail

// Reports every detectable invariant violation, not just the first.
inline std::vector<SchemaViolation> validate(
    const FormalModel& m,
    const IdentifierPolicy& policy = default_identifier_policy()) {
  std::vector<SchemaViolation> out;
  detail::validate_into(m, nullptr, policy, out);
  return out;
}

struct ParseOutcome {
  std::optional<FormalModel> model;  // set iff violations is empty
  std::vector<SchemaViolation> violations;

  bool ok() const { return model.has_value(); }
};

inline ParseOutcome parse_model(
    std::string_view document,
    const IdentifierPolicy& policy = default_identifier_policy()) {
  ParseOutcome result;
  auto& errs = result.violations;
  if (!text::is_valid_utf8(document)) {
    errs.push_back({ViolationCode::MalformedDocument, "DOCUMENT", 0, {},
                    "document is not valid UTF-8"});
    return result;
  }

  FormalModel m;
  detail::LineMap lines;
  std::set<std::string, std::less<>> seen;
  std::string current;  // empty before the first header
  std::vector<std::string> overview_lines;
  std::vector<std::pair<std::string, std::size_t>> type_lines;

  auto all_lines = text::split_lines(document);
  for (std::size_t idx = 0; idx < all_lines.size(); ++idx) {
    std::size_t lineno = idx + 1;
    std::string_view line = text::trim(all_lines[idx]);
    if (text::starts_with(line, "##")) {
      std::string name = text::to_upper(text::trim(line.substr(2)));
      bool known = false;
      for (auto s : kSectionOrder) known = known || s == name;
      if (!known) {
        errs.push_back({ViolationCode::MalformedDocument,
                        name.empty() ? "DOCUMENT" : name, lineno, {},
                        "unknown section tag"});
        current = "?";
        continue;
      }
      if (!seen.insert(name).second) {
        errs.push_back({ViolationCode::MalformedDocument, name, lineno, {},
                        "section tag repeated"});
        current = "?";
        continue;
      }
      current = name;
      lines[current];
      continue;
    }
    if (line.empty() || current.empty() || current == "?") continue;

    if (current == "OVERVIEW") {
      if (overview_lines.empty()) lines[current].push_back(lineno);
      overview_lines.emplace_back(line);
    } else if (current == "TYPE") {
      type_lines.emplace_back(std::string(line), lineno);
    } else if (current == "VARIABLES") {
      std::string_view body = detail::strip_bullet(line);
      auto colon = body.find(':');
      if (colon == std::string_view::npos) {
        errs.push_back({ViolationCode::MalformedDocument, current, lineno, {},
                        "variable declaration needs 'name: domain'"});
        continue;
      }
      VariableDecl v;
      v.name = text::trim_copy(body.substr(0, colon));
      std::string_view rest = body.substr(colon + 1);
      auto sep = rest.find(" -- ");
      if (sep == std::string_view::npos) {
        v.domain = text::trim_copy(rest);
      } else {
        v.domain = text::trim_copy(rest.substr(0, sep));
        v.note = text::trim_copy(rest.substr(sep + 4));
      }
      lines[current].push_back(lineno);
      m.variables.push_back(std::move(v));
    } else if (current == "CONSTRAINTS") {
      std::string_view body = detail::strip_bullet(line);
      lines[current].push_back(lineno);
      m.constraints.push_back(
          make_constraint(m.constraints.size() + 1, std::string(body), policy));
    } else if (current == "OBJECTIVES") {
      std::string_view body = detail::strip_bullet(line);
      Objective o;
      auto colon = body.find(':');
      std::optional<ObjectiveKind> kind;
      if (colon != std::string_view::npos)
        kind = objective_kind_from(text::to_lower(text::trim(body.substr(0, colon))));
      if (kind) {
        o.kind = *kind;
        o.text = text::trim_copy(body.substr(colon + 1));
      } else {
        o.text = std::string(body);
        o.kind = infer_objective_kind(o.text);
      }
      lines[current].push_back(lineno);
      m.objectives.push_back(std::move(o));
    }
  }

  for (auto s : kSectionOrder) {
    if (!seen.contains(s)) {
      errs.push_back({ViolationCode::MissingSection, std::string(s), 0, {},
                      "section is absent"});
    }
  }

  for (std::size_t i = 0; i < overview_lines.size(); ++i) {
    if (i > 0) m.overview += '\n';
    m.overview += overview_lines[i];
  }
  if (seen.contains("TYPE")) {
    if (type_lines.size() != 1) {
      std::size_t at = type_lines.empty() ? 0 : type_lines[1].second;
      errs.push_back({ViolationCode::MalformedDocument, "TYPE", at, {},
                      "TYPE section must hold exactly one line"});
    } else {
      m.model_type = ModelType::parse(type_lines[0].first);
      lines["TYPE"].push_back(type_lines[0].second);
    }
  }

  detail::validate_into(m, &lines, policy, errs);
  if (errs.empty()) result.model = std::move(m);
  return result;
}

// Deterministic canonical text; parse_model(serialize(m)) == m for valid m.
inline std::string serialize(const FormalModel& m) {
  std::string out;
  out += "## OVERVIEW\n";
  if (!m.overview.empty()) out += m.overview + "\n";
  out += "\n## TYPE\n" + m.model_type.to_string() + "\n";
  out += "\n## VARIABLES\n";
  for (const auto& v : m.variables) {
    out += "- " + v.name + ":";
    if (!v.domain.empty()) out += " " + v.domain;
    if (!v.note.empty()) out += " -- " + v.note;
    out += "\n";
  }
  out += "\n## CONSTRAINTS\n";
  for (const auto& c : m.constraints) out += "- " + c.text + "\n";
  out += "\n## OBJECTIVES\n";
  for (const auto& o : m.objectives) {
    out += "- ";
    out += to_string(o.kind);
    out += ": " + o.text + "\n";
  }
  return out;
}

// JSON mirror (one model per line in corpus files).

inline void to_json(nlohmann::json& j, const FormalModel& m) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : m.variables)
    vars.push_back({{"name", v.name}, {"domain", v.domain}, {"note", v.note}});
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& c : m.constraints)
    cons.push_back({{"id", c.id}, {"text", c.text}, {"referenced_vars", c.referenced_vars}});
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : m.objectives)
    objs.push_back({{"kind", std::string(to_string(o.kind))}, {"text", o.text}});
  j = nlohmann::json{{"overview", m.overview},
                     {"model_type", m.model_type.to_string()},
                     {"variables", std::move(vars)},
                     {"constraints", std::move(cons)},
                     {"objectives", std::move(objs)}};
}

inline void from_json(const nlohmann::json& j, FormalModel& m) {
  m = FormalModel{};
  m.overview = j.at("overview").get<std::string>();
  m.model_type = ModelType::parse(j.at("model_type").get<std::string>());
  for (const auto& v : j.at("variables"))
    m.variables.push_back({v.at("name").get<std::string>(),
                           v.at("domain").get<std::string>(),
                           v.value("note", std::string{})});
  for (const auto& c : j.at("constraints")) {
    ConstraintExpr ce;
    ce.id = c.at("id").get<std::size_t>();
    ce.text = c.at("text").get<std::string>();
    for (const auto& r : c.at("referenced_vars")) ce.referenced_vars.insert(r.get<std::string>());
    m.constraints.push_back(std::move(ce));
  }
  for (const auto& o : j.at("objectives")) {
    auto kind = objective_kind_from(o.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown objective kind");
    m.objectives.push_back({*kind, o.at("text").get<std::string>()});
  }
}

}  // namespace logicforge
