#pragma once

// The two-stage solve: formalize a question into a model, generate a plan and
// program from the model, execute, and refine on failure.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "logicforge/answer.hpp"
#include "logicforge/chat.hpp"
#include "logicforge/executor.hpp"
#include "logicforge/formal_model.hpp"
#include "logicforge/prompts.hpp"

namespace logicforge {

struct Query {
  std::string id;
  std::string question;
  std::string instruction;
  std::optional<std::string> gold_answer;
  std::optional<AnswerKind> answer_kind;

  void check() const {
    if (text::trim(question).empty()) throw std::invalid_argument("query '" + id + "' has an empty question");
  }
};

inline void to_json(nlohmann::json& j, const Query& q) {
  j = {{"id", q.id}, {"question", q.question}, {"instruction", q.instruction}};
  j["gold_answer"] = q.gold_answer ? nlohmann::json(*q.gold_answer) : nlohmann::json(nullptr);
  j["answer_kind"] = q.answer_kind ? nlohmann::json(std::string(to_string(*q.answer_kind))) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, Query& q) {
  j.at("id").get_to(q.id);
  j.at("question").get_to(q.question);
  q.instruction = j.value("instruction", std::string{});
  q.gold_answer.reset();
  if (j.contains("gold_answer") && !j.at("gold_answer").is_null()) {
    const auto& g = j.at("gold_answer");
    q.gold_answer = g.is_string() ? g.get<std::string>() : g.dump();
  }
  q.answer_kind.reset();
  if (j.contains("answer_kind") && !j.at("answer_kind").is_null()) {
    auto k = answer_kind_from(j.at("answer_kind").get<std::string>());
    if (!k) throw std::invalid_argument("unknown answer_kind '" + j.at("answer_kind").get<std::string>() + "'");
    q.answer_kind = *k;
  }
}

// ------------------------------------------------------------------ formalize

struct ModelCandidate {
  std::string raw;
  std::optional<FormalModel> model;
  std::vector<SchemaViolation> violations;
  bool valid() const { return model.has_value(); }
};

inline void to_json(nlohmann::json& j, const ModelCandidate& c) {
  j = {{"raw", c.raw}};
  j["model"] = c.model ? nlohmann::json(*c.model) : nlohmann::json(nullptr);
  j["violations"] = nlohmann::json::array();
  for (const auto& v : c.violations) j["violations"].push_back(v.describe());
}

struct FormalizeResult {
  std::vector<ModelCandidate> candidates;
  bool all_invalid = false;
};

// A completion may wrap the document in <model> tags or a code fence, or give
// it bare after some preamble.
inline std::string extract_model_document(std::string_view raw) {
  auto open = raw.find("<model>");
  if (open != std::string_view::npos) {
    auto close = raw.find("</model>", open);
    return std::string(raw.substr(open + 7, close == std::string_view::npos ? std::string_view::npos : close - open - 7));
  }
  auto header = raw.find("## ");
  if (header == std::string_view::npos) return std::string(raw);
  auto fence_before = raw.rfind("```", header);
  if (fence_before != std::string_view::npos) {
    auto fence_after = raw.find("```", header);
    if (fence_after != std::string_view::npos) return std::string(raw.substr(header, fence_after - header));
  }
  return std::string(raw);
}

inline std::vector<ChatMessage> ogf_messages(const Query& q, const PromptSet& prompts,
                                             const std::optional<std::string>& feedback) {
  std::string user = render(prompts.ogf_user, {{"question", q.question}, {"instruction", q.instruction}});
  if (feedback) user += render(prompts.ogf_feedback, {{"feedback", *feedback}});
  return {{"system", prompts.ogf_system}, {"user", user}};
}

inline FormalizeResult formalize(const Query& q, ChatClient& client, const ChatEndpoint& ep, int n_candidates,
                                 const PromptSet& prompts = {},
                                 const std::optional<std::string>& feedback = std::nullopt) {
  if (n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
  auto completions = client.complete(ep, ogf_messages(q, prompts, feedback), n_candidates);
  if (static_cast<int>(completions.size()) != n_candidates)
    throw EndpointError(200, "expected " + std::to_string(n_candidates) + " completions, got " +
                                 std::to_string(completions.size()));
  FormalizeResult out;
  out.all_invalid = true;
  for (auto& raw : completions) {
    ModelCandidate c;
    auto parsed = parse_model(extract_model_document(raw));
    c.raw = std::move(raw);
    c.model = std::move(parsed.model);
    c.violations = std::move(parsed.violations);
    if (c.valid()) out.all_invalid = false;
    out.candidates.push_back(std::move(c));
  }
  return out;
}

// ------------------------------------------------------------------ logic generation

class NoCodeBlock : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FencedBlock {
  std::size_t begin = 0;  // offset of the opening fence
  std::string body;
};

// ``` fences; an info string (e.g. "python") on the opening line is dropped.
inline std::vector<FencedBlock> fenced_blocks(std::string_view s) {
  std::vector<FencedBlock> out;
  std::size_t pos = 0;
  while (true) {
    auto open = s.find("```", pos);
    if (open == std::string_view::npos) break;
    std::size_t body_start = open + 3;
    auto eol = s.find('\n', body_start);
    auto close = s.find("```", body_start);
    if (close == std::string_view::npos) break;
    if (eol != std::string_view::npos && eol < close) {
      auto info = text::trim(s.substr(body_start, eol - body_start));
      bool is_info = !info.empty() && std::all_of(info.begin(), info.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '_';
      });
      if (is_info || info.empty()) body_start = eol + 1;
    }
    out.push_back({open, std::string(text::trim(s.substr(body_start, close - body_start)))});
    pos = close + 3;
  }
  return out;
}

struct LogicResult {
  std::string logic_plan;
  std::string program;
  std::string raw;
};

inline constexpr std::string_view kNoPlan = "(no plan given)";

// The last fenced block is the program; everything before it, earlier blocks
// included, is the plan.
inline LogicResult split_logic(std::string_view completion) {
  auto blocks = fenced_blocks(completion);
  if (blocks.empty() || blocks.back().body.empty()) throw NoCodeBlock("completion contains no fenced program");
  LogicResult r;
  r.program = blocks.back().body;
  r.logic_plan = std::string(text::trim(completion.substr(0, blocks.back().begin)));
  if (r.logic_plan.empty()) r.logic_plan = kNoPlan;
  r.raw = std::string(completion);
  return r;
}

// Format check used for lower-level rewards: exactly one fenced program that
// has an answer channel.
inline bool lg_format_ok(std::string_view completion) {
  auto blocks = fenced_blocks(completion);
  if (blocks.size() != 1 || blocks[0].body.empty()) return false;
  const auto& p = blocks[0].body;
  return p.find("answer") != std::string::npos || p.find("print(") != std::string::npos;
}

struct LogicRequest {
  const FormalModel* model = nullptr;
  const Query* query = nullptr;  // consulted only without context isolation
  bool context_isolation = true;
  std::optional<std::string> feedback;
  std::size_t attempt = 1;  // ordinal of the failed attempt named in the retry prompt
};

inline std::vector<ChatMessage> lg_messages(const LogicRequest& req, const PromptSet& prompts) {
  std::string doc = serialize(*req.model);
  std::string user = (req.context_isolation || !req.query)
                         ? render(prompts.lg_user, {{"model_document", doc}})
                         : render(prompts.lg_user_with_question, {{"model_document", doc}, {"question", req.query->question}});
  if (req.feedback)
    user += render(prompts.lg_retry, {{"feedback", *req.feedback}, {"attempt", std::to_string(req.attempt)}});
  return {{"system", prompts.lg_system}, {"user", user}};
}

inline LogicResult generate_logic(const LogicRequest& req, ChatClient& client, const ChatEndpoint& ep,
                                  const PromptSet& prompts = {}) {
  if (!req.model) throw std::invalid_argument("generate_logic needs a model");
  auto completions = client.complete(ep, lg_messages(req, prompts), 1);
  if (completions.empty()) throw EndpointError(200, "no completion returned");
  return split_logic(completions.front());
}

inline LogicResult generate_logic(const FormalModel& model, ChatClient& client, const ChatEndpoint& ep,
                                  const PromptSet& prompts = {}) {
  LogicRequest req;
  req.model = &model;
  return generate_logic(req, client, ep, prompts);
}

// ------------------------------------------------------------------ refinement

enum class StepKind { RegenerateProgram, FeedbackToOGF };

inline std::string_view to_string(StepKind k) {
  return k == StepKind::RegenerateProgram ? "RegenerateProgram" : "FeedbackToOGF";
}

struct RefinementStep {
  StepKind kind = StepKind::RegenerateProgram;
  std::string cause;
  std::size_t attempt = 0;
  bool operator==(const RefinementStep&) const = default;
};

inline void to_json(nlohmann::json& j, const RefinementStep& s) {
  j = {{"kind", std::string(to_string(s.kind))}, {"cause", s.cause}, {"attempt", s.attempt}};
}

inline void from_json(const nlohmann::json& j, RefinementStep& s) {
  auto k = j.at("kind").get<std::string>();
  if (k == "RegenerateProgram") s.kind = StepKind::RegenerateProgram;
  else if (k == "FeedbackToOGF") s.kind = StepKind::FeedbackToOGF;
  else throw std::invalid_argument("unknown refinement kind '" + k + "'");
  j.at("cause").get_to(s.cause);
  j.at("attempt").get_to(s.attempt);
}

// invalid_model: no candidate parsed. program: no code block, execution
// failure, or an answer that does not read as the expected kind.
enum class FailureKind { invalid_model, program };

struct Failure {
  FailureKind kind = FailureKind::program;
  std::string diagnostic;
};

struct Abort {
  std::string cause;
  bool operator==(const Abort&) const = default;
};

struct RefinePolicy {
  std::size_t max_attempts = 4;          // refinement steps allowed before aborting
  std::size_t escalation_threshold = 2;  // consecutive program failures on one model
  int n_candidates = 1;
  bool context_isolation = true;
  ExecutionLimits limits;

  void check() const {
    if (escalation_threshold < 1) throw std::invalid_argument("escalation_threshold must be >= 1");
    if (n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
    limits.check();
  }
};

inline void to_json(nlohmann::json& j, const RefinePolicy& p) {
  j = {{"max_attempts", p.max_attempts},
       {"escalation_threshold", p.escalation_threshold},
       {"n_candidates", p.n_candidates},
       {"context_isolation", p.context_isolation},
       {"wall_timeout_s", p.limits.wall_timeout},
       {"memory_cap", p.limits.memory_cap},
       {"output_cap", p.limits.output_cap}};
}

inline void from_json(const nlohmann::json& j, RefinePolicy& p) {
  RefinePolicy d;
  p.max_attempts = j.value("max_attempts", d.max_attempts);
  p.escalation_threshold = j.value("escalation_threshold", d.escalation_threshold);
  p.n_candidates = j.value("n_candidates", d.n_candidates);
  p.context_isolation = j.value("context_isolation", d.context_isolation);
  p.limits.wall_timeout = j.value("wall_timeout_s", d.limits.wall_timeout);
  p.limits.memory_cap = j.value("memory_cap", d.limits.memory_cap);
  p.limits.output_cap = j.value("output_cap", d.limits.output_cap);
  p.check();
}

// Deterministic in (failure kind, history, policy).
inline std::variant<RefinementStep, Abort> decide_refinement(const Failure& failure,
                                                             const std::vector<RefinementStep>& history,
                                                             const RefinePolicy& policy) {
  if (history.size() >= policy.max_attempts) return Abort{"BudgetExhausted: " + failure.diagnostic};
  RefinementStep step;
  step.cause = failure.diagnostic;
  step.attempt = history.size() + 1;
  if (failure.kind == FailureKind::invalid_model) {
    step.kind = StepKind::FeedbackToOGF;
    return step;
  }
  std::size_t consecutive = 1;
  for (auto it = history.rbegin(); it != history.rend() && it->kind == StepKind::RegenerateProgram; ++it)
    ++consecutive;
  step.kind = consecutive >= policy.escalation_threshold ? StepKind::FeedbackToOGF : StepKind::RegenerateProgram;
  return step;
}

// ------------------------------------------------------------------ solve

struct Attempt {
  std::size_t model_round = 0;  // which formalize call produced the model
  std::string logic_plan;
  std::string program;
  std::optional<ExecutionResult> execution;
  std::string failure;
};

inline void to_json(nlohmann::json& j, const Attempt& a) {
  j = {{"model_round", a.model_round}, {"logic_plan", a.logic_plan}, {"program", a.program}, {"failure", a.failure}};
  j["execution"] = a.execution ? nlohmann::json(*a.execution) : nlohmann::json(nullptr);
}

struct TokenCounts {
  std::size_t model = 0;    // T_m
  std::size_t plan = 0;     // T_p
  std::size_t program = 0;  // T_a
};

struct ReasoningTrace {
  Query query;
  std::vector<ModelCandidate> model_candidates;  // every formalize round, in order
  std::optional<FormalModel> chosen_model;
  std::string logic_plan;
  std::string program;
  ExecutionResult execution;
  std::optional<std::string> final_answer;
  std::vector<RefinementStep> refinement_steps;
  std::vector<Attempt> attempts;
  TokenCounts token_counts;
  std::optional<std::string> abort_cause;
  std::string method = "formal";
};

inline std::size_t count_tokens(std::string_view s) { return text::split_whitespace(s).size(); }

// With include_timing = false the elapsed fields are dropped, so two runs
// over scripted endpoints serialize identically.
inline nlohmann::json trace_to_json(const ReasoningTrace& t, bool include_timing = true) {
  nlohmann::json j;
  j["id"] = t.query.id;
  j["method"] = t.method;
  j["query"] = t.query;
  j["model_candidates"] = t.model_candidates;
  j["chosen_model"] = t.chosen_model ? nlohmann::json(*t.chosen_model) : nlohmann::json(nullptr);
  j["chosen_model_document"] = t.chosen_model ? nlohmann::json(serialize(*t.chosen_model)) : nlohmann::json(nullptr);
  j["logic_plan"] = t.logic_plan;
  j["program"] = t.program;
  j["execution"] = t.execution;
  j["final_answer"] = t.final_answer ? nlohmann::json(*t.final_answer) : nlohmann::json(nullptr);
  j["refinement_steps"] = t.refinement_steps;
  j["attempts"] = t.attempts;
  j["token_counts"] = {{"model", t.token_counts.model}, {"plan", t.token_counts.plan}, {"program", t.token_counts.program}};
  j["abort_cause"] = t.abort_cause ? nlohmann::json(*t.abort_cause) : nlohmann::json(nullptr);
  if (!include_timing) {
    j["execution"].erase("elapsed_s");
    for (auto& a : j["attempts"])
      if (!a["execution"].is_null()) a["execution"].erase("elapsed_s");
  }
  return j;
}

struct SolveContext {
  ChatClient& ogf_client;
  const ChatEndpoint& ogf;
  ChatClient& lg_client;
  const ChatEndpoint& lg;
  ExecutorBackend& executor;
  const PromptSet& prompts;
};

inline ReasoningTrace solve(const Query& query, const SolveContext& ctx, const RefinePolicy& policy = {}) {
  query.check();
  policy.check();
  ReasoningTrace trace;
  trace.query = query;

  std::optional<std::string> ogf_feedback, lg_feedback;
  std::optional<FormalModel> model;
  std::size_t round = 0;

  // returns false when the loop must stop
  auto on_failure = [&](Failure f) {
    auto d = decide_refinement(f, trace.refinement_steps, policy);
    if (auto* abort = std::get_if<Abort>(&d)) {
      trace.abort_cause = abort->cause;
      return false;
    }
    auto step = std::get<RefinementStep>(d);
    if (step.kind == StepKind::FeedbackToOGF) {
      ogf_feedback = step.cause;
      lg_feedback.reset();
      model.reset();
    } else {
      lg_feedback = step.cause;
    }
    trace.refinement_steps.push_back(std::move(step));
    return true;
  };

  while (true) {
    if (!model) {
      ++round;
      auto fr = formalize(query, ctx.ogf_client, ctx.ogf, policy.n_candidates, ctx.prompts, ogf_feedback);
      std::optional<std::size_t> first_valid;
      for (std::size_t i = 0; i < fr.candidates.size(); ++i)
        if (fr.candidates[i].valid() && !first_valid) first_valid = i;
      std::string diag;
      if (!first_valid) {
        diag = "AllCandidatesInvalid:";
        for (const auto& c : fr.candidates)
          for (const auto& v : c.violations) diag += "\n" + v.describe();
      } else {
        model = *fr.candidates[*first_valid].model;
        trace.chosen_model = model;
        trace.token_counts.model = count_tokens(fr.candidates[*first_valid].raw);
      }
      for (auto& c : fr.candidates) trace.model_candidates.push_back(std::move(c));
      if (!model) {
        if (!on_failure({FailureKind::invalid_model, diag})) return trace;
        continue;
      }
    }

    Attempt attempt;
    attempt.model_round = round;
    LogicRequest req;
    req.model = &*model;
    req.query = &query;
    req.context_isolation = policy.context_isolation;
    req.feedback = lg_feedback;
    req.attempt = trace.attempts.size();  // the attempt whose failure is being reported
    std::string failure;
    try {
      auto logic = generate_logic(req, ctx.lg_client, ctx.lg, ctx.prompts);
      attempt.logic_plan = logic.logic_plan;
      attempt.program = logic.program;
      trace.logic_plan = logic.logic_plan;
      trace.program = logic.program;
      trace.token_counts.plan = count_tokens(logic.logic_plan == kNoPlan ? std::string_view{} : logic.logic_plan);
      trace.token_counts.program = count_tokens(logic.program);
      auto exec = execute(logic.program, policy.limits, ctx.executor);
      attempt.execution = exec;
      trace.execution = exec;
      if (exec.ok()) {
        try {
          trace.final_answer = normalize_answer(*exec.answer, query.answer_kind).render();
        } catch (const Unparseable& e) {
          failure = std::string("answer not readable: ") + e.what();
          trace.execution.status = ExecStatus::runtime_error;
          trace.execution.answer.reset();
          trace.execution.stderr_excerpt = failure;
        }
      } else {
        failure = "execution " + std::string(to_string(exec.status)) + ": " + exec.stderr_excerpt;
      }
    } catch (const NoCodeBlock& e) {
      failure = std::string("NoCodeBlock: ") + e.what();
      trace.execution = ExecutionResult::failure(ExecStatus::runtime_error, failure);
    }
    attempt.failure = failure;
    trace.attempts.push_back(std::move(attempt));
    if (failure.empty()) return trace;
    trace.final_answer.reset();
    if (!on_failure({FailureKind::program, failure})) return trace;
  }
}

// ------------------------------------------------------------------ trace log

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Append-only JSON-lines file; safe for concurrent appenders in one process.
class TraceLog {
 public:
  explicit TraceLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  }

  void append(const nlohmann::json& trace) {
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << trace.dump() << '\n';
  }

  // The most recent record with this id.
  nlohmann::json find(const std::string& id) const {
    std::ifstream in(path_);
    std::optional<nlohmann::json> found;
    std::string line;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      if (j.value("id", std::string{}) == id) found = std::move(j);
    }
    if (!found) throw NotFound("no trace with id '" + id + "' in " + path_.string());
    return *found;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

}  // namespace logicforge
