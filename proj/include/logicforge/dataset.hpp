#pragma once

// Rejection-sampled training data: sample tagged candidates from a teacher,
// keep those whose program reproduces the gold answer, rank the survivors with
// a judge, and export the top min(K, I) per question.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "logicforge/answer.hpp"
#include "logicforge/chat.hpp"
#include "logicforge/executor.hpp"
#include "logicforge/formal_model.hpp"
#include "logicforge/orchestrator.hpp"
#include "logicforge/parallel.hpp"
#include "logicforge/prompts.hpp"
#include "logicforge/reward.hpp"

namespace logicforge {

class VerificationFailed : public std::runtime_error {
 public:
  explicit VerificationFailed(std::string sample_id, const std::string& why)
      : std::runtime_error("sample '" + sample_id + "' failed re-verification: " + why), id_(std::move(sample_id)) {}
  const std::string& sample_id() const { return id_; }

 private:
  std::string id_;
};

class TaskFileInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CandidateTriple {
  std::size_t index = 0;  // sampling order within the query
  std::string raw;
  std::string think;
  std::string model_doc;
  std::string code;
  std::optional<ExecutionResult> exec_result;
  std::optional<double> rank_score;  // only for execution-valid candidates
  bool judge_parsed = false;
};

inline void to_json(nlohmann::json& j, const CandidateTriple& c) {
  j = {{"index", c.index}, {"think", c.think}, {"model_doc", c.model_doc}, {"code", c.code}};
  j["exec_result"] = c.exec_result ? nlohmann::json(*c.exec_result) : nlohmann::json(nullptr);
  j["rank_score"] = c.rank_score ? nlohmann::json(*c.rank_score) : nlohmann::json(nullptr);
}

namespace detail {

inline std::string tag_body(std::string_view raw, std::string_view tag) {
  std::string open = "<" + std::string(tag) + ">", close = "</" + std::string(tag) + ">";
  auto a = raw.find(open);
  if (a == std::string_view::npos) return {};
  a += open.size();
  auto b = raw.find(close, a);
  if (b == std::string_view::npos) return {};
  return std::string(text::trim(raw.substr(a, b - a)));
}

}  // namespace detail

// <think>s</think> <model>m</model> <code>p</code>; a missing or unclosed tag
// leaves that field empty. Code wrapped in a fence inside <code> is unwrapped.
inline CandidateTriple split_triple(std::string raw, std::size_t index = 0) {
  CandidateTriple c;
  c.index = index;
  c.think = detail::tag_body(raw, "think");
  c.model_doc = detail::tag_body(raw, "model");
  c.code = detail::tag_body(raw, "code");
  if (c.code.find("```") != std::string::npos) {
    auto blocks = fenced_blocks(c.code);
    c.code = blocks.empty() ? std::string{} : blocks.back().body;
  }
  c.raw = std::move(raw);
  return c;
}

inline std::vector<CandidateTriple> sample_candidates(const Query& query, ChatClient& teacher_client,
                                                      const ChatEndpoint& teacher, int N,
                                                      const PromptSet& prompts = {}) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (!query.gold_answer) throw TaskFileInvalid("query '" + query.id + "' has no gold answer");
  std::vector<ChatMessage> msgs{
      {"system", prompts.teacher_system},
      {"user", render(prompts.teacher_user, {{"question", query.question}, {"instruction", query.instruction}})}};
  auto completions = teacher_client.complete(teacher, msgs, N);
  if (static_cast<int>(completions.size()) != N)
    throw EndpointError(200, "expected " + std::to_string(N) + " completions, got " + std::to_string(completions.size()));
  std::vector<CandidateTriple> out;
  for (std::size_t i = 0; i < completions.size(); ++i) out.push_back(split_triple(std::move(completions[i]), i));
  return out;
}

// Attaches exec_result to every candidate; returns the ones that reproduce
// the gold answer, in input order.
inline std::vector<CandidateTriple> filter_by_execution(std::vector<CandidateTriple>& candidates,
                                                        const CanonicalAnswer& gold, const ExecutionLimits& limits,
                                                        ExecutorBackend& backend) {
  std::vector<CandidateTriple> kept;
  for (auto& c : candidates) {
    c.exec_result = execute(c.code, limits, backend);
    if (result_matches(*c.exec_result, gold)) kept.push_back(c);
  }
  return kept;
}

// Integer 1..10 inside <score></score>.
inline std::optional<int> parse_judge_score(std::string_view reply) {
  auto body = detail::tag_body(reply, "score");
  if (body.empty()) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (ec != std::errc{} || ptr != body.data() + body.size() || v < 1 || v > 10) return std::nullopt;
  return v;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

struct JudgeConfig {
  double fallback_when_none_parse = 5.0;  // used only if no judgment in the group parses
};

// Score desc, then code length asc, then sampling index asc.
inline bool rank_before(const CandidateTriple& a, const CandidateTriple& b) {
  if (*a.rank_score != *b.rank_score) return *a.rank_score > *b.rank_score;
  if (a.code.size() != b.code.size()) return a.code.size() < b.code.size();
  return a.index < b.index;
}

// Each candidate is judged in its own request, in input order.
inline std::vector<CandidateTriple> rank_by_self_evaluation(std::vector<CandidateTriple> valid, const Query& query,
                                                            ChatClient& judge_client, const ChatEndpoint& judge,
                                                            std::size_t K, const PromptSet& prompts = {},
                                                            const JudgeConfig& cfg = {}) {
  if (K == 0 || valid.empty()) return {};
  std::vector<double> parsed;
  for (auto& c : valid) {
    std::vector<ChatMessage> msgs{{"system", prompts.judge_system},
                                  {"user", render(prompts.judge_user, {{"question", query.question},
                                                                       {"think", c.think},
                                                                       {"model_document", c.model_doc},
                                                                       {"program", c.code}})}};
    auto reply = judge_client.complete(judge, msgs, 1);
    auto score = reply.empty() ? std::nullopt : parse_judge_score(reply.front());
    c.judge_parsed = score.has_value();
    if (score) {
      c.rank_score = *score;
      parsed.push_back(*score);
    }
  }
  double fallback = parsed.empty() ? cfg.fallback_when_none_parse : median_of(parsed);
  for (auto& c : valid)
    if (!c.rank_score) c.rank_score = fallback;
  std::sort(valid.begin(), valid.end(), rank_before);
  valid.resize(std::min(K, valid.size()));
  return valid;
}

// ------------------------------------------------------------------ export

struct DatasetSample {
  std::string id;
  std::string q, a, s, m, p;
  std::optional<AnswerKind> answer_kind;
};

struct Manifest {
  std::size_t count = 0;
  std::string source_corpus;
  std::string config_hash;
  std::string output;
  std::string output_sha256;
};

inline void to_json(nlohmann::json& j, const Manifest& m) {
  j = nlohmann::ordered_json{{"count", m.count},
                             {"source_corpus", m.source_corpus},
                             {"config_hash", m.config_hash},
                             {"output", m.output},
                             {"output_sha256", m.output_sha256}};
}

inline void from_json(const nlohmann::json& j, Manifest& m) {
  j.at("count").get_to(m.count);
  j.at("source_corpus").get_to(m.source_corpus);
  j.at("config_hash").get_to(m.config_hash);
  m.output = j.value("output", std::string{});
  m.output_sha256 = j.value("output_sha256", std::string{});
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

// Re-executes every program first; nothing is written if any sample fails.
inline Manifest export_sft(const std::vector<DatasetSample>& samples, const std::filesystem::path& path,
                           const std::string& source_corpus, const std::string& config_hash,
                           const ExecutionLimits& limits, ExecutorBackend& backend) {
  std::string body;
  for (const auto& s : samples) {
    auto parsed = parse_model(s.m);
    if (!parsed.ok()) throw VerificationFailed(s.id, "model does not parse: " + parsed.violations.front().describe());
    CanonicalAnswer gold;
    try {
      gold = normalize_answer(s.a, s.answer_kind);
    } catch (const Unparseable& e) {
      throw VerificationFailed(s.id, e.what());
    }
    auto r = execute(s.p, limits, backend);
    if (!result_matches(r, gold))
      throw VerificationFailed(s.id, r.ok() ? "program printed '" + r.answer.value_or("") + "', expected '" + s.a + "'"
                                            : std::string(to_string(r.status)) + ": " + r.stderr_excerpt);
    nlohmann::ordered_json line{{"q", s.q}, {"a", s.a}, {"s", s.s}, {"m", s.m}, {"p", s.p}};
    body += line.dump() + "\n";
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
  }
  Manifest m{samples.size(), source_corpus, config_hash, path.filename().string(), sha256_hex(body)};
  std::ofstream(manifest_path_for(path), std::ios::binary | std::ios::trunc) << nlohmann::json(m).dump(2) << '\n';
  return m;
}

// ------------------------------------------------------------------ pipeline

struct DatasetConfig {
  int N = 8;
  std::size_t K = 2;
  ExecutionLimits limits;
  JudgeConfig judge;
  std::size_t parallelism = 1;

  void check() const {
    if (N < 1) throw std::invalid_argument("N must be >= 1");
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    limits.check();
  }
};

inline nlohmann::json config_json(const DatasetConfig& c) {
  return nlohmann::ordered_json{{"N", c.N},
                                {"K", c.K},
                                {"wall_timeout_s", c.limits.wall_timeout},
                                {"memory_cap", c.limits.memory_cap},
                                {"output_cap", c.limits.output_cap},
                                {"judge_fallback", c.judge.fallback_when_none_parse}};
}

inline void from_json(const nlohmann::json& j, DatasetConfig& c) {
  DatasetConfig d;
  c.N = j.value("N", d.N);
  c.K = j.value("K", d.K);
  c.limits.wall_timeout = j.value("wall_timeout_s", d.limits.wall_timeout);
  c.limits.memory_cap = j.value("memory_cap", d.limits.memory_cap);
  c.limits.output_cap = j.value("output_cap", d.limits.output_cap);
  c.judge.fallback_when_none_parse = j.value("judge_fallback", d.judge.fallback_when_none_parse);
  c.parallelism = j.value("parallelism", d.parallelism);
  c.check();
}

// Parallelism is excluded: it does not change the output.
inline std::string config_hash(const DatasetConfig& c) { return sha256_hex(config_json(c).dump()).substr(0, 16); }

struct QueryOutcome {
  std::string id;
  std::size_t sampled = 0;
  std::size_t execution_valid = 0;  // matched the gold answer
  std::size_t model_valid = 0;      // of those, with a parseable model
  std::size_t retained = 0;
};

struct DatasetBuild {
  std::vector<DatasetSample> samples;
  std::vector<QueryOutcome> per_query;
};

struct DatasetContext {
  ChatClient& teacher_client;
  const ChatEndpoint& teacher;
  ChatClient& judge_client;
  const ChatEndpoint& judge;
  ExecutorBackend& executor;
  const PromptSet& prompts;
};

inline void check_corpus(const std::vector<Query>& corpus) {
  std::set<std::string> ids;
  for (const auto& q : corpus) {
    if (!ids.insert(q.id).second) throw TaskFileInvalid("duplicate id '" + q.id + "'");
    if (!q.gold_answer) throw TaskFileInvalid("record '" + q.id + "' has no gold_answer");
    if (text::trim(q.question).empty()) throw TaskFileInvalid("record '" + q.id + "' has an empty question");
  }
}

// Candidates whose model does not parse are dropped before ranking, so every
// sample carries a canonical model document.
inline DatasetBuild build_dataset_samples(const std::vector<Query>& corpus, const DatasetContext& ctx,
                                          const DatasetConfig& cfg) {
  cfg.check();
  check_corpus(corpus);
  std::vector<std::vector<DatasetSample>> per(corpus.size());
  std::vector<QueryOutcome> outcomes(corpus.size());
  parallel_for_index(corpus.size(), cfg.parallelism, [&](std::size_t qi) {
    const auto& q = corpus[qi];
    auto& oc = outcomes[qi];
    oc.id = q.id;
    auto gold = normalize_answer(*q.gold_answer, q.answer_kind);
    auto candidates = sample_candidates(q, ctx.teacher_client, ctx.teacher, cfg.N, ctx.prompts);
    oc.sampled = candidates.size();
    auto valid = filter_by_execution(candidates, gold, cfg.limits, ctx.executor);
    oc.execution_valid = valid.size();
    std::vector<CandidateTriple> with_model;
    for (auto& c : valid) {
      auto parsed = parse_model(c.model_doc);
      if (!parsed.ok()) continue;
      c.model_doc = serialize(*parsed.model);
      with_model.push_back(std::move(c));
    }
    oc.model_valid = with_model.size();
    auto ranked = rank_by_self_evaluation(std::move(with_model), q, ctx.judge_client, ctx.judge, cfg.K, ctx.prompts,
                                          cfg.judge);
    oc.retained = ranked.size();
    for (const auto& c : ranked)
      per[qi].push_back({q.id + "#" + std::to_string(c.index), q.question, *q.gold_answer, c.think, c.model_doc, c.code,
                         q.answer_kind});
  });
  DatasetBuild out;
  out.per_query = std::move(outcomes);
  for (auto& v : per)
    for (auto& s : v) out.samples.push_back(std::move(s));
  return out;
}

inline std::vector<Query> read_query_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TaskFileInvalid("cannot open " + path.string());
  std::vector<Query> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<Query>());
    } catch (const std::exception& e) {
      throw TaskFileInvalid(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace logicforge
