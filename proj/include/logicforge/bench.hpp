#pragma once

// Benchmark harness plus the file-level entry points used by the CLI:
// task files, method runners, reports, dataset export and toy training.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "logicforge/answer.hpp"
#include "logicforge/bilevel.hpp"
#include "logicforge/chat.hpp"
#include "logicforge/dataset.hpp"
#include "logicforge/executor.hpp"
#include "logicforge/orchestrator.hpp"
#include "logicforge/parallel.hpp"
#include "logicforge/prompts.hpp"

namespace logicforge {

// ------------------------------------------------------------------ task files

// Every record needs an answer_kind and a gold answer readable as that kind.
inline void check_task_file(const std::vector<Query>& items) {
  std::set<std::string> ids;
  for (const auto& q : items) {
    if (q.id.empty()) throw TaskFileInvalid("record with an empty id");
    if (!ids.insert(q.id).second) throw TaskFileInvalid("duplicate id '" + q.id + "'");
    if (text::trim(q.question).empty()) throw TaskFileInvalid("record '" + q.id + "' has an empty question");
    if (!q.gold_answer) throw TaskFileInvalid("record '" + q.id + "' has no gold_answer");
    if (!q.answer_kind) throw TaskFileInvalid("record '" + q.id + "' has no answer_kind");
    try {
      normalize_answer(*q.gold_answer, q.answer_kind);
    } catch (const Unparseable& e) {
      throw TaskFileInvalid("record '" + q.id + "': gold answer " + e.what());
    }
  }
}

inline std::vector<Query> read_task_file(const std::filesystem::path& path) {
  auto items = read_query_jsonl(path);
  check_task_file(items);
  return items;
}

// ------------------------------------------------------------------ gains

inline double relative_gain(double ours, double baseline) {
  if (!(baseline > 0)) throw std::invalid_argument("relative gain needs a positive baseline");
  return (ours - baseline) / baseline;
}

// "+17.6%"
inline std::string format_gain(double gain) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", gain * 100.0);
  return buf;
}

inline std::string format_percent(std::size_t correct, std::size_t total) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0);
  return buf;
}

// ------------------------------------------------------------------ methods

inline constexpr std::string_view kMethodFormal = "formal";
inline constexpr std::string_view kMethodProgramAided = "program-aided";
inline constexpr std::string_view kMethodCot = "cot";

inline bool known_method(std::string_view m) {
  return m == kMethodFormal || m == kMethodProgramAided || m == kMethodCot;
}

// Text after the last "Answer:" marker, else the last nonempty line.
inline std::string extract_cot_answer(std::string_view completion) {
  auto lines = text::split_lines(completion);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto lower = text::to_lower(*it);
    auto pos = lower.rfind("answer:");
    if (pos != std::string::npos) return std::string(text::trim(it->substr(pos + 7)));
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it)
    if (!text::trim(*it).empty()) return std::string(text::trim(*it));
  return {};
}

struct BenchContext {
  ChatClient& ogf_client;
  const ChatEndpoint& ogf;
  ChatClient& lg_client;  // also serves the program-aided and chain-of-thought baselines
  const ChatEndpoint& lg;
  ExecutorBackend& executor;
  const PromptSet& prompts;
};

inline std::vector<ChatMessage> baseline_messages(std::string_view method, const Query& q, const PromptSet& p) {
  bool pal = method == kMethodProgramAided;
  auto user = render(pal ? p.pal_user : p.cot_user, {{"question", q.question}, {"instruction", q.instruction}});
  return {{"system", pal ? p.pal_system : p.cot_system}, {"user", user}};
}

// One attempt, no refinement; the trace carries only plan/program/answer.
inline ReasoningTrace run_baseline(std::string_view method, const Query& q, const BenchContext& ctx,
                                   const ExecutionLimits& limits) {
  ReasoningTrace t;
  t.query = q;
  t.method = std::string(method);
  auto completion = ctx.lg_client.complete(ctx.lg, baseline_messages(method, q, ctx.prompts), 1).at(0);
  if (method == kMethodCot) {
    t.logic_plan = completion;
    t.token_counts.plan = count_tokens(completion);
    auto raw = extract_cot_answer(completion);
    t.execution = {ExecStatus::ok, raw, "", 0.0};
  } else {
    try {
      auto logic = split_logic(completion);
      t.logic_plan = logic.logic_plan;
      t.program = logic.program;
      t.token_counts.program = count_tokens(logic.program);
      t.execution = execute(logic.program, limits, ctx.executor);
    } catch (const NoCodeBlock& e) {
      t.execution = ExecutionResult::failure(ExecStatus::runtime_error, std::string("NoCodeBlock: ") + e.what());
    }
  }
  if (t.execution.ok()) {
    try {
      t.final_answer = normalize_answer(*t.execution.answer, q.answer_kind).render();
    } catch (const Unparseable& e) {
      t.execution = ExecutionResult::failure(ExecStatus::runtime_error, std::string("answer not readable: ") + e.what(),
                                             t.execution.elapsed);
    }
  }
  return t;
}

// ------------------------------------------------------------------ reports

struct BenchConfig {
  std::vector<std::string> methods{std::string(kMethodFormal), std::string(kMethodProgramAided),
                                   std::string(kMethodCot)};
  std::string ours{kMethodFormal};
  std::optional<std::string> baseline;  // default: best non-ours method
  std::size_t parallelism = 1;
  double item_timeout_s = 120.0;
  std::uint64_t seed = 0;
  RefinePolicy policy;

  void check() const {
    if (methods.empty()) throw std::invalid_argument("no methods selected");
    std::set<std::string> seen;
    for (const auto& m : methods) {
      if (!known_method(m)) throw std::invalid_argument("unknown method '" + m + "'");
      if (!seen.insert(m).second) throw std::invalid_argument("method '" + m + "' listed twice");
    }
    if (baseline && !seen.count(*baseline)) throw std::invalid_argument("baseline '" + *baseline + "' is not run");
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    if (!(item_timeout_s > 0)) throw std::invalid_argument("item timeout must be positive");
    policy.check();
  }
};

inline nlohmann::ordered_json bench_config_json(const BenchConfig& c) {
  nlohmann::ordered_json j;
  j["methods"] = c.methods;
  j["ours"] = c.ours;
  j["baseline"] = c.baseline ? nlohmann::ordered_json(*c.baseline) : nlohmann::ordered_json(nullptr);
  j["item_timeout_s"] = c.item_timeout_s;
  j["seed"] = c.seed;
  j["policy"] = nlohmann::json(c.policy);
  return j;
}

inline void from_json(const nlohmann::json& j, BenchConfig& c) {
  BenchConfig d;
  c.methods = j.value("methods", d.methods);
  c.ours = j.value("ours", d.ours);
  c.baseline.reset();
  if (j.contains("baseline") && !j.at("baseline").is_null()) c.baseline = j.at("baseline").get<std::string>();
  c.parallelism = j.value("parallelism", d.parallelism);
  c.item_timeout_s = j.value("item_timeout_s", d.item_timeout_s);
  c.seed = j.value("seed", d.seed);
  if (j.contains("policy")) c.policy = j.at("policy").get<RefinePolicy>();
  c.check();
}

struct ItemOutcome {
  std::string id;
  std::string method;
  bool correct = false;
  std::optional<std::string> final_answer;
  std::string error;  // endpoint failure, timeout, or abort cause
  std::string trace_id;
  double elapsed_s = 0;
};

struct MethodScore {
  std::string method;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct GainReport {
  std::string ours;
  std::string baseline;
  double value = 0;
};

struct BenchReport {
  std::string task_file;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<MethodScore> scores;  // in method order
  std::vector<ItemOutcome> items;   // method-major, then task order
  std::optional<GainReport> gain;
  double total_s = 0;
  std::string traces;  // trace log path, if written
};

inline const MethodScore* find_score(const BenchReport& r, std::string_view method) {
  for (const auto& s : r.scores)
    if (s.method == method) return &s;
  return nullptr;
}

struct NamedAccuracy {
  std::string method;
  double accuracy = 0;
};

// Baseline = override, else the best-scoring method other than ours (first in
// listed order on ties). No gain without a positive baseline.
inline std::optional<GainReport> compute_gain(const std::vector<NamedAccuracy>& rows, const std::string& ours,
                                              const std::optional<std::string>& baseline) {
  const NamedAccuracy* o = nullptr;
  const NamedAccuracy* b = nullptr;
  for (const auto& r : rows) {
    if (r.method == ours) o = &r;
    else if (baseline ? r.method == *baseline : (!b || r.accuracy > b->accuracy)) b = &r;
  }
  if (!o || !b || !(b->accuracy > 0)) return std::nullopt;
  return GainReport{o->method, b->method, relative_gain(o->accuracy, b->accuracy)};
}

inline std::optional<GainReport> compute_gain(const std::vector<MethodScore>& scores, const std::string& ours,
                                              const std::optional<std::string>& baseline) {
  std::vector<NamedAccuracy> rows;
  for (const auto& s : scores) rows.push_back({s.method, s.accuracy()});
  return compute_gain(rows, ours, baseline);
}

inline nlohmann::ordered_json report_to_json(const BenchReport& r, bool include_timing = true) {
  nlohmann::ordered_json j;
  j["task_file"] = r.task_file;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& s : r.scores)
    j["methods"].push_back({{"method", s.method}, {"correct", s.correct}, {"total", s.total},
                            {"accuracy", s.accuracy()}, {"percent", format_percent(s.correct, s.total)}});
  if (r.gain)
    j["relative_gain"] = {{"ours", r.gain->ours}, {"baseline", r.gain->baseline}, {"value", r.gain->value},
                          {"display", format_gain(r.gain->value)}};
  else
    j["relative_gain"] = nullptr;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& it : r.items) {
    nlohmann::ordered_json row{{"id", it.id}, {"method", it.method}, {"correct", it.correct}};
    row["final_answer"] = it.final_answer ? nlohmann::ordered_json(*it.final_answer) : nlohmann::ordered_json(nullptr);
    row["error"] = it.error;
    row["trace_id"] = it.trace_id;
    if (include_timing) row["elapsed_s"] = it.elapsed_s;
    j["items"].push_back(std::move(row));
  }
  j["traces"] = r.traces;
  if (include_timing) {
    j["runtime"] = {{"total_s", r.total_s},
                    {"mean_item_s", r.items.empty() ? 0.0 : r.total_s / static_cast<double>(r.items.size())}};
  }
  return j;
}

inline std::string render_report_table(const BenchReport& r) {
  std::ostringstream os;
  os << "method            correct  total  accuracy\n";
  for (const auto& s : r.scores) {
    char line[128];
    std::snprintf(line, sizeof line, "%-16s  %7zu  %5zu  %7s%%\n", s.method.c_str(), s.correct, s.total,
                  format_percent(s.correct, s.total).c_str());
    os << line;
  }
  if (r.gain) os << "relative gain of " << r.gain->ours << " over " << r.gain->baseline << ": " << format_gain(r.gain->value) << '\n';
  return os.str();
}

namespace detail {

// Runs fn on its own thread and gives up after `seconds`. An abandoned call is
// detached and finishes in the background, so everything it references must
// outlive the process's use of it.
template <class R, class Fn>
std::optional<R> call_with_timeout(Fn fn, double seconds) {
  auto task = std::make_shared<std::packaged_task<R()>>(std::move(fn));
  auto fut = task->get_future();
  std::thread([task] { (*task)(); }).detach();
  if (fut.wait_for(std::chrono::duration<double>(seconds)) != std::future_status::ready) return std::nullopt;
  return fut.get();
}

}  // namespace detail

inline std::string trace_id_for(std::string_view method, const std::string& item_id) {
  return method == kMethodFormal ? item_id : std::string(method) + ":" + item_id;
}

// Every item is attempted once per method. Endpoint errors and timeouts count
// as incorrect and are recorded on the item.
inline BenchReport run_bench(const std::vector<Query>& items, const BenchContext& ctx, const BenchConfig& cfg,
                             TraceLog* log = nullptr, std::string task_file = {}) {
  cfg.check();
  check_task_file(items);
  auto t0 = std::chrono::steady_clock::now();
  BenchReport report;
  report.task_file = std::move(task_file);
  report.seed = cfg.seed;
  report.config_hash = sha256_hex(bench_config_json(cfg).dump()).substr(0, 16);
  if (log) report.traces = log->path().string();

  struct Job {
    std::string method;
    std::size_t item;
  };
  std::vector<Job> jobs;
  for (const auto& m : cfg.methods)
    for (std::size_t i = 0; i < items.size(); ++i) jobs.push_back({m, i});
  report.items.resize(jobs.size());

  SolveContext solve_ctx{ctx.ogf_client, ctx.ogf, ctx.lg_client, ctx.lg, ctx.executor, ctx.prompts};
  parallel_for_index(jobs.size(), cfg.parallelism, [&](std::size_t k) {
    const auto& job = jobs[k];
    const Query& q = items[job.item];
    auto& out = report.items[k];
    out.id = q.id;
    out.method = job.method;
    out.trace_id = trace_id_for(job.method, q.id);
    auto started = std::chrono::steady_clock::now();
    std::optional<ReasoningTrace> trace;
    try {
      trace = detail::call_with_timeout<ReasoningTrace>(
          // copies only: an abandoned call may outlive this frame
          [ctx, solve_ctx, policy = cfg.policy, q, method = job.method] {
            return method == kMethodFormal ? solve(q, solve_ctx, policy) : run_baseline(method, q, ctx, policy.limits);
          },
          cfg.item_timeout_s);
      if (!trace) out.error = "ItemTimeout: no result within " + std::to_string(cfg.item_timeout_s) + " s";
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    out.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!trace) return;
    out.final_answer = trace->final_answer;
    if (trace->abort_cause) out.error = *trace->abort_cause;
    else if (!trace->final_answer) out.error = trace->execution.stderr_excerpt;
    out.correct = trace->final_answer &&
                  answers_match(normalize_answer(*trace->final_answer, q.answer_kind),
                                normalize_answer(*q.gold_answer, q.answer_kind));
    if (log) {
      auto j = trace_to_json(*trace);
      j["id"] = out.trace_id;
      log->append(j);
    }
  });

  for (const auto& m : cfg.methods) {
    MethodScore s{m, 0, 0};
    for (const auto& it : report.items)
      if (it.method == m) {
        ++s.total;
        s.correct += it.correct;
      }
    report.scores.push_back(s);
  }
  report.gain = compute_gain(report.scores, cfg.ours, cfg.baseline);
  report.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ------------------------------------------------------------------ dataset

struct BuildDatasetResult {
  Manifest manifest;
  DatasetBuild build;
  std::vector<std::string> warnings;
};

// Corpus identity: file name plus a content hash prefix.
inline std::string corpus_id(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return path.filename().string() + "@" + sha256_hex(ss.str()).substr(0, 12);
}

inline BuildDatasetResult build_dataset(const std::filesystem::path& corpus_path, const DatasetContext& ctx,
                                        const DatasetConfig& cfg, const std::filesystem::path& out_path) {
  BuildDatasetResult r;
  if (cfg.K == 0) r.warnings.push_back("K = 0: every candidate is discarded and the dataset will be empty");
  auto corpus = read_query_jsonl(corpus_path);
  r.build = build_dataset_samples(corpus, ctx, cfg);
  r.manifest = export_sft(r.build.samples, out_path, corpus_id(corpus_path), config_hash(cfg), cfg.limits, ctx.executor);
  return r;
}

// ------------------------------------------------------------------ toy training

struct ToyThresholds {
  double min_reward_ratio = 0.95;  // final expected reward / enumerated optimum
  double max_bilevel_gap = 0.05;
  bool require_argmax = true;      // argmax theta_x picks a best model on every question
};

struct ToyRunConfig {
  ToyHierarchicalTask task;
  TrainConfig train;
  ToyThresholds thresholds;
};

inline ToyRunConfig parse_toy_config(const nlohmann::json& j) {
  ToyRunConfig c;
  if (!j.is_object() || !j.contains("task")) throw ConfigInvalid("toy config needs a \"task\" object");
  c.task = j.at("task").get<ToyHierarchicalTask>();
  c.train = j.value("train", nlohmann::json::object()).get<TrainConfig>();
  try {
    auto t = j.value("thresholds", nlohmann::json::object());
    ToyThresholds d;
    c.thresholds.min_reward_ratio = t.value("min_reward_ratio", d.min_reward_ratio);
    c.thresholds.max_bilevel_gap = t.value("max_bilevel_gap", d.max_bilevel_gap);
    c.thresholds.require_argmax = t.value("require_argmax", d.require_argmax);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("thresholds: ") + e.what());
  }
  return c;
}

inline ToyRunConfig read_toy_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigInvalid(path.string() + " is not valid JSON");
  return parse_toy_config(j);
}

struct ToySummary {
  double expected_reward = 0;
  double optimal_reward = 0;
  double reward_ratio = 0;
  double gap = 0;
  bool argmax_ok = false;
  bool passed = false;
};

inline void to_json(nlohmann::json& j, const ToySummary& s) {
  j = nlohmann::ordered_json{{"expected_reward", s.expected_reward},
                             {"optimal_reward", s.optimal_reward},
                             {"reward_ratio", s.reward_ratio},
                             {"bilevel_gap", s.gap},
                             {"argmax_ok", s.argmax_ok},
                             {"passed", s.passed}};
}

// Per question, does argmax theta_x name a model whose best output is optimal?
inline bool argmax_is_optimal(const ToyHierarchicalTask& task, const SoftmaxPolicy& theta_x) {
  for (std::size_t q = 0; q < task.questions(); ++q) {
    auto best_of = [&](std::size_t m) { return *std::max_element(task.rewards[m].begin(), task.rewards[m].end()); };
    double best = 0;
    for (auto m : task.models[q]) best = std::max(best, best_of(m));
    if (best_of(task.models[q][theta_x.argmax(q)]) < best) return false;
  }
  return true;
}

inline ToySummary summarize_toy(const ToyRunConfig& c, const TrainHistory& h) {
  ToySummary s;
  s.expected_reward = expected_reward(c.task, h.theta_x, h.theta_y);
  s.optimal_reward = optimal_expected_reward(c.task);
  s.reward_ratio = s.optimal_reward > 0 ? s.expected_reward / s.optimal_reward : 1.0;
  s.gap = bilevel_gap(c.task, h.theta_x, h.theta_y);
  s.argmax_ok = argmax_is_optimal(c.task, h.theta_x);
  s.passed = s.reward_ratio >= c.thresholds.min_reward_ratio && s.gap <= c.thresholds.max_bilevel_gap &&
             (!c.thresholds.require_argmax || s.argmax_ok);
  return s;
}

struct ToyRunResult {
  TrainHistory history;
  ToySummary summary;
  std::filesystem::path history_path, summary_path;
};

// Writes <out>/history.jsonl and <out>/summary.json.
inline ToyRunResult train_toy(const ToyRunConfig& c, const std::filesystem::path& out_dir) {
  ToyRunResult r;
  r.history = train_alternating(c.task, c.train);
  r.summary = summarize_toy(c, r.history);
  std::filesystem::create_directories(out_dir);
  r.history_path = out_dir / "history.jsonl";
  r.summary_path = out_dir / "summary.json";
  {
    std::ofstream out(r.history_path, std::ios::binary | std::ios::trunc);
    r.history.write_jsonl(out);
  }
  nlohmann::ordered_json summary;
  summary["summary"] = nlohmann::json(r.summary);
  summary["thresholds"] = {{"min_reward_ratio", c.thresholds.min_reward_ratio},
                           {"max_bilevel_gap", c.thresholds.max_bilevel_gap},
                           {"require_argmax", c.thresholds.require_argmax}};
  summary["train"] = nlohmann::json(c.train);
  summary["theta_x"] = nlohmann::json(r.history.theta_x);
  summary["theta_y"] = nlohmann::json(r.history.theta_y);
  std::ofstream(r.summary_path, std::ios::binary | std::ios::trunc) << summary.dump(2) << '\n';
  return r;
}

// ------------------------------------------------------------------ traces

inline std::string render_trace(const nlohmann::json& t) {
  std::ostringstream os;
  auto str = [&](const char* key) {
    return t.contains(key) && t.at(key).is_string() ? t.at(key).get<std::string>() : std::string{};
  };
  os << "trace " << str("id") << " (" << str("method") << ")\n";
  if (t.contains("query")) os << "question: " << t["query"].value("question", "") << "\n";
  os << "\n== model ==\n";
  if (t.contains("chosen_model_document") && t["chosen_model_document"].is_string())
    os << t["chosen_model_document"].get<std::string>();
  else
    os << "(no valid model)\n";
  if (t.contains("model_candidates")) {
    std::size_t rejected = 0;
    for (const auto& c : t["model_candidates"])
      if (c["model"].is_null()) ++rejected;
    os << "candidates: " << t["model_candidates"].size() << " sampled, " << rejected << " rejected\n";
  }
  os << "\n== logic plan ==\n" << str("logic_plan") << "\n";
  os << "\n== program ==\n" << str("program") << "\n";
  os << "\n== execution ==\n";
  if (t.contains("execution")) {
    const auto& e = t["execution"];
    os << "status: " << e.value("status", "") << "\n";
    if (e.contains("answer") && e["answer"].is_string()) os << "answer: " << e["answer"].get<std::string>() << "\n";
    auto err = e.value("stderr", "");
    if (!err.empty()) os << "stderr: " << err << "\n";
  }
  os << "\n== refinement ==\n";
  if (t.contains("refinement_steps") && !t["refinement_steps"].empty()) {
    for (const auto& s : t["refinement_steps"])
      os << s.value("attempt", 0) << ". " << s.value("kind", "") << ": " << text::excerpt_line(s.value("cause", ""), 200)
         << "\n";
  } else {
    os << "(none)\n";
  }
  os << "\nfinal answer: " << (t.contains("final_answer") && t["final_answer"].is_string() ? t["final_answer"].get<std::string>() : "(none)")
     << "\n";
  if (t.contains("abort_cause") && t["abort_cause"].is_string()) os << "aborted: " << t["abort_cause"].get<std::string>() << "\n";
  return os.str();
}

inline std::string inspect_trace(const std::filesystem::path& log_path, const std::string& trace_id) {
  if (!std::filesystem::exists(log_path)) throw NotFound("trace log " + log_path.string() + " does not exist");
  return render_trace(TraceLog(log_path).find(trace_id));
}

}  // namespace logicforge
