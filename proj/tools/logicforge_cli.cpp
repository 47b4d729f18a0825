// logicforge command line: solve, bench, build-dataset, train-toy, inspect-trace.
//
// Endpoints are given as either `scripted:<rules.json>` (offline replay) or a
// path to an endpoint JSON file {"base_url", "model_name", "api_key_env", ...}.
// Exit codes: 0 ok, 1 run failed (or toy thresholds unmet), 2 bad input.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "logicforge/bench.hpp"

using namespace logicforge;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot open " + p.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw UsageError(p.string() + " is not valid JSON");
  return j;
}

// One configured chat endpoint plus whatever owns its client.
struct Endpoint {
  std::unique_ptr<ChatClient> base;
  std::unique_ptr<CachingChatClient> cache;
  ChatEndpoint ep;

  ChatClient& client() { return cache ? static_cast<ChatClient&>(*cache) : *base; }
};

std::unique_ptr<Endpoint> open_endpoint(const std::string& spec, const std::string& cache_dir) {
  if (spec.empty()) throw UsageError("endpoint not given");
  auto e = std::make_unique<Endpoint>();
  if (text::starts_with(spec, "scripted:")) {
    auto path = spec.substr(9);
    e->base.reset(new ScriptedChatClient(ScriptedChatClient::from_json(read_json_file(path))));
    e->ep.base_url = "scripted://" + fs::path(path).filename().string();
    e->ep.model_name = "scripted";
  } else {
    try {
      e->ep = read_json_file(spec).get<ChatEndpoint>();
    } catch (const nlohmann::json::exception& ex) {
      throw UsageError("endpoint file " + spec + ": " + ex.what());
    }
    e->base = std::make_unique<HttpChatClient>();
  }
  if (!cache_dir.empty()) e->cache = std::make_unique<CachingChatClient>(*e->base, cache_dir);
  return e;
}

std::unique_ptr<ExecutorBackend> open_executor(const std::string& runner) {
  if (runner.empty()) return std::make_unique<MiniInterpreterBackend>();
  SubprocessConfig cfg;
  std::istringstream words(runner);
  for (std::string w; words >> w;) cfg.argv.push_back(w);
  return std::make_unique<SubprocessBackend>(cfg);
}

void write_file(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

struct Common {
  std::string config, endpoint_ogf, endpoint_lg, cache_dir, out, runner, prompts;
  std::size_t parallelism = 0;  // 0: keep the config's value
  std::optional<std::uint64_t> seed;
};

void add_endpoint_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--endpoint-ogf", c.endpoint_ogf, "formalization endpoint: scripted:<file> or endpoint JSON");
  cmd->add_option("--endpoint-lg", c.endpoint_lg, "logic generation endpoint: scripted:<file> or endpoint JSON");
  cmd->add_option("--cache-dir", c.cache_dir, "replay cache for chat completions");
  cmd->add_option("--runner", c.runner, "external runner command line (default: built-in interpreter)");
  cmd->add_option("--prompts", c.prompts, "prompt template overrides (JSON)");
}

PromptSet load_prompts(const Common& c) { return c.prompts.empty() ? PromptSet{} : PromptSet::from_file(c.prompts); }

// ------------------------------------------------------------------ solve

int cmd_solve(const Common& c, const std::string& task_file, const std::string& item, Query q) {
  if (!task_file.empty()) {
    auto items = read_query_jsonl(task_file);
    auto it = std::find_if(items.begin(), items.end(), [&](const Query& x) { return x.id == item; });
    if (it == items.end()) throw UsageError("no item '" + item + "' in " + task_file);
    q = *it;
  }
  q.check();
  RefinePolicy policy;
  if (!c.config.empty()) policy = read_json_file(c.config).get<RefinePolicy>();
  auto ogf = open_endpoint(c.endpoint_ogf, c.cache_dir);
  auto lg = open_endpoint(c.endpoint_lg, c.cache_dir);
  auto exec = open_executor(c.runner);
  auto prompts = load_prompts(c);
  auto trace = solve(q, {ogf->client(), ogf->ep, lg->client(), lg->ep, *exec, prompts}, policy);
  auto j = trace_to_json(trace);
  if (!c.out.empty()) TraceLog(c.out).append(j);
  std::cout << render_trace(j);
  if (q.gold_answer && trace.final_answer) {
    bool ok = answers_match(normalize_answer(*trace.final_answer, q.answer_kind),
                            normalize_answer(*q.gold_answer, q.answer_kind));
    std::cout << "\ngold: " << *q.gold_answer << (ok ? " (correct)" : " (incorrect)") << '\n';
  }
  return trace.abort_cause ? 1 : 0;
}

// ------------------------------------------------------------------ bench

int cmd_bench(const Common& c, const std::string& task_file, const std::vector<std::string>& methods,
              const std::string& baseline, bool json_only) {
  BenchConfig cfg;
  if (!c.config.empty()) cfg = read_json_file(c.config).get<BenchConfig>();
  if (!methods.empty()) cfg.methods = methods;
  if (!baseline.empty()) cfg.baseline = baseline;
  if (c.parallelism) cfg.parallelism = c.parallelism;
  if (c.seed) cfg.seed = *c.seed;
  cfg.check();
  auto items = read_task_file(task_file);
  auto ogf = open_endpoint(c.endpoint_ogf, c.cache_dir);
  auto lg = open_endpoint(c.endpoint_lg, c.cache_dir);
  auto exec = open_executor(c.runner);
  auto prompts = load_prompts(c);
  fs::path out = c.out.empty() ? fs::path("bench_out") : fs::path(c.out);
  TraceLog log(out / "traces.jsonl");
  auto r = run_bench(items, {ogf->client(), ogf->ep, lg->client(), lg->ep, *exec, prompts}, cfg, &log, task_file);
  auto j = report_to_json(r);
  write_file(out / "report.json", j.dump(2) + "\n");
  write_file(out / "report.txt", render_report_table(r));
  if (json_only)
    std::cout << j.dump(2) << '\n';
  else
    std::cout << render_report_table(r) << "report: " << (out / "report.json").string() << '\n';
  return 0;
}

// ------------------------------------------------------------------ build-dataset

int cmd_build_dataset(const Common& c, const std::string& corpus, const std::string& teacher_spec,
                      const std::string& judge_spec, std::optional<std::size_t> N, std::optional<std::size_t> K) {
  DatasetConfig cfg;
  if (!c.config.empty()) cfg = read_json_file(c.config).get<DatasetConfig>();
  if (N) cfg.N = *N;
  if (K) cfg.K = *K;
  if (c.parallelism) cfg.parallelism = c.parallelism;
  cfg.check();
  if (c.out.empty()) throw UsageError("--out is required");
  auto teacher = open_endpoint(teacher_spec.empty() ? c.endpoint_ogf : teacher_spec, c.cache_dir);
  auto judge = open_endpoint(judge_spec.empty() ? c.endpoint_lg : judge_spec, c.cache_dir);
  auto exec = open_executor(c.runner);
  auto prompts = load_prompts(c);
  auto r = build_dataset(corpus, {teacher->client(), teacher->ep, judge->client(), judge->ep, *exec, prompts}, cfg,
                         c.out);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& q : r.build.per_query)
    std::cerr << q.id << ": sampled " << q.sampled << ", executed " << q.execution_valid << ", model ok "
              << q.model_valid << ", kept " << q.retained << '\n';
  std::cout << nlohmann::json(r.manifest).dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------------------ train-toy

int cmd_train_toy(const Common& c) {
  if (c.config.empty()) throw UsageError("--config is required");
  auto cfg = read_toy_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  auto r = train_toy(cfg, c.out.empty() ? fs::path("toy_out") : fs::path(c.out));
  std::cout << nlohmann::json(r.summary).dump(2) << '\n';
  return r.summary.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logicforge: formalize-then-program reasoning pipeline, benchmark harness and trainers"};
  app.require_subcommand(1);
  Common c;

  auto* solve_cmd = app.add_subcommand("solve", "solve one query and print its trace");
  Query q;
  std::string task_file, item, kind;
  add_endpoint_flags(solve_cmd, c);
  solve_cmd->add_option("--config", c.config, "refinement policy JSON");
  solve_cmd->add_option("--out", c.out, "append the trace to this JSONL log");
  solve_cmd->add_option("--question", q.question, "question text");
  solve_cmd->add_option("--instruction", q.instruction, "answer format instruction");
  solve_cmd->add_option("--id", q.id, "query id")->default_val("cli");
  solve_cmd->add_option("--gold", q.gold_answer, "gold answer, for a correctness note");
  solve_cmd->add_option("--answer-kind", kind, "number, boolean, choice-label or string");
  solve_cmd->add_option("--task-file", task_file, "take the query from a task file ...");
  solve_cmd->add_option("--item", item, "... by id")->needs(solve_cmd->get_option("--task-file"));

  auto* bench_cmd = app.add_subcommand("bench", "run methods over a task file and report accuracy");
  std::string bench_file, baseline;
  std::vector<std::string> methods;
  bool json_only = false;
  add_endpoint_flags(bench_cmd, c);
  bench_cmd->add_option("task_file", bench_file, "JSON-lines task file")->required();
  bench_cmd->add_option("--config", c.config, "bench config JSON");
  bench_cmd->add_option("--methods", methods, "formal, program-aided, cot")->delimiter(',');
  bench_cmd->add_option("--baseline", baseline, "fixed baseline for the relative gain");
  bench_cmd->add_option("--parallelism", c.parallelism, "concurrent items");
  bench_cmd->add_option("--seed", c.seed, "run seed recorded in the report");
  bench_cmd->add_option("--out", c.out, "output directory (report.json, report.txt, traces.jsonl)");
  bench_cmd->add_flag("--json", json_only, "print the JSON report instead of the table");

  auto* ds_cmd = app.add_subcommand("build-dataset", "rejection-sample a fine-tuning dataset");
  std::string corpus, teacher_spec, judge_spec;
  std::optional<std::size_t> N, K;
  add_endpoint_flags(ds_cmd, c);
  ds_cmd->add_option("corpus", corpus, "seed corpus JSONL {id, question, instruction, gold_answer}")->required();
  ds_cmd->add_option("--endpoint-teacher", teacher_spec, "teacher endpoint (default: --endpoint-ogf)");
  ds_cmd->add_option("--endpoint-judge", judge_spec, "judge endpoint (default: --endpoint-lg)");
  ds_cmd->add_option("--config", c.config, "dataset config JSON");
  ds_cmd->add_option("-N", N, "candidates sampled per question");
  ds_cmd->add_option("-K", K, "candidates kept per question");
  ds_cmd->add_option("--parallelism", c.parallelism, "concurrent questions");
  ds_cmd->add_option("--out", c.out, "output JSONL; the manifest goes next to it");

  auto* toy_cmd = app.add_subcommand("train-toy", "alternating bilevel training on a toy task");
  toy_cmd->add_option("--config", c.config, "toy config JSON")->required();
  toy_cmd->add_option("--seed", c.seed, "override the config seed");
  toy_cmd->add_option("--out", c.out, "output directory (history.jsonl, summary.json)");

  auto* insp_cmd = app.add_subcommand("inspect-trace", "render one stored trace");
  std::string trace_id, trace_log = "bench_out/traces.jsonl";
  insp_cmd->add_option("trace_id", trace_id, "trace id")->required();
  insp_cmd->add_option("--traces", trace_log, "trace log JSONL")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) {
      if (!kind.empty()) {
        auto k = answer_kind_from(kind);
        if (!k) throw UsageError("unknown answer kind '" + kind + "'");
        q.answer_kind = *k;
      }
      return cmd_solve(c, task_file, item, q);
    }
    if (*bench_cmd) return cmd_bench(c, bench_file, methods, baseline, json_only);
    if (*ds_cmd) return cmd_build_dataset(c, corpus, teacher_spec, judge_spec, N, K);
    if (*toy_cmd) return cmd_train_toy(c);
    if (*insp_cmd) {
      std::cout << inspect_trace(trace_log, trace_id);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const TaskFileInvalid& e) {
    std::cerr << "TaskFileInvalid: " << e.what() << '\n';
    return 2;
  } catch (const ConfigInvalid& e) {
    std::cerr << "ConfigInvalid: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return 2;
  } catch (const NotFound& e) {
    std::cerr << "NotFound: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
