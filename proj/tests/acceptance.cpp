// Acceptance suite: one PASS/FAIL line per criterion, with its runtime.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "logicforge/bench.hpp"
#include "support/dataset_oracle.hpp"
#include "support/generators.hpp"
#include "support/gradient_check.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_corpus.hpp"
#include "support/toy_tasks.hpp"

using namespace logicforge;
using namespace logicforge::testgen;

namespace {

// Collects the first few failure notes of a criterion.
struct Check {
  std::vector<std::string> notes;
  void fail(std::string why) {
    if (notes.size() < 3) notes.push_back(std::move(why));
    else if (notes.size() == 3) notes.push_back("...");
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

int failures = 0;

void criterion(const char* name, double max_seconds, const std::function<void(Check&)>& body) {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (max_seconds > 0 && s >= max_seconds) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "runtime %.2fs over %.0fs", s, max_seconds);
    c.fail(buf);
  }
  bool ok = c.notes.empty();
  failures += !ok;
  std::printf("%s  %-28s %8.3fs", ok ? "PASS" : "FAIL", name, s);
  for (const auto& n : c.notes) std::printf("  | %s", n.c_str());
  std::printf("\n");
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

int main() {
  criterion("advantage-normalization", 1.0, [](Check& c) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t constant = 0, varied = 0;
    for (int t = 0; t < 1000; ++t) {
      std::size_t n = 2 + rng() % 15;
      std::vector<double> r(n);
      int mode = static_cast<int>(rng() % 4);
      double level = u(rng);
      for (auto& x : r) x = mode == 0 ? level : mode == 1 ? double(rng() % 2) : 10 * u(rng) - 5;
      auto a = group_advantages(r);
      bool flat = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
      if (flat) {
        ++constant;
        for (double x : a) c.expect(x == 0.0, "constant group gave nonzero advantage " + num(x));
        continue;
      }
      ++varied;
      c.expect(std::fabs(oracle::mean(a)) <= 1e-9, "mean " + num(oracle::mean(a)));
      c.expect(std::fabs(oracle::pop_std(a) - 1) <= 1e-9, "std " + num(oracle::pop_std(a)));
    }
    c.expect(constant > 0 && varied > 0, "generator did not cover both cases");
  });

  criterion("worked-advantage-values", 1.0, [](Check& c) {
    std::vector<double> r{1, 1, 0, 0, 0};
    std::vector<double> want{1.224745, 1.224745, -0.816497, -0.816497, -0.816497};
    auto got = group_advantages(r);
    auto ref = oracle::standardize(r);
    for (std::size_t i = 0; i < r.size(); ++i) {
      c.expect(std::fabs(got[i] - want[i]) <= 1e-6, "A[" + std::to_string(i) + "] = " + num(got[i]));
      c.expect(std::fabs(ref[i] - want[i]) <= 1e-6, "oracle A[" + std::to_string(i) + "] = " + num(ref[i]));
    }
  });

  criterion("surrogate-gradient-check", 10.0, [](Check& c) {
    std::mt19937_64 rng(202);
    std::size_t clipped_seen = 0;
    for (int t = 0; t < 100; ++t) {
      auto cfg = random_config(rng);
      for (auto level : {Level::upper, Level::lower}) {
        auto analytic = objective_gradient(level, cfg.theta, cfg.theta_old, cfg.groups, cfg.epsilon, cfg.kl);
        double err = relative_error(analytic, finite_difference(cfg));
        c.expect(err < 1e-6, "config " + std::to_string(t) + " relative error " + num(err));
      }
      // keep only samples on the flat side of the clip: gradient must vanish
      std::vector<SampledGroup> flat;
      for (const auto& g : cfg.groups) {
        SampledGroup keep{g.context, {}, {}};
        for (std::size_t i = 0; i < g.actions.size(); ++i) {
          double rho = cfg.theta.prob(g.context, g.actions[i]) / cfg.theta_old.prob(g.context, g.actions[i]);
          double a = g.advantages[i];
          if ((a > 0 && rho > 1 + cfg.epsilon) || (a < 0 && rho < 1 - cfg.epsilon)) {
            keep.actions.push_back(g.actions[i]);
            keep.advantages.push_back(a);
          }
        }
        if (!keep.actions.empty()) flat.push_back(std::move(keep));
      }
      if (flat.empty()) continue;
      clipped_seen += flat.size();
      auto g = surrogate_gradient(cfg.theta, cfg.theta_old, flat, cfg.epsilon);
      for (const auto& row : g)
        for (double x : row) c.expect(x == 0.0, "clipped sample gradient " + num(x));
    }
    c.expect(clipped_seen > 0, "no clipped samples generated");
  });

  criterion("fresh-snapshot-identity", 0, [](Check& c) {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> n01(0, 1);
    for (int t = 0; t < 100; ++t) {
      auto cfg = random_config(rng);
      // arbitrary advantages, not standardized, so the identity is not 0 = 0
      for (auto& g : cfg.groups)
        for (auto& a : g.advantages) a = 2 * n01(rng) + 0.5;
      double want = 0;
      for (const auto& g : cfg.groups) want += oracle::mean(g.advantages);
      want /= static_cast<double>(cfg.groups.size());
      double jh = upper_objective(cfg.theta, cfg.theta, cfg.groups, cfg.epsilon);
      double jl = lower_objective(cfg.theta, cfg.theta, cfg.groups, cfg.epsilon);
      c.expect(std::fabs(jh - want) <= 1e-9, "J_h " + num(jh) + " vs " + num(want));
      c.expect(std::fabs(jl - want) <= 1e-9, "J_l " + num(jl) + " vs " + num(want));
    }
  });

  criterion("alternating-convergence", 60.0, [](Check& c) {
    std::vector<std::size_t> dominant{2, 0, 3, 1};
    auto task = make_dominant_task(dominant, 4, 4);
    TrainConfig cfg;
    cfg.I = 200;
    cfg.B = cfg.G = cfg.P = 4;
    cfg.seed = 7;
    auto h = train_alternating(task, cfg);
    double opt = optimal_expected_reward(task);
    double got = expected_reward(task, h.theta_x, h.theta_y);
    double gap = bilevel_gap(task, h.theta_x, h.theta_y);
    c.expect(got >= 0.95 * opt, "expected reward " + num(got) + " of " + num(opt));
    c.expect(gap <= 0.05, "bilevel gap " + num(gap));
    for (std::size_t q = 0; q < dominant.size(); ++q)
      c.expect(h.theta_x.argmax(q) == dominant[q], "question " + std::to_string(q) + " argmax " +
                                                        std::to_string(h.theta_x.argmax(q)));
  });

  criterion("sft-loss", 0, [](Check& c) {
    double l = sft_loss(SoftmaxPolicy::uniform({2}), {{0, 1}});
    c.expect(std::fabs(l - std::log(2.0)) <= 1e-12, "uniform loss " + num(l));
    SoftmaxPolicy p = SoftmaxPolicy::uniform({3, 2, 4});
    std::vector<SftExample> data{{0, 2}, {1, 0}, {0, 2}, {2, 3}, {2, 1}};
    double prev = sft_loss(p, data);
    for (int step = 0; step < 50; ++step) {
      p.ascend(sft_gradient(p, data), -0.3);
      double cur = sft_loss(p, data);
      c.expect(cur < prev, "step " + std::to_string(step) + " loss " + num(cur) + " >= " + num(prev));
      prev = cur;
    }
  });

  criterion("schema-round-trip", 0, [](Check& c) {
    std::mt19937_64 rng(404);
    for (int i = 0; i < 1000; ++i) {
      auto m = random_valid_model(rng);
      auto r = parse_model(serialize(m));
      c.expect(r.ok() && r.model && *r.model == m, "model " + std::to_string(i) + " did not round-trip");
    }
    FormalModel m = random_valid_model(rng);
    if (m.variables.empty()) m.variables.push_back({"base", "int", ""});
    const std::string doc = serialize(m);
    auto injected = [&](ViolationCode code, std::string bad) {
      auto r = parse_model(bad);
      bool hit = std::any_of(r.violations.begin(), r.violations.end(),
                             [&](const SchemaViolation& v) { return v.code == code; });
      c.expect(hit, std::string("not detected: ") + std::string(to_string(code)));
    };
    injected(ViolationCode::MissingSection, doc.substr(0, doc.find("## OBJECTIVES")));
    std::string d = doc;
    d.replace(d.find("## VARIABLES\n"), 13, "## VARIABLES\n- " + m.variables[0].name + ": dup\n");
    injected(ViolationCode::DuplicateVariable, d);
    d = doc;
    d.replace(d.find("## CONSTRAINTS\n"), 15, "## CONSTRAINTS\n- qqq_undeclared > 0\n");
    injected(ViolationCode::UnknownVariableRef, d);
    d = doc;
    d.replace(d.find("## OBJECTIVES\n"), 14, "## OBJECTIVES\n- decide:\n");
    injected(ViolationCode::EmptyObjective, d);
    injected(ViolationCode::MalformedDocument, doc + "## APPENDIX\n");
  });

  criterion("dataset-pipeline-oracle", 30.0, [](Check& c) {
    auto corpus = synthetic_corpus(20240601, 25, 8);
    std::size_t total = 0;
    for (const auto& sq : corpus) total += sq.candidates.size();
    c.expect(total == 200, "corpus has " + std::to_string(total) + " candidates");
    for (std::size_t K : {1u, 2u, 3u, 8u}) {
      std::vector<std::string> mislabeled;
      auto want = oracle_retained(corpus, K, &mislabeled);
      auto build = run_pipeline(corpus, K);
      c.expect(mislabeled.empty(), "oracle disagrees with corpus labels");
      c.expect(retained_of(build) == want && build.samples.size() == want.size(),
               "retained set differs from oracle at K=" + std::to_string(K));
    }
    // every exported sample re-executes to its gold answer
    auto build = run_pipeline(corpus, 2);
    auto dir = std::filesystem::temp_directory_path() / "logicforge_acceptance_dmod";
    std::filesystem::create_directories(dir);
    MiniInterpreterBackend mini;
    auto m = export_sft(build.samples, dir / "dmod.jsonl", "synthetic", "acceptance", {}, mini);
    std::ifstream in(dir / "dmod.jsonl");
    std::size_t lines = 0, matched = 0;
    for (std::string line; std::getline(in, line); ++lines) {
      auto j = nlohmann::json::parse(line);
      auto r = mini::run(j.at("p").get<std::string>());
      matched += r.outcome == mini::Outcome::ok && r.answer == j.at("a").get<std::string>();
    }
    c.expect(lines > 0 && lines == m.count && matched == lines,
             std::to_string(matched) + "/" + std::to_string(lines) + " exported samples re-execute to gold");
    std::filesystem::remove_all(dir);
    // retention = min(K, I) over the grid
    for (std::size_t K = 0; K <= 4; ++K)
      for (std::size_t I = 0; I <= 6; ++I) {
        ScriptedChatClient judge;
        judge.add_rule("", {"<score>5</score>", "<score>9</score>", "nonsense"});
        std::vector<CandidateTriple> valid;
        for (std::size_t i = 0; i < I; ++i) {
          CandidateTriple t;
          t.index = i;
          t.code = "answer = 5" + std::string(i, ' ');
          valid.push_back(t);
        }
        Query q;
        q.id = "grid";
        q.question = "What is 5?";
        q.gold_answer = "5";
        auto r = rank_by_self_evaluation(valid, q, judge, scripted_endpoint("judge"), K);
        c.expect(r.size() == std::min(K, I), "K=" + std::to_string(K) + " I=" + std::to_string(I) + " kept " +
                                                 std::to_string(r.size()));
      }
  });

  criterion("end-to-end-mock-pipeline", 0, [](Check& c) {
    auto tasks = toy_tasks(10);
    ScriptedChatClient ogf_client, lg_client;
    script_ogf(ogf_client, tasks);
    script_lg(lg_client, tasks);
    auto ogf = scripted_endpoint("ogf"), lg = scripted_endpoint("lg");
    MiniInterpreterBackend mini;
    PromptSet prompts;
    SolveContext ctx{ogf_client, ogf, lg_client, lg, mini, prompts};
    std::size_t solved = 0;
    for (const auto& t : tasks) {
      auto trace = solve(t.query, ctx);
      solved += trace.final_answer && answers_match(normalize_answer(*trace.final_answer, t.query.answer_kind),
                                                    normalize_answer(*t.query.gold_answer, t.query.answer_kind));
      bool five = trace.chosen_model && !trace.chosen_model->overview.empty() &&
                  !trace.chosen_model->variables.empty() && !trace.chosen_model->constraints.empty() &&
                  !trace.chosen_model->objectives.empty();
      c.expect(five, t.query.id + " trace lacks a parsed five-tuple");
    }
    c.expect(solved == 10, std::to_string(solved) + "/10 solved");

    // injected failures: two program errors escalate, an invalid model goes back to formalization
    ScriptedChatClient ogf2, lg2;
    ogf2.add_rule("", {"no sections here", tasks[0].model_doc});
    lg2.add_rule("", {"P\n```\nanswer = 1 / 0\n```", "P\n```\nanswer = missing_name\n```", tasks[0].lg_reply});
    auto trace = solve(tasks[0].query, {ogf2, ogf, lg2, lg, mini, prompts});
    std::vector<StepKind> kinds;
    for (const auto& s : trace.refinement_steps) kinds.push_back(s.kind);
    std::vector<StepKind> want{StepKind::FeedbackToOGF, StepKind::RegenerateProgram, StepKind::FeedbackToOGF};
    c.expect(kinds == want, "injected-failure transitions differ");
    c.expect(trace.final_answer && *trace.final_answer == std::to_string(tasks[0].expected),
             "injected-failure run did not recover");

    // the documented machine, enumerated over small budgets and failure strings
    for (std::size_t max_attempts = 0; max_attempts <= 5; ++max_attempts)
      for (std::size_t threshold = 1; threshold <= 3; ++threshold)
        for (int len = 1; len <= 6; ++len)
          for (int mask = 0; mask < (1 << len); ++mask) {
            RefinePolicy p;
            p.max_attempts = max_attempts;
            p.escalation_threshold = threshold;
            std::vector<RefinementStep> history;
            std::size_t local = 0;
            for (int i = 0; i < len; ++i) {
              bool invalid = (mask >> i) & 1;
              auto got = decide_refinement({invalid ? FailureKind::invalid_model : FailureKind::program, "f"},
                                           history, p);
              if (static_cast<std::size_t>(i) >= max_attempts) {
                c.expect(std::holds_alternative<Abort>(got), "budget not enforced");
                break;
              }
              StepKind w = StepKind::RegenerateProgram;
              if (invalid || ++local >= threshold) {
                w = StepKind::FeedbackToOGF;
                local = 0;
              }
              if (!std::holds_alternative<RefinementStep>(got) || std::get<RefinementStep>(got).kind != w) {
                c.fail("transition differs at mask " + std::to_string(mask) + " step " + std::to_string(i));
                break;
              }
              history.push_back(std::get<RefinementStep>(got));
            }
          }
  });

  criterion("report-arithmetic", 0, [](Check& c) {
    auto g1 = format_gain(relative_gain(59.4, 50.5));
    auto g2 = format_gain(relative_gain(82, 71.7));
    c.expect(g1 == "+17.6%", "(59.4, 50.5) gave " + g1);
    c.expect(g2 == "+14.4%", "(82, 71.7) gave " + g2);
  });

  return failures ? 1 : 0;
}
