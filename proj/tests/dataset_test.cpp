#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "logicforge/dataset.hpp"
#include "logicforge/mini_interpreter.hpp"
#include "support/dataset_oracle.hpp"
#include "support/synthetic_corpus.hpp"
#include "support/toy_tasks.hpp"

using namespace logicforge;
using testgen::scripted_endpoint;
using testgen::oracle_retained;
using testgen::retained_of;
using testgen::run_pipeline;

namespace {

const char* kDoc =
    "## OVERVIEW\nAdd two numbers.\n\n## TYPE\narithmetic\n\n## VARIABLES\n- x: int\n\n"
    "## CONSTRAINTS\n- x > 0\n\n## OBJECTIVES\n- compute: calculate `x`\n";

std::string tagged(const std::string& think, const std::string& model, const std::string& code) {
  return "<think>" + think + "</think>\n<model>\n" + model + "</model>\n<code>\n" + code + "\n</code>";
}

Query query_with_gold(std::string gold) {
  Query q;
  q.id = "d1";
  q.question = "What is 2 + 3?";
  q.instruction = "Number only.";
  q.gold_answer = std::move(gold);
  return q;
}

CandidateTriple candidate(std::size_t index, std::string code) {
  CandidateTriple c;
  c.index = index;
  c.code = std::move(code);
  c.model_doc = kDoc;
  return c;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("logicforge_" + name + "_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

// Scripted judge keyed on program text.
std::vector<ScriptedChatClient::Rule> judge_rules(const std::vector<std::pair<std::string, std::string>>& code_to_reply) {
  std::vector<ScriptedChatClient::Rule> rules;
  for (const auto& [code, reply] : code_to_reply) rules.push_back({"Program:\n" + code, {reply}});
  return rules;
}

}  // namespace

// ------------------------------------------------------------------ sampling

TEST(SampleCandidates, OneWellTaggedCompletion) {
  ScriptedChatClient teacher;
  teacher.add_rule("", {tagged("add them", kDoc, "answer = 2 + 3")});
  auto c = sample_candidates(query_with_gold("5"), teacher, scripted_endpoint("t"), 1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].think, "add them");
  EXPECT_EQ(c[0].model_doc, text::trim(kDoc));
  EXPECT_EQ(c[0].code, "answer = 2 + 3");
}

TEST(SampleCandidates, MissingCodeLeavesItEmpty) {
  ScriptedChatClient teacher;
  teacher.add_rule("", {"<think>t</think><model>m</model> and then I stopped"});
  auto c = sample_candidates(query_with_gold("5"), teacher, scripted_endpoint("t"), 1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(c[0].code.empty());
  EXPECT_EQ(c[0].think, "t");
}

TEST(SampleCandidates, OrderPreserved) {
  ScriptedChatClient teacher;
  std::vector<std::string> replies;
  for (int i = 0; i < 4; ++i) replies.push_back(tagged("t", kDoc, "answer = " + std::to_string(i)));
  teacher.add_rule("", replies);
  auto c = sample_candidates(query_with_gold("5"), teacher, scripted_endpoint("t"), 4);
  ASSERT_EQ(c.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i].index, i);
    EXPECT_EQ(c[i].code, "answer = " + std::to_string(i));
  }
}

TEST(SampleCandidates, FencedCodeInsideTagIsUnwrapped) {
  auto c = split_triple(tagged("t", kDoc, "```python\nanswer = 5\n```"));
  EXPECT_EQ(c.code, "answer = 5");
}

TEST(SampleCandidates, Preconditions) {
  ScriptedChatClient teacher;
  teacher.add_rule("", {"x"});
  EXPECT_THROW(sample_candidates(query_with_gold("5"), teacher, scripted_endpoint("t"), 0), std::invalid_argument);
  auto q = query_with_gold("5");
  q.gold_answer.reset();
  EXPECT_THROW(sample_candidates(q, teacher, scripted_endpoint("t"), 1), TaskFileInvalid);
}

// ------------------------------------------------------------------ filter

TEST(FilterByExecution, KeepsExactlyMatchingCandidates) {
  MiniInterpreterBackend mini;
  std::vector<CandidateTriple> cs{candidate(0, "answer = 2 + 3"), candidate(1, "answer = 2 * 3"),
                                  candidate(2, "print(10 / 2)"), candidate(3, "answer = 1 / 0")};
  auto kept = filter_by_execution(cs, normalize_answer("5"), {}, mini);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].index, 0u);
  EXPECT_EQ(kept[1].index, 2u);
  for (const auto& c : cs) EXPECT_TRUE(c.exec_result.has_value());
  EXPECT_EQ(cs[3].exec_result->status, ExecStatus::runtime_error);
}

TEST(FilterByExecution, EmptyInput) {
  MiniInterpreterBackend mini;
  std::vector<CandidateTriple> none;
  EXPECT_TRUE(filter_by_execution(none, normalize_answer("5"), {}, mini).empty());
}

TEST(FilterByExecution, EmptyCodeFails) {
  MiniInterpreterBackend mini;
  std::vector<CandidateTriple> cs{candidate(0, "")};
  EXPECT_TRUE(filter_by_execution(cs, normalize_answer("5"), {}, mini).empty());
  EXPECT_EQ(cs[0].exec_result->status, ExecStatus::runtime_error);
}

// ------------------------------------------------------------------ ranking

TEST(RankBySelfEvaluation, MinRuleReturnsAllWhenKExceedsI) {
  ScriptedChatClient judge(judge_rules({{"answer = 5", "<score>4</score>"}, {"answer = 2 + 3", "<score>8</score>"}}));
  std::vector<CandidateTriple> valid{candidate(0, "answer = 5"), candidate(1, "answer = 2 + 3")};
  auto r = rank_by_self_evaluation(valid, query_with_gold("5"), judge, scripted_endpoint("j"), 3);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].index, 1u);
  EXPECT_EQ(*r[0].rank_score, 8.0);
}

// Scores [3,9,7,9,1]; the two nines win, shorter code first.
TEST(RankBySelfEvaluation, TieBreakByCodeLengthThenIndex) {
  std::vector<std::string> codes{"answer = 5 # c0", "answer = 5 # c1 longer", "answer = 5 # c2", "answer = 5 # c3",
                                 "answer = 5 # c4"};
  std::vector<int> scores{3, 9, 7, 9, 1};
  std::vector<std::pair<std::string, std::string>> rules;
  std::vector<CandidateTriple> valid;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    rules.push_back({codes[i], "<score>" + std::to_string(scores[i]) + "</score>"});
    valid.push_back(candidate(i, codes[i]));
  }
  ScriptedChatClient judge(judge_rules(rules));
  auto r = rank_by_self_evaluation(valid, query_with_gold("5"), judge, scripted_endpoint("j"), 2);

  // oracle: lexicographic sort on (-score, length, index)
  std::vector<std::tuple<int, std::size_t, std::size_t>> keys;
  for (std::size_t i = 0; i < codes.size(); ++i) keys.emplace_back(-scores[i], codes[i].size(), i);
  std::sort(keys.begin(), keys.end());
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].index, std::get<2>(keys[0]));
  EXPECT_EQ(r[1].index, std::get<2>(keys[1]));
  EXPECT_EQ(r[0].index, 3u);
  EXPECT_EQ(r[1].index, 1u);
}

TEST(RankBySelfEvaluation, EqualLengthTiesFallToIndex) {
  ScriptedChatClient judge(judge_rules({{"answer = 5 # a", "<score>6</score>"}, {"answer = 5 # b", "<score>6</score>"}}));
  std::vector<CandidateTriple> valid{candidate(0, "answer = 5 # b"), candidate(1, "answer = 5 # a")};
  auto r = rank_by_self_evaluation(valid, query_with_gold("5"), judge, scripted_endpoint("j"), 2);
  EXPECT_EQ(r[0].index, 0u);
  EXPECT_EQ(r[1].index, 1u);
}

TEST(RankBySelfEvaluation, EmptyInput) {
  ScriptedChatClient judge;
  EXPECT_TRUE(rank_by_self_evaluation({}, query_with_gold("5"), judge, scripted_endpoint("j"), 3).empty());
  EXPECT_EQ(judge.calls(), 0u);
}

TEST(RankBySelfEvaluation, UnparseableJudgmentGetsMedian) {
  ScriptedChatClient judge(judge_rules({{"answer = 5 # a", "<score>2</score>"},
                          {"answer = 5 # b", "looks fine"},
                          {"answer = 5 # c", "<score>8</score>"},
                          {"answer = 5 # d", "<score>4</score>"}}));
  std::vector<CandidateTriple> valid{candidate(0, "answer = 5 # a"), candidate(1, "answer = 5 # b"),
                                     candidate(2, "answer = 5 # c"), candidate(3, "answer = 5 # d")};
  auto r = rank_by_self_evaluation(valid, query_with_gold("5"), judge, scripted_endpoint("j"), 4);
  ASSERT_EQ(r.size(), 4u);
  // median of {2, 4, 8} is 4; the fallback ties with index 3 and wins on index
  EXPECT_EQ(r[1].index, 1u);
  EXPECT_EQ(*r[1].rank_score, 4.0);
  EXPECT_FALSE(r[1].judge_parsed);
  EXPECT_EQ(r[2].index, 3u);
}

TEST(RankBySelfEvaluation, JudgeScoreParsing) {
  EXPECT_EQ(parse_judge_score("<score>7</score>"), 7);
  EXPECT_EQ(parse_judge_score("blah <score> 10 </score> tail"), 10);
  EXPECT_FALSE(parse_judge_score("<score>0</score>"));
  EXPECT_FALSE(parse_judge_score("<score>11</score>"));
  EXPECT_FALSE(parse_judge_score("<score>7.5</score>"));
  EXPECT_FALSE(parse_judge_score("score: 7"));
  EXPECT_EQ(median_of({3, 1, 2}), 2.0);
  EXPECT_EQ(median_of({4, 1, 2, 3}), 2.5);
}

TEST(RankBySelfEvaluation, RetentionIsMinKIOverGrid) {
  for (std::size_t K = 0; K <= 4; ++K) {
    for (std::size_t I = 0; I <= 6; ++I) {
      ScriptedChatClient judge;
      judge.add_rule("", {"<score>5</score>", "<score>9</score>", "nonsense"});
      std::vector<CandidateTriple> valid;
      for (std::size_t i = 0; i < I; ++i) valid.push_back(candidate(i, "answer = 5" + std::string(i, ' ')));
      auto r = rank_by_self_evaluation(valid, query_with_gold("5"), judge, scripted_endpoint("j"), K);
      EXPECT_EQ(r.size(), std::min(K, I)) << "K=" << K << " I=" << I;
      for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(*r[i - 1].rank_score, *r[i].rank_score);
    }
  }
}

// ------------------------------------------------------------------ export

TEST(ExportSft, TwoValidSamples) {
  auto dir = fresh_dir("export2");
  MiniInterpreterBackend mini;
  std::vector<DatasetSample> s{{"a#0", "What is 2+3?", "5", "add", kDoc, "answer = 2 + 3", AnswerKind::number},
                               {"b#1", "What is 2*3?", "6", "mul", kDoc, "print(2 * 3)", std::nullopt}};
  auto m = export_sft(s, dir / "d.jsonl", "toy-corpus", "abc123", {}, mini);
  EXPECT_EQ(m.count, 2u);
  EXPECT_EQ(m.source_corpus, "toy-corpus");
  EXPECT_EQ(m.config_hash, "abc123");
  auto body = slurp(dir / "d.jsonl");
  auto lines = lines_of(body);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], nlohmann::ordered_json({{"q", "What is 2+3?"}, {"a", "5"}, {"s", "add"}, {"m", kDoc},
                                              {"p", "answer = 2 + 3"}})
                          .dump());
  EXPECT_EQ(m.output_sha256, sha256_hex(body));
  auto manifest = nlohmann::json::parse(slurp(manifest_path_for(dir / "d.jsonl"))).get<Manifest>();
  EXPECT_EQ(manifest.count, 2u);
  std::filesystem::remove_all(dir);
}

TEST(ExportSft, CorruptedSampleAbortsBeforeWriting) {
  auto dir = fresh_dir("export_bad");
  MiniInterpreterBackend mini;
  std::vector<DatasetSample> s{{"ok#0", "q", "5", "s", kDoc, "answer = 5", std::nullopt},
                               {"bad#3", "q", "5", "s", kDoc, "answer = 6", std::nullopt}};
  try {
    export_sft(s, dir / "d.jsonl", "c", "h", {}, mini);
    FAIL() << "expected VerificationFailed";
  } catch (const VerificationFailed& e) {
    EXPECT_EQ(e.sample_id(), "bad#3");
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "d.jsonl"));
  s[1].p = "answer = 5";
  s[1].m = "## OVERVIEW\nno other sections\n";
  EXPECT_THROW(export_sft(s, dir / "d.jsonl", "c", "h", {}, mini), VerificationFailed);
  std::filesystem::remove_all(dir);
}

TEST(ExportSft, EmptyList) {
  auto dir = fresh_dir("export_empty");
  MiniInterpreterBackend mini;
  auto m = export_sft({}, dir / "d.jsonl", "c", "h", {}, mini);
  EXPECT_EQ(m.count, 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "d.jsonl"));
  EXPECT_EQ(std::filesystem::file_size(dir / "d.jsonl"), 0u);
  std::filesystem::remove_all(dir);
}

// ------------------------------------------------------------------ pipeline


TEST(DatasetPipeline, MatchesBruteForceOracleOn200Candidates) {
  auto corpus = testgen::synthetic_corpus(20240601, 25, 8);
  std::size_t total = 0;
  for (const auto& sq : corpus) total += sq.candidates.size();
  ASSERT_EQ(total, 200u);
  for (std::size_t K : {1u, 2u, 3u, 8u}) {
    auto build = run_pipeline(corpus, K);
    std::vector<std::string> mislabeled;
    EXPECT_EQ(retained_of(build), oracle_retained(corpus, K, &mislabeled)) << "K=" << K;
    EXPECT_TRUE(mislabeled.empty()) << mislabeled.front();
    EXPECT_EQ(build.samples.size(), retained_of(build).size());
  }
}

TEST(DatasetPipeline, ExportedSamplesReexecuteToGold) {
  auto corpus = testgen::synthetic_corpus(99, 25, 8);
  auto build = run_pipeline(corpus, 2);
  ASSERT_FALSE(build.samples.empty());
  auto dir = fresh_dir("pipeline_export");
  MiniInterpreterBackend mini;
  auto m = export_sft(build.samples, dir / "dmod.jsonl", "synthetic-99", "cfg", {}, mini);
  EXPECT_EQ(m.count, build.samples.size());
  std::size_t checked = 0;
  for (const auto& line : lines_of(slurp(dir / "dmod.jsonl"))) {
    auto j = nlohmann::json::parse(line);
    auto r = mini::run(j.at("p").get<std::string>());
    ASSERT_EQ(r.outcome, mini::Outcome::ok);
    EXPECT_EQ(r.answer, j.at("a").get<std::string>());
    EXPECT_TRUE(parse_model(j.at("m").get<std::string>()).ok());
    ++checked;
  }
  EXPECT_EQ(checked, build.samples.size());
  std::filesystem::remove_all(dir);
}

TEST(DatasetPipeline, ByteIdenticalAcrossRunsAndParallelism) {
  auto corpus = testgen::synthetic_corpus(7, 12, 6);
  auto dir = fresh_dir("pipeline_det");
  MiniInterpreterBackend mini;
  std::vector<std::string> bodies;
  for (std::size_t par : {1u, 1u, 4u}) {
    auto build = run_pipeline(corpus, 2, par);
    auto path = dir / ("run" + std::to_string(bodies.size()) + ".jsonl");
    export_sft(build.samples, path, "synthetic-7", "cfg", {}, mini);
    bodies.push_back(slurp(path));
  }
  EXPECT_FALSE(bodies[0].empty());
  EXPECT_EQ(bodies[0], bodies[1]);
  EXPECT_EQ(bodies[0], bodies[2]);
  std::filesystem::remove_all(dir);
}

TEST(DatasetPipeline, PerQueryCounts) {
  auto corpus = testgen::synthetic_corpus(5, 6, 8);
  auto build = run_pipeline(corpus, 2);
  ASSERT_EQ(build.per_query.size(), corpus.size());
  for (std::size_t qi = 0; qi < corpus.size(); ++qi) {
    const auto& oc = build.per_query[qi];
    std::size_t exec_ok = 0, model_ok = 0;
    for (const auto& c : corpus[qi].candidates) {
      exec_ok += c.kind == testgen::CandKind::correct || c.kind == testgen::CandKind::bad_model;
      model_ok += c.kind == testgen::CandKind::correct;
    }
    EXPECT_EQ(oc.sampled, 8u);
    EXPECT_EQ(oc.execution_valid, exec_ok);
    EXPECT_EQ(oc.model_valid, model_ok);
    EXPECT_EQ(oc.retained, std::min<std::size_t>(2, model_ok));
  }
}

TEST(DatasetPipeline, CorpusValidation) {
  auto corpus = testgen::synthetic_corpus(1, 2, 2);
  std::vector<Query> qs{corpus[0].query, corpus[0].query};
  ScriptedChatClient none;
  MiniInterpreterBackend mini;
  PromptSet prompts;
  auto ep = scripted_endpoint("x");
  DatasetContext ctx{none, ep, none, ep, mini, prompts};
  EXPECT_THROW(build_dataset_samples(qs, ctx, {}), TaskFileInvalid);
  qs[1] = corpus[1].query;
  qs[1].gold_answer.reset();
  EXPECT_THROW(build_dataset_samples(qs, ctx, {}), TaskFileInvalid);
}

TEST(DatasetPipeline, ConfigHashIgnoresParallelism) {
  DatasetConfig a, b;
  b.parallelism = 8;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.K = 3;
  EXPECT_NE(config_hash(a), config_hash(b));
}
