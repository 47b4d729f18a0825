#pragma once

// Prompt templates. Placeholders are {name}; only names passed to render()
// are substituted, so literal braces in examples survive.

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "logicforge/text.hpp"

namespace logicforge {

struct PromptSet {
  std::string version = "v1";

  std::string ogf_system =
      "You formalize reasoning problems. Reply with a model document using exactly these "
      "sections, in order:\n"
      "## OVERVIEW\n<one or two lines summarizing the task>\n"
      "## TYPE\n<one of: probabilistic, SAT, CSP, arithmetic, logical-inference, temporal, spatial, "
      "other(label)>\n"
      "## VARIABLES\n- name: domain -- note\n"
      "## CONSTRAINTS\n- expression over declared variables\n"
      "## OBJECTIVES\n- compute|decide|optimize: goal, naming variables in `backticks`\n"
      "Do not solve the problem.";
  std::string ogf_user = "Instruction: {instruction}\n\nProblem:\n{question}";
  std::string ogf_feedback =
      "\n\nA previous model for this problem failed downstream. Diagnostic:\n{feedback}\n"
      "Produce a corrected model.";

  std::string lg_system =
      "You turn a formal model into a solution plan and a Python program. Write the plan as prose, "
      "then one fenced code block. The program must store its result in a variable named `answer` "
      "or print it on the last line.";
  std::string lg_user = "Model:\n{model_document}";
  std::string lg_user_with_question = "Problem:\n{question}\n\nModel:\n{model_document}";
  std::string lg_retry =
      "\n\nAttempt {attempt} failed with this diagnostic:\n{feedback}\nWrite a corrected plan and program.";

  std::string teacher_system =
      "Solve the problem in three tagged parts: <think>analysis steps</think>, "
      "<model>a model document with sections ## OVERVIEW, ## TYPE, ## VARIABLES, ## CONSTRAINTS, "
      "## OBJECTIVES</model>, and <code>a Python program that sets `answer`</code>.";
  std::string teacher_user = "Instruction: {instruction}\n\nProblem:\n{question}";

  std::string judge_system =
      "Rate the candidate solution for clarity and conciseness on a scale of 1 to 10. "
      "Reply with the score inside <score></score>.";
  std::string judge_user =
      "Problem:\n{question}\n\nAnalysis:\n{think}\n\nModel:\n{model_document}\n\nProgram:\n{program}";

  std::string cot_system =
      "Think step by step, then give the final answer on the last line as 'Answer: <value>'.";
  std::string cot_user = "Instruction: {instruction}\n\nProblem:\n{question}";

  std::string pal_system =
      "Write a Python program that solves the problem. Put it in one fenced code block and store "
      "the result in a variable named `answer`.";
  std::string pal_user = "Instruction: {instruction}\n\nProblem:\n{question}";

  // Fields present in the JSON file replace the defaults.
  static PromptSet from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt file " + path.string());
    PromptSet p;
    auto j = nlohmann::json::parse(in);
    auto take = [&](const char* key, std::string& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    take("version", p.version);
    take("ogf_system", p.ogf_system);
    take("ogf_user", p.ogf_user);
    take("ogf_feedback", p.ogf_feedback);
    take("lg_system", p.lg_system);
    take("lg_user", p.lg_user);
    take("lg_user_with_question", p.lg_user_with_question);
    take("lg_retry", p.lg_retry);
    take("teacher_system", p.teacher_system);
    take("teacher_user", p.teacher_user);
    take("judge_system", p.judge_system);
    take("judge_user", p.judge_user);
    take("cot_system", p.cot_system);
    take("cot_user", p.cot_user);
    take("pal_system", p.pal_system);
    take("pal_user", p.pal_user);
    return p;
  }
};

// Single pass, so substituted text is never rescanned for placeholders.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace logicforge
