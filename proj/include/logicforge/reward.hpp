#pragma once

// Rule-based rewards and group-normalized advantages for both levels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "logicforge/answer.hpp"
#include "logicforge/executor.hpp"

namespace logicforge {

struct RewardConfig {
  double accuracy_weight = 1.0;
  double format_weight = 0.1;
  double std_floor = 1e-8;

  void check() const {
    if (!(accuracy_weight >= 0) || !(format_weight >= 0))
      throw std::invalid_argument("reward weights must be non-negative");
    if (!(std_floor > 0)) throw std::invalid_argument("std_floor must be positive");
  }
};

inline void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = {{"accuracy_weight", c.accuracy_weight}, {"format_weight", c.format_weight}, {"std_floor", c.std_floor}};
}

inline void from_json(const nlohmann::json& j, RewardConfig& c) {
  RewardConfig d;
  c.accuracy_weight = j.value("accuracy_weight", d.accuracy_weight);
  c.format_weight = j.value("format_weight", d.format_weight);
  c.std_floor = j.value("std_floor", d.std_floor);
  c.check();
}

// A failed execution, or an answer that cannot be read as the gold kind,
// counts as a mismatch.
inline bool result_matches(const ExecutionResult& result, const CanonicalAnswer& gold) {
  if (!result.ok() || !result.answer) return false;
  try {
    return answers_match(normalize_answer(*result.answer, gold.kind), gold);
  } catch (const Unparseable&) {
    return false;
  }
}

inline double score_output(const ExecutionResult& result, const CanonicalAnswer& gold, bool format_ok,
                           const RewardConfig& cfg = {}) {
  return cfg.accuracy_weight * (result_matches(result, gold) ? 1.0 : 0.0) +
         cfg.format_weight * (format_ok ? 1.0 : 0.0);
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation.
inline double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mu = mean_of(v), ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline std::vector<double> group_advantages(std::span<const double> rewards, double std_floor = 1e-8) {
  if (rewards.empty()) throw std::invalid_argument("advantage group is empty");
  // exact zeros for a constant group; the mean of equal values can carry rounding
  if (std::adjacent_find(rewards.begin(), rewards.end(), std::not_equal_to<>()) == rewards.end())
    return std::vector<double>(rewards.size(), 0.0);
  double mu = mean_of(rewards);
  double sd = std::max(population_std(rewards), std_floor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mu) / sd);
  return out;
}

inline std::vector<double> lower_advantages(std::span<const double> rewards, double std_floor = 1e-8) {
  return group_advantages(rewards, std_floor);
}

inline std::vector<double> upper_advantages(std::span<const double> model_rewards, double std_floor = 1e-8) {
  return group_advantages(model_rewards, std_floor);
}

// r_m: format term for the model document plus the mean of the lower
// accuracy components (format terms of the outputs are not averaged in).
inline double upper_reward(std::span<const double> lower_accuracy, bool model_format_ok,
                           const RewardConfig& cfg = {}) {
  if (lower_accuracy.empty()) throw std::invalid_argument("upper reward needs at least one lower output");
  return cfg.format_weight * (model_format_ok ? 1.0 : 0.0) + mean_of(lower_accuracy);
}

struct ScoredOutput {
  double reward = 0.0;
  double advantage = 0.0;
  bool format_ok = false;
  bool answer_ok = false;
};

struct ScoredModel {
  double model_reward = 0.0;
  double advantage = 0.0;
  bool format_ok = false;
  std::vector<ScoredOutput> outputs;
};

struct RewardedGroup {
  std::string question_id;
  std::vector<ScoredModel> models;
};

// Fills rewards and both levels of advantages from the raw check results.
// outcomes[i][j] = {format_ok, answer_ok} for output j of model i.
inline RewardedGroup score_group(std::string question_id, const std::vector<bool>& model_format_ok,
                                 const std::vector<std::vector<std::pair<bool, bool>>>& outcomes,
                                 const RewardConfig& cfg = {}) {
  if (model_format_ok.size() != outcomes.size()) throw std::invalid_argument("group shape mismatch");
  RewardedGroup g;
  g.question_id = std::move(question_id);
  std::vector<double> model_rewards;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    ScoredModel m;
    m.format_ok = model_format_ok[i];
    std::vector<double> rewards, accuracy;
    for (auto [fmt, ans] : outcomes[i]) {
      ScoredOutput o;
      o.format_ok = fmt;
      o.answer_ok = ans;
      o.reward = cfg.accuracy_weight * (ans ? 1.0 : 0.0) + cfg.format_weight * (fmt ? 1.0 : 0.0);
      rewards.push_back(o.reward);
      accuracy.push_back(cfg.accuracy_weight * (ans ? 1.0 : 0.0));
      m.outputs.push_back(o);
    }
    auto adv = lower_advantages(rewards, cfg.std_floor);
    for (std::size_t j = 0; j < adv.size(); ++j) m.outputs[j].advantage = adv[j];
    m.model_reward = upper_reward(accuracy, m.format_ok, cfg);
    model_rewards.push_back(m.model_reward);
    g.models.push_back(std::move(m));
  }
  if (!model_rewards.empty()) {
    auto adv = upper_advantages(model_rewards, cfg.std_floor);
    for (std::size_t i = 0; i < adv.size(); ++i) g.models[i].advantage = adv[i];
  }
  return g;
}

inline void to_json(nlohmann::json& j, const ScoredOutput& o) {
  j = {{"reward", o.reward}, {"advantage", o.advantage}, {"format_ok", o.format_ok}, {"answer_ok", o.answer_ok}};
}

inline void from_json(const nlohmann::json& j, ScoredOutput& o) {
  j.at("reward").get_to(o.reward);
  j.at("advantage").get_to(o.advantage);
  j.at("format_ok").get_to(o.format_ok);
  j.at("answer_ok").get_to(o.answer_ok);
}

inline void to_json(nlohmann::json& j, const ScoredModel& m) {
  j = {{"model_reward", m.model_reward}, {"advantage", m.advantage}, {"format_ok", m.format_ok},
       {"outputs", m.outputs}};
}

inline void from_json(const nlohmann::json& j, ScoredModel& m) {
  j.at("model_reward").get_to(m.model_reward);
  j.at("advantage").get_to(m.advantage);
  j.at("format_ok").get_to(m.format_ok);
  j.at("outputs").get_to(m.outputs);
}

inline void to_json(nlohmann::json& j, const RewardedGroup& g) {
  j = {{"question_id", g.question_id}, {"models", g.models}};
}

inline void from_json(const nlohmann::json& j, RewardedGroup& g) {
  j.at("question_id").get_to(g.question_id);
  j.at("models").get_to(g.models);
}

}  // namespace logicforge
