#pragma once

// Bilevel clipped-surrogate training on a toy hierarchical task: the upper
// policy picks a model per question, the lower policy picks an output per
// model. Everything is small enough to enumerate exactly.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "logicforge/policy.hpp"
#include "logicforge/reward.hpp"

namespace logicforge {

class ConfigInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Models are numbered globally; each belongs to exactly one question.
struct ToyHierarchicalTask {
  std::vector<std::vector<std::size_t>> models;  // question -> global model ids
  Table rewards;                                 // model id -> reward per output, in [0, 1]

  std::size_t questions() const { return models.size(); }

  void check() const {
    if (models.empty()) throw ConfigInvalid("task has no questions");
    std::vector<int> owner(rewards.size(), 0);
    for (const auto& ms : models) {
      if (ms.empty()) throw ConfigInvalid("question with no model candidates");
      for (auto m : ms) {
        if (m >= rewards.size()) throw ConfigInvalid("model id out of range");
        if (owner[m]++) throw ConfigInvalid("model id shared between questions");
      }
    }
    for (std::size_t m = 0; m < rewards.size(); ++m) {
      if (!owner[m]) throw ConfigInvalid("model " + std::to_string(m) + " belongs to no question");
      if (rewards[m].empty()) throw ConfigInvalid("model with no output candidates");
      for (double r : rewards[m])
        if (!(r >= 0 && r <= 1)) throw ConfigInvalid("reward outside [0, 1]");
    }
  }

  std::vector<std::size_t> upper_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& ms : models) s.push_back(ms.size());
    return s;
  }
  std::vector<std::size_t> lower_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& row : rewards) s.push_back(row.size());
    return s;
  }
};

// Q questions with M models of O outputs each; the dominant model of
// question q yields reward 1 on every output, every other output yields 0.
inline ToyHierarchicalTask make_dominant_task(const std::vector<std::size_t>& dominant, std::size_t models_per_q,
                                              std::size_t outputs_per_model) {
  ToyHierarchicalTask t;
  for (std::size_t q = 0; q < dominant.size(); ++q) {
    if (dominant[q] >= models_per_q) throw ConfigInvalid("dominant index out of range");
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < models_per_q; ++i) {
      ids.push_back(t.rewards.size());
      t.rewards.emplace_back(outputs_per_model, i == dominant[q] ? 1.0 : 0.0);
    }
    t.models.push_back(std::move(ids));
  }
  return t;
}

inline void to_json(nlohmann::json& j, const ToyHierarchicalTask& t) {
  j = {{"models", t.models}, {"rewards", t.rewards}};
}

inline void from_json(const nlohmann::json& j, ToyHierarchicalTask& t) {
  try {
    if (j.contains("dominant")) {
      t = make_dominant_task(j.at("dominant").get<std::vector<std::size_t>>(), j.at("models_per_question").get<std::size_t>(),
                             j.at("outputs_per_model").get<std::size_t>());
    } else {
      j.at("models").get_to(t.models);
      j.at("rewards").get_to(t.rewards);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("task: ") + e.what());
  }
  t.check();
}

// ------------------------------------------------------------- objectives

// One advantage group: candidates drawn in a single context.
struct SampledGroup {
  std::size_t context = 0;
  std::vector<std::size_t> actions;
  std::vector<double> advantages;
};

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Mean over groups of the per-group mean of min(rho*A, clip(rho)*A), minus an
// optional KL(old || new) penalty per group.
inline double clipped_surrogate(const SoftmaxPolicy& theta, const SoftmaxPolicy& theta_old,
                                const std::vector<SampledGroup>& groups, double epsilon, double kl_coef = 0.0) {
  if (groups.empty()) return 0.0;
  double total = 0;
  for (const auto& g : groups) {
    auto p = theta.probs(g.context);
    auto p_old = theta_old.probs(g.context);
    double s = 0;
    for (std::size_t i = 0; i < g.actions.size(); ++i) {
      double old = p_old.at(g.actions[i]);
      if (!(old > 0)) throw std::domain_error("ratio undefined: old probability is zero");
      double rho = p[g.actions[i]] / old;
      double a = g.advantages[i];
      s += std::min(rho * a, clip(rho, 1 - epsilon, 1 + epsilon) * a);
    }
    total += s / static_cast<double>(g.actions.size());
    if (kl_coef != 0.0) {
      double kl = 0;
      for (std::size_t k = 0; k < p.size(); ++k)
        if (p_old[k] > 0) kl += p_old[k] * (std::log(p_old[k]) - std::log(p[k]));
      total -= kl_coef * kl;
    }
  }
  return total / static_cast<double>(groups.size());
}

inline double upper_objective(const SoftmaxPolicy& theta_x, const SoftmaxPolicy& theta_x_old,
                              const std::vector<SampledGroup>& groups, double epsilon, double kl_coef = 0.0) {
  return clipped_surrogate(theta_x, theta_x_old, groups, epsilon, kl_coef);
}

inline double lower_objective(const SoftmaxPolicy& theta_y, const SoftmaxPolicy& theta_y_old,
                              const std::vector<SampledGroup>& groups, double epsilon, double kl_coef = 0.0) {
  return clipped_surrogate(theta_y, theta_y_old, groups, epsilon, kl_coef);
}

// Analytic gradient with respect to the logits. A sample on the flat side of
// the clip (A > 0 with rho > 1+eps, or A < 0 with rho < 1-eps) contributes 0.
inline Table surrogate_gradient(const SoftmaxPolicy& theta, const SoftmaxPolicy& theta_old,
                                const std::vector<SampledGroup>& groups, double epsilon, double kl_coef = 0.0) {
  Table grad = theta.zeros_like();
  if (groups.empty()) return grad;
  double wg = 1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) {
    auto p = theta.probs(g.context);
    auto p_old = theta_old.probs(g.context);
    auto& row = grad[g.context];
    double ws = wg / static_cast<double>(g.actions.size());
    for (std::size_t i = 0; i < g.actions.size(); ++i) {
      std::size_t a = g.actions[i];
      double adv = g.advantages[i];
      double rho = p[a] / p_old[a];
      if (adv == 0.0) continue;
      if ((adv > 0 && rho > 1 + epsilon) || (adv < 0 && rho < 1 - epsilon)) continue;
      // d rho / d logit_k = rho * ([k == a] - p_k)
      for (std::size_t k = 0; k < p.size(); ++k) row[k] += ws * adv * rho * ((k == a ? 1.0 : 0.0) - p[k]);
    }
    if (kl_coef != 0.0)
      for (std::size_t k = 0; k < p.size(); ++k) row[k] -= wg * kl_coef * (p[k] - p_old[k]);
  }
  return grad;
}

enum class Level { upper, lower };

inline Table objective_gradient(Level, const SoftmaxPolicy& theta, const SoftmaxPolicy& theta_old,
                                const std::vector<SampledGroup>& groups, double epsilon, double kl_coef = 0.0) {
  return surrogate_gradient(theta, theta_old, groups, epsilon, kl_coef);
}

// ------------------------------------------------------------- SFT

struct SftExample {
  std::size_t context = 0;
  std::size_t target = 0;
};

// Negative summed log-likelihood of the targets.
inline double sft_loss(const SoftmaxPolicy& policy, const std::vector<SftExample>& data) {
  double loss = 0;
  for (const auto& e : data) loss -= policy.log_prob(e.context, e.target);
  return loss;
}

inline Table sft_gradient(const SoftmaxPolicy& policy, const std::vector<SftExample>& data) {
  Table grad = policy.zeros_like();
  for (const auto& e : data) {
    auto p = policy.probs(e.context);
    for (std::size_t k = 0; k < p.size(); ++k) grad[e.context][k] += p[k] - (k == e.target ? 1.0 : 0.0);
  }
  return grad;
}

// ------------------------------------------------------------- evaluation

// Exact expected reward: mean over questions of sum_m pi_x(m|q) sum_o pi_y(o|m) R(m, o).
inline double expected_reward(const ToyHierarchicalTask& task, const SoftmaxPolicy& theta_x,
                              const SoftmaxPolicy& theta_y) {
  double total = 0;
  for (std::size_t q = 0; q < task.questions(); ++q) {
    auto px = theta_x.probs(q);
    for (std::size_t i = 0; i < px.size(); ++i) {
      std::size_t m = task.models[q][i];
      auto py = theta_y.probs(m);
      double v = 0;
      for (std::size_t o = 0; o < py.size(); ++o) v += py[o] * task.rewards[m][o];
      total += px[i] * v;
    }
  }
  return total / static_cast<double>(task.questions());
}

// Best achievable expected reward over both policies.
inline double optimal_expected_reward(const ToyHierarchicalTask& task) {
  double total = 0;
  for (const auto& ms : task.models) {
    double best = 0;
    for (auto m : ms) best = std::max(best, *std::max_element(task.rewards[m].begin(), task.rewards[m].end()));
    total += best;
  }
  return total / static_cast<double>(task.questions());
}

// Deterministic lower policy putting all mass on a best output of each model.
inline SoftmaxPolicy best_response(const ToyHierarchicalTask& task) {
  Table logits;
  for (const auto& row : task.rewards) {
    auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    std::vector<double> l(row.size(), -1000.0);
    l[best] = 0.0;
    logits.push_back(std::move(l));
  }
  return SoftmaxPolicy(std::move(logits));
}

// How far theta_y is from the lower level's best response under theta_x.
inline double bilevel_gap(const ToyHierarchicalTask& task, const SoftmaxPolicy& theta_x,
                          const SoftmaxPolicy& theta_y) {
  return expected_reward(task, theta_x, best_response(task)) - expected_reward(task, theta_x, theta_y);
}

// ------------------------------------------------------------- training

struct TrainConfig {
  std::size_t I = 200;
  std::size_t B = 4;
  std::size_t G = 4;
  std::size_t P = 4;
  std::size_t N_l = 4;
  std::size_t N_h = 4;
  double epsilon = 0.2;
  double lr_upper = 0.1;
  double lr_lower = 0.1;
  std::uint64_t seed = 0;
  double std_floor = 1e-8;
  double kl_coef = 0.0;
  bool record_policies = true;

  void check() const {
    if (I < 1 || B < 1 || G < 1 || P < 1 || N_l < 1 || N_h < 1) throw ConfigInvalid("all counts must be >= 1");
    if (!(epsilon > 0 && epsilon < 1)) throw ConfigInvalid("epsilon must lie in (0, 1)");
    if (!(lr_upper > 0) || !(lr_lower > 0)) throw ConfigInvalid("learning rates must be positive");
    if (!(std_floor > 0)) throw ConfigInvalid("std_floor must be positive");
    if (!(kl_coef >= 0)) throw ConfigInvalid("kl_coef must be non-negative");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"I", c.I},           {"B", c.B},
       {"G", c.G},           {"P", c.P},
       {"N_l", c.N_l},       {"N_h", c.N_h},
       {"epsilon", c.epsilon}, {"lr_upper", c.lr_upper},
       {"lr_lower", c.lr_lower}, {"seed", c.seed},
       {"std_floor", c.std_floor}, {"kl_coef", c.kl_coef},
       {"record_policies", c.record_policies}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  try {
    auto count = [&](const char* key, std::size_t dflt) {
      if (!j.contains(key)) return dflt;
      auto v = j.at(key).get<std::int64_t>();
      if (v < 1) throw ConfigInvalid(std::string(key) + " must be >= 1");
      return static_cast<std::size_t>(v);
    };
    c.I = count("I", d.I);
    c.B = count("B", d.B);
    c.G = count("G", d.G);
    c.P = count("P", d.P);
    c.N_l = count("N_l", d.N_l);
    c.N_h = count("N_h", d.N_h);
    c.epsilon = j.value("epsilon", d.epsilon);
    c.lr_upper = j.value("lr_upper", d.lr_upper);
    c.lr_lower = j.value("lr_lower", d.lr_lower);
    c.seed = j.value("seed", d.seed);
    c.std_floor = j.value("std_floor", d.std_floor);
    c.kl_coef = j.value("kl_coef", d.kl_coef);
    c.record_policies = j.value("record_policies", d.record_policies);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("train config: ") + e.what());
  }
  c.check();
}

struct IterationRecord {
  std::size_t iteration = 0;
  double expected_reward = 0;
  double sampled_reward = 0;  // mean r_o over the last lower batch
  double J_l = 0;             // surrogate after the last lower update
  double J_h = 0;             // surrogate after the last upper update
  double grad_norm_lower = 0;
  double grad_norm_upper = 0;
  std::optional<SoftmaxPolicy> theta_x;
  std::optional<SoftmaxPolicy> theta_y;

  bool operator==(const IterationRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const IterationRecord& r) {
  j = nlohmann::json::object();
  j["iteration"] = r.iteration;
  j["expected_reward"] = r.expected_reward;
  j["sampled_reward"] = r.sampled_reward;
  j["J_l"] = r.J_l;
  j["J_h"] = r.J_h;
  j["grad_norm_lower"] = r.grad_norm_lower;
  j["grad_norm_upper"] = r.grad_norm_upper;
  if (r.theta_x) j["theta_x"] = *r.theta_x;
  if (r.theta_y) j["theta_y"] = *r.theta_y;
}

struct TrainHistory {
  std::vector<IterationRecord> iterations;
  SoftmaxPolicy theta_x;
  SoftmaxPolicy theta_y;

  bool operator==(const TrainHistory&) const = default;

  // One JSON object per line, one line per iteration.
  void write_jsonl(std::ostream& os) const {
    for (const auto& r : iterations) os << nlohmann::json(r).dump() << '\n';
  }
};

namespace detail {

inline std::vector<double> rewards_for(const ToyHierarchicalTask& task, std::size_t m,
                                       const std::vector<std::size_t>& outputs) {
  std::vector<double> r;
  for (auto o : outputs) r.push_back(task.rewards[m][o]);
  return r;
}

}  // namespace detail

// Alternating updates: N_l lower steps against frozen snapshots, then N_h
// upper steps against a snapshot of theta_x refreshed at phase entry.
inline TrainHistory train_alternating(const ToyHierarchicalTask& task, const TrainConfig& cfg) {
  task.check();
  cfg.check();
  Sampler rng(cfg.seed);
  SoftmaxPolicy theta_x = SoftmaxPolicy::uniform(task.upper_sizes());
  SoftmaxPolicy theta_y = SoftmaxPolicy::uniform(task.lower_sizes());
  TrainHistory hist;

  for (std::size_t it = 0; it < cfg.I; ++it) {
    IterationRecord rec;
    rec.iteration = it + 1;

    // lower phase
    SoftmaxPolicy theta_y_old = theta_y;
    SoftmaxPolicy theta_x_old = theta_x;
    for (std::size_t k = 0; k < cfg.N_l; ++k) {
      std::vector<SampledGroup> groups;
      double reward_sum = 0;
      for (std::size_t b = 0; b < cfg.B; ++b) {
        std::size_t q = rng.index(task.questions());
        std::size_t m = task.models[q][rng.categorical(theta_x_old.probs(q))];
        SampledGroup g;
        g.context = m;
        auto py = theta_y_old.probs(m);
        for (std::size_t j = 0; j < cfg.P; ++j) g.actions.push_back(rng.categorical(py));
        auto r = detail::rewards_for(task, m, g.actions);
        for (double x : r) reward_sum += x;
        g.advantages = lower_advantages(r, cfg.std_floor);
        groups.push_back(std::move(g));
      }
      auto grad = surrogate_gradient(theta_y, theta_y_old, groups, cfg.epsilon, cfg.kl_coef);
      theta_y.ascend(grad, cfg.lr_lower);
      rec.grad_norm_lower = table_norm(grad);
      rec.J_l = lower_objective(theta_y, theta_y_old, groups, cfg.epsilon, cfg.kl_coef);
      rec.sampled_reward = reward_sum / static_cast<double>(cfg.B * cfg.P);
    }

    // upper phase
    theta_x_old = theta_x;
    for (std::size_t k = 0; k < cfg.N_h; ++k) {
      std::vector<SampledGroup> groups;
      for (std::size_t b = 0; b < cfg.B; ++b) {
        std::size_t q = rng.index(task.questions());
        SampledGroup g;
        g.context = q;
        auto px = theta_x_old.probs(q);
        std::vector<double> model_rewards;
        for (std::size_t i = 0; i < cfg.G; ++i) {
          std::size_t local = rng.categorical(px);
          std::size_t m = task.models[q][local];
          auto py = theta_y.probs(m);
          std::vector<std::size_t> outs;
          for (std::size_t j = 0; j < cfg.P; ++j) outs.push_back(rng.categorical(py));
          // toy models carry no format term, so r_m is the plain mean
          model_rewards.push_back(mean_of(detail::rewards_for(task, m, outs)));
          g.actions.push_back(local);
        }
        g.advantages = upper_advantages(model_rewards, cfg.std_floor);
        groups.push_back(std::move(g));
      }
      auto grad = surrogate_gradient(theta_x, theta_x_old, groups, cfg.epsilon, cfg.kl_coef);
      theta_x.ascend(grad, cfg.lr_upper);
      rec.grad_norm_upper = table_norm(grad);
      rec.J_h = upper_objective(theta_x, theta_x_old, groups, cfg.epsilon, cfg.kl_coef);
    }

    rec.expected_reward = expected_reward(task, theta_x, theta_y);
    if (cfg.record_policies) {
      rec.theta_x = theta_x;
      rec.theta_y = theta_y;
    }
    hist.iterations.push_back(std::move(rec));
  }
  hist.theta_x = std::move(theta_x);
  hist.theta_y = std::move(theta_y);
  return hist;
}

}  // namespace logicforge
