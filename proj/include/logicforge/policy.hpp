#pragma once

// Tabular softmax policies over enumerated candidates, and the seeded
// sampling used by the toy trainer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace logicforge {

using Table = std::vector<std::vector<double>>;

// logits[context][candidate]
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  explicit SoftmaxPolicy(Table logits) : logits_(std::move(logits)) {
    for (const auto& row : logits_)
      if (row.empty()) throw std::invalid_argument("policy context with no candidates");
  }

  // Zero logits: uniform over each context's candidates.
  static SoftmaxPolicy uniform(const std::vector<std::size_t>& sizes) {
    Table t;
    for (auto n : sizes) t.emplace_back(n, 0.0);
    return SoftmaxPolicy(std::move(t));
  }

  std::size_t contexts() const { return logits_.size(); }
  std::size_t candidates(std::size_t c) const { return logits_.at(c).size(); }

  const Table& logits() const { return logits_; }
  Table& logits() { return logits_; }

  std::vector<double> probs(std::size_t c) const {
    const auto& row = logits_.at(c);
    double mx = *std::max_element(row.begin(), row.end());
    std::vector<double> p(row.size());
    double z = 0;
    for (std::size_t k = 0; k < row.size(); ++k) z += (p[k] = std::exp(row[k] - mx));
    for (auto& x : p) x /= z;
    return p;
  }

  double prob(std::size_t c, std::size_t a) const { return probs(c).at(a); }

  double log_prob(std::size_t c, std::size_t a) const {
    const auto& row = logits_.at(c);
    double mx = *std::max_element(row.begin(), row.end());
    double z = 0;
    for (double l : row) z += std::exp(l - mx);
    return row.at(a) - mx - std::log(z);
  }

  std::size_t argmax(std::size_t c) const {
    const auto& row = logits_.at(c);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }

  void ascend(const Table& grad, double lr) {
    if (grad.size() != logits_.size()) throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t c = 0; c < grad.size(); ++c) {
      if (grad[c].size() != logits_[c].size()) throw std::invalid_argument("gradient shape mismatch");
      for (std::size_t k = 0; k < grad[c].size(); ++k) logits_[c][k] += lr * grad[c][k];
    }
  }

  Table zeros_like() const {
    Table t;
    for (const auto& row : logits_) t.emplace_back(row.size(), 0.0);
    return t;
  }

  bool operator==(const SoftmaxPolicy&) const = default;

 private:
  Table logits_;
};

inline void to_json(nlohmann::json& j, const SoftmaxPolicy& p) { j = p.logits(); }
inline void from_json(const nlohmann::json& j, SoftmaxPolicy& p) { p = SoftmaxPolicy(j.get<Table>()); }

inline double table_norm(const Table& t) {
  double s = 0;
  for (const auto& row : t)
    for (double x : row) s += x * x;
  return std::sqrt(s);
}

// Seeded sampling with a fixed mapping from engine output to [0, 1), so a
// history is reproducible across standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t n) {
    return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
  }

  // Inverse-CDF draw; rounding residue falls to the last nonzero entry.
  std::size_t categorical(const std::vector<double>& p) {
    double u = uniform(), acc = 0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] <= 0) continue;
      last = k;
      acc += p[k];
      if (u < acc) return k;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace logicforge
