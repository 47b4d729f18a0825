#pragma once

// Chat-completions clients: HTTP, scripted (offline), and a content-addressed
// response cache that wraps either.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

#include "logicforge/text.hpp"

namespace logicforge {

class EndpointUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EndpointError : public std::runtime_error {
 public:
  EndpointError(int status, std::string body)
      : std::runtime_error("endpoint returned HTTP " + std::to_string(status) + ": " + text::excerpt_line(body, 300)),
        status_(status),
        body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

struct ChatEndpoint {
  std::string base_url;     // e.g. https://api.example.com/v1
  std::string model_name;
  std::string api_key_env;  // name of the environment variable holding the key
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;
  int n = 1;
  double timeout_s = 120.0;

  void check() const {
    if (!(text::starts_with(base_url, "http://") || text::starts_with(base_url, "https://")) ||
        base_url.find("://") + 3 >= base_url.size())
      throw std::invalid_argument("endpoint base_url must be an http(s) URL: '" + base_url + "'");
    if (!(temperature >= 0)) throw std::invalid_argument("temperature must be >= 0");
    if (!(top_p > 0 && top_p <= 1)) throw std::invalid_argument("top_p must lie in (0, 1]");
    if (max_tokens < 1 || n < 1) throw std::invalid_argument("max_tokens and n must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const ChatEndpoint& e) {
  j = {{"base_url", e.base_url},       {"model_name", e.model_name}, {"api_key_env", e.api_key_env},
       {"temperature", e.temperature}, {"top_p", e.top_p},           {"max_tokens", e.max_tokens},
       {"n", e.n},                     {"timeout_s", e.timeout_s}};
}

inline void from_json(const nlohmann::json& j, ChatEndpoint& e) {
  ChatEndpoint d;
  e.base_url = j.at("base_url").get<std::string>();
  e.model_name = j.value("model_name", d.model_name);
  e.api_key_env = j.value("api_key_env", d.api_key_env);
  e.temperature = j.value("temperature", d.temperature);
  e.top_p = j.value("top_p", d.top_p);
  e.max_tokens = j.value("max_tokens", d.max_tokens);
  e.n = j.value("n", d.n);
  e.timeout_s = j.value("timeout_s", d.timeout_s);
  e.check();
}

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

inline void to_json(nlohmann::json& j, const ChatMessage& m) { j = {{"role", m.role}, {"content", m.content}}; }
inline void from_json(const nlohmann::json& j, ChatMessage& m) {
  j.at("role").get_to(m.role);
  j.at("content").get_to(m.content);
}

// Request body for POST {base_url}/chat/completions. Field order is fixed so
// the body bytes, and therefore cache keys, are stable.
inline std::string request_body(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages, int n) {
  nlohmann::ordered_json j;
  j["model"] = ep.model_name;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  j["temperature"] = ep.temperature;
  j["top_p"] = ep.top_p;
  j["n"] = n;
  j["max_tokens"] = ep.max_tokens;
  return j.dump();
}

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Exactly n completions, in sampling order.
  virtual std::vector<std::string> complete(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages,
                                            int n) = 0;
};

// ------------------------------------------------------------------ HTTP

struct RetryPolicy {
  int attempts = 3;
  double initial_backoff_s = 0.5;
};

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(RetryPolicy retry = {}) : retry_(retry) {}

  std::vector<std::string> complete(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages,
                                    int n) override {
    ep.check();
    std::vector<std::string> out;
    // some servers ignore n > 1; ask again for the remainder
    while (static_cast<int>(out.size()) < n) {
      auto got = post_once(ep, messages, n - static_cast<int>(out.size()));
      if (got.empty()) throw EndpointError(200, "response contained no choices");
      for (auto& c : got)
        if (static_cast<int>(out.size()) < n) out.push_back(std::move(c));
    }
    return out;
  }

 private:
  RetryPolicy retry_;

  std::vector<std::string> post_once(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages, int n) {
    auto scheme_end = ep.base_url.find("://") + 3;
    auto path_start = ep.base_url.find('/', scheme_end);
    std::string origin = ep.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : ep.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Headers headers;
    if (!ep.api_key_env.empty()) {
      const char* key = std::getenv(ep.api_key_env.c_str());
      if (!key) throw std::runtime_error("credential variable " + ep.api_key_env + " is not set");
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    std::string body = request_body(ep, messages, n);

    double backoff = retry_.initial_backoff_s;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      httplib::Client cli(origin);
      auto timeout = std::chrono::duration<double>(ep.timeout_s);
      cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      auto res = cli.Post(prefix + "/chat/completions", headers, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        if (attempt < retry_.attempts) {
          std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
          backoff *= 2;
        }
        continue;
      }
      if (res->status != 200) throw EndpointError(res->status, res->body);
      return parse_choices(res->body);
    }
    throw EndpointUnreachable("could not reach " + ep.base_url + " after " + std::to_string(retry_.attempts) +
                              " attempts: " + last_error);
  }

  static std::vector<std::string> parse_choices(const std::string& body) {
    try {
      auto j = nlohmann::json::parse(body);
      std::vector<std::pair<int, std::string>> indexed;
      int pos = 0;
      for (const auto& c : j.at("choices")) {
        int idx = c.value("index", pos);
        indexed.emplace_back(idx, c.at("message").at("content").get<std::string>());
        ++pos;
      }
      std::stable_sort(indexed.begin(), indexed.end(), [](auto& a, auto& b) { return a.first < b.first; });
      std::vector<std::string> out;
      for (auto& [_, s] : indexed) out.push_back(std::move(s));
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw EndpointError(200, std::string("unreadable completion response: ") + e.what());
    }
  }
};

// ------------------------------------------------------------------ scripted

// Offline endpoint. Each rule matches when its `match` text occurs in the
// concatenated prompt; successive completions from a rule walk its responses
// and then repeat the last one. The first matching rule wins.
class ScriptedChatClient final : public ChatClient {
 public:
  struct Rule {
    std::string match;
    std::vector<std::string> responses;
  };

  ScriptedChatClient() = default;
  explicit ScriptedChatClient(std::vector<Rule> rules) : rules_(std::move(rules)), served_(rules_.size(), 0) {}

  // {"rules": [{"match": "...", "responses": ["..."]}]}
  static ScriptedChatClient from_json(const nlohmann::json& j) {
    std::vector<Rule> rules;
    for (const auto& r : j.at("rules")) {
      Rule rule{r.value("match", std::string{}), {}};
      if (r.contains("responses")) r.at("responses").get_to(rule.responses);
      if (r.contains("response")) rule.responses.push_back(r.at("response").get<std::string>());
      if (rule.responses.empty()) throw std::invalid_argument("scripted rule without responses");
      rules.push_back(std::move(rule));
    }
    return ScriptedChatClient(std::move(rules));
  }

  static ScriptedChatClient from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scripted endpoint file " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  void add_rule(std::string match, std::vector<std::string> responses) {
    std::lock_guard lock(mu_);
    rules_.push_back({std::move(match), std::move(responses)});
    served_.push_back(0);
  }

  std::vector<std::string> complete(const ChatEndpoint&, const std::vector<ChatMessage>& messages,
                                    int n) override {
    std::lock_guard lock(mu_);
    ++calls_;
    prompts_.push_back(messages);
    std::string all;
    for (const auto& m : messages) all += m.content + "\n";
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      if (all.find(rules_[r].match) == std::string::npos) continue;
      std::vector<std::string> out;
      for (int k = 0; k < n; ++k) {
        const auto& rs = rules_[r].responses;
        out.push_back(rs[std::min(served_[r], rs.size() - 1)]);
        ++served_[r];
      }
      return out;
    }
    throw EndpointError(404, "no scripted response matches the prompt");
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  std::vector<std::vector<ChatMessage>> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  std::vector<std::size_t> served_;
  std::size_t calls_ = 0;
  std::vector<std::vector<ChatMessage>> prompts_;
};

// ------------------------------------------------------------------ cache

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

// Responses stored as <dir>/<key[0:2]>/<key>.json, keyed by the hash of the
// endpoint identity and the request body. Writes go through a temporary file
// and a rename, so concurrent readers never see partial entries.
class CachingChatClient final : public ChatClient {
 public:
  CachingChatClient(ChatClient& inner, std::filesystem::path dir) : inner_(inner), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  static std::string cache_key(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages, int n) {
    return sha256_hex(ep.base_url + "\n" + ep.model_name + "\n" + request_body(ep, messages, n));
  }

  std::vector<std::string> complete(const ChatEndpoint& ep, const std::vector<ChatMessage>& messages,
                                    int n) override {
    std::string key = cache_key(ep, messages, n);
    auto path = dir_ / key.substr(0, 2) / (key + ".json");
    if (std::ifstream in(path); in) {
      try {
        auto j = nlohmann::json::parse(in);
        auto choices = j.at("choices").get<std::vector<std::string>>();
        if (static_cast<int>(choices.size()) == n) {
          ++hits_;
          return choices;
        }
      } catch (const nlohmann::json::exception&) {
        // unreadable entry: fall through and overwrite
      }
    }
    ++misses_;
    auto choices = inner_.complete(ep, messages, n);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::binary);
      out << nlohmann::json{{"choices", choices}}.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
    return choices;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  ChatClient& inner_;
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0}, misses_{0};
};

}  // namespace logicforge
