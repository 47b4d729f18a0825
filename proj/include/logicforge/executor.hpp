#pragma once

// Program execution behind one interface. Two backends ship here: the
// built-in mini-interpreter and an adapter that drives an external runner
// process over line-delimited JSON on stdin/stdout:
//
//   request  {"id":1,"program":"...","timeout_s":10.0,"mem_bytes":536870912}
//   response {"id":1,"status":"ok","answer":"42","stderr":"","elapsed_s":0.01}
//
// All failures are reported through ExecutionResult::status; nothing thrown
// by a backend escapes execute().

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logicforge/mini_interpreter.hpp"

namespace logicforge {

struct ExecutionLimits {
  double wall_timeout = 10.0;         // seconds
  std::size_t memory_cap = 512u << 20;  // bytes
  std::size_t output_cap = 64u << 10;   // bytes

  void check() const {
    if (!(wall_timeout > 0) || memory_cap == 0 || output_cap == 0)
      throw std::invalid_argument("execution limits must be positive");
  }
};

enum class ExecStatus { ok, timeout, runtime_error, forbidden_operation, output_overflow };

inline std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::ok: return "ok";
    case ExecStatus::timeout: return "timeout";
    case ExecStatus::runtime_error: return "runtime_error";
    case ExecStatus::forbidden_operation: return "forbidden_operation";
    case ExecStatus::output_overflow: return "output_overflow";
  }
  return "runtime_error";
}

inline std::optional<ExecStatus> exec_status_from(std::string_view s) {
  if (s == "ok") return ExecStatus::ok;
  if (s == "timeout") return ExecStatus::timeout;
  if (s == "runtime_error") return ExecStatus::runtime_error;
  if (s == "forbidden_operation") return ExecStatus::forbidden_operation;
  if (s == "output_overflow") return ExecStatus::output_overflow;
  return std::nullopt;
}

// answer is present iff status == ok
struct ExecutionResult {
  ExecStatus status = ExecStatus::runtime_error;
  std::optional<std::string> answer;
  std::string stderr_excerpt;
  double elapsed = 0.0;  // seconds

  bool ok() const { return status == ExecStatus::ok; }

  static ExecutionResult failure(ExecStatus s, std::string why, double elapsed = 0.0) {
    return {s, std::nullopt, std::move(why), elapsed};
  }
};

inline void to_json(nlohmann::json& j, const ExecutionResult& r) {
  j = nlohmann::json{{"status", std::string(to_string(r.status))},
                     {"answer", r.answer ? nlohmann::json(*r.answer) : nlohmann::json(nullptr)},
                     {"stderr", r.stderr_excerpt},
                     {"elapsed_s", r.elapsed}};
}

inline void from_json(const nlohmann::json& j, ExecutionResult& r) {
  auto status = exec_status_from(j.at("status").get<std::string>());
  if (!status) throw std::invalid_argument("unknown execution status");
  r.status = *status;
  r.answer = j.contains("answer") && !j.at("answer").is_null()
                 ? std::optional<std::string>(j.at("answer").get<std::string>())
                 : std::nullopt;
  r.stderr_excerpt = j.value("stderr", std::string{});
  r.elapsed = j.value("elapsed_s", 0.0);
}

class ExecutorBackend {
 public:
  virtual ~ExecutorBackend() = default;
  virtual ExecutionResult run(const std::string& program, const ExecutionLimits& limits) = 0;
  virtual std::string name() const = 0;
};

using BackendFactory = std::function<std::unique_ptr<ExecutorBackend>()>;

inline constexpr std::size_t kStderrExcerptBytes = 2048;

inline std::string excerpt(std::string_view s, std::size_t cap = kStderrExcerptBytes) {
  if (s.size() <= cap) return std::string(s);
  return std::string(s.substr(0, cap)) + "...";
}

// Stateless; safe to share across threads.
class MiniInterpreterBackend final : public ExecutorBackend {
 public:
  ExecutionResult run(const std::string& program, const ExecutionLimits& limits) override {
    mini::RunLimits rl;
    rl.wall_timeout = std::chrono::duration<double>(limits.wall_timeout);
    rl.memory_cap = limits.memory_cap;
    rl.output_cap = limits.output_cap;
    auto t0 = std::chrono::steady_clock::now();
    auto r = mini::run(program, rl);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ExecutionResult out;
    out.elapsed = elapsed;
    out.stderr_excerpt = excerpt(r.diagnostic);
    switch (r.outcome) {
      case mini::Outcome::ok:
        out.status = ExecStatus::ok;
        out.answer = r.answer;
        break;
      case mini::Outcome::timeout: out.status = ExecStatus::timeout; break;
      case mini::Outcome::runtime_error: out.status = ExecStatus::runtime_error; break;
      case mini::Outcome::forbidden_operation: out.status = ExecStatus::forbidden_operation; break;
      case mini::Outcome::output_overflow: out.status = ExecStatus::output_overflow; break;
    }
    return out;
  }

  std::string name() const override { return "mini"; }
};

// ------------------------------------------------------------ wire protocol

struct RunnerRequest {
  std::uint64_t id = 0;
  std::string program;
  double timeout_s = 10.0;
  std::uint64_t mem_bytes = 512u << 20;

  bool operator==(const RunnerRequest&) const = default;
};

struct RunnerResponse {
  std::uint64_t id = 0;
  ExecStatus status = ExecStatus::runtime_error;
  std::optional<std::string> answer;
  std::string stderr_text;
  double elapsed_s = 0.0;

  bool operator==(const RunnerResponse&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Field order is fixed so the wire bytes are stable.
inline std::string encode_request(const RunnerRequest& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["program"] = r.program;
  j["timeout_s"] = r.timeout_s;
  j["mem_bytes"] = r.mem_bytes;
  return j.dump();
}

inline RunnerRequest decode_request(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    return {j.at("id").get<std::uint64_t>(), j.at("program").get<std::string>(),
            j.at("timeout_s").get<double>(), j.at("mem_bytes").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
}

inline std::string encode_response(const RunnerResponse& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["status"] = std::string(to_string(r.status));
  j["answer"] = r.answer ? nlohmann::ordered_json(*r.answer) : nlohmann::ordered_json(nullptr);
  j["stderr"] = r.stderr_text;
  j["elapsed_s"] = r.elapsed_s;
  return j.dump();
}

inline RunnerResponse decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  try {
    RunnerResponse r;
    r.id = j.at("id").get<std::uint64_t>();
    auto status = exec_status_from(j.at("status").get<std::string>());
    if (!status) throw ProtocolError("unknown status '" + j.at("status").get<std::string>() + "'");
    r.status = *status;
    if (j.contains("answer") && !j.at("answer").is_null()) r.answer = j.at("answer").get<std::string>();
    r.stderr_text = j.value("stderr", std::string{});
    r.elapsed_s = j.value("elapsed_s", 0.0);
    if (r.status == ExecStatus::ok && !r.answer) throw ProtocolError("status ok without answer");
    if (r.status != ExecStatus::ok) r.answer.reset();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

// ------------------------------------------------------------ subprocess

struct SubprocessConfig {
  std::vector<std::string> argv;  // runner command line, e.g. {"python3", "runner.py"}
  double grace_s = 1.0;           // added to the program timeout before the runner is killed
};

// Owns one long-lived runner process and serves one program at a time. The
// runner is restarted lazily after it dies or is killed for overrunning.
class SubprocessBackend final : public ExecutorBackend {
 public:
  explicit SubprocessBackend(SubprocessConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.argv.empty()) throw std::invalid_argument("runner command line is empty");
    std::signal(SIGPIPE, SIG_IGN);
  }
  ~SubprocessBackend() override { stop(); }

  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  ExecutionResult run(const std::string& program, const ExecutionLimits& limits) override {
    std::lock_guard lock(mu_);
    auto t0 = std::chrono::steady_clock::now();
    auto since = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if (pid_ <= 0 && !start()) {
      return ExecutionResult::failure(ExecStatus::runtime_error, "could not launch runner '" + cfg_.argv[0] + "'");
    }
    RunnerRequest req{++next_id_, program, limits.wall_timeout, limits.memory_cap};
    std::string line = encode_request(req) + "\n";
    if (!write_all(line)) {
      stop();
      return ExecutionResult::failure(ExecStatus::runtime_error, "runner closed its input", since());
    }
    auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                             std::chrono::duration<double>(limits.wall_timeout + cfg_.grace_s));
    auto reply = read_line(deadline);
    if (!reply) {
      bool overran = std::chrono::steady_clock::now() >= deadline;
      stop();
      if (overran)
        return ExecutionResult::failure(ExecStatus::timeout, "runner killed after exceeding wall timeout", since());
      return ExecutionResult::failure(ExecStatus::runtime_error, "runner exited without responding", since());
    }
    RunnerResponse resp;
    try {
      resp = decode_response(*reply);
    } catch (const ProtocolError& e) {
      stop();
      return ExecutionResult::failure(ExecStatus::runtime_error, e.what(), since());
    }
    if (resp.id != req.id) {
      stop();
      return ExecutionResult::failure(ExecStatus::runtime_error,
                                      "runner answered id " + std::to_string(resp.id) + " for request " +
                                          std::to_string(req.id),
                                      since());
    }
    ExecutionResult out{resp.status, resp.answer, excerpt(resp.stderr_text), since()};
    if (out.answer && out.answer->size() > limits.output_cap) {
      out = ExecutionResult::failure(ExecStatus::output_overflow, "answer exceeds output cap", out.elapsed);
    }
    return out;
  }

  std::string name() const override { return "subprocess"; }

 private:
  SubprocessConfig cfg_;
  std::mutex mu_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;

  bool start() {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) return false;
    if (pipe(out_pipe) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      return false;
    }
    std::vector<char*> args;
    for (auto& a : cfg_.argv) args.push_back(a.data());
    args.push_back(nullptr);
    pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
      return false;
    }
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
    return true;
  }

  void stop() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      int st = 0;
      waitpid(pid_, &st, 0);
    }
    pid_ = -1;
    buffer_.clear();
  }

  bool write_all(std::string_view data) {
    while (!data.empty()) {
      ssize_t n = write(to_child_, data.data(), data.size());
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
  }

  std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline) {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      // rounded up, so giving up here implies the deadline has really passed
      auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{from_child_, POLLIN, 0};
      int rc = poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc <= 0) continue;
      char chunk[4096];
      ssize_t n = read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

// Never throws; enforces the nonempty-program precondition as a status.
inline ExecutionResult execute(const std::string& program, const ExecutionLimits& limits,
                               ExecutorBackend& backend) {
  if (text::trim(program).empty())
    return ExecutionResult::failure(ExecStatus::runtime_error, "empty program");
  try {
    limits.check();
    auto r = backend.run(program, limits);
    if (r.status != ExecStatus::ok) r.answer.reset();
    if (r.status == ExecStatus::ok && !r.answer) {
      r.status = ExecStatus::runtime_error;
      r.stderr_excerpt = "backend reported ok without an answer";
    }
    return r;
  } catch (const std::exception& e) {
    return ExecutionResult::failure(ExecStatus::runtime_error, excerpt(e.what()));
  } catch (...) {
    return ExecutionResult::failure(ExecStatus::runtime_error, "unknown backend failure");
  }
}

}  // namespace logicforge
