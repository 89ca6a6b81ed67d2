// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_EXTERNAL_HPP
#define BILEVEL_BO_EXTERNAL_HPP

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bilevel_bo/objective.hpp"
#include "bilevel_bo/space.hpp"

extern char** environ;

namespace bbo {

inline constexpr const char* kProtocolVersion = "bilevel-bo/1";

/// Request line, exactly:
///   {"id": <int>, "params": {"<name>": <number or string>, ...}}
/// Params follow space order; numbers use the shortest round-trip form.
inline std::string format_request(std::int64_t id, const SearchSpace& space, const Configuration& config) {
  std::string line = "{\"id\": " + std::to_string(id) + ", \"params\": {";
  bool first = true;
  for (const auto& p : space.params()) {
    if (!config.has(p.name)) continue;
    if (!first) line += ", ";
    first = false;
    line += nlohmann::json(p.name).dump();
    line += ": ";
    const Atom& v = config.at(p.name);
    if (const auto* d = std::get_if<double>(&v)) line += format_double(*d);
    else line += nlohmann::json(std::get<std::string>(v)).dump();
  }
  line += "}}\n";
  return line;
}

/// Parse one response line for request `id`. Throws EvaluationError on a
/// status-error reply and ProtocolError on anything malformed.
class ProtocolError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

inline Evaluation parse_response(const std::string& line, std::int64_t id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("response is not a JSON object");
  if (!j.contains("id") || !j["id"].is_number_integer() || j["id"].get<std::int64_t>() != id)
    throw ProtocolError("response id does not match request id " + std::to_string(id));
  if (!j.contains("status") || !j["status"].is_string()) throw ProtocolError("response has no status");
  const auto status = j["status"].get<std::string>();
  if (status == "error") {
    const auto msg = j.contains("message") && j["message"].is_string() ? j["message"].get<std::string>() : "";
    throw EvaluationError("objective reported error: " + msg);
  }
  if (status != "ok") throw ProtocolError("unknown status '" + status + "'");
  if (!j.contains("train_loss") || !j["train_loss"].is_number() || !j.contains("val_metric") ||
      !j["val_metric"].is_number())
    throw ProtocolError("ok response needs numeric train_loss and val_metric");
  Evaluation e;
  e.train_loss = j["train_loss"].get<double>();
  e.val_metric = j["val_metric"].get<double>();
  if (j.contains("aux")) {
    if (!j["aux"].is_object()) throw ProtocolError("aux must be an object");
    for (const auto& [k, v] : j["aux"].items())
      if (v.is_number()) e.aux[k] = v.get<double>();
  }
  return e;
}

/// Child process speaking line-delimited JSON on stdin/stdout. One request
/// in flight at a time. The child is (re)started lazily and killed after a
/// timeout or protocol violation.
class ExternalObjective final : public Objective {
 public:
  ExternalObjective(std::vector<std::string> command, SearchSpace space, double timeout_seconds = 3600.0)
      : command_(std::move(command)), space_(std::move(space)), timeout_(timeout_seconds) {
    if (command_.empty()) throw std::invalid_argument("external objective needs a command");
    if (!(timeout_ > 0.0)) throw std::invalid_argument("external objective timeout must be positive");
  }

  ExternalObjective(const ExternalObjective&) = delete;
  ExternalObjective& operator=(const ExternalObjective&) = delete;

  ~ExternalObjective() override { stop(/*graceful=*/true); }

  bool timed() const override { return true; }

  Evaluation evaluate(const Configuration& config) override {
    if (pid_ < 0) start();
    const std::int64_t id = next_id_++;
    try {
      write_all(format_request(id, space_, config));
      return parse_response(read_line(), id);
    } catch (const ProtocolError&) {
      ++protocol_errors_;
      stop(false);
      throw;
    }
  }

  int protocol_errors() const { return protocol_errors_; }
  int restarts() const { return starts_ > 0 ? starts_ - 1 : 0; }

 private:
  using Clock = std::chrono::steady_clock;

  void start() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
      throw EvaluationError(std::string("socketpair failed: ") + std::strerror(errno));
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

    std::vector<char*> argv;
    for (auto& a : command_) argv.push_back(a.data());
    argv.push_back(nullptr);
    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) {
      ::close(fds[0]);
      throw EvaluationError("cannot start objective '" + command_.front() + "': " + std::strerror(rc));
    }
    pid_ = pid;
    fd_ = fds[0];
    buffer_.clear();
    ++starts_;

    try {
      const auto line = read_line();
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError("malformed handshake: " + line);
      }
      if (!j.is_object() || !j.contains("protocol") || j["protocol"] != kProtocolVersion)
        throw ProtocolError("unexpected handshake: " + line);
    } catch (const ProtocolError&) {
      ++protocol_errors_;
      stop(false);
      throw;
    }
  }

  void write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const auto n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("objective process closed its input: " + exit_description());
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_));
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (remaining <= 0) throw ProtocolError("objective timed out after " + format_double(timeout_) + " s");
      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1 << 30)));
      if (pr < 0 && errno == EINTR) continue;
      if (pr == 0) continue;
      char chunk[4096];
      const auto n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ProtocolError("objective process ended: " + exit_description());
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string exit_description() {
    if (pid_ < 0) return "not running";
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
        if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
        return "terminated";
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return "connection closed";
  }

  void stop(bool graceful) {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ < 0) return;
    int status = 0;
    if (graceful) {
      for (int i = 0; i < 100; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }

  std::vector<std::string> command_;
  SearchSpace space_;
  double timeout_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 1;
  int protocol_errors_ = 0;
  int starts_ = 0;
};

inline std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec, const SearchSpace& space,
                                                 std::uint64_t study_seed) {
  if (spec.kind == ObjectiveKind::builtin)
    return std::make_unique<BuiltinObjective>(spec.builtin_name, space, spec.noise_std, study_seed);
  return std::make_unique<ExternalObjective>(spec.command, space, spec.timeout_seconds);
}

}  // namespace bbo

#endif  // BILEVEL_BO_EXTERNAL_HPP
