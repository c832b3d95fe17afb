#pragma once

#include <csignal>
#include <cstdio>
#include <string>
#include <utility>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/protocol.hpp"

namespace tbaopt {

// Child process started through /bin/sh with line-oriented pipes on its
// standard input and output.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw TransportError("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw TransportError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw TransportError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (!in_ || !out_) throw TransportError("fdopen() failed");
  }

  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  ~WorkerProcess() {
    if (in_) std::fclose(in_);
    if (out_) std::fclose(out_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) {
    if (std::fputs(line.c_str(), in_) == EOF || std::fputc('\n', in_) == EOF ||
        std::fflush(in_) != 0)
      throw TransportError("evaluator worker closed its input");
  }

  std::string read_line() {
    std::string line;
    int c;
    while ((c = std::fgetc(out_)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    if (c == EOF && line.empty()) throw TransportError("evaluator worker closed its output");
    return line;
  }

 private:
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
};

// Strict request/response over a worker process.
class ExternalRunner final : public TrialRunner {
 public:
  ExternalRunner(const std::string& command, std::string benchmark, Scenario scenario,
                 std::string hardware, TimeoutPolicy policy, std::string constants_hash)
      : worker_(command), benchmark_(std::move(benchmark)), scenario_(std::move(scenario)),
        hardware_(std::move(hardware)), policy_(std::move(policy)),
        constants_hash_(std::move(constants_hash)) {}

  EvalResponse run(const Configuration& config) override {
    protocol::Request req;
    req.id = ++next_id_;
    req.benchmark = benchmark_;
    req.params = config;
    req.scenario = scenario_;
    req.hardware = hardware_;
    if (policy_.enabled) req.timeout_ms = policy_.tau();
    req.constants_hash = constants_hash_;
    worker_.write_line(protocol::encode_request(req));
    const std::string line = worker_.read_line();
    try {
      return protocol::decode_response(line, req.id);
    } catch (const ProtocolError& e) {
      throw TransportError(std::string("protocol error from evaluator: ") + e.what());
    }
  }

 private:
  WorkerProcess worker_;
  std::string benchmark_;
  Scenario scenario_;
  std::string hardware_;
  TimeoutPolicy policy_;
  std::string constants_hash_;
  std::int64_t next_id_ = 0;
};

// "exec:<command>" -> command, otherwise empty.
inline std::string parse_exec_spec(const std::string& spec) {
  const std::string prefix = "exec:";
  if (spec.rfind(prefix, 0) != 0 || spec.size() == prefix.size())
    throw SpecError("evaluator must be 'inprocess' or 'exec:<command>', got '" + spec + "'");
  return spec.substr(prefix.size());
}

}  // namespace tbaopt
