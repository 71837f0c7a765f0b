#include "anchorbox/external_oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "json.hpp"

namespace anchorbox {

namespace {

using nlohmann::json;

[[noreturn]] void protocol_fail(const std::string& what,
                                const std::string& request,
                                const std::string& response) {
  throw OracleProtocolError(what + " (request: " + request +
                            ", raw response: " + response + ")");
}

}  // namespace

ExternalProcess::ExternalProcess(std::string command, int timeout_ms)
    : command_(std::move(command)), timeout_ms_(timeout_ms) {
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw std::runtime_error("pipe() failed: " +
                             std::string(std::strerror(errno)));
  }
  const int pid = fork();
  if (pid < 0) {
    throw std::runtime_error("fork() failed: " +
                             std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), (char*)nullptr);
    _exit(127);
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  close(in_pipe[0]);
  close(out_pipe[1]);
}

ExternalProcess::~ExternalProcess() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    // Stdin is closed, so a well-behaved child exits on its own; give it a
    // moment before killing.
    for (int i = 0; i < 20; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) != 0) return;
      usleep(10'000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

std::string ExternalProcess::round_trip_line(const std::string& request) {
  const std::string line = request + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n =
        write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      protocol_fail("write to child failed: " +
                        std::string(std::strerror(errno)),
                    request, "");
    }
    written += static_cast<std::size_t>(n);
  }

  while (true) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string out = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return out;
    }
    struct pollfd pfd {};
    pfd.fd = from_child_;
    pfd.events = POLLIN;
    const int pr = poll(&pfd, 1, timeout_ms_);
    if (pr == 0) protocol_fail("child response timed out", request, buffer_);
    if (pr < 0) {
      if (errno == EINTR) continue;
      protocol_fail("poll failed: " + std::string(std::strerror(errno)),
                    request, buffer_);
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      protocol_fail("read from child failed: " +
                        std::string(std::strerror(errno)),
                    request, buffer_);
    }
    if (n == 0) {
      protocol_fail("child closed its output mid-stream", request, buffer_);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

int ExternalProcess::query_bit(const Point& x) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string request = json{{"x", x}}.dump();
  const std::string raw = round_trip_line(request);
  json response;
  try {
    response = json::parse(raw);
  } catch (const json::parse_error&) {
    protocol_fail("response is not valid JSON", request, raw);
  }
  if (!response.is_object() || !response.contains("e") ||
      !response["e"].is_number_integer()) {
    protocol_fail("response lacks an integer \"e\" field", request, raw);
  }
  const int e = response["e"].get<int>();
  if (e != 0 && e != 1) {
    protocol_fail("\"e\" outside {0,1}", request, raw);
  }
  return e;
}

std::vector<double> ExternalProcess::query_probs(const Point& x) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string request = json{{"x", x}}.dump();
  const std::string raw = round_trip_line(request);
  json response;
  try {
    response = json::parse(raw);
  } catch (const json::parse_error&) {
    protocol_fail("response is not valid JSON", request, raw);
  }
  if (!response.is_object() || !response.contains("probs") ||
      !response["probs"].is_array()) {
    protocol_fail("response lacks a \"probs\" array", request, raw);
  }
  std::vector<double> probs;
  for (const auto& v : response["probs"]) {
    if (!v.is_number()) protocol_fail("non-numeric probability", request, raw);
    probs.push_back(v.get<double>());
  }
  if (probs.empty()) protocol_fail("empty probability vector", request, raw);
  return probs;
}

OraclePtr spawn_external_oracle(std::string command, int timeout_ms) {
  return std::make_shared<ExternalOracle>(std::move(command), timeout_ms);
}

}  // namespace anchorbox
