#pragma once

#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorbox/models.hpp"
#include "anchorbox/oracle.hpp"

namespace anchorbox {

// Raised when a child process speaks the protocol incorrectly or dies. The
// message carries the raw request/response exchange for debugging.
class OracleProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A child process spoken to over its standard streams, one JSON object per
// line in each direction. Round-trips are serialized per process; run one
// process per worker for concurrency.
class ExternalProcess {
 public:
  explicit ExternalProcess(std::string command, int timeout_ms = 60000);
  ~ExternalProcess();

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  // Sends {"x":[...]} and expects {"e":0} or {"e":1}.
  int query_bit(const Point& x);

  // Sends {"x":[...]} and expects {"probs":[...]}, for children that serve a
  // raw class-probability model rather than a predicate.
  std::vector<double> query_probs(const Point& x);

  const std::string& command() const { return command_; }

 private:
  std::string round_trip_line(const std::string& request);

  std::string command_;
  int timeout_ms_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mu_;
};

class ExternalOracle final : public FaithfulnessOracle {
 public:
  explicit ExternalOracle(std::string command, int timeout_ms = 60000)
      : proc_(std::make_shared<ExternalProcess>(std::move(command),
                                                timeout_ms)) {}

  const std::string& command() const { return proc_->command(); }

 private:
  int do_evaluate(const Point& x) override { return proc_->query_bit(x); }

  std::shared_ptr<ExternalProcess> proc_;
};

// Launches `command` through the shell and wraps it as a counted oracle.
OraclePtr spawn_external_oracle(std::string command, int timeout_ms = 60000);

// A class-probability model served by a child process; dim and class count
// are declared by the caller since the child cannot be introspected.
class ExternalModel final : public Model {
 public:
  ExternalModel(std::string command, std::size_t dim, std::size_t n_classes,
                int timeout_ms = 60000)
      : proc_(std::make_shared<ExternalProcess>(std::move(command),
                                                timeout_ms)),
        dim_(dim),
        n_classes_(n_classes) {}

  std::size_t dim() const override { return dim_; }
  std::size_t n_classes() const override { return n_classes_; }

  std::vector<double> probs(const Point& x) const override {
    std::vector<double> p = proc_->query_probs(x);
    if (p.size() != n_classes_) {
      throw OracleProtocolError("child returned " + std::to_string(p.size()) +
                                " probabilities, expected " +
                                std::to_string(n_classes_));
    }
    return p;
  }

  nlohmann::json to_json() const override {
    return nlohmann::json{{"type", "external"},
                          {"command", proc_->command()},
                          {"dim", dim_},
                          {"n_classes", n_classes_}};
  }

 private:
  std::shared_ptr<ExternalProcess> proc_;
  std::size_t dim_;
  std::size_t n_classes_;
};

}  // namespace anchorbox
